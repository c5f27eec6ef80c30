#ifndef TWA_ENGINE_HPP
#define TWA_ENGINE_HPP

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "twa/algebra.hpp"
#include "twa/errors.hpp"
#include "twa/factor.hpp"
#include "twa/graph.hpp"
#include "twa/schedule.hpp"

namespace twa {

struct EngineConfig {
  double rho_standard = 1.0;
  double epsilon_convergence = 1e-5;
  long max_iterations = 10000;
  std::size_t thread_count = 1;
  long snapshot_every = 1;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(rho_standard > 0.0) || !std::isfinite(rho_standard)) {
      throw InvalidConfig("rho_standard must be positive and finite");
    }
    if (!(epsilon_convergence > 0.0)) throw InvalidConfig("epsilon_convergence must be > 0");
    if (max_iterations < 1) throw InvalidConfig("max_iterations must be >= 1");
    if (thread_count < 1) throw InvalidConfig("thread_count must be >= 1");
    if (snapshot_every < 1) throw InvalidConfig("snapshot_every must be >= 1");
  }
};

struct PhaseTimings {
  double minimize_us = 0.0;
  double concur_us = 0.0;
  double local_us = 0.0;
  double global_us = 0.0;
  double edits_us = 0.0;

  [[nodiscard]] double total_us() const {
    return minimize_us + concur_us + local_us + global_us + edits_us;
  }
};

struct IterationStatus {
  long iteration = 0;
  bool converged = false;
  std::optional<std::string> halted_by;
  double max_message_delta = 0.0;
  std::size_t variables = 0;
  std::size_t factors = 0;
  std::size_t edges = 0;
  PhaseTimings timing;
};

/// Whole-graph view handed to global reasoners. Influence is limited to
/// queued graph edits, emission requests to local reasoners, and halting.
class GlobalContext {
 public:
  GlobalContext(FactorGraph& graph, long iteration, double max_delta,
                std::span<const ReasonerEvent> events)
      : graph_(&graph), iteration_(iteration), max_delta_(max_delta), events_(events) {}

  [[nodiscard]] const FactorGraph& graph() const { return *graph_; }
  [[nodiscard]] long iteration() const { return iteration_; }
  /// Largest variable-to-factor message change of the current iteration.
  [[nodiscard]] double max_message_delta() const { return max_delta_; }
  [[nodiscard]] std::span<const ReasonerEvent> events() const { return events_; }

  void queue(GraphEdit e) { edits_.push_back(std::move(e)); }

  /// Asks a local reasoner to send `m` to `v` from the next minimize phase on.
  void request_emission(FactorId reasoner, VariableId v, Message m) {
    reasoner_at(reasoner).set_emission(v, m);
    ++emission_requests_;
  }
  void clear_emission(FactorId reasoner, VariableId v) {
    reasoner_at(reasoner).clear_emission(v);
    ++emission_requests_;
  }

  void halt() { halted_ = true; }

  [[nodiscard]] bool halted() const { return halted_; }
  [[nodiscard]] std::vector<GraphEdit>& edits() { return edits_; }
  [[nodiscard]] std::size_t emission_requests() const { return emission_requests_; }

 private:
  LocalReasoner& reasoner_at(FactorId f) {
    auto* lr = dynamic_cast<LocalReasoner*>(graph_->factor(f).factor.get());
    if (!lr) throw KindMismatch("emission requested from a factor that is not a local reasoner");
    return *lr;
  }

  FactorGraph* graph_;
  long iteration_;
  double max_delta_;
  std::span<const ReasonerEvent> events_;
  std::vector<GraphEdit> edits_;
  std::size_t emission_requests_ = 0;
  bool halted_ = false;
};

class GlobalReasoner {
 public:
  virtual ~GlobalReasoner() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual void reason(GlobalContext& ctx) = 0;
  /// Called after this reasoner's queued edits were applied.
  virtual void edits_applied(const EditReport& /*report*/) {}
};

/// Runs the three-weight iteration over a factor graph:
/// minimize (parallel) | concur (parallel) | local reasoners (parallel) |
/// global reasoners (sequential, registration order) | edits | convergence.
class Engine {
 public:
  Engine(FactorGraph& graph, EngineConfig config) : graph_(&graph), config_(config) {
    config_.validate();
    start_workers();
  }
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  ~Engine() { stop_workers(); }

  void add_global_reasoner(std::shared_ptr<GlobalReasoner> r) { globals_.push_back(std::move(r)); }

  [[nodiscard]] const EngineConfig& config() const { return config_; }
  [[nodiscard]] long iteration() const { return iteration_; }
  [[nodiscard]] FactorGraph& graph() { return *graph_; }

  /// Runs one full iteration.
  IterationStatus step() {
    using clock = std::chrono::steady_clock;
    auto us_since = [](clock::time_point t0) {
      return std::chrono::duration<double, std::micro>(clock::now() - t0).count();
    };
    ++iteration_;
    IterationStatus status;
    status.iteration = iteration_;
    try {
      refresh_schedules();
      for (auto& s : scratch_) {
        s.max_delta = 0.0;
        s.events.clear();
      }

      auto t0 = clock::now();
      run_phase(Phase::Minimize);
      status.timing.minimize_us = us_since(t0);

      t0 = clock::now();
      run_phase(Phase::Concur);
      graph_->mark_concurred();
      status.timing.concur_us = us_since(t0);

      t0 = clock::now();
      run_phase(Phase::Local);
      status.timing.local_us = us_since(t0);

      double max_delta = 0.0;
      events_.clear();
      for (auto& s : scratch_) {
        max_delta = std::max(max_delta, s.max_delta);
        events_.insert(events_.end(), s.events.begin(), s.events.end());
      }
      std::stable_sort(events_.begin(), events_.end(),
                       [](const ReasonerEvent& a, const ReasonerEvent& b) { return a.source < b.source; });
      status.max_message_delta = max_delta;

      t0 = clock::now();
      std::vector<GlobalContext> contexts;
      contexts.reserve(globals_.size());
      for (auto& g : globals_) {
        contexts.emplace_back(*graph_, iteration_, max_delta, events_);
        g->reason(contexts.back());
        if (contexts.back().halted() && !status.halted_by) status.halted_by = g->name();
      }
      status.timing.global_us = us_since(t0);

      t0 = clock::now();
      bool changed = false;
      for (std::size_t i = 0; i < globals_.size(); ++i) {
        auto& edits = contexts[i].edits();
        if (contexts[i].emission_requests() > 0) changed = true;
        if (edits.empty()) continue;
        changed = true;
        EditReport report = graph_->apply_edits(std::move(edits));
        globals_[i]->edits_applied(report);
      }
      status.timing.edits_us = us_since(t0);

      status.converged = !changed && max_delta < config_.epsilon_convergence;
    } catch (Error& e) {
      e.set_iteration(iteration_);
      throw;
    }
    status.variables = graph_->variable_count();
    status.factors = graph_->factor_count();
    status.edges = graph_->edge_count();
    return status;
  }

  /// Iterates until convergence, a halt, or max_iterations; `observer` sees
  /// every status. Returns the final status.
  template <class Observer>
  IterationStatus run(Observer&& observer) {
    IterationStatus status;
    const long limit = iteration_ + config_.max_iterations;
    while (iteration_ < limit) {
      status = step();
      observer(status);
      if (status.converged || status.halted_by) break;
    }
    return status;
  }
  IterationStatus run() {
    return run([](const IterationStatus&) {});
  }

  /// Current schedule queues (rebuilt lazily after graph edits).
  [[nodiscard]] const std::vector<WorkQueue<FactorId>>& factor_queues() {
    refresh_schedules();
    return factor_queues_;
  }
  [[nodiscard]] const std::vector<WorkQueue<VariableId>>& variable_queues() {
    refresh_schedules();
    return variable_queues_;
  }

 private:
  enum class Phase { Minimize, Concur, Local, Stop };

  struct Scratch {
    std::vector<Message> in;
    std::vector<Message> out;
    std::vector<double> values;
    std::vector<Weight> weights;
    std::vector<ReasonerEvent> events;
    double max_delta = 0.0;
    std::exception_ptr error;
  };

  void refresh_schedules() {
    if (scheduled_revision_ == graph_->revision() && !factor_queues_.empty()) return;
    const std::size_t threads = config_.thread_count;
    std::vector<FactorId> fids;
    std::vector<std::size_t> fcost;
    std::vector<FactorId> lids;
    std::vector<std::size_t> lcost;
    graph_->factors().for_each([&](FactorId id, const FactorNode& fn) {
      if (fn.factor->is_local_reasoner()) {
        lids.push_back(id);
        lcost.push_back(fn.edges.size());
      }
      fids.push_back(id);
      fcost.push_back(fn.edges.size());
    });
    std::vector<VariableId> vids;
    std::vector<std::size_t> vcost;
    graph_->variables().for_each([&](VariableId id, const VariableNode& vn) {
      vids.push_back(id);
      vcost.push_back(vn.edges.size());
    });
    factor_queues_ = schedule<FactorId>(fids, fcost, threads);
    local_queues_ = schedule<FactorId>(lids, lcost, threads);
    variable_queues_ = schedule<VariableId>(vids, vcost, threads);
    scheduled_revision_ = graph_->revision();
  }

  void minimize_factor_node(FactorId f, Scratch& s) {
    FactorNode& fn = graph_->factor_unchecked(f);
    const std::size_t k = fn.edges.size();
    if (k == 0) return;
    s.in.resize(k);
    s.out.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const Edge& e = graph_->edge_unchecked(fn.edges[i]);
      if (e.local) {
        const VariableNode& vn = graph_->variable_unchecked(e.variable);
        s.in[i] = Message{vn.value, vn.weight};
      } else {
        s.in[i] = Message{e.state.msg_to_factor, e.state.weight_to_factor};
      }
    }
    fn.factor->minimize(fn.variables, std::span<const Message>(s.in.data(), k),
                        std::span<Message>(s.out.data(), k));
    for (std::size_t i = 0; i < k; ++i) {
      Edge& e = graph_->edge_unchecked(fn.edges[i]);
      e.state.assignment = s.out[i].value;
      e.state.msg_to_variable =
          e.local ? s.out[i].value : outgoing_message(e.state, s.out[i].value, s.out[i].weight);
      e.state.weight_to_variable = s.out[i].weight;
    }
  }

  void concur_variable_node(VariableId v, Scratch& s) {
    VariableNode& vn = graph_->variable_unchecked(v);
    const std::size_t k = vn.edges.size();
    s.in.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const Edge& e = graph_->edge_unchecked(vn.edges[i]);
      s.in[i] = Message{e.state.msg_to_variable, e.state.weight_to_variable};
    }
    const ConcurResult r = concur_variable(std::span<const Message>(s.in.data(), k), vn.value,
                                           config_.rho_standard, config_.epsilon_convergence);
    vn.value = r.value;
    vn.weight = r.weight;
    for (EdgeId eid : vn.edges) {
      Edge& e = graph_->edge_unchecked(eid);
      if (e.local) {
        e.state.prev_msg_to_factor = e.state.msg_to_factor;
        e.state.msg_to_factor = r.value;
        e.state.error_accum = 0.0;
        e.state.weight_to_factor = r.weight;
        continue;
      }
      e.state = update_edge(e.state, e.state.assignment, r.value, e.state.weight_to_variable,
                            r.weight);
      s.max_delta = std::max(s.max_delta,
                             std::abs(e.state.msg_to_factor - e.state.prev_msg_to_factor));
    }
  }

  void reason_local_node(FactorId f, Scratch& s) {
    FactorNode& fn = graph_->factor_unchecked(f);
    const std::size_t k = fn.variables.size();
    s.values.resize(k);
    s.weights.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const VariableNode& vn = graph_->variable_unchecked(fn.variables[i]);
      s.values[i] = vn.value;
      s.weights[i] = vn.weight;
    }
    LocalContext ctx(f, iteration_, fn.variables, std::span<const double>(s.values.data(), k),
                     std::span<const Weight>(s.weights.data(), k), s.events);
    static_cast<LocalReasoner*>(fn.factor.get())->reason(ctx);
  }

  void run_slice(Phase phase, std::size_t t) {
    Scratch& s = scratch_[t];
    try {
      switch (phase) {
        case Phase::Minimize:
          for (FactorId f : factor_queues_[t].nodes) minimize_factor_node(f, s);
          break;
        case Phase::Concur:
          for (VariableId v : variable_queues_[t].nodes) concur_variable_node(v, s);
          break;
        case Phase::Local:
          for (FactorId f : local_queues_[t].nodes) reason_local_node(f, s);
          break;
        case Phase::Stop:
          break;
      }
    } catch (...) {
      if (!s.error) s.error = std::current_exception();
    }
  }

  void run_phase(Phase phase) {
    if (config_.thread_count == 1) {
      run_slice(phase, 0);
    } else {
      phase_ = phase;
      start_->arrive_and_wait();
      run_slice(phase, 0);
      done_->arrive_and_wait();
    }
    for (auto& s : scratch_) {
      if (s.error) {
        auto err = s.error;
        for (auto& o : scratch_) o.error = nullptr;
        std::rethrow_exception(err);
      }
    }
  }

  void start_workers() {
    scratch_.resize(config_.thread_count);
    if (config_.thread_count == 1) return;
    const auto n = static_cast<std::ptrdiff_t>(config_.thread_count);
    start_ = std::make_unique<std::barrier<>>(n);
    done_ = std::make_unique<std::barrier<>>(n);
    for (std::size_t t = 1; t < config_.thread_count; ++t) {
      workers_.emplace_back([this, t] {
        for (;;) {
          start_->arrive_and_wait();
          const Phase p = phase_;
          if (p == Phase::Stop) return;
          run_slice(p, t);
          done_->arrive_and_wait();
        }
      });
    }
  }

  void stop_workers() {
    if (workers_.empty()) return;
    phase_ = Phase::Stop;
    start_->arrive_and_wait();
    for (auto& w : workers_) w.join();
    workers_.clear();
  }

  FactorGraph* graph_;
  EngineConfig config_;
  std::vector<std::shared_ptr<GlobalReasoner>> globals_;
  long iteration_ = 0;

  std::uint64_t scheduled_revision_ = ~std::uint64_t{0};
  std::vector<WorkQueue<FactorId>> factor_queues_;
  std::vector<WorkQueue<FactorId>> local_queues_;
  std::vector<WorkQueue<VariableId>> variable_queues_;

  std::vector<Scratch> scratch_;
  std::vector<ReasonerEvent> events_;

  std::atomic<Phase> phase_{Phase::Minimize};
  std::unique_ptr<std::barrier<>> start_;
  std::unique_ptr<std::barrier<>> done_;
  std::vector<std::thread> workers_;
};

}  // namespace twa

#endif  // TWA_ENGINE_HPP

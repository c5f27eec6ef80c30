#ifndef TWA_PACKING_RUN_HPP
#define TWA_PACKING_RUN_HPP

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "twa/engine.hpp"
#include "twa/packing/instance.hpp"
#include "twa/packing/maintenance.hpp"
#include "twa/packing/steering.hpp"

namespace twa::packing {

struct PackOptions {
  PackingInstance instance;
  EngineConfig engine = default_engine();
  SteeringParams steering;
  /// Largest pair overlap accepted as feasible when deciding to stop.
  double overlap_tolerance = 1e-6;

  static EngineConfig default_engine() {
    EngineConfig c;
    c.epsilon_convergence = 1e-6;
    c.max_iterations = 20000;
    return c;
  }
};

/// Per-iteration packing telemetry.
struct PackStatus {
  IterationStatus engine;
  OverlapReport max_overlap;
  std::size_t active_factors = 0;
  std::size_t pool_size = 0;
  /// Converged messages and no overlap beyond tolerance.
  bool done = false;
};

/// A packing instance wired to an engine with the pair-maintenance and
/// steering reasoners. Commands may be submitted from any thread; everything
/// else belongs to the thread that steps the run.
class PackingRun {
 public:
  explicit PackingRun(const PackOptions& opts)
      : opts_(opts), queue_(std::make_shared<CommandQueue>()) {
    model_ = build_instance(opts.instance, graph_, opts.engine.rng_seed, opts.engine.rho_standard);
    maintenance_ = std::make_shared<PairMaintenance>(model_, opts.engine.rng_seed, opts.engine.rho_standard);
    steering_ = std::make_shared<SteeringReasoner>(model_, maintenance_.get(), queue_, opts.steering);
    engine_ = std::make_unique<Engine>(graph_, opts.engine);
    engine_->add_global_reasoner(maintenance_);
    engine_->add_global_reasoner(steering_);
  }

  PackingRun(const PackingRun&) = delete;
  PackingRun& operator=(const PackingRun&) = delete;

  PackStatus step() {
    PackStatus s;
    s.engine = engine_->step();
    s.max_overlap = maintenance_->overlap();
    s.active_factors = maintenance_->active_factors();
    s.pool_size = maintenance_->pool_size();
    s.done = s.engine.converged && s.max_overlap.depth <= opts_.overlap_tolerance;
    last_ = s;
    return s;
  }

  /// Steps until done or max_iterations; `observer` sees every status.
  template <class Observer>
  PackStatus run(Observer&& observer) {
    PackStatus s = last_;
    const long limit = engine_->iteration() + opts_.engine.max_iterations;
    while (engine_->iteration() < limit) {
      s = step();
      observer(s);
      if (s.done) break;
    }
    return s;
  }
  PackStatus run() {
    return run([](const PackStatus&) {});
  }

  /// Validates and enqueues a command; Pause/Resume take effect immediately
  /// for whoever drives step().
  void submit(const Command& c) {
    std::visit([&](const auto& v) { validate(v); }, c);
    if (std::holds_alternative<cmd::Pause>(c)) {
      paused_ = true;
    } else if (std::holds_alternative<cmd::Resume>(c)) {
      paused_ = false;
    } else {
      queue_->push(c);
    }
  }

  [[nodiscard]] bool paused() const { return paused_; }
  [[nodiscard]] bool has_pending_commands() const { return !queue_->empty(); }

  [[nodiscard]] std::vector<Point> centers() const { return positions(model_, graph_); }
  [[nodiscard]] long iteration() const { return engine_->iteration(); }
  [[nodiscard]] const PackStatus& last() const { return last_; }
  [[nodiscard]] const PackingModel& model() const { return model_; }
  [[nodiscard]] const FactorGraph& graph() const { return graph_; }
  [[nodiscard]] const PairMaintenance& maintenance() const { return *maintenance_; }
  [[nodiscard]] const SteeringReasoner& steering() const { return *steering_; }
  [[nodiscard]] const PackOptions& options() const { return opts_; }
  [[nodiscard]] double radius() const { return model_.instance.radius; }

 private:
  void check_circle(std::int64_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= model_.size()) {
      throw UnknownCircle("unknown circle " + std::to_string(id));
    }
  }
  static void check_point(double x, double y) {
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
      throw InvalidConfig("coordinates must lie in [0,1]^2");
    }
  }
  void validate(const cmd::DragStart& c) const { check_circle(c.id); }
  void validate(const cmd::DragMove& c) const {
    check_circle(c.id);
    check_point(c.x, c.y);
  }
  void validate(const cmd::DragEnd& c) const { check_circle(c.id); }
  void validate(const cmd::Vacancy& c) const { check_point(c.x, c.y); }
  void validate(const cmd::Pause&) const {}
  void validate(const cmd::Resume&) const {}
  void validate(const cmd::SetParam& c) const {
    if (c.key == "drag_weight") {
      if (!(c.value > 0.0) || !std::isfinite(c.value)) throw InvalidConfig("drag_weight must be > 0");
    } else if (c.key == "transport_burst") {
      if (!(c.value >= 1.0) || !std::isfinite(c.value)) throw InvalidConfig("transport_burst must be >= 1");
    } else {
      throw InvalidConfig("unknown parameter '" + c.key + "'");
    }
  }

  PackOptions opts_;
  FactorGraph graph_;
  PackingModel model_;
  std::shared_ptr<CommandQueue> queue_;
  std::shared_ptr<PairMaintenance> maintenance_;
  std::shared_ptr<SteeringReasoner> steering_;
  std::unique_ptr<Engine> engine_;
  std::atomic<bool> paused_{false};
  PackStatus last_;
};

}  // namespace twa::packing

#endif  // TWA_PACKING_RUN_HPP

#ifndef TWA_GRAPH_HPP
#define TWA_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "twa/errors.hpp"
#include "twa/factor.hpp"
#include "twa/ids.hpp"
#include "twa/weight.hpp"

namespace twa {

/// Generational slot storage. Erased slots are recycled with a bumped
/// generation, so ids stay unique for the lifetime of the container.
template <class IdT, class T>
class SlotMap {
 public:
  struct Slot {
    std::uint32_t generation = 0;
    bool live = false;
    T value{};
  };

  IdT insert(T value) {
    std::uint32_t slot;
    if (!free_.empty()) {
      slot = free_.back();
      free_.pop_back();
    } else {
      slot = static_cast<std::uint32_t>(slots_.size());
      slots_.emplace_back();
    }
    Slot& s = slots_[slot];
    ++s.generation;
    s.live = true;
    s.value = std::move(value);
    ++size_;
    return IdT(slot, s.generation);
  }

  [[nodiscard]] bool contains(IdT id) const {
    return id.slot() < slots_.size() && slots_[id.slot()].live &&
           slots_[id.slot()].generation == id.generation();
  }

  T& at(IdT id) {
    if (!contains(id)) throw UnknownId(describe(id));
    return slots_[id.slot()].value;
  }
  const T& at(IdT id) const {
    if (!contains(id)) throw UnknownId(describe(id));
    return slots_[id.slot()].value;
  }

  T& operator[](IdT id) { return slots_[id.slot()].value; }
  const T& operator[](IdT id) const { return slots_[id.slot()].value; }

  void erase(IdT id) {
    Slot& s = slots_[id.slot()];
    s.live = false;
    s.value = T{};
    --size_;
    if (s.generation != UINT32_MAX) free_.push_back(id.slot());
  }

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t capacity() const { return slots_.size(); }

  /// Visits live entries in slot order.
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::uint32_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].live) fn(IdT(i, slots_[i].generation), slots_[i].value);
    }
  }
  template <class Fn>
  void for_each(Fn&& fn) {
    for (std::uint32_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].live) fn(IdT(i, slots_[i].generation), slots_[i].value);
    }
  }

  [[nodiscard]] std::vector<IdT> ids() const {
    std::vector<IdT> out;
    out.reserve(size_);
    for_each([&](IdT id, const T&) { out.push_back(id); });
    return out;
  }

 private:
  static std::string describe(IdT id) {
    std::ostringstream os;
    os << "unknown id " << id;
    return os.str();
  }

  std::vector<Slot> slots_;
  std::vector<std::uint32_t> free_;
  std::size_t size_ = 0;
};

/// Per-edge TWA state.
struct EdgeState {
  double msg_to_factor = 0.0;       // n = z - u
  double msg_to_variable = 0.0;     // m = x + u, what concur averages
  double assignment = 0.0;          // x, the factor's local assignment
  Weight weight_to_factor = Weight::standard(1.0);
  Weight weight_to_variable = Weight::standard(1.0);
  double error_accum = 0.0;         // u
  double prev_msg_to_factor = 0.0;
};

struct VariableNode {
  double value = 0.0;  // concurred z
  Weight weight;       // outgoing weight class after the last concur
  std::vector<EdgeId> edges;
};

struct FactorNode {
  std::unique_ptr<Factor> factor;
  std::vector<EdgeId> edges;
  std::vector<VariableId> variables;  // parallel to `edges`
};

struct Edge {
  FactorId factor;
  VariableId variable;
  bool local = false;  // factor end is a local reasoner
  EdgeState state;
};

namespace edit {
struct AddVariable {
  double initial = 0.0;
};
struct AddFactor {
  std::unique_ptr<Factor> factor;
  std::vector<VariableId> variables;
};
struct AddEdge {
  FactorId factor;
  VariableId variable;
};
struct RemoveEdge {
  EdgeId edge;
};
struct RemoveFactor {
  FactorId factor;
};
struct Reparameterize {
  FactorId factor;
  std::unique_ptr<Factor> params;
};
}  // namespace edit

using GraphEdit = std::variant<edit::AddVariable, edit::AddFactor, edit::AddEdge,
                               edit::RemoveEdge, edit::RemoveFactor, edit::Reparameterize>;

struct EditReport {
  std::size_t applied = 0;
  std::vector<VariableId> pruned_variables;
  std::vector<EdgeId> pruned_edges;
  // ids created by the batch, in edit order
  std::vector<VariableId> added_variables;
  std::vector<FactorId> added_factors;
  std::vector<EdgeId> added_edges;

  void merge(EditReport&& other) {
    applied += other.applied;
    auto append = [](auto& dst, auto& src) { dst.insert(dst.end(), src.begin(), src.end()); };
    append(pruned_variables, other.pruned_variables);
    append(pruned_edges, other.pruned_edges);
    append(added_variables, other.added_variables);
    append(added_factors, other.added_factors);
    append(added_edges, other.added_edges);
  }
};

/// Bipartite factor graph: the single mutable problem representation.
///
/// Variables left without edges by an edge or factor removal are pruned.
/// New edges start with n equal to the variable's current value, zero error
/// and standard weights in both directions.
class FactorGraph {
 public:
  FactorGraph() = default;
  FactorGraph(FactorGraph&&) = default;
  FactorGraph& operator=(FactorGraph&&) = default;

  VariableId add_variable(double initial = 0.0) {
    VariableNode node;
    node.value = initial;
    ++revision_;
    return variables_.insert(std::move(node));
  }

  FactorId add_factor(std::unique_ptr<Factor> factor, std::span<const VariableId> variables) {
    if (!factor) throw KindMismatch("null factor");
    for (VariableId v : variables) variables_.at(v);
    FactorNode node;
    node.factor = std::move(factor);
    const FactorId id = factors_.insert(std::move(node));
    ++revision_;
    for (VariableId v : variables) add_edge(id, v);
    return id;
  }
  FactorId add_factor(std::unique_ptr<Factor> factor, std::initializer_list<VariableId> variables) {
    return add_factor(std::move(factor), std::span<const VariableId>(variables.begin(), variables.size()));
  }

  EdgeId add_edge(FactorId f, VariableId v) {
    FactorNode& fn = factors_.at(f);
    VariableNode& vn = variables_.at(v);
    Edge e;
    e.factor = f;
    e.variable = v;
    e.local = fn.factor->is_local_reasoner();
    e.state.msg_to_factor = vn.value;
    e.state.prev_msg_to_factor = vn.value;
    e.state.msg_to_variable = vn.value;
    e.state.assignment = vn.value;
    const EdgeId id = edges_.insert(e);
    ++revision_;
    fn.edges.push_back(id);
    fn.variables.push_back(v);
    variables_[v].edges.push_back(id);
    return id;
  }

  /// Removes one edge; returns the pruned variable if it became isolated.
  std::optional<VariableId> remove_edge(EdgeId e, EditReport* report = nullptr) {
    const Edge edge = edges_.at(e);
    FactorNode& fn = factors_[edge.factor];
    for (std::size_t k = 0; k < fn.edges.size(); ++k) {
      if (fn.edges[k] == e) {
        fn.edges.erase(fn.edges.begin() + static_cast<std::ptrdiff_t>(k));
        fn.variables.erase(fn.variables.begin() + static_cast<std::ptrdiff_t>(k));
        break;
      }
    }
    VariableNode& vn = variables_[edge.variable];
    std::erase(vn.edges, e);
    edges_.erase(e);
    ++revision_;
    if (report) report->pruned_edges.push_back(e);
    if (vn.edges.empty()) {
      variables_.erase(edge.variable);
      if (report) report->pruned_variables.push_back(edge.variable);
      return edge.variable;
    }
    return std::nullopt;
  }

  void remove_factor(FactorId f, EditReport* report = nullptr) {
    const std::vector<EdgeId> edges = factors_.at(f).edges;
    for (EdgeId e : edges) remove_edge(e, report);
    factors_.erase(f);
    ++revision_;
  }

  void reparameterize(FactorId f, std::unique_ptr<Factor> params) {
    FactorNode& fn = factors_.at(f);
    if (!params || params->kind() != fn.factor->kind()) {
      throw KindMismatch("reparameterize: expected kind '" + std::string(fn.factor->kind()) +
                         "'");
    }
    fn.factor = std::move(params);
  }

  /// Applies edits in order. On error the exception propagates and edits
  /// before the failing one stay applied.
  EditReport apply_edits(std::vector<GraphEdit> edits) {
    EditReport report;
    for (GraphEdit& ge : edits) {
      std::visit(
          [&](auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, edit::AddVariable>) {
              report.added_variables.push_back(add_variable(e.initial));
            } else if constexpr (std::is_same_v<E, edit::AddFactor>) {
              const FactorId id = add_factor(std::move(e.factor), e.variables);
              report.added_factors.push_back(id);
              const auto& fe = factors_[id].edges;
              report.added_edges.insert(report.added_edges.end(), fe.begin(), fe.end());
            } else if constexpr (std::is_same_v<E, edit::AddEdge>) {
              report.added_edges.push_back(add_edge(e.factor, e.variable));
            } else if constexpr (std::is_same_v<E, edit::RemoveEdge>) {
              remove_edge(e.edge, &report);
            } else if constexpr (std::is_same_v<E, edit::RemoveFactor>) {
              remove_factor(e.factor, &report);
            } else {
              reparameterize(e.factor, std::move(e.params));
            }
          },
          ge);
      ++report.applied;
    }
    return report;
  }

  /// Concurred values keyed by variable.
  [[nodiscard]] std::map<VariableId, double> snapshot() const {
    if (!concurred_) throw NotYetConcurred("snapshot requested before the first concur phase");
    std::map<VariableId, double> out;
    variables_.for_each([&](VariableId id, const VariableNode& v) { out.emplace(id, v.value); });
    return out;
  }

  /// Graph-walk integrity check; returns a list of problems (empty if sound).
  [[nodiscard]] std::vector<std::string> check_integrity() const {
    std::vector<std::string> problems;
    auto note = [&](auto&&... parts) {
      std::ostringstream os;
      (os << ... << parts);
      problems.push_back(os.str());
    };
    std::size_t edge_refs = 0;
    factors_.for_each([&](FactorId f, const FactorNode& fn) {
      if (fn.edges.size() != fn.variables.size()) note("factor ", f, ": edge/variable lists differ");
      for (std::size_t k = 0; k < fn.edges.size(); ++k) {
        ++edge_refs;
        if (!edges_.contains(fn.edges[k])) {
          note("factor ", f, " references dead edge ", fn.edges[k]);
          continue;
        }
        const Edge& e = edges_[fn.edges[k]];
        if (e.factor != f) note("edge ", fn.edges[k], " does not point back to factor ", f);
        if (k < fn.variables.size() && e.variable != fn.variables[k]) {
          note("factor ", f, " variable list out of sync at ", k);
        }
      }
    });
    variables_.for_each([&](VariableId v, const VariableNode& vn) {
      for (EdgeId eid : vn.edges) {
        if (!edges_.contains(eid)) {
          note("variable ", v, " references dead edge ", eid);
        } else if (edges_[eid].variable != v) {
          note("edge ", eid, " does not point back to variable ", v);
        }
      }
    });
    edges_.for_each([&](EdgeId id, const Edge& e) {
      if (!factors_.contains(e.factor)) note("edge ", id, " has dead factor");
      if (!variables_.contains(e.variable)) note("edge ", id, " has dead variable");
    });
    if (edge_refs != edges_.size()) note("factor edge lists cover ", edge_refs, " of ", edges_.size());
    return problems;
  }

  [[nodiscard]] std::size_t variable_count() const { return variables_.size(); }
  [[nodiscard]] std::size_t factor_count() const { return factors_.size(); }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }
  /// Factors plus variables.
  [[nodiscard]] std::size_t size() const { return variables_.size() + factors_.size(); }

  [[nodiscard]] bool contains(VariableId v) const { return variables_.contains(v); }
  [[nodiscard]] bool contains(FactorId f) const { return factors_.contains(f); }
  [[nodiscard]] bool contains(EdgeId e) const { return edges_.contains(e); }

  VariableNode& variable(VariableId v) { return variables_.at(v); }
  const VariableNode& variable(VariableId v) const { return variables_.at(v); }
  FactorNode& factor(FactorId f) { return factors_.at(f); }
  const FactorNode& factor(FactorId f) const { return factors_.at(f); }
  Edge& edge(EdgeId e) { return edges_.at(e); }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }

  // Unchecked access for the engine's inner loops.
  VariableNode& variable_unchecked(VariableId v) { return variables_[v]; }
  FactorNode& factor_unchecked(FactorId f) { return factors_[f]; }
  Edge& edge_unchecked(EdgeId e) { return edges_[e]; }
  const Edge& edge_unchecked(EdgeId e) const { return edges_[e]; }

  [[nodiscard]] const SlotMap<VariableId, VariableNode>& variables() const { return variables_; }
  [[nodiscard]] const SlotMap<FactorId, FactorNode>& factors() const { return factors_; }
  [[nodiscard]] const SlotMap<EdgeId, Edge>& edges() const { return edges_; }

  [[nodiscard]] bool concurred() const { return concurred_; }
  void mark_concurred() { concurred_ = true; }

  /// Bumped by every structural change; lets schedulers detect edits.
  [[nodiscard]] std::uint64_t revision() const { return revision_; }

 private:
  SlotMap<VariableId, VariableNode> variables_;
  SlotMap<FactorId, FactorNode> factors_;
  SlotMap<EdgeId, Edge> edges_;
  bool concurred_ = false;
  std::uint64_t revision_ = 0;
};

}  // namespace twa

#endif  // TWA_GRAPH_HPP

#ifndef TWA_FACTOR_HPP
#define TWA_FACTOR_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "twa/ids.hpp"
#include "twa/weight.hpp"

namespace twa {

/// A cost or constraint node. The object doubles as the factor's parameter
/// block: reparameterizing a factor swaps in another object of the same kind.
///
/// `minimize` receives one incoming (n, weight) message per edge, in edge
/// order, and writes one outgoing (x, weight) message per edge. The chosen
/// values must minimize the local cost plus sum_k weight_k/2 (x_k - n_k)^2,
/// treating infinite weights as equalities and zero weights as absent.
/// It is called by exactly one thread at a time.
class Factor {
 public:
  virtual ~Factor() = default;

  [[nodiscard]] virtual std::string_view kind() const = 0;

  virtual void minimize(std::span<const VariableId> variables,
                        std::span<const Message> incoming,
                        std::span<Message> outgoing) = 0;

  [[nodiscard]] virtual bool is_local_reasoner() const { return false; }
};

/// Event raised by a local reasoner for consumption by global reasoners.
struct ReasonerEvent {
  FactorId source;
  VariableId variable;
  std::uint32_t code = 0;
  std::array<std::int64_t, 3> data{};
  double value = 0.0;

  bool operator==(const ReasonerEvent&) const = default;
};

/// Read-only view handed to a local reasoner's `reason` hook.
class LocalContext {
 public:
  LocalContext(FactorId self, long iteration, std::span<const VariableId> variables,
               std::span<const double> values, std::span<const Weight> weights,
               std::vector<ReasonerEvent>& sink)
      : self_(self), iteration_(iteration), variables_(variables), values_(values),
        weights_(weights), sink_(&sink) {}

  [[nodiscard]] FactorId self() const { return self_; }
  [[nodiscard]] long iteration() const { return iteration_; }
  [[nodiscard]] std::span<const VariableId> variables() const { return variables_; }
  /// Concurred values of the attached variables, in edge order.
  [[nodiscard]] std::span<const double> values() const { return values_; }
  /// Outgoing weight class of each attached variable after concur.
  [[nodiscard]] std::span<const Weight> weights() const { return weights_; }

  void emit(ReasonerEvent event) {
    event.source = self_;
    sink_->push_back(event);
  }

 private:
  FactorId self_;
  long iteration_;
  std::span<const VariableId> variables_;
  std::span<const double> values_;
  std::span<const Weight> weights_;
  std::vector<ReasonerEvent>* sink_;
};

/// Local reasoner: a factor whose incoming messages always equal the
/// concurred values and whose emissions default to zero weight.
///
/// Emissions are sticky: once requested for a variable they are resent every
/// iteration until cleared or replaced.
class LocalReasoner : public Factor {
 public:
  [[nodiscard]] bool is_local_reasoner() const final { return true; }

  void minimize(std::span<const VariableId> variables, std::span<const Message> incoming,
                std::span<Message> outgoing) override {
    for (std::size_t k = 0; k < variables.size(); ++k) {
      const Message* e = find_emission(variables[k]);
      outgoing[k] = e ? *e : Message{incoming[k].value, Weight::zero()};
    }
  }

  /// Runs after concur, in parallel with other local reasoners.
  virtual void reason(LocalContext& /*ctx*/) {}

  void set_emission(VariableId v, Message m) {
    auto it = std::find_if(emissions_.begin(), emissions_.end(),
                           [&](const auto& p) { return p.first == v; });
    if (it == emissions_.end()) {
      emissions_.emplace_back(v, m);
    } else {
      it->second = m;
    }
  }
  void clear_emission(VariableId v) {
    std::erase_if(emissions_, [&](const auto& p) { return p.first == v; });
  }
  void clear_emissions() { emissions_.clear(); }

  [[nodiscard]] const Message* find_emission(VariableId v) const {
    for (const auto& [id, m] : emissions_) {
      if (id == v) return &m;
    }
    return nullptr;
  }

 private:
  std::vector<std::pair<VariableId, Message>> emissions_;
};

}  // namespace twa

#endif  // TWA_FACTOR_HPP

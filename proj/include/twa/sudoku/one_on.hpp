#ifndef TWA_SUDOKU_ONE_ON_HPP
#define TWA_SUDOKU_ONE_ON_HPP

#include <span>
#include <string_view>

#include "twa/errors.hpp"
#include "twa/factor.hpp"

namespace twa::sudoku {

/// Hard constraint: exactly one attached indicator is on (1), the rest off (0).
///
/// Outgoing weights are infinite when the choice is logically forced (one
/// input certainly on, or all but one certainly off) and standard otherwise.
/// A `satisfied` factor belongs to a unit whose digit is already given by a
/// clue: all of its indicators are certainly off.
class OneOnFactor final : public Factor {
 public:
  explicit OneOnFactor(bool satisfied = false, double rho = 1.0) : satisfied_(satisfied), rho_(rho) {}

  [[nodiscard]] std::string_view kind() const override { return "one-on"; }
  [[nodiscard]] bool satisfied() const { return satisfied_; }

  void minimize(std::span<const VariableId> /*variables*/, std::span<const Message> in,
                std::span<Message> out) override {
    one_on_minimize(in, out, satisfied_, rho_);
  }

  static void one_on_minimize(std::span<const Message> in, std::span<Message> out,
                              bool satisfied = false, double rho = 1.0) {
    const std::size_t k = in.size();
    if (satisfied) {
      for (std::size_t i = 0; i < k; ++i) {
        if (in[i].weight.is_infinite() && in[i].value > 0.5) {
          throw InfeasibleCertainty("indicator certainly on in a unit already filled by a clue");
        }
        out[i] = Message{0.0, Weight::infinite()};
      }
      return;
    }
    std::size_t pinned_on = k;
    std::size_t on_count = 0;
    std::size_t off_count = 0;
    std::size_t last_free = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (in[i].weight.is_infinite()) {
        if (in[i].value > 0.5) {
          pinned_on = i;
          ++on_count;
        } else {
          ++off_count;
        }
      } else {
        last_free = i;
      }
    }
    if (on_count > 1) throw InfeasibleCertainty("two indicators certainly on in one unit");
    if (on_count == 0 && off_count == k) throw InfeasibleCertainty("all indicators certainly off");

    std::size_t chosen = k;
    bool forced = false;
    if (on_count == 1) {
      chosen = pinned_on;
      forced = true;
    } else if (k - off_count == 1) {
      chosen = last_free;
      forced = true;
    } else {
      // Switching indicator i on changes the quadratic cost by w_i(1 - 2 n_i)/2.
      double best_delta = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (in[i].weight.is_infinite()) continue;
        const double delta = in[i].weight.magnitude() * (1.0 - 2.0 * in[i].value);
        if (chosen == k || delta < best_delta ||
            (delta == best_delta && in[i].value > in[chosen].value)) {
          chosen = i;
          best_delta = delta;
        }
      }
    }
    const Weight w = forced ? Weight::infinite() : Weight::standard(rho);
    for (std::size_t i = 0; i < k; ++i) out[i] = Message{i == chosen ? 1.0 : 0.0, w};
  }

 private:
  bool satisfied_;
  double rho_;
};

}  // namespace twa::sudoku

#endif  // TWA_SUDOKU_ONE_ON_HPP

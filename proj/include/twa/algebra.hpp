#ifndef TWA_ALGEBRA_HPP
#define TWA_ALGEBRA_HPP

#include <cmath>
#include <span>
#include <sstream>

#include "twa/errors.hpp"
#include "twa/graph.hpp"
#include "twa/weight.hpp"

namespace twa {

struct ConcurResult {
  double value = 0.0;
  Weight weight;
};

/// Fuses the factors' opinions on one variable.
///
/// Infinite messages win outright and are averaged (they must agree within
/// `tolerance`); otherwise standard messages are averaged by magnitude; with
/// only zero-weight input the previous value is kept.
inline ConcurResult concur_variable(std::span<const Message> incoming, double previous,
                                    double rho_standard, double tolerance) {
  double inf_sum = 0.0;
  double inf_lo = 0.0;
  double inf_hi = 0.0;
  int inf_count = 0;
  double std_sum = 0.0;
  double std_mass = 0.0;
  for (const Message& m : incoming) {
    if (m.weight.is_infinite()) {
      if (inf_count == 0) {
        inf_lo = inf_hi = m.value;
      } else {
        inf_lo = std::min(inf_lo, m.value);
        inf_hi = std::max(inf_hi, m.value);
      }
      inf_sum += m.value;
      ++inf_count;
    } else if (m.weight.is_standard()) {
      std_sum += m.weight.magnitude() * m.value;
      std_mass += m.weight.magnitude();
    }
  }
  if (inf_count > 0) {
    if (inf_hi - inf_lo > tolerance) {
      std::ostringstream os;
      os << "certain messages disagree: " << inf_lo << " vs " << inf_hi;
      throw CertaintyConflict(os.str());
    }
    return {inf_sum / inf_count, Weight::infinite()};
  }
  if (std_mass > 0.0) return {std_sum / std_mass, Weight::standard(rho_standard)};
  return {previous, Weight::zero()};
}

/// Factor-to-variable message for a fresh assignment `x`: the assignment plus
/// the edge's accumulated error while both directions carry standard weight.
inline double outgoing_message(const EdgeState& edge, double x, Weight factor_weight) {
  if (factor_weight.is_standard() && edge.weight_to_factor.is_standard()) return x + edge.error_accum;
  return x;
}

/// Error-accumulating message update for one edge after concur.
///
/// `x` is the factor's assignment, `z` the concurred value. The error
/// term accumulates only while both directions carry standard weight and
/// resets otherwise; the new variable-to-factor message is z - u.
inline EdgeState update_edge(EdgeState edge, double x, double z, Weight factor_weight,
                             Weight variable_weight) {
  edge.prev_msg_to_factor = edge.msg_to_factor;
  if (factor_weight.is_standard() && variable_weight.is_standard()) {
    edge.error_accum += x - z;
  } else {
    edge.error_accum = 0.0;
  }
  edge.msg_to_factor = z - edge.error_accum;
  edge.weight_to_factor = variable_weight;
  return edge;
}

}  // namespace twa

#endif  // TWA_ALGEBRA_HPP

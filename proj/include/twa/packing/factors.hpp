#ifndef TWA_PACKING_FACTORS_HPP
#define TWA_PACKING_FACTORS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

#include "twa/errors.hpp"
#include "twa/factor.hpp"

namespace twa::packing {

/// Keeps a circle's center inside [r, 1-r]^2. Edges: (x, y).
///
/// Each coordinate is clamped independently; a coordinate already inside
/// carries zero weight so the constraint stays silent while satisfied.
class BoxFactor final : public Factor {
 public:
  explicit BoxFactor(double radius, double rho = 1.0) : radius_(radius), rho_(rho) {}

  [[nodiscard]] std::string_view kind() const override { return "box"; }
  [[nodiscard]] double radius() const { return radius_; }

  void minimize(std::span<const VariableId>, std::span<const Message> in,
                std::span<Message> out) override {
    box_minimize(in, out, radius_, rho_);
  }

  static void box_minimize(std::span<const Message> in, std::span<Message> out, double radius,
                           double rho = 1.0) {
    const double lo = radius;
    const double hi = 1.0 - radius;
    for (std::size_t k = 0; k < in.size(); ++k) {
      const double v = in[k].value;
      if (v < lo) {
        out[k] = {lo, Weight::standard(rho)};
      } else if (v > hi) {
        out[k] = {hi, Weight::standard(rho)};
      } else {
        out[k] = {v, Weight::zero()};
      }
    }
  }

 private:
  double radius_;
  double rho_;
};

/// Weight of a circle as seen by a pair constraint, combining its x and y
/// messages: infinite if either is, zero if both are, otherwise the mean of
/// the standard magnitudes.
inline Weight circle_weight(const Weight& wx, const Weight& wy) {
  if (wx.is_infinite() || wy.is_infinite()) return Weight::infinite();
  if (wx.is_zero() && wy.is_zero()) return Weight::zero();
  if (wx.is_zero()) return wy;
  if (wy.is_zero()) return wx;
  return Weight::standard(0.5 * (wx.magnitude() + wy.magnitude()));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Unit direction used to separate coincident centers, fixed per (seed, i, j).
inline std::array<double, 2> separation_direction(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  const std::uint64_t h = splitmix64(splitmix64(seed ^ splitmix64(i)) ^ j);
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(h >> 11) * 0x1.0p-53;
  return {std::cos(angle), std::sin(angle)};
}

/// Keeps two circles at least 2r apart. Edges: (x_i, y_i, x_j, y_j).
class PairFactor final : public Factor {
 public:
  PairFactor(double radius, std::uint64_t i, std::uint64_t j, std::uint64_t seed = 0, double rho = 1.0)
      : radius_(radius), i_(i), j_(j), dir_(separation_direction(seed, i, j)), rho_(rho) {}

  [[nodiscard]] std::string_view kind() const override { return "pair"; }
  [[nodiscard]] std::uint64_t first() const { return i_; }
  [[nodiscard]] std::uint64_t second() const { return j_; }
  [[nodiscard]] double radius() const { return radius_; }

  void minimize(std::span<const VariableId>, std::span<const Message> in,
                std::span<Message> out) override {
    pair_minimize(in, out, radius_, dir_, rho_);
  }

  /// Nearest (weighted squared distance) pair of centers at least 2r apart.
  /// The weighted centroid is kept and the shortfall is split inversely to
  /// the circles' weights; an infinite-weight circle does not move and a
  /// zero-weight circle absorbs the whole displacement. `dir` (unit vector
  /// from i to j) is used only when the centers coincide.
  static void pair_minimize(std::span<const Message> in, std::span<Message> out, double radius,
                            std::array<double, 2> dir = {1.0, 0.0}, double rho = 1.0) {
    const double dx = in[2].value - in[0].value;
    const double dy = in[3].value - in[1].value;
    const double d = std::hypot(dx, dy);
    const double target = 2.0 * radius;
    if (d >= target) {
      for (std::size_t k = 0; k < 4; ++k) out[k] = {in[k].value, Weight::zero()};
      return;
    }
    const Weight wi = circle_weight(in[0].weight, in[1].weight);
    const Weight wj = circle_weight(in[2].weight, in[3].weight);
    if (wi.is_infinite() && wj.is_infinite()) {
      throw InfeasibleCertainty("two pinned circles overlap");
    }
    double share_i;  // fraction of the shortfall moved by circle i
    if (wi.is_infinite()) {
      share_i = 0.0;
    } else if (wj.is_infinite()) {
      share_i = 1.0;
    } else if (wi.is_zero() && wj.is_zero()) {
      share_i = 0.5;
    } else if (wi.is_zero()) {
      share_i = 1.0;
    } else if (wj.is_zero()) {
      share_i = 0.0;
    } else {
      share_i = wj.magnitude() / (wi.magnitude() + wj.magnitude());
    }
    double ux, uy;
    if (d > 0.0) {
      ux = dx / d;
      uy = dy / d;
    } else {
      ux = dir[0];
      uy = dir[1];
    }
    const double gap = target - d;
    const double mi = gap * share_i;
    const double mj = gap - mi;
    const Weight w = Weight::standard(rho);
    out[0] = {in[0].value - ux * mi, w};
    out[1] = {in[1].value - uy * mi, w};
    out[2] = {in[2].value + ux * mj, w};
    out[3] = {in[3].value + uy * mj, w};
  }

 private:
  double radius_;
  std::uint64_t i_;
  std::uint64_t j_;
  std::array<double, 2> dir_;
  double rho_;
};

}  // namespace twa::packing

#endif  // TWA_PACKING_FACTORS_HPP

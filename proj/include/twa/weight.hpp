#ifndef TWA_WEIGHT_HPP
#define TWA_WEIGHT_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>

#include "twa/errors.hpp"

namespace twa {

/// Message weight: zero (no opinion), standard (positive finite magnitude),
/// or infinite (certain).
class Weight {
 public:
  enum class Class : std::uint8_t { Zero = 0, Standard = 1, Infinite = 2 };

  constexpr Weight() = default;

  static constexpr Weight zero() { return Weight(Class::Zero, 0.0); }
  static constexpr Weight infinite() {
    return Weight(Class::Infinite, std::numeric_limits<double>::infinity());
  }
  static constexpr Weight standard(double magnitude = 1.0) {
    if (!(magnitude > 0.0 && magnitude < std::numeric_limits<double>::infinity())) {
      throw InvalidConfig("standard weight magnitude must be positive and finite");
    }
    return Weight(Class::Standard, magnitude);
  }

  [[nodiscard]] constexpr Class cls() const { return cls_; }
  [[nodiscard]] constexpr double magnitude() const { return magnitude_; }
  [[nodiscard]] constexpr bool is_zero() const { return cls_ == Class::Zero; }
  [[nodiscard]] constexpr bool is_standard() const { return cls_ == Class::Standard; }
  [[nodiscard]] constexpr bool is_infinite() const { return cls_ == Class::Infinite; }

  /// Dominance order: Infinite > Standard > Zero; magnitudes ignored.
  [[nodiscard]] constexpr int rank() const { return static_cast<int>(cls_); }

  constexpr bool operator==(const Weight&) const = default;

  friend std::ostream& operator<<(std::ostream& os, const Weight& w) {
    switch (w.cls_) {
      case Class::Zero: return os << "0";
      case Class::Infinite: return os << "inf";
      case Class::Standard: return os << "std(" << w.magnitude_ << ")";
    }
    return os;
  }

 private:
  constexpr Weight(Class c, double m) : cls_(c), magnitude_(m) {}

  Class cls_ = Class::Zero;
  double magnitude_ = 0.0;
};

/// A (value, weight) pair travelling along one edge.
struct Message {
  double value = 0.0;
  Weight weight;

  bool operator==(const Message&) const = default;
};

}  // namespace twa

#endif  // TWA_WEIGHT_HPP

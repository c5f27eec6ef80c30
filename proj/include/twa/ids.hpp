#ifndef TWA_IDS_HPP
#define TWA_IDS_HPP

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace twa {

/// Opaque identifier: a slot index plus a generation counter.
///
/// A slot is recycled after removal but its generation is bumped, so a
/// (slot, generation) pair is never handed out twice within a graph.
template <class Tag>
class Id {
 public:
  constexpr Id() = default;
  constexpr Id(std::uint32_t slot, std::uint32_t generation)
      : raw_((static_cast<std::uint64_t>(generation) << 32) | slot) {}

  static constexpr Id from_raw(std::uint64_t raw) {
    Id id;
    id.raw_ = raw;
    return id;
  }

  [[nodiscard]] constexpr std::uint64_t raw() const { return raw_; }
  [[nodiscard]] constexpr std::uint32_t slot() const { return static_cast<std::uint32_t>(raw_); }
  [[nodiscard]] constexpr std::uint32_t generation() const {
    return static_cast<std::uint32_t>(raw_ >> 32);
  }
  [[nodiscard]] constexpr bool valid() const { return generation() != 0; }

  constexpr auto operator<=>(const Id&) const = default;

  friend std::ostream& operator<<(std::ostream& os, Id id) {
    return os << id.slot() << '.' << id.generation();
  }

 private:
  std::uint64_t raw_ = 0;
};

using VariableId = Id<struct VariableTag>;
using FactorId = Id<struct FactorTag>;
using EdgeId = Id<struct EdgeTag>;

}  // namespace twa

template <class Tag>
struct std::hash<twa::Id<Tag>> {
  std::size_t operator()(twa::Id<Tag> id) const noexcept {
    return std::hash<std::uint64_t>{}(id.raw());
  }
};

#endif  // TWA_IDS_HPP

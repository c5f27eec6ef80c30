#ifndef TWA_ERRORS_HPP
#define TWA_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace twa {

/// Base class of every error raised by the library.
///
/// Errors raised inside an iteration carry the iteration index once the
/// engine has caught and re-thrown them.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  [[nodiscard]] std::optional<long> iteration() const { return iteration_; }
  void set_iteration(long it) { iteration_ = it; }

 private:
  std::optional<long> iteration_;
};

#define TWA_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

// graph
TWA_DEFINE_ERROR(UnknownId);
TWA_DEFINE_ERROR(KindMismatch);
TWA_DEFINE_ERROR(NotYetConcurred);

// engine
TWA_DEFINE_ERROR(InfeasibleCertainty);
TWA_DEFINE_ERROR(CertaintyConflict);
TWA_DEFINE_ERROR(InvalidConfig);

// sudoku
TWA_DEFINE_ERROR(SyntaxError);
TWA_DEFINE_ERROR(InvalidPuzzle);
TWA_DEFINE_ERROR(Unsolved);
TWA_DEFINE_ERROR(Inconsistent);
TWA_DEFINE_ERROR(NoSolution);
TWA_DEFINE_ERROR(MultipleSolutions);

// packing / steering
TWA_DEFINE_ERROR(InfeasibleRadius);
TWA_DEFINE_ERROR(UnknownCircle);
TWA_DEFINE_ERROR(PortInUse);

#undef TWA_DEFINE_ERROR

/// Frame decoding failure; `offset` is the byte position of the problem.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace twa

#endif  // TWA_ERRORS_HPP

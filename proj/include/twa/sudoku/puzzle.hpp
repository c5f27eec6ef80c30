#ifndef TWA_SUDOKU_PUZZLE_HPP
#define TWA_SUDOKU_PUZZLE_HPP

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "twa/errors.hpp"

namespace twa::sudoku {

/// Square-in-square puzzle of side n = s*s. Cells hold 0 when open.
class Puzzle {
 public:
  Puzzle() = default;
  explicit Puzzle(int n) : n_(n), box_(box_side(n)), cells_(static_cast<std::size_t>(n) * n, 0) {}

  /// Validates side length, digit range and clue consistency.
  Puzzle(int n, std::vector<int> cells) : n_(n), box_(box_side(n)), cells_(std::move(cells)) {
    if (cells_.size() != static_cast<std::size_t>(n) * n) {
      throw InvalidPuzzle("expected " + std::to_string(n * n) + " cells");
    }
    for (int v : cells_) {
      if (v < 0 || v > n) throw InvalidPuzzle("digit out of range: " + std::to_string(v));
    }
    if (auto conflict = find_conflict()) throw InvalidPuzzle(*conflict);
  }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int box() const { return box_; }
  [[nodiscard]] int at(int r, int c) const { return cells_[index(r, c)]; }
  void set(int r, int c, int d) { cells_[index(r, c)] = d; }
  [[nodiscard]] const std::vector<int>& cells() const { return cells_; }
  [[nodiscard]] std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * n_ + c;
  }
  [[nodiscard]] int region(int r, int c) const { return (r / box_) * box_ + c / box_; }

  [[nodiscard]] std::map<std::pair<int, int>, int> clues() const {
    std::map<std::pair<int, int>, int> out;
    for (int r = 0; r < n_; ++r) {
      for (int c = 0; c < n_; ++c) {
        if (at(r, c)) out[{r, c}] = at(r, c);
      }
    }
    return out;
  }
  [[nodiscard]] int clue_count() const {
    int k = 0;
    for (int v : cells_) k += v != 0;
    return k;
  }
  [[nodiscard]] int open_count() const { return n_ * n_ - clue_count(); }
  [[nodiscard]] bool complete() const { return clue_count() == n_ * n_; }

  /// First row/column/region duplicate, if any.
  [[nodiscard]] std::optional<std::string> find_conflict() const {
    std::vector<std::uint8_t> seen;
    auto check = [&](auto cell_of, const char* what) -> std::optional<std::string> {
      for (int g = 0; g < n_; ++g) {
        seen.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (int k = 0; k < n_; ++k) {
          const auto [r, c] = cell_of(g, k);
          const int d = at(r, c);
          if (d == 0) continue;
          if (seen[d]++) {
            return std::string("digit ") + std::to_string(d) + " repeated in " + what + " " +
                   std::to_string(g + 1);
          }
        }
      }
      return std::nullopt;
    };
    if (auto e = check([](int g, int k) { return std::pair{g, k}; }, "row")) return e;
    if (auto e = check([](int g, int k) { return std::pair{k, g}; }, "column")) return e;
    const int b = box_;
    return check([b](int g, int k) { return std::pair{(g / b) * b + k / b, (g % b) * b + k % b}; },
                 "region");
  }

  /// Complete, in range, and rule-consistent.
  [[nodiscard]] bool is_solved() const {
    for (int v : cells_) {
      if (v < 1 || v > n_) return false;
    }
    return !find_conflict();
  }

  /// True if every clue of `clues` appears unchanged in this grid.
  [[nodiscard]] bool extends(const Puzzle& clues) const {
    if (clues.n_ != n_) return false;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (clues.cells_[i] && clues.cells_[i] != cells_[i]) return false;
    }
    return true;
  }

  bool operator==(const Puzzle&) const = default;

  static int box_side(int n) {
    const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (n < 4 || s * s != n) throw InvalidPuzzle("side " + std::to_string(n) + " is not s^2, s >= 2");
    return s;
  }

 private:
  int n_ = 0;
  int box_ = 0;
  std::vector<int> cells_;
};

/// Parses the puzzle text format: an optional "n=<N>" line, then N rows of N
/// whitespace-separated tokens, each a decimal digit 1..N or ".".
inline Puzzle parse_puzzle(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::optional<int> declared;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (rows.empty() && !declared && tokens.size() == 1 && tokens[0].rfind("n=", 0) == 0) {
      try {
        std::size_t used = 0;
        declared = std::stoi(tokens[0].substr(2), &used);
        if (used != tokens[0].size() - 2) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw SyntaxError("line " + std::to_string(line_no) + ": bad header '" + tokens[0] + "'");
      }
      continue;
    }
    rows.push_back(std::move(tokens));
  }
  if (rows.empty()) throw SyntaxError("no grid rows");
  const int n = declared.value_or(static_cast<int>(rows.size()));
  if (static_cast<int>(rows.size()) != n) {
    throw SyntaxError("expected " + std::to_string(n) + " rows, found " + std::to_string(rows.size()));
  }
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(rows[r].size()) != n) {
      throw SyntaxError("row " + std::to_string(r + 1) + ": expected " + std::to_string(n) +
                        " tokens, found " + std::to_string(rows[r].size()));
    }
    for (const std::string& t : rows[r]) {
      if (t == ".") {
        cells.push_back(0);
        continue;
      }
      int d = 0;
      for (char ch : t) {
        if (ch < '0' || ch > '9') throw SyntaxError("row " + std::to_string(r + 1) + ": bad token '" + t + "'");
        d = d * 10 + (ch - '0');
        if (d > 1000) break;
      }
      if (d < 1 || d > n) throw SyntaxError("row " + std::to_string(r + 1) + ": digit out of range '" + t + "'");
      cells.push_back(d);
    }
  }
  return Puzzle(n, std::move(cells));
}

/// Grid text in the puzzle file format (with "n=" header when `header`).
inline std::string format_grid(const Puzzle& p, bool header = true) {
  std::ostringstream os;
  if (header) os << "n=" << p.n() << '\n';
  const int width = p.n() > 9 ? 2 : 1;
  for (int r = 0; r < p.n(); ++r) {
    for (int c = 0; c < p.n(); ++c) {
      if (c) os << ' ';
      std::string tok = p.at(r, c) ? std::to_string(p.at(r, c)) : ".";
      if (static_cast<int>(tok.size()) < width) tok.insert(0, width - tok.size(), ' ');
      os << tok;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace twa::sudoku

#endif  // TWA_SUDOKU_PUZZLE_HPP

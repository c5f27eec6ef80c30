#ifndef TWA_SUDOKU_ORACLE_HPP
#define TWA_SUDOKU_ORACLE_HPP

#include <bit>
#include <cstdint>
#include <optional>
#include <vector>

#include "twa/errors.hpp"
#include "twa/sudoku/puzzle.hpp"

namespace twa::sudoku {

namespace detail {

/// Candidate bitmasks per row/column/region; bit d-1 set when d is used.
struct Occupancy {
  int n;
  int box;
  std::vector<std::uint32_t> row, col, reg;

  explicit Occupancy(const Puzzle& p)
      : n(p.n()), box(p.box()), row(p.n(), 0), col(p.n(), 0), reg(p.n(), 0) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (int d = p.at(r, c)) place(r, c, d);
      }
    }
  }
  [[nodiscard]] std::uint32_t all() const { return n == 32 ? ~0u : ((1u << n) - 1u); }
  [[nodiscard]] int region(int r, int c) const { return (r / box) * box + c / box; }
  [[nodiscard]] std::uint32_t candidates(int r, int c) const {
    return all() & ~(row[r] | col[c] | reg[region(r, c)]);
  }
  void place(int r, int c, int d) {
    const std::uint32_t bit = 1u << (d - 1);
    row[r] |= bit;
    col[c] |= bit;
    reg[region(r, c)] |= bit;
  }
  void unplace(int r, int c, int d) {
    const std::uint32_t bit = ~(1u << (d - 1));
    row[r] &= bit;
    col[c] &= bit;
    reg[region(r, c)] &= bit;
  }
};

struct Search {
  Puzzle grid;
  Occupancy occ;
  std::vector<int> open;  // cell indices still empty
  int limit;
  long node_limit;
  long nodes = 0;
  int found = 0;
  bool aborted = false;
  Puzzle first;

  Search(const Puzzle& p, int limit_, long node_limit_)
      : grid(p), occ(p), limit(limit_), node_limit(node_limit_) {
    for (int i = 0; i < p.n() * p.n(); ++i) {
      if (p.cells()[i] == 0) open.push_back(i);
    }
  }

  // Depth-first search with minimum-remaining-values cell choice; a cell
  // with no candidates prunes the branch (forward checking).
  void run(std::size_t depth) {
    if (found >= limit || aborted) return;
    if (node_limit > 0 && ++nodes > node_limit) {
      aborted = true;
      return;
    }
    if (depth == open.size()) {
      if (found++ == 0) first = grid;
      return;
    }
    const int n = grid.n();
    std::size_t best = depth;
    int best_count = 64;
    std::uint32_t best_mask = 0;
    for (std::size_t k = depth; k < open.size(); ++k) {
      const int r = open[k] / n;
      const int c = open[k] % n;
      const std::uint32_t mask = occ.candidates(r, c);
      const int cnt = std::popcount(mask);
      if (cnt < best_count) {
        best = k;
        best_count = cnt;
        best_mask = mask;
        if (cnt <= 1) break;
      }
    }
    if (best_count == 0) return;
    std::swap(open[depth], open[best]);
    const int r = open[depth] / n;
    const int c = open[depth] % n;
    for (std::uint32_t mask = best_mask; mask; mask &= mask - 1) {
      const int d = std::countr_zero(mask) + 1;
      occ.place(r, c, d);
      grid.set(r, c, d);
      run(depth + 1);
      grid.set(r, c, 0);
      occ.unplace(r, c, d);
      if (found >= limit || aborted) break;
    }
    std::swap(open[depth], open[best]);
  }
};

}  // namespace detail

struct SolutionCount {
  int count = 0;          // capped at the requested limit
  bool aborted = false;   // node limit hit before the count was settled
  std::optional<Puzzle> first;
};

/// Counts solutions up to `limit`; `node_limit` of 0 means unbounded.
inline SolutionCount count_solutions(const Puzzle& p, int limit = 2, long node_limit = 0) {
  detail::Search s(p, limit, node_limit);
  s.run(0);
  SolutionCount out;
  out.count = s.found;
  out.aborted = s.aborted;
  if (s.found > 0) out.first = s.first;
  return out;
}

/// Backtracking oracle: the unique solution, or NoSolution/MultipleSolutions.
inline Puzzle solve_bruteforce(const Puzzle& p) {
  const SolutionCount sc = count_solutions(p, 2);
  if (sc.count == 0) throw NoSolution("puzzle has no solution");
  if (sc.count > 1) throw MultipleSolutions("puzzle has more than one solution");
  return *sc.first;
}

/// Pure deduction with naked and hidden singles. Returns the grid reached;
/// it is complete iff the puzzle is solvable by singles alone.
inline Puzzle solve_with_singles(const Puzzle& p) {
  Puzzle g = p;
  detail::Occupancy occ(p);
  const int n = p.n();
  const int b = p.box();
  for (bool progress = true; progress;) {
    progress = false;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (g.at(r, c)) continue;
        const std::uint32_t m = occ.candidates(r, c);
        if (std::popcount(m) == 1) {
          const int d = std::countr_zero(m) + 1;
          g.set(r, c, d);
          occ.place(r, c, d);
          progress = true;
        }
      }
    }
    // hidden singles over the three unit families
    for (int fam = 0; fam < 3; ++fam) {
      for (int u = 0; u < n; ++u) {
        for (int d = 1; d <= n; ++d) {
          int places = 0;
          int pr = -1;
          int pc = -1;
          bool present = false;
          for (int k = 0; k < n && !present; ++k) {
            int r, c;
            if (fam == 0) { r = u; c = k; }
            else if (fam == 1) { r = k; c = u; }
            else { r = (u / b) * b + k / b; c = (u % b) * b + k % b; }
            if (g.at(r, c) == d) present = true;
            else if (!g.at(r, c) && (occ.candidates(r, c) >> (d - 1) & 1u)) {
              ++places;
              pr = r;
              pc = c;
            }
          }
          if (!present && places == 1) {
            g.set(pr, pc, d);
            occ.place(pr, pc, d);
            progress = true;
          }
        }
      }
    }
  }
  return g;
}

inline bool is_singles_solvable(const Puzzle& p) { return solve_with_singles(p).complete(); }

}  // namespace twa::sudoku

#endif  // TWA_SUDOKU_ORACLE_HPP

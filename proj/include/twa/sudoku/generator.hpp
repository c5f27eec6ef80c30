#ifndef TWA_SUDOKU_GENERATOR_HPP
#define TWA_SUDOKU_GENERATOR_HPP

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "twa/sudoku/oracle.hpp"
#include "twa/sudoku/puzzle.hpp"

namespace twa::sudoku {

/// Random complete grid: the canonical pattern grid under a random relabeling
/// of digits, row/column permutations within bands and stacks, band/stack
/// permutations and an optional transpose.
inline Puzzle random_solution(int n, std::mt19937_64& rng) {
  const int b = Puzzle::box_side(n);
  auto perm = [&](int k) {
    std::vector<int> p(static_cast<std::size_t>(k));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
  };
  auto axis = [&] {
    std::vector<int> out;
    for (int band : perm(b)) {
      for (int k : perm(b)) out.push_back(band * b + k);
    }
    return out;
  };
  const std::vector<int> digits = perm(n);
  const std::vector<int> rows = axis();
  const std::vector<int> cols = axis();
  const bool transpose = rng() & 1u;
  Puzzle g(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int rr = rows[r];
      const int cc = cols[c];
      const int base = (rr * b + rr / b + cc) % n;
      if (transpose) {
        g.set(c, r, digits[base] + 1);
      } else {
        g.set(r, c, digits[base] + 1);
      }
    }
  }
  return g;
}

struct DigOptions {
  int min_clues = 0;             // stop removing once this many clues remain
  bool keep_singles_solvable = false;
  long node_limit = 200000;      // uniqueness checks that exceed this keep the clue
};

/// Removes clues in random order while the puzzle keeps a unique solution
/// (verified by the backtracking oracle) and the optional constraints hold.
inline Puzzle dig(const Puzzle& solution, std::mt19937_64& rng, const DigOptions& opt = {}) {
  Puzzle p = solution;
  const int n = p.n();
  std::vector<int> order(static_cast<std::size_t>(n) * n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int clues = n * n;
  for (int idx : order) {
    if (clues <= opt.min_clues) break;
    const int r = idx / n;
    const int c = idx % n;
    const int d = p.at(r, c);
    p.set(r, c, 0);
    bool ok = true;
    if (opt.keep_singles_solvable) ok = is_singles_solvable(p);
    if (ok) {
      const SolutionCount sc = count_solutions(p, 2, opt.node_limit);
      ok = !sc.aborted && sc.count == 1;
    }
    if (ok) {
      --clues;
    } else {
      p.set(r, c, d);
    }
  }
  return p;
}

}  // namespace twa::sudoku

#endif  // TWA_SUDOKU_GENERATOR_HPP

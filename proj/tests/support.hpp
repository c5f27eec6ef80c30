// Independent oracles shared by the test suites. Nothing here calls into the
// code under test except for plain data accessors.
#ifndef TWA_TESTS_SUPPORT_HPP
#define TWA_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "twa/graph.hpp"
#include "twa/sudoku/puzzle.hpp"

namespace testing_support {

inline std::string data_path(const std::string& rel) { return std::string(TWA_DATA_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Corpus files whose name starts with `prefix`, sorted.
inline std::vector<std::string> corpus(const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(data_path("sudoku"))) {
    const std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- Sudoku

/// Row/column/region rule check plus agreement with the clues.
inline bool valid_solution(const twa::sudoku::Puzzle& clues, const std::vector<int>& grid) {
  const int n = clues.n();
  const int b = static_cast<int>(std::lround(std::sqrt(n)));
  if (static_cast<int>(grid.size()) != n * n) return false;
  for (int i = 0; i < n * n; ++i) {
    if (grid[i] < 1 || grid[i] > n) return false;
    if (clues.cells()[i] && clues.cells()[i] != grid[i]) return false;
  }
  for (int u = 0; u < n; ++u) {
    std::set<int> row, col, reg;
    for (int k = 0; k < n; ++k) {
      row.insert(grid[u * n + k]);
      col.insert(grid[k * n + u]);
      const int r = (u / b) * b + k / b;
      const int c = (u % b) * b + k % b;
      reg.insert(grid[r * n + c]);
    }
    if (static_cast<int>(row.size()) != n || static_cast<int>(col.size()) != n ||
        static_cast<int>(reg.size()) != n) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- one-on

struct OneHotResult {
  bool feasible = false;
  std::size_t on = 0;
};

/// Enumerates all one-hot vectors, honouring certain inputs as equalities,
/// and returns the cheapest. Ties go to the candidate whose input is largest,
/// then to the lowest index.
inline OneHotResult one_hot_argmin(const std::vector<twa::Message>& in) {
  OneHotResult best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t on = 0; on < in.size(); ++on) {
    double cost = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < in.size(); ++k) {
      const double v = k == on ? 1.0 : 0.0;
      if (in[k].weight.is_infinite()) {
        if (std::abs(in[k].value - v) > 0.5) ok = false;
      } else if (in[k].weight.is_standard()) {
        cost += 0.5 * in[k].weight.magnitude() * (v - in[k].value) * (v - in[k].value);
      }
    }
    if (!ok) continue;
    if (!best.feasible || cost < best_cost ||
        (cost == best_cost && in[on].value > in[best.on].value)) {
      best = {true, on};
      best_cost = cost;
    }
  }
  return best;
}

// ---------------------------------------------------------------- packing

/// Weighted squared-distance cost of moving (ni, nj) to (ci, cj).
inline double pair_cost(double wi, double wj, const double ni[2], const double nj[2], const double ci[2],
                        const double cj[2]) {
  auto sq = [](double a, double b) { return (a - b) * (a - b); };
  return 0.5 * wi * (sq(ci[0], ni[0]) + sq(ci[1], ni[1])) + 0.5 * wj * (sq(cj[0], nj[0]) + sq(cj[1], nj[1]));
}

/// Dense search for the cheapest placement with the centers exactly `dist`
/// apart (the constraint is active when the inputs overlap). For each
/// direction angle the best placement is a weighted least-squares solve; the
/// angle is scanned on a fine grid and refined by golden-section search.
inline double dense_pair_search(double wi, double wj, const double ni[2], const double nj[2], double dist) {
  auto cost_at = [&](double th) {
    const double ux = std::cos(th);
    const double uy = std::sin(th);
    double ci[2];
    double cj[2];
    if (std::isinf(wi)) {
      ci[0] = ni[0];
      ci[1] = ni[1];
    } else if (std::isinf(wj)) {
      ci[0] = nj[0] - dist * ux;
      ci[1] = nj[1] - dist * uy;
    } else {
      ci[0] = (wi * ni[0] + wj * (nj[0] - dist * ux)) / (wi + wj);
      ci[1] = (wi * ni[1] + wj * (nj[1] - dist * uy)) / (wi + wj);
    }
    cj[0] = ci[0] + dist * ux;
    cj[1] = ci[1] + dist * uy;
    const double a = std::isinf(wi) ? 0.0 : wi;
    const double b = std::isinf(wj) ? 0.0 : wj;
    return pair_cost(a, b, ni, nj, ci, cj);
  };
  constexpr int kGrid = 20000;
  const double step = 2.0 * std::numbers::pi / kGrid;
  int best = 0;
  double best_cost = cost_at(0.0);
  for (int k = 1; k < kGrid; ++k) {
    const double c = cost_at(k * step);
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }
  double lo = (best - 1) * step;
  double hi = (best + 1) * step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = cost_at(x1);
  double f2 = cost_at(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = cost_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = cost_at(x2);
    }
  }
  return std::min({best_cost, f1, f2});
}

/// Brute-force closed-interval box intersection pairs (a < b).
template <class BoxMap>
std::vector<std::pair<std::uint64_t, std::uint64_t>> brute_pairs(const BoxMap& boxes) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (auto a = boxes.begin(); a != boxes.end(); ++a) {
    for (auto b = std::next(a); b != boxes.end(); ++b) {
      bool hit = true;
      for (std::size_t d = 0; d < a->second.lo.size(); ++d) {
        if (a->second.hi[d] < b->second.lo[d] || b->second.hi[d] < a->second.lo[d]) hit = false;
      }
      if (hit) out.emplace_back(std::min(a->first, b->first), std::max(a->first, b->first));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- graph

struct WalkCounts {
  std::size_t variables = 0;
  std::size_t factors = 0;
  std::size_t edges = 0;
  std::vector<std::string> problems;
};

/// Walks the graph from the factor side and the variable side separately and
/// cross-checks every reference.
inline WalkCounts walk(const twa::FactorGraph& g, bool allow_isolated = false) {
  WalkCounts w;
  std::set<std::uint64_t> via_factors;
  std::set<std::uint64_t> via_variables;
  g.factors().for_each([&](twa::FactorId f, const twa::FactorNode& fn) {
    ++w.factors;
    if (fn.edges.size() != fn.variables.size()) w.problems.push_back("factor edge/variable size mismatch");
    for (std::size_t k = 0; k < fn.edges.size(); ++k) {
      via_factors.insert(fn.edges[k].raw());
      if (!g.contains(fn.edges[k])) {
        w.problems.push_back("factor lists a dead edge");
        continue;
      }
      const auto& e = g.edge(fn.edges[k]);
      if (e.factor != f) w.problems.push_back("edge factor back-reference wrong");
      if (e.variable != fn.variables[k]) w.problems.push_back("edge variable differs from factor list");
      if (!g.contains(e.variable)) w.problems.push_back("edge references a dead variable");
    }
  });
  g.variables().for_each([&](twa::VariableId v, const twa::VariableNode& vn) {
    ++w.variables;
    if (vn.edges.empty() && !allow_isolated) w.problems.push_back("isolated variable survived pruning");
    for (twa::EdgeId e : vn.edges) {
      via_variables.insert(e.raw());
      if (!g.contains(e)) {
        w.problems.push_back("variable lists a dead edge");
      } else if (g.edge(e).variable != v) {
        w.problems.push_back("edge variable back-reference wrong");
      }
    }
  });
  g.edges().for_each([&](twa::EdgeId id, const twa::Edge& e) {
    ++w.edges;
    if (!via_factors.count(id.raw())) w.problems.push_back("edge missing from its factor");
    if (!via_variables.count(id.raw())) w.problems.push_back("edge missing from its variable");
    if (!g.contains(e.factor) || !g.contains(e.variable)) w.problems.push_back("edge endpoint dead");
  });
  return w;
}

}  // namespace testing_support

#endif  // TWA_TESTS_SUPPORT_HPP

#ifndef TWA_SUDOKU_MODEL_HPP
#define TWA_SUDOKU_MODEL_HPP

#include <array>
#include <memory>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "twa/graph.hpp"
#include "twa/sudoku/one_on.hpp"
#include "twa/sudoku/puzzle.hpp"

namespace twa::sudoku {

struct Cell {
  int row = 0;
  int col = 0;
  int digit = 0;  // 1-based

  bool operator==(const Cell&) const = default;
};

/// Bijection between open-cell digit possibilities and indicator variables.
class IndicatorIndex {
 public:
  IndicatorIndex() = default;
  explicit IndicatorIndex(int n) : n_(n), ids_(static_cast<std::size_t>(n) * n * n) {}

  void bind(Cell c, VariableId v) {
    ids_[slot(c)] = v;
    cells_[v] = c;
  }
  /// Invalid id for clue cells.
  [[nodiscard]] VariableId at(int r, int c, int d) const { return ids_[slot({r, c, d})]; }
  [[nodiscard]] std::optional<Cell> cell_of(VariableId v) const {
    auto it = cells_.find(v);
    if (it == cells_.end()) return std::nullopt;
    return it->second;
  }
  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  [[nodiscard]] int n() const { return n_; }

 private:
  [[nodiscard]] std::size_t slot(Cell c) const {
    return (static_cast<std::size_t>(c.row) * n_ + c.col) * n_ + (c.digit - 1);
  }

  int n_ = 0;
  std::vector<VariableId> ids_;
  std::unordered_map<VariableId, Cell> cells_;
};

enum class UnitFamily { Cell = 0, Row = 1, Column = 2, Region = 3 };

struct SudokuModel {
  Puzzle puzzle;
  IndicatorIndex index;
  /// One-on factors keyed by family; cell factors by r*n+c, unit factors by
  /// unit*n + (digit-1). Invalid where no factor was built.
  std::array<std::vector<FactorId>, 4> factors;
  std::unordered_map<FactorId, UnitFamily> family_of;
};

/// Builds the indicator/one-on factor graph for `puzzle`.
///
/// Clue cells get no variables. A row/column/region unit that already holds
/// a digit as a clue gets a satisfied factor that pins its indicators off.
/// Initial indicator values are drawn uniformly from [0, init_spread) when
/// `rng` is given, otherwise zero.
inline SudokuModel build_graph(const Puzzle& puzzle, FactorGraph& graph,
                               std::mt19937_64* rng = nullptr, double init_spread = 1.0,
                               double rho = 1.0) {
  const int n = puzzle.n();
  const int b = puzzle.box();
  SudokuModel m;
  m.puzzle = puzzle;
  m.index = IndicatorIndex(n);
  for (auto& f : m.factors) f.assign(static_cast<std::size_t>(n) * n, FactorId{});

  std::uniform_real_distribution<double> init(0.0, init_spread);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (puzzle.at(r, c)) continue;
      for (int d = 1; d <= n; ++d) {
        m.index.bind({r, c, d}, graph.add_variable(rng ? init(*rng) : 0.0));
      }
    }
  }

  std::vector<VariableId> vars;
  auto add = [&](UnitFamily fam, std::size_t key, bool satisfied) {
    if (vars.empty()) return;
    const FactorId f = graph.add_factor(std::make_unique<OneOnFactor>(satisfied, rho), vars);
    m.factors[static_cast<int>(fam)][key] = f;
    m.family_of[f] = fam;
  };

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      vars.clear();
      if (puzzle.at(r, c)) continue;
      for (int d = 1; d <= n; ++d) vars.push_back(m.index.at(r, c, d));
      add(UnitFamily::Cell, puzzle.index(r, c), false);
    }
  }
  for (int fam = 1; fam <= 3; ++fam) {
    for (int u = 0; u < n; ++u) {
      for (int d = 1; d <= n; ++d) {
        vars.clear();
        bool satisfied = false;
        for (int k = 0; k < n; ++k) {
          int r, c;
          if (fam == 1) { r = u; c = k; }
          else if (fam == 2) { r = k; c = u; }
          else { r = (u / b) * b + k / b; c = (u % b) * b + k % b; }
          if (puzzle.at(r, c) == d) satisfied = true;
          if (!puzzle.at(r, c)) vars.push_back(m.index.at(r, c, d));
        }
        add(static_cast<UnitFamily>(fam), static_cast<std::size_t>(u) * n + (d - 1), satisfied);
      }
    }
  }
  return m;
}

}  // namespace twa::sudoku

#endif  // TWA_SUDOKU_MODEL_HPP

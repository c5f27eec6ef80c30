#ifndef TWA_SUDOKU_REASONERS_HPP
#define TWA_SUDOKU_REASONERS_HPP

#include <algorithm>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "twa/engine.hpp"
#include "twa/factor.hpp"
#include "twa/sudoku/model.hpp"

namespace twa::sudoku {

enum EventCode : std::uint32_t {
  kPossibilityRemoved = 1,  // indicator certainly off
  kDigitAssigned = 2,       // indicator certainly on
};

/// Local reasoner attached to one open cell's indicators. Tracks the set of
/// digits not yet certainly off and reports each change exactly once.
class PossibilityReasoner final : public LocalReasoner {
 public:
  PossibilityReasoner(int row, int col, int n, std::vector<std::pair<VariableId, int>> digits)
      : row_(row), col_(col), digits_(std::move(digits)),
        removed_(static_cast<std::size_t>(n) + 1, 0), assigned_(static_cast<std::size_t>(n) + 1, 0) {}

  [[nodiscard]] std::string_view kind() const override { return "possibility"; }

  void reason(LocalContext& ctx) override {
    const auto vars = ctx.variables();
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (!ctx.weights()[i].is_infinite()) continue;
      const int d = digit_of(vars[i]);
      if (d == 0) continue;
      const bool on = ctx.values()[i] > 0.5;
      auto& seen = on ? assigned_ : removed_;
      if (seen[d]) continue;
      seen[d] = 1;
      ReasonerEvent ev;
      ev.variable = vars[i];
      ev.code = on ? kDigitAssigned : kPossibilityRemoved;
      ev.data = {row_, col_, d};
      ev.value = ctx.values()[i];
      ctx.emit(ev);
    }
  }

  /// Digits not yet known to be off.
  [[nodiscard]] std::vector<int> possible() const {
    std::vector<int> out;
    for (const auto& [v, d] : digits_) {
      if (!removed_[d]) out.push_back(d);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  [[nodiscard]] int row() const { return row_; }
  [[nodiscard]] int col() const { return col_; }

 private:
  [[nodiscard]] int digit_of(VariableId v) const {
    for (const auto& [id, d] : digits_) {
      if (id == v) return d;
    }
    return 0;
  }

  int row_;
  int col_;
  std::vector<std::pair<VariableId, int>> digits_;
  std::vector<std::uint8_t> removed_;
  std::vector<std::uint8_t> assigned_;
};

/// Attaches one possibility reasoner per open cell. Returns their ids indexed
/// by r*n+c (invalid for clue cells).
inline std::vector<FactorId> attach_possibility_reasoners(const SudokuModel& m, FactorGraph& graph) {
  const int n = m.puzzle.n();
  std::vector<FactorId> out(static_cast<std::size_t>(n) * n);
  std::vector<VariableId> vars;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (m.puzzle.at(r, c)) continue;
      std::vector<std::pair<VariableId, int>> digits;
      vars.clear();
      for (int d = 1; d <= n; ++d) {
        digits.emplace_back(m.index.at(r, c, d), d);
        vars.push_back(m.index.at(r, c, d));
      }
      out[m.puzzle.index(r, c)] =
          graph.add_factor(std::make_unique<PossibilityReasoner>(r, c, n, std::move(digits)), vars);
    }
  }
  return out;
}

/// Global reasoner that turns possibility changes into graph dynamics.
///
/// A removed possibility loses its four constraint edges and its observer
/// edge (so the indicator is pruned). A constraint left with one live
/// indicator pins it on through the cell's possibility reasoner and is
/// removed; a constraint or observer left with none is removed.
class PruningReasoner final : public GlobalReasoner {
 public:
  PruningReasoner(const SudokuModel& model, std::vector<FactorId> observers, const FactorGraph& graph)
      : model_(&model), n_(model.puzzle.n()), observers_(std::move(observers)),
        resolved_(static_cast<std::size_t>(n_) * n_, 0) {
    for (const auto& fam : model.factors) {
      for (FactorId f : fam) {
        if (f.valid()) live_[f] = static_cast<int>(graph.factor(f).edges.size());
      }
    }
    for (FactorId f : observers_) {
      if (f.valid()) {
        live_[f] = static_cast<int>(graph.factor(f).edges.size());
        observer_set_.insert(f);
      }
    }
  }

  [[nodiscard]] std::string name() const override { return "sudoku-pruning"; }

  void reason(GlobalContext& ctx) override {
    const FactorGraph& g = ctx.graph();
    std::vector<FactorId> touched;
    last_edge_removals_ = 0;
    for (const ReasonerEvent& ev : ctx.events()) {
      if (!observer_set_.count(ev.source)) continue;
      const VariableId v = ev.variable;
      if (!g.contains(v)) continue;
      const auto r = static_cast<int>(ev.data[0]);
      const auto c = static_cast<int>(ev.data[1]);
      const auto d = static_cast<int>(ev.data[2]);
      const FactorId observer = observers_[static_cast<std::size_t>(r) * n_ + c];
      if (ev.code == kPossibilityRemoved) {
        if (!dead_.insert(v).second) continue;
        ++removed_possibilities_;
        for (EdgeId e : g.variable(v).edges) {
          const FactorId f = g.edge(e).factor;
          ctx.queue(edit::RemoveEdge{e});
          ++last_edge_removals_;
          --live_[f];
          touched.push_back(f);
        }
      } else if (ev.code == kDigitAssigned) {
        if (!assigned_.insert(v).second) continue;
        resolved_[static_cast<std::size_t>(r) * n_ + c] = d;
        for (EdgeId e : g.variable(v).edges) {
          const FactorId f = g.edge(e).factor;
          if (f == observer) {
            ctx.queue(edit::RemoveEdge{e});
            ++last_edge_removals_;
            --live_[f];
          }
          touched.push_back(f);
        }
      }
    }

    for (FactorId f : touched) {
      if (removed_.count(f) || !g.contains(f)) continue;
      const int live = live_[f];
      if (observer_set_.count(f)) {
        if (live == 0) remove_factor(ctx, f);
        continue;
      }
      if (live == 0) {
        remove_factor(ctx, f);
      } else if (live == 1) {
        const VariableId w = remaining(g, f);
        if (w.valid() && !assigned_.count(w)) {
          const auto cell = model_->index.cell_of(w);
          const FactorId obs = observers_[static_cast<std::size_t>(cell->row) * n_ + cell->col];
          ctx.request_emission(obs, w, Message{1.0, Weight::infinite()});
        }
        remove_factor(ctx, f);
      }
    }
  }

  /// Digit recorded for a cell once its indicator became certainly on (0 if not yet).
  [[nodiscard]] int resolved(int r, int c) const { return resolved_[static_cast<std::size_t>(r) * n_ + c]; }
  [[nodiscard]] bool is_dead(VariableId v) const { return dead_.count(v) != 0; }
  [[nodiscard]] std::size_t removed_possibilities() const { return removed_possibilities_; }
  /// RemoveEdge edits queued during the last reason() call.
  [[nodiscard]] std::size_t last_edge_removals() const { return last_edge_removals_; }

 private:
  void remove_factor(GlobalContext& ctx, FactorId f) {
    ctx.queue(edit::RemoveFactor{f});
    removed_.insert(f);
  }

  [[nodiscard]] VariableId remaining(const FactorGraph& g, FactorId f) const {
    for (VariableId v : g.factor(f).variables) {
      if (!dead_.count(v)) return v;
    }
    return {};
  }

  const SudokuModel* model_;
  int n_;
  std::vector<FactorId> observers_;
  std::unordered_set<FactorId> observer_set_;
  std::unordered_map<FactorId, int> live_;
  std::unordered_set<FactorId> removed_;
  std::unordered_set<VariableId> dead_;
  std::unordered_set<VariableId> assigned_;
  std::vector<int> resolved_;
  std::size_t removed_possibilities_ = 0;
  std::size_t last_edge_removals_ = 0;
};

/// Global reasoner that halts once the grid read from the graph is a valid
/// solution: every indicator certain, or (when certainty has stopped spreading)
/// every cell with a unique indicator above 0.5 and the grid rule-consistent.
class SolutionDetector final : public GlobalReasoner {
 public:
  SolutionDetector(const SudokuModel& model, const PruningReasoner* pruning = nullptr)
      : model_(&model), pruning_(pruning) {}

  [[nodiscard]] std::string name() const override { return "sudoku-solution"; }

  void reason(GlobalContext& ctx) override {
    const FactorGraph& g = ctx.graph();
    const Puzzle& p = model_->puzzle;
    const int n = p.n();
    Puzzle grid = p;
    std::size_t decided = 0;
    bool complete = true;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (p.at(r, c)) continue;
        int certain = pruning_ ? pruning_->resolved(r, c) : 0;
        int dominant = 0;
        int dominant_count = 0;
        for (int d = 1; d <= n; ++d) {
          const VariableId v = model_->index.at(r, c, d);
          if (!g.contains(v)) {
            ++decided;
            continue;
          }
          const VariableNode& vn = g.variable(v);
          if (vn.weight.is_infinite()) {
            ++decided;
            if (vn.value > 0.5) certain = d;
          } else if (vn.value > 0.5) {
            ++dominant_count;
            dominant = d;
          }
        }
        if (certain) {
          grid.set(r, c, certain);
        } else {
          if (dominant_count == 1) {
            grid.set(r, c, dominant);
          } else {
            complete = false;
          }
        }
      }
    }
    const bool all_certain =
        decided == static_cast<std::size_t>(p.open_count()) * static_cast<std::size_t>(n);
    const bool progress = decided > decided_;
    decided_ = decided;
    if (all_certain && complete) {
      ++propagation_iterations_;
    } else if (progress) {
      ++propagation_iterations_;
    } else {
      ++numeric_iterations_;
    }
    if (complete && (all_certain || !progress) && grid.is_solved()) {
      solution_ = grid;
      all_certain_ = all_certain;
      ctx.halt();
    }
  }

  [[nodiscard]] const std::optional<Puzzle>& solution() const { return solution_; }
  [[nodiscard]] bool solved_by_certainty() const { return all_certain_; }
  [[nodiscard]] long propagation_iterations() const { return propagation_iterations_; }
  [[nodiscard]] long numeric_iterations() const { return numeric_iterations_; }
  [[nodiscard]] std::size_t decided_indicators() const { return decided_; }

 private:
  const SudokuModel* model_;
  const PruningReasoner* pruning_;
  std::size_t decided_ = 0;
  long propagation_iterations_ = 0;
  long numeric_iterations_ = 0;
  bool all_certain_ = false;
  std::optional<Puzzle> solution_;
};

}  // namespace twa::sudoku

#endif  // TWA_SUDOKU_REASONERS_HPP

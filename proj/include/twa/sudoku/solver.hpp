#ifndef TWA_SUDOKU_SOLVER_HPP
#define TWA_SUDOKU_SOLVER_HPP

#include <chrono>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "twa/engine.hpp"
#include "twa/sudoku/model.hpp"
#include "twa/sudoku/reasoners.hpp"

namespace twa::sudoku {

struct SolveOptions {
  bool dynamics = true;
  EngineConfig engine;
  /// Indicators start uniform in [0, init_spread), seeded by engine.rng_seed.
  double init_spread = 1.0;
};

struct SolveStats {
  long iterations = 0;
  std::size_t initial_graph_size = 0;
  std::size_t final_graph_size = 0;  // factors + variables
  std::size_t final_factors = 0;
  std::size_t final_variables = 0;
  double solve_ms = 0.0;
  double ms_per_iter = 0.0;
  long propagation_iterations = 0;
  long numeric_iterations = 0;
  bool solved_by_certainty = false;
  std::vector<double> iteration_us;

  /// Mean iteration time (ms) over the last quarter of iterations.
  [[nodiscard]] double final_quartile_ms_per_iter() const {
    if (iteration_us.empty()) return 0.0;
    const std::size_t from = iteration_us.size() - std::max<std::size_t>(1, iteration_us.size() / 4);
    double sum = 0.0;
    for (std::size_t i = from; i < iteration_us.size(); ++i) sum += iteration_us[i];
    return sum / static_cast<double>(iteration_us.size() - from) / 1000.0;
  }
};

struct Solution {
  Puzzle grid;
  SolveStats stats;
};

using StatusObserver = std::function<void(const IterationStatus&)>;

/// Solves with the three-weight engine: certainty propagation through the
/// one-on constraints first, then numeric message passing. With `dynamics`
/// the possibility/pruning reasoners shrink the graph as digits are ruled out.
inline Solution solve(const Puzzle& puzzle, const SolveOptions& opts = {},
                      const StatusObserver& observer = {}) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  FactorGraph graph;
  std::mt19937_64 rng(opts.engine.rng_seed);
  const SudokuModel model = build_graph(puzzle, graph, &rng, opts.init_spread, opts.engine.rho_standard);
  std::shared_ptr<PruningReasoner> pruning;
  if (opts.dynamics) {
    auto observers = attach_possibility_reasoners(model, graph);
    pruning = std::make_shared<PruningReasoner>(model, std::move(observers), graph);
  }
  auto detector = std::make_shared<SolutionDetector>(model, pruning.get());

  Solution out;
  out.stats.initial_graph_size = graph.size();

  Engine engine(graph, opts.engine);
  if (pruning) engine.add_global_reasoner(pruning);
  engine.add_global_reasoner(detector);

  IterationStatus last;
  try {
    last = engine.run([&](const IterationStatus& s) {
      out.stats.iteration_us.push_back(s.timing.total_us());
      if (observer) observer(s);
    });
  } catch (const InfeasibleCertainty& e) {
    Inconsistent err(std::string("inconsistent puzzle: ") + e.what());
    if (e.iteration()) err.set_iteration(*e.iteration());
    throw err;
  } catch (const CertaintyConflict& e) {
    Inconsistent err(std::string("inconsistent puzzle: ") + e.what());
    if (e.iteration()) err.set_iteration(*e.iteration());
    throw err;
  }

  SolveStats& st = out.stats;
  st.iterations = last.iteration;
  st.final_factors = graph.factor_count();
  st.final_variables = graph.variable_count();
  st.final_graph_size = graph.size();
  st.propagation_iterations = detector->propagation_iterations();
  st.numeric_iterations = detector->numeric_iterations();
  st.solved_by_certainty = detector->solved_by_certainty();
  st.solve_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  double loop_us = 0.0;
  for (double us : st.iteration_us) loop_us += us;
  st.ms_per_iter = st.iterations ? loop_us / 1000.0 / static_cast<double>(st.iterations) : 0.0;

  if (!detector->solution()) {
    Unsolved err("no solution after " + std::to_string(last.iteration) + " iterations");
    err.set_iteration(last.iteration);
    throw err;
  }
  out.grid = *detector->solution();
  return out;
}

}  // namespace twa::sudoku

#endif  // TWA_SUDOKU_SOLVER_HPP

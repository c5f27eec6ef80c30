#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "support.hpp"
#include "twa/algebra.hpp"
#include "twa/engine.hpp"
#include "twa/schedule.hpp"
#include "twa/sudoku/model.hpp"
#include "twa/sudoku/one_on.hpp"
#include "twa/sudoku/puzzle.hpp"

using namespace twa;

namespace {

Message std_msg(double v, double w = 1.0) { return {v, Weight::standard(w)}; }
Message inf_msg(double v) { return {v, Weight::infinite()}; }
Message zero_msg(double v) { return {v, Weight::zero()}; }

class Pin final : public LocalReasoner {
 public:
  std::string_view kind() const override { return "pin"; }
};

class Silent final : public LocalReasoner {
 public:
  std::string_view kind() const override { return "silent"; }
};

class HaltAt final : public GlobalReasoner {
 public:
  explicit HaltAt(long at) : at_(at) {}
  std::string name() const override { return "halt-at"; }
  void reason(GlobalContext& ctx) override {
    if (ctx.iteration() == at_) ctx.halt();
  }

 private:
  long at_;
};

// Re-parameterizes one factor with an identical copy every iteration.
class Churn final : public GlobalReasoner {
 public:
  explicit Churn(FactorId f) : f_(f) {}
  std::string name() const override { return "churn"; }
  void reason(GlobalContext& ctx) override {
    ctx.queue(edit::Reparameterize{f_, std::make_unique<sudoku::OneOnFactor>()});
  }

 private:
  FactorId f_;
};

std::vector<double> values_of(const FactorGraph& g) {
  std::vector<double> out;
  g.variables().for_each([&](VariableId, const VariableNode& vn) { out.push_back(vn.value); });
  return out;
}

const char* kHard4 =
    "1 . . .\n"
    ". . 3 .\n"
    ". 4 . .\n"
    ". . . 2\n";

}  // namespace

// ---------------------------------------------------------------- concur

TEST(Concur, StandardMessagesAverage) {
  const Message in[] = {std_msg(0.2), std_msg(0.4)};
  const auto r = concur_variable(in, 0.0, 1.0, 1e-5);
  EXPECT_NEAR(r.value, 0.3, 1e-15);
  EXPECT_TRUE(r.weight.is_standard());
}

TEST(Concur, InfiniteDominates) {
  const Message in[] = {std_msg(0.2), inf_msg(0.9)};
  const auto r = concur_variable(in, 0.0, 1.0, 1e-5);
  EXPECT_EQ(r.value, 0.9);
  EXPECT_TRUE(r.weight.is_infinite());
}

TEST(Concur, WeightedMean) {
  const Message in[] = {std_msg(0.1, 1.0), std_msg(0.7, 3.0)};
  const auto r = concur_variable(in, 0.0, 1.0, 1e-5);
  EXPECT_NEAR(r.value, 0.55, 1e-15);
}

TEST(Concur, DisagreeingCertaintiesConflict) {
  const Message in[] = {inf_msg(0.0), inf_msg(1.0)};
  EXPECT_THROW(concur_variable(in, 0.0, 1.0, 1e-5), CertaintyConflict);
}

TEST(Concur, ZeroOnlyKeepsPreviousValue) {
  const Message in[] = {zero_msg(0.8), zero_msg(0.1)};
  const auto r = concur_variable(in, 0.42, 1.0, 1e-5);
  EXPECT_EQ(r.value, 0.42);
  EXPECT_TRUE(r.weight.is_zero());
}

TEST(Concur, ZeroWeightIsIgnoredAmongStandard) {
  const Message a[] = {std_msg(0.2), std_msg(0.4)};
  const Message b[] = {std_msg(0.2), zero_msg(123.0), std_msg(0.4)};
  EXPECT_EQ(concur_variable(a, 0.0, 1.0, 1e-5).value, concur_variable(b, 0.0, 1.0, 1e-5).value);
}

// ---------------------------------------------------------------- update

TEST(UpdateEdge, FixedPointLeavesErrorUnchanged) {
  EdgeState e;
  e.error_accum = 0.1;
  const auto r = update_edge(e, 0.5, 0.5, Weight::standard(), Weight::standard());
  EXPECT_EQ(r.error_accum, 0.1);
  EXPECT_NEAR(r.msg_to_factor, 0.4, 1e-15);
}

TEST(UpdateEdge, AccumulatesDisagreement) {
  EdgeState e;
  const auto r = update_edge(e, 0.8, 0.5, Weight::standard(), Weight::standard());
  EXPECT_NEAR(r.error_accum, 0.3, 1e-15);
  EXPECT_NEAR(r.msg_to_factor, 0.2, 1e-15);
}

TEST(UpdateEdge, InfiniteResetsError) {
  EdgeState e;
  e.error_accum = 0.7;
  auto r = update_edge(e, 0.8, 1.0, Weight::standard(), Weight::infinite());
  EXPECT_EQ(r.error_accum, 0.0);
  EXPECT_EQ(r.msg_to_factor, 1.0);
  EXPECT_TRUE(r.weight_to_factor.is_infinite());
  r = update_edge(e, 0.8, 1.0, Weight::infinite(), Weight::standard());
  EXPECT_EQ(r.error_accum, 0.0);
}

TEST(UpdateEdge, OutgoingMessageAddsErrorOnlyBetweenStandardWeights) {
  EdgeState e;
  e.error_accum = 0.25;
  EXPECT_EQ(outgoing_message(e, 0.5, Weight::standard()), 0.75);
  EXPECT_EQ(outgoing_message(e, 0.5, Weight::infinite()), 0.5);
  e.weight_to_factor = Weight::infinite();
  EXPECT_EQ(outgoing_message(e, 0.5, Weight::standard()), 0.5);
}

// ---------------------------------------------------------------- one-on

namespace {
std::vector<Message> one_on(std::vector<Message> in, bool satisfied = false) {
  std::vector<Message> out(in.size());
  sudoku::OneOnFactor::one_on_minimize(in, out, satisfied);
  return out;
}
}  // namespace

TEST(OneOn, PicksLargestInput) {
  const auto out = one_on({std_msg(0.6), std_msg(0.5), std_msg(0.2)});
  EXPECT_EQ(out[0].value, 1.0);
  EXPECT_EQ(out[1].value, 0.0);
  EXPECT_EQ(out[2].value, 0.0);
  EXPECT_TRUE(out[0].weight.is_standard());
  // costs of the three candidates: 0.225 < 0.325 < 0.625
  auto cost = [](int on) {
    const double n[] = {0.6, 0.5, 0.2};
    double c = 0;
    for (int k = 0; k < 3; ++k) c += 0.5 * ((k == on) - n[k]) * ((k == on) - n[k]);
    return c;
  };
  EXPECT_NEAR(cost(0), 0.225, 1e-12);
  EXPECT_NEAR(cost(1), 0.325, 1e-12);
  EXPECT_NEAR(cost(2), 0.625, 1e-12);
}

TEST(OneOn, StandardInputOneHotChoice) {
  const auto out = one_on({std_msg(1.0), std_msg(0.0), std_msg(0.0)});
  EXPECT_EQ(out[0].value, 1.0);
  EXPECT_EQ(out[1].value, 0.0);
  EXPECT_EQ(out[2].value, 0.0);
}

TEST(OneOn, LastFreeIndicatorIsForcedOn) {
  const auto out = one_on({inf_msg(0.0), std_msg(0.1), inf_msg(0.0)});
  EXPECT_EQ(out[1].value, 1.0);
  for (const auto& m : out) EXPECT_TRUE(m.weight.is_infinite());
}

TEST(OneOn, CertainOnForcesOthersOff) {
  const auto out = one_on({std_msg(0.9), inf_msg(1.0), std_msg(0.4)});
  EXPECT_EQ(out[0].value, 0.0);
  EXPECT_EQ(out[1].value, 1.0);
  EXPECT_EQ(out[2].value, 0.0);
  for (const auto& m : out) EXPECT_TRUE(m.weight.is_infinite());
}

TEST(OneOn, InfeasibleCertainties) {
  EXPECT_THROW(one_on({inf_msg(1.0), inf_msg(1.0), std_msg(0.0)}), InfeasibleCertainty);
  EXPECT_THROW(one_on({inf_msg(0.0), inf_msg(0.0)}), InfeasibleCertainty);
  EXPECT_THROW(one_on({inf_msg(1.0), std_msg(0.0)}, true), InfeasibleCertainty);
}

TEST(OneOn, SatisfiedPinsEverythingOff) {
  const auto out = one_on({std_msg(0.9), std_msg(0.4)}, true);
  for (const auto& m : out) {
    EXPECT_EQ(m.value, 0.0);
    EXPECT_TRUE(m.weight.is_infinite());
  }
}

TEST(OneOn, AgreesWithEnumerationOnRandomInputs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(-0.5, 1.5);
  std::uniform_real_distribution<double> mag(0.1, 4.0);
  int infeasible = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 2 + rng() % 8;
    std::vector<Message> in(k);
    for (auto& m : in) {
      switch (rng() % 8) {
        case 0: m = inf_msg(rng() % 5 == 0 ? 1.0 : 0.0); break;
        case 1: m = zero_msg(val(rng)); break;
        default: m = std_msg(val(rng), mag(rng)); break;
      }
    }
    const auto oracle = testing_support::one_hot_argmin(in);
    std::vector<Message> out(k);
    if (!oracle.feasible) {
      ++infeasible;
      EXPECT_THROW(sudoku::OneOnFactor::one_on_minimize(in, out), InfeasibleCertainty);
      continue;
    }
    ASSERT_NO_THROW(sudoku::OneOnFactor::one_on_minimize(in, out)) << "trial " << trial;
    for (std::size_t i = 0; i < k; ++i) {
      ASSERT_EQ(out[i].value, i == oracle.on ? 1.0 : 0.0) << "trial " << trial << " slot " << i;
    }
  }
  EXPECT_GT(infeasible, 0);
}

// ---------------------------------------------------------------- run

TEST(Run, ClueCertaintyPropagatesThroughOneOn) {
  FactorGraph g;
  const VariableId a = g.add_variable(0.2);
  const VariableId b = g.add_variable(0.5);
  const VariableId c = g.add_variable(0.3);
  g.add_factor(std::make_unique<sudoku::OneOnFactor>(), {a, b, c});
  auto pin = std::make_unique<Pin>();
  pin->set_emission(a, inf_msg(1.0));
  g.add_factor(std::move(pin), {a});
  Engine engine(g, EngineConfig{});
  IterationStatus s;
  for (int i = 0; i < 3; ++i) s = engine.step();
  EXPECT_TRUE(s.converged);
  EXPECT_LE(s.iteration, 3);
  for (VariableId v : {a, b, c}) EXPECT_TRUE(g.variable(v).weight.is_infinite());
  EXPECT_EQ(g.variable(a).value, 1.0);
  EXPECT_EQ(g.variable(b).value, 0.0);
  EXPECT_EQ(g.variable(c).value, 0.0);
}

TEST(Run, EmptyGraphConvergesImmediately) {
  FactorGraph g;
  Engine engine(g, EngineConfig{});
  const auto s = engine.run();
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.iteration, 1);
}

TEST(Run, GlobalHaltStopsTheRun) {
  FactorGraph g;
  sudoku::build_graph(sudoku::Puzzle(4), g);
  Engine engine(g, EngineConfig{});
  engine.add_global_reasoner(std::make_shared<HaltAt>(5));
  const auto s = engine.run();
  EXPECT_EQ(s.iteration, 5);
  ASSERT_TRUE(s.halted_by.has_value());
  EXPECT_EQ(*s.halted_by, "halt-at");
  EXPECT_FALSE(s.converged);
}

TEST(Run, InvalidConfigRejected) {
  FactorGraph g;
  EXPECT_THROW(Engine(g, EngineConfig{.rho_standard = 0.0}), InvalidConfig);
  EXPECT_THROW(Engine(g, EngineConfig{.epsilon_convergence = 0.0}), InvalidConfig);
  EXPECT_THROW(Engine(g, EngineConfig{.max_iterations = 0}), InvalidConfig);
  EXPECT_THROW(Engine(g, EngineConfig{.thread_count = 0}), InvalidConfig);
}

TEST(Run, MaxIterationsBoundsTheRun) {
  FactorGraph g;
  std::mt19937_64 rng(3);
  sudoku::build_graph(sudoku::Puzzle(9), g, &rng);
  Engine engine(g, EngineConfig{.max_iterations = 7});
  const auto s = engine.run();
  EXPECT_EQ(s.iteration, 7);
}

// ---------------------------------------------------------------- schedule

TEST(Schedule, BalancesCosts) {
  const std::vector<int> nodes = {0, 1, 2, 3};
  const std::vector<std::size_t> costs = {4, 3, 2, 1};
  const auto q = schedule<int>(nodes, costs, 2);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].cost, 5u);
  EXPECT_EQ(q[1].cost, 5u);
}

TEST(Schedule, SingleThreadTakesEverything) {
  const std::vector<int> nodes = {5, 1, 3};
  const std::vector<std::size_t> costs = {1, 9, 4};
  const auto q = schedule<int>(nodes, costs, 1);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].nodes, (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(q[0].cost, 14u);
}

TEST(Schedule, EqualCostsDifferByAtMostOne) {
  for (std::size_t n = 0; n < 40; ++n) {
    for (std::size_t t = 1; t <= 6; ++t) {
      std::vector<int> nodes(n);
      for (std::size_t i = 0; i < n; ++i) nodes[i] = static_cast<int>(i);
      const std::vector<std::size_t> costs(n, 3);
      const auto q = schedule<int>(nodes, costs, t);
      std::size_t lo = SIZE_MAX;
      std::size_t hi = 0;
      std::size_t total = 0;
      for (const auto& w : q) {
        lo = std::min(lo, w.nodes.size());
        hi = std::max(hi, w.nodes.size());
        total += w.nodes.size();
      }
      EXPECT_LE(hi - lo, 1u);
      EXPECT_EQ(total, n);
    }
  }
}

// ---------------------------------------------------------------- properties

TEST(Properties, DeterministicAcrossRunsAndThreadCounts) {
  const auto puzzle = sudoku::parse_puzzle(testing_support::slurp(testing_support::corpus("9x9_hard")[0]));
  std::vector<std::vector<double>> reference;
  for (std::size_t threads : {1u, 1u, 2u, 4u}) {
    FactorGraph g;
    std::mt19937_64 rng(99);
    sudoku::build_graph(puzzle, g, &rng);
    Engine engine(g, EngineConfig{.max_iterations = 40, .thread_count = threads});
    std::vector<std::vector<double>> trace;
    engine.run([&](const IterationStatus&) { trace.push_back(values_of(g)); });
    if (reference.empty()) {
      reference = trace;
    } else {
      ASSERT_EQ(trace.size(), reference.size()) << threads << " threads";
      for (std::size_t i = 0; i < trace.size(); ++i) {
        ASSERT_EQ(trace[i], reference[i]) << threads << " threads, iteration " << i + 1;
      }
    }
  }
}

TEST(Properties, CertaintyIsMonotone) {
  for (const auto& path : testing_support::corpus("9x9_hard")) {
    const auto puzzle = sudoku::parse_puzzle(testing_support::slurp(path));
    FactorGraph g;
    std::mt19937_64 rng(5);
    sudoku::build_graph(puzzle, g, &rng);
    Engine engine(g, EngineConfig{.max_iterations = 60});
    std::unordered_map<VariableId, double> certain;
    engine.run([&](const IterationStatus&) {
      g.variables().for_each([&](VariableId v, const VariableNode& vn) {
        auto it = certain.find(v);
        if (it != certain.end()) {
          EXPECT_TRUE(vn.weight.is_infinite()) << path;
          EXPECT_EQ(vn.value, it->second) << path;
        } else if (vn.weight.is_infinite()) {
          certain.emplace(v, vn.value);
        }
      });
    });
  }
}

TEST(Properties, ZeroWeightReasonersAreNeutral) {
  const auto puzzle = sudoku::parse_puzzle(testing_support::slurp(testing_support::corpus("9x9_hard")[1]));
  auto trace = [&](bool with_silent) {
    FactorGraph g;
    std::mt19937_64 rng(17);
    const auto m = sudoku::build_graph(puzzle, g, &rng);
    std::vector<VariableId> vars = g.variables().ids();
    if (with_silent) {
      for (std::size_t i = 0; i < vars.size(); i += 3) {
        std::vector<VariableId> scope(vars.begin() + i, vars.begin() + std::min(vars.size(), i + 3));
        g.add_factor(std::make_unique<Silent>(), scope);
      }
    }
    Engine engine(g, EngineConfig{.max_iterations = 50});
    std::vector<std::vector<double>> out;
    std::vector<bool> conv;
    engine.run([&](const IterationStatus& s) {
      std::vector<double> row;
      for (VariableId v : vars) row.push_back(g.variable(v).value);
      out.push_back(row);
      conv.push_back(s.converged);
    });
    return std::make_pair(out, conv);
  };
  const auto plain = trace(false);
  const auto silent = trace(true);
  EXPECT_EQ(plain.first, silent.first);
  EXPECT_EQ(plain.second, silent.second);
}

TEST(Properties, ConvergenceFlagMatchesItsDefinition) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    FactorGraph g;
    sudoku::build_graph(sudoku::parse_puzzle(kHard4), g, &rng);
    const double eps = trial % 2 ? 1e-3 : 1e-6;
    Engine engine(g, EngineConfig{.epsilon_convergence = eps, .max_iterations = 200});
    engine.run([&](const IterationStatus& s) { EXPECT_EQ(s.converged, s.max_message_delta < eps); });
  }
  // a reasoner that edits every iteration prevents convergence
  FactorGraph g;
  const auto m = sudoku::build_graph(sudoku::parse_puzzle(kHard4), g);
  Engine engine(g, EngineConfig{.max_iterations = 30});
  engine.add_global_reasoner(std::make_shared<Churn>(m.factors[0][1]));
  const auto s = engine.run([&](const IterationStatus& st) { EXPECT_FALSE(st.converged); });
  EXPECT_EQ(s.iteration, 30);
}

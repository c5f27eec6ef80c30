#include <gtest/gtest.h>

#include <cmath>

#include "twa/packing/run.hpp"

using namespace twa;
using namespace twa::packing;

namespace {

PackOptions sparse(std::size_t n, double r, std::uint64_t seed) {
  PackOptions o;
  o.instance = {n, r};
  o.engine.rng_seed = seed;
  return o;
}

double depth_of(const std::vector<Point>& p, std::size_t i, double r) {
  double nearest = 2 * r;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j != i) nearest = std::min(nearest, std::hypot(p[i].x - p[j].x, p[i].y - p[j].y));
  }
  return 2 * r - nearest;
}

std::size_t count_kind(const FactorGraph& g, std::string_view kind) {
  std::size_t n = 0;
  g.factors().for_each([&](FactorId, const FactorNode& fn) { n += fn.factor->kind() == kind; });
  return n;
}

}  // namespace

TEST(Drag, CircleFollowsTheCursor) {
  PackingRun run(sparse(10, 0.01, 3));
  run.step();
  run.submit(cmd::DragMove{7, 0.3, 0.4});
  for (int i = 0; i < 50; ++i) run.step();
  const Point p = run.centers()[7];
  EXPECT_NEAR(p.x, 0.3, 1e-3);
  EXPECT_NEAR(p.y, 0.4, 1e-3);
  EXPECT_TRUE(run.steering().dragging(7));
  EXPECT_EQ(count_kind(run.graph(), "steer"), 1u);

  run.submit(cmd::DragEnd{7});
  run.step();
  EXPECT_FALSE(run.steering().dragging(7));
  EXPECT_EQ(count_kind(run.graph(), "steer"), 0u);
  EXPECT_TRUE(run.graph().contains(run.model().circles[7].x));
}

TEST(Drag, StartHoldsTheCurrentPosition) {
  PackingRun run(sparse(5, 0.01, 4));
  run.step();
  const Point before = run.centers()[2];
  run.submit(cmd::DragStart{2});
  for (int i = 0; i < 5; ++i) run.step();
  EXPECT_NEAR(run.centers()[2].x, before.x, 1e-12);
  EXPECT_NEAR(run.centers()[2].y, before.y, 1e-12);
  run.submit(cmd::DragMove{2, 0.6, 0.6});
  for (int i = 0; i < 5; ++i) run.step();
  EXPECT_NEAR(run.centers()[2].x, 0.6, 1e-9);
  EXPECT_EQ(run.steering().active_drags(), 1u);
}

TEST(Drag, StartAndEndInOneBatchLeavesNoFactor) {
  PackingRun run(sparse(5, 0.01, 4));
  run.step();
  run.submit(cmd::DragStart{1});
  run.submit(cmd::DragEnd{1});
  run.step();
  run.step();
  EXPECT_EQ(count_kind(run.graph(), "steer"), 0u);
  EXPECT_EQ(run.steering().active_drags(), 0u);
}

TEST(Transport, BurstReducesTheWorstOverlap) {
  PackingRun run(sparse(30, 0.08, 5));
  run.step();
  const OverlapReport worst = run.maintenance().overlap();
  ASSERT_GE(worst.circle, 0);
  const auto c = static_cast<std::size_t>(worst.circle);
  const double before = depth_of(run.centers(), c, run.radius());
  ASSERT_GT(before, 0.0);
  run.submit(cmd::Vacancy{0.05, 0.05});
  run.step();
  ASSERT_EQ(run.steering().transported(), worst.circle);
  double best = before;
  for (int i = 1; i < 25; ++i) {
    run.step();
    best = std::min(best, depth_of(run.centers(), c, run.radius()));
  }
  EXPECT_LT(best, before);
  // the burst ends and the steering factor is detached
  for (int i = 0; i < 3; ++i) run.step();
  EXPECT_FALSE(run.steering().transported().has_value());
  EXPECT_EQ(count_kind(run.graph(), "steer"), 0u);
}

TEST(Transport, NoOverlapMeansNoTransport) {
  PackingRun run(sparse(3, 0.01, 6));
  run.run();
  ASSERT_EQ(run.maintenance().overlap().circle, -1);
  run.submit(cmd::Vacancy{0.5, 0.5});
  run.step();
  EXPECT_FALSE(run.steering().transported().has_value());
}

TEST(Steering, IdleSteeringIsNeutral) {
  const PackOptions o = sparse(50, 0.06, 7);
  PackingRun run(o);

  // the same instance without a steering reasoner
  FactorGraph g;
  const auto model = build_instance(o.instance, g, o.engine.rng_seed, o.engine.rho_standard);
  auto pm = std::make_shared<PairMaintenance>(model, o.engine.rng_seed, o.engine.rho_standard);
  Engine engine(g, o.engine);
  engine.add_global_reasoner(pm);

  for (int i = 0; i < 200; ++i) {
    const auto a = run.step();
    const auto b = engine.step();
    ASSERT_EQ(run.centers(), positions(model, g)) << "iteration " << i + 1;
    ASSERT_EQ(a.engine.converged, b.converged);
  }
}

TEST(Steering, CommandValidation) {
  PackingRun run(sparse(10, 0.02, 8));
  EXPECT_THROW(run.submit(cmd::DragMove{10, 0.5, 0.5}), UnknownCircle);
  EXPECT_THROW(run.submit(cmd::DragStart{-1}), UnknownCircle);
  EXPECT_THROW(run.submit(cmd::DragMove{1, 1.5, 0.5}), InvalidConfig);
  EXPECT_THROW(run.submit(cmd::Vacancy{0.5, -0.1}), InvalidConfig);
  EXPECT_THROW(run.submit(cmd::SetParam{"drag_weight", 0.0}), InvalidConfig);
  EXPECT_THROW(run.submit(cmd::SetParam{"nope", 1.0}), InvalidConfig);
  EXPECT_NO_THROW(run.submit(cmd::SetParam{"drag_weight", 2.0}));
  EXPECT_TRUE(run.has_pending_commands());
}

TEST(Steering, PauseAndResumeToggleImmediately) {
  PackingRun run(sparse(10, 0.02, 8));
  run.submit(cmd::Pause{});
  EXPECT_TRUE(run.paused());
  EXPECT_FALSE(run.has_pending_commands());
  run.submit(cmd::Resume{});
  EXPECT_FALSE(run.paused());
}

TEST(Steering, DragWeightChangesTheCompromise) {
  // circle 1 held in place, circle 0 dragged onto it: the pair constraint
  // pushes back, and a heavier drag leaves a smaller gap
  auto final_gap = [](double w) {
    PackOptions o = sparse(2, 0.1, 9);
    PackingRun run(o);
    run.step();
    run.submit(cmd::SetParam{"drag_weight", w});
    const Point other = run.centers()[1];
    run.submit(cmd::DragStart{1});
    run.submit(cmd::DragMove{0, other.x, other.y});
    for (int i = 0; i < 300; ++i) run.step();
    const Point p = run.centers()[0];
    return std::hypot(p.x - other.x, p.y - other.y);
  };
  EXPECT_LT(final_gap(10.0), final_gap(0.5));
}

#include <gtest/gtest.h>

#include <sstream>

#include "dualmpc/scenario.hpp"

using namespace dualmpc;

namespace {

LongitudinalScenario short_scenario() {
  LongitudinalScenario sc = LongitudinalScenario::intersection();
  sc.max_steps = 12;
  return sc;
}

std::string dump_first_program(PolicyKind policy) {
  const LongitudinalScenario sc = LongitudinalScenario::intersection();
  Controller ctrl(controller_config(sc, policy));
  std::vector<ObstacleModel> models;
  std::vector<Eigen::VectorXd> o0;
  for (int i = 0; i < sc.num_obstacles(); ++i) {
    models.push_back(obstacle_prediction(sc, i));
    o0.push_back(Eigen::Vector2d(sc.obstacles[i].s0, sc.obstacles[i].v0));
  }
  std::ostringstream os;
  write_program(os, ctrl.build_program(sc.x0, models, o0).program);
  return os.str();
}

}  // namespace

TEST(Scenario, PdControllerSaturates) {
  const PdGains g{1.0, 2.0, -6.0, 0.0};
  EXPECT_DOUBLE_EQ(pd_obstacle_controller(PdKind::StopAtLine, g, -30.0, 10.0), 4.0);
  EXPECT_DOUBLE_EQ(pd_obstacle_controller(PdKind::StopAtLine, g, -7.0, 10.0), -6.0);
  EXPECT_DOUBLE_EQ(pd_obstacle_controller(PdKind::StopAtLine, g, -60.0, 0.0), 5.0);
  EXPECT_DOUBLE_EQ(pd_obstacle_controller(PdKind::StopAtLine, g, -6.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(pd_obstacle_controller(PdKind::StopAtLine, g, -7.0, 0.2), 0.6);
  const PdGains c{0.0, 1.0, 0.0, 10.0};
  EXPECT_DOUBLE_EQ(pd_obstacle_controller(PdKind::CrossFast, c, 100.0, 9.0), 1.0);
}

TEST(Scenario, DoubleIntegrator) {
  const Eigen::Matrix2d A = double_integrator_A(0.1);
  const Eigen::Vector2d B = double_integrator_B(0.1);
  EXPECT_DOUBLE_EQ(A(0, 1), 0.1);
  EXPECT_DOUBLE_EQ(B(0), 0.005);
  EXPECT_DOUBLE_EQ(B(1), 0.1);
}

TEST(Scenario, ProgramAssemblyIsDeterministic) {
  for (PolicyKind p : {PolicyKind::RMPC, PolicyKind::SMPC, PolicyKind::DRMPC}) EXPECT_EQ(dump_first_program(p), dump_first_program(p));
}

TEST(Scenario, FirstStepSolvesToTolerance) {
  const LongitudinalScenario sc = short_scenario();
  for (PolicyKind p : {PolicyKind::RMPC, PolicyKind::SMPC, PolicyKind::DRMPC}) {
    const EpisodeTrace tr = run_episode(sc, p, 0);
    ASSERT_FALSE(tr.diagnostics.empty());
    const StepDiagnostics& d = tr.diagnostics.front();
    ASSERT_EQ(d.status, SolveStatus::Optimal) << to_string(p) << ": " << d.message;
    EXPECT_LE(d.kkt.primal, 1e-8);
    EXPECT_LE(d.kkt.dual, 1e-8);
    EXPECT_LE(d.kkt.gap, 1e-8);
    EXPECT_FALSE(d.used_fallback);
  }
}

TEST(Scenario, EpisodesAreReproducible) {
  const LongitudinalScenario sc = short_scenario();
  EpisodeOptions opts;
  opts.keep_diagnostics = false;
  auto a = run_episode(sc, PolicyKind::SMPC, 4, opts), b = run_episode(sc, PolicyKind::SMPC, 4, opts);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    a.rows[i].solve_ms = b.rows[i].solve_ms = 0.0;
    EXPECT_EQ(a.rows[i], b.rows[i]);
  }
  auto c = run_episode(sc, PolicyKind::SMPC, 5, opts);
  EXPECT_NE(a.rows.back().x, c.rows.back().x);
}

TEST(Scenario, DriveWithoutObstaclesStaysWithinBounds) {
  LongitudinalScenario sc = LongitudinalScenario::intersection();
  sc.max_steps = 60;
  EpisodeOptions opts;
  opts.with_obstacles = false;
  const EpisodeTrace tr = run_episode(sc, PolicyKind::SMPC, 1, opts);
  EXPECT_TRUE(tr.completed);
  for (const auto& r : tr.rows) {
    EXPECT_TRUE(r.feasible);
    EXPECT_GE(r.u(0), sc.a_min - 1e-9);
    EXPECT_LE(r.u(0), sc.a_max + 1e-9);
    // The speed bound is a chance constraint, so only small excursions are allowed.
    EXPECT_LE(r.x(1), sc.v_max + 0.05);
  }
  EXPECT_LE(tr.speed_violation_steps, 3);
}

TEST(Scenario, MetricsAggregateTraces) {
  EpisodeTrace a, b;
  a.completed = true;
  a.completion_s = 4.0;
  b.completion_s = 6.0;
  for (int t = 0; t < 4; ++t) {
    TraceRow r;
    r.feasible = t != 0;
    r.solve_ms = 10.0;
    r.min_dist_m = 1.0 + t;
    a.rows.push_back(r);
    r.violation = t == 3;
    b.rows.push_back(r);
  }
  const Metrics m = compute_metrics({a, b});
  EXPECT_EQ(m.episodes, 2);
  EXPECT_EQ(m.steps, 8);
  EXPECT_DOUBLE_EQ(m.feasibility_pct, 75.0);
  EXPECT_DOUBLE_EQ(m.violation_pct, 12.5);
  EXPECT_DOUBLE_EQ(m.avg_completion_s, 5.0);
  EXPECT_EQ(m.completed, 1);
}

#include <gtest/gtest.h>

#include <sstream>

#include "dualmpc/config.hpp"
#include "dualmpc/errors.hpp"
#include "dualmpc/trace_io.hpp"

using namespace dualmpc;

namespace {

std::vector<TraceRow> sample_rows() {
  std::vector<TraceRow> rows;
  for (int t = 0; t < 5; ++t) {
    TraceRow r;
    r.step = t;
    r.time_s = 0.1 * t;
    r.x = Eigen::Vector2d(3.0 + 1.18 * t + 1e-7 / 3.0, 11.8 - t / 7.0);
    r.u = Eigen::VectorXd::Constant(1, -6.0 + t / 3.0);
    r.o = {Eigen::Vector2d(-14.0 + t, 10.0), Eigen::Vector2d(-30.0 + 0.9 * t, 10.0 / 3.0)};
    r.feasible = t != 2;
    r.solve_ms = 12.345678912345 * t;
    r.min_dist_m = 1.0 / 3.0 + t;
    r.violation = t == 4;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST(TraceIo, HeaderHasExpectedColumns) {
  const TraceDims d;
  EXPECT_EQ(d.columns(), 13);
  const std::string h = trace_header(d);
  EXPECT_EQ(std::count(h.begin(), h.end(), ',') + 1, 13);
  EXPECT_EQ(h.rfind("step,time_s,", 0), 0u);
  EXPECT_NE(h.find("feasible,solve_ms,min_dist_m,violation"), std::string::npos);
}

TEST(TraceIo, RoundTripIsExactAfterRounding) {
  const auto rows = sample_rows();
  std::stringstream ss;
  write_trace_csv(ss, rows, TraceDims{});
  TraceDims d;
  const auto back = read_trace_csv(ss, &d);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(d.columns(), 13);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TraceRow want = rows[i];
    want.time_s = round_sig9(want.time_s);
    for (auto* v : {&want.x, &want.u}) v->noalias() = v->unaryExpr([](double a) { return round_sig9(a); });
    for (auto& o : want.o) o = o.unaryExpr([](double a) { return round_sig9(a); });
    want.solve_ms = round_sig9(want.solve_ms);
    want.min_dist_m = round_sig9(want.min_dist_m);
    EXPECT_EQ(back[i], want) << "row " << i;
  }
  // A second pass is a fixed point.
  std::stringstream a, b;
  write_trace_csv(a, back, d);
  write_trace_csv(b, read_trace_csv(a), d);
  std::stringstream c;
  write_trace_csv(c, back, d);
  EXPECT_EQ(b.str(), c.str());
}

TEST(TraceIo, EmptyTraceStillHasHeader) {
  std::stringstream ss;
  write_trace_csv(ss, {}, TraceDims{});
  EXPECT_EQ(ss.str(), trace_header(TraceDims{}) + "\n");
  EXPECT_TRUE(read_trace_csv(ss).empty());
}

TEST(TraceIo, RejectsMalformedRows) {
  std::stringstream ss;
  ss << trace_header(TraceDims{}) << "\n1,2,3\n";
  EXPECT_ANY_THROW(read_trace_csv(ss));
}

TEST(TraceIo, NineSignificantDigits) {
  EXPECT_DOUBLE_EQ(round_sig9(1.23456789123), 1.23456789);
  EXPECT_DOUBLE_EQ(round_sig9(-98765.43219876), -98765.4322);
  EXPECT_DOUBLE_EQ(round_sig9(0.0), 0.0);
}

TEST(Config, DumpParseRoundTrip) {
  RunConfig cfg;
  cfg.scenario.epsilon = 0.05;
  cfg.scenario.allocation = RiskAllocation::JointBudget;
  cfg.scenario.obstacles[1].s0 = -17.25;
  cfg.policy = PolicyKind::DRMPC;
  cfg.seeds = {3, 5};
  cfg.out_dir = "elsewhere";
  const RunConfig back = parse_config(dump_config(cfg));
  EXPECT_EQ(dump_config(back), dump_config(cfg));
  EXPECT_EQ(back.policy, PolicyKind::DRMPC);
  EXPECT_EQ(back.seeds, cfg.seeds);
  EXPECT_DOUBLE_EQ(back.scenario.obstacles[1].s0, -17.25);
}

TEST(Config, MissingKeysKeepDefaults) {
  const RunConfig cfg = parse_config("scenario:\n  horizon: 8\n");
  EXPECT_EQ(cfg.scenario.horizon, 8);
  EXPECT_EQ(cfg.scenario.obstacles.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.scenario.dt, 0.1);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config("scenario:\n  horizn: 8\n"), ValidationError);
  EXPECT_THROW(parse_config("bogus: 1\n"), ValidationError);
  EXPECT_THROW(parse_config("scenario:\n  dt: -0.1\n"), ValidationError);
  EXPECT_THROW(parse_config("scenario:\n  epsilon: 1.5\n"), ValidationError);
  EXPECT_THROW(parse_config("scenario:\n  horizon: [1, 2\n"), ValidationError);
  EXPECT_THROW(parse_config("experiment:\n  policy: fastest\n"), ValidationError);
  EXPECT_THROW(load_config("/nonexistent/config.yaml"), ValidationError);
}

TEST(Config, SeedLists) {
  using V = std::vector<std::uint64_t>;
  EXPECT_EQ(parse_seed_list("3", true), (V{0, 1, 2}));
  EXPECT_EQ(parse_seed_list("3", false), (V{3}));
  EXPECT_EQ(parse_seed_list("2-5", true), (V{2, 3, 4, 5}));
  EXPECT_EQ(parse_seed_list("7,1,4", true), (V{7, 1, 4}));
  EXPECT_THROW(parse_seed_list("5-2", true), ValidationError);
  EXPECT_THROW(parse_seed_list("a", true), ValidationError);
  EXPECT_THROW(parse_seed_list("", true), ValidationError);
}

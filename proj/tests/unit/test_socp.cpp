#include <gtest/gtest.h>

#include <sstream>

#include "dualmpc/errors.hpp"
#include "dualmpc/program_builder.hpp"
#include "dualmpc/socp.hpp"

using namespace dualmpc;
using Eigen::VectorXd;

namespace {

// minimize -x0 - x1  s.t. x0 + 2 x1 <= 4, 3 x0 + x1 <= 6, x >= 0.  Optimum at (1.6, 1.2).
ConeProgram small_lp() {
  ProgramBuilder pb;
  pb.add_variables(2);
  pb.add_objective(0, -1.0);
  pb.add_objective(1, -1.0);
  LinearExpr a(4.0), b(6.0), c, d;
  a.add(0, -1.0);
  a.add(1, -2.0);
  b.add(0, -3.0);
  b.add(1, -1.0);
  c.add(0, 1.0);
  d.add(1, 1.0);
  for (const auto& e : {a, b, c, d}) pb.add_nonneg(e);
  return pb.build();
}

}  // namespace

TEST(Socp, SmallLinearProgram) {
  const SolveResult r = solve(small_lp());
  ASSERT_TRUE(r.optimal()) << r.message;
  EXPECT_NEAR(r.x(0), 1.6, 1e-6);
  EXPECT_NEAR(r.x(1), 1.2, 1e-6);
  EXPECT_NEAR(r.objective, -2.8, 1e-6);
  EXPECT_LE(r.primal_residual, 1e-8);
  EXPECT_LE(r.dual_residual, 1e-8);
}

TEST(Socp, SecondOrderCone) {
  // minimize t s.t. t >= ||(x0 - 3, x1 + 4)||, x0 + x1 == 0 : distance from (3,-4) to the line.
  ProgramBuilder pb;
  pb.add_variables(3);
  pb.add_objective(2, 1.0);
  LinearExpr t, e0(-3.0), e1(4.0), eq;
  t.add(2, 1.0);
  e0.add(0, 1.0);
  e1.add(1, 1.0);
  eq.add(0, 1.0);
  eq.add(1, 1.0);
  pb.add_soc({t, e0, e1});
  pb.add_equality(eq);
  const SolveResult r = solve(pb.build());
  ASSERT_TRUE(r.optimal()) << r.message;
  EXPECT_NEAR(r.objective, 1.0 / std::sqrt(2.0), 1e-7);
}

TEST(Socp, DetectsInfeasibility) {
  ProgramBuilder pb;
  pb.add_variables(1);
  pb.add_objective(0, 1.0);
  LinearExpr lo(-2.0), hi(1.0);
  lo.add(0, 1.0);   // x >= 2
  hi.add(0, -1.0);  // x <= 1
  pb.add_nonneg(lo);
  pb.add_nonneg(hi);
  const SolveResult r = solve(pb.build());
  EXPECT_EQ(r.status, SolveStatus::Infeasible);
}

TEST(Socp, DetectsUnboundedness) {
  ProgramBuilder pb;
  pb.add_variables(1);
  pb.add_objective(0, -1.0);
  LinearExpr lo;
  lo.add(0, 1.0);
  pb.add_nonneg(lo);
  const SolveResult r = solve(pb.build());
  EXPECT_EQ(r.status, SolveStatus::Unbounded);
}

TEST(Socp, KktResidualsAtSolution) {
  const ConeProgram p = small_lp();
  const SolveResult r = solve(p);
  ASSERT_TRUE(r.optimal());
  const KktResiduals k = kkt_residuals(p, r.x, r.y, r.z, r.s);
  EXPECT_LE(k.primal, 1e-8);
  EXPECT_LE(k.dual, 1e-8);
  EXPECT_LE(k.gap, 1e-8);
  EXPECT_TRUE(in_cone(p.cones, r.s, 1e-10));
  EXPECT_TRUE(in_cone(p.cones, r.z, 1e-10));
}

TEST(Socp, ProgramTextRoundTrip) {
  const ConeProgram p = small_lp();
  std::stringstream ss;
  write_program(ss, p);
  const ConeProgram q = read_program(ss);
  EXPECT_EQ(q.c, p.c);
  EXPECT_EQ(q.h, p.h);
  EXPECT_EQ(Eigen::MatrixXd(q.G), Eigen::MatrixXd(p.G));
  EXPECT_EQ(q.cones.nonneg, p.cones.nonneg);
  EXPECT_EQ(q.cones.soc, p.cones.soc);
}

TEST(Socp, ValidateRejectsMismatchedDimensions) {
  ConeProgram p = small_lp();
  p.h.conservativeResize(p.h.size() + 1);
  EXPECT_THROW(p.validate(), ValidationError);
  std::istringstream junk("not a program");
  EXPECT_ANY_THROW(read_program(junk));
}

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dualmpc/decision_layout.hpp"
#include "dualmpc/socp.hpp"
#include "dualmpc/tightening.hpp"

namespace dualmpc {

/// sum_{k=1..N} |x̄_k - xref_k|_Q^2 + sum_{k=0..N-1} |h_k - uref_k|_R^2 on the nominal trajectory.
struct TrackingCost {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::VectorXd x_ref;  // constant setpoint
  Eigen::VectorXd u_ref;

  void validate(int nx, int nu) const;
};

double tracking_cost(const ResidualForms& forms, const TrackingCost& cost, const PolicyParams& theta);

struct AssembledProgram {
  ConeProgram program;
  DecisionLayout layout;
  int epigraph = -1;  // index of t >= sqrt(cost); the program minimizes t
  std::vector<TightenedConstraint> constraints;
};

/// Builds the cone program: epigraph cost (t >= sqrt(cost) as one SOC block), tightened rows (one-norms
/// expanded with auxiliaries, two-norms as SOC blocks) and dual-feasibility blocks.
AssembledProgram assemble(const ResidualForms& forms, const DecisionLayout& layout, const TrackingCost& cost,
                          std::vector<TightenedConstraint> constraints);

/// Adds t >= sqrt(cost(h)) with objective t. The cost depends on the policy only through h.
int add_tracking_epigraph(ProgramBuilder& pb, const ResidualForms& forms, const DecisionLayout& layout,
                          const TrackingCost& cost);

struct MpcSolution {
  SolveResult result;
  PolicyParams theta;
  std::vector<Eigen::VectorXd> lam;  // by layout block
  std::vector<Eigen::VectorXd> nu;
  double cost = 0.0;  // tracking cost at theta
};

MpcSolution unpack_solution(const AssembledProgram& ap, const ResidualForms& forms, const TrackingCost& cost,
                            SolveResult result);

}  // namespace dualmpc

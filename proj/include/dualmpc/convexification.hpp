#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dualmpc/decision_layout.hpp"
#include "dualmpc/mpc_program.hpp"
#include "dualmpc/socp.hpp"
#include "dualmpc/tightening.hpp"

namespace dualmpc {

enum class LinearizationOrigin { Bootstrap, ShiftedPrevSolve };

/// (theta*, lam*, nu*) about which the bilinear collision residuals are linearized.
/// lam/nu are indexed by DecisionLayout::block(k, i, m).
struct LinearizationPoint {
  PolicyParams theta;
  std::vector<Eigen::VectorXd> lam;
  std::vector<Eigen::VectorXd> nu;
  LinearizationOrigin origin = LinearizationOrigin::Bootstrap;
};

/**
 * Collision residual (k, i, m) linearized about the point:
 *   LY = Y(theta, lam*, nu) + Y(theta*, lam - lam*, 0)
 *   LZ = Z(theta, lam*) + Z(theta*, lam - lam*)
 * Both are affine in (theta, lam, nu) and exact at (theta*, lam*, any nu).
 */
AffineResidual linearize_block(const ResidualForms& forms, const DecisionLayout& layout,
                               const LinearizationPoint& point, int k, int i, int m);

/// All collision blocks (k = 1..N, every obstacle and mode).
std::vector<AffineResidual> linearize(const ResidualForms& forms, const DecisionLayout& layout,
                                      const LinearizationPoint& point);

/// Largest violation of the dual-feasibility records by the point's duals.
double dual_feasibility_violation(const ResidualForms& forms, const DecisionLayout& layout,
                                  const LinearizationPoint& point);

/// Open-loop tracking solve (M = K = 0, obstacles ignored, nominal state-input rows).
PolicyParams open_loop_policy(const ResidualForms& forms, const DecisionLayout& layout, const TrackingCost& cost,
                              const SolverOptions& options = {});

/// Unit normal (pointing from obstacle i towards the agent) separating the sets at the
/// current poses; the centre-to-centre direction if they already overlap.
Eigen::VectorXd current_separation_normal(const ResidualForms& forms, int i, int m,
                                          const SolverOptions& options = {});

/// Certificate for block (k, i, m) at the nominal poses of theta. When the predicted
/// sets overlap, returns the best certificate along current_separation_normal scaled
/// by 0.5, so the linearization keeps the agent on the side it is on now.
void certificate_at(const ResidualForms& forms, const PolicyParams& theta, int k, int i, int m,
                    Eigen::VectorXd& lam, Eigen::VectorXd& nu, const SolverOptions& options = {});

/// theta0 from open_loop_policy, duals from certificate_at. If a fallback input is given
/// and the open-loop plan comes within `clearance` of an obstacle, the nominal inputs are
/// blended towards it in steps of 0.1 until the clearance holds (or the best blend).
/// Throws SolverError on failure.
LinearizationPoint bootstrap_duals(const ResidualForms& forms, const DecisionLayout& layout,
                                   const TrackingCost& cost, const SolverOptions& options = {},
                                   const Eigen::VectorXd* fallback = nullptr, double clearance = 0.0);

/// Shifts a previous solution one step forward, duplicating the last step. Dual blocks
/// that violate the records under the new orientations, or no longer certify a positive
/// distance at the shifted nominal poses, are recomputed with certificate_at. Falls back
/// to bootstrap_duals when the layouts are incompatible.
LinearizationPoint shift_warm_start(const LinearizationPoint* prev, const ResidualForms& forms,
                                    const DecisionLayout& layout, const TrackingCost& cost,
                                    const SolverOptions& options = {}, const Eigen::VectorXd* fallback = nullptr,
                                    double clearance = 0.0);

}  // namespace dualmpc

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dualmpc/decision_layout.hpp"
#include "dualmpc/prediction.hpp"
#include "dualmpc/program_builder.hpp"
#include "dualmpc/uncertainty.hpp"

namespace dualmpc {

/// Fx x_{k+1} + Fu u_k <= f for k = 0..N-1.
struct StateInputRows {
  Eigen::MatrixXd Fx;
  Eigen::MatrixXd Fu;
  Eigen::VectorXd f;
  int J() const { return static_cast<int>(f.size()); }
};

/**
 * Residual functions of one MPC step. For the collision block (k, i, m), k in 1..N,
 * the dual separation value at the predicted poses equals Y + Z (w; n) with
 *
 *   Y = -lam'(G R_k'(C x̄_k + c_k - C_i ō_ik - c_i) + g) - nu' g_i
 *   Z = -lam' G R_k' [C Sx_k (B M + E),  C Sx_k B K D - C_i So_ik F_i]
 *
 * and for the state-input row j at step k in 0..N-1, f_j - Fx_j x_{k+1} - Fu_j u_k = Ybar + Zbar (w; n).
 * Obstacles other than i use mode 0 in the K D n term; state-input rows use mode 0 throughout.
 */
class ResidualForms {
 public:
  ResidualForms(const StackedSystem& stk, const AgentModel& agent, const std::vector<ObstacleModel>& obstacles,
                const Eigen::VectorXd& x_t, const std::vector<Eigen::VectorXd>& o_t, StateInputRows rows);

  const StackedSystem& stacked() const { return stk_; }
  const AgentModel& agent() const { return agent_; }
  const std::vector<ObstacleModel>& obstacles() const { return obstacles_; }
  const StateInputRows& rows() const { return rows_; }
  const Eigen::VectorXd& x0() const { return x0_; }
  const std::vector<Eigen::VectorXd>& o0() const { return o0_; }
  int noise_dim() const { return stk_.nw() + stk_.nn(); }

  std::vector<int> mode_choice(int i, int m) const;
  const Eigen::MatrixXd& deviation_map(int i, int m) const { return dev_[i][m]; }
  const Eigen::MatrixXd& deviation_map_nominal() const { return dev_nominal_; }

  Eigen::VectorXd agent_position(int k, const PolicyParams& theta) const;
  Eigen::VectorXd obstacle_position(int k, int i, int m) const;
  const Eigen::VectorXd& nominal_obstacle(int i, int m) const { return obar_[i][m]; }

  /// G R_k'(p_k - p_ik) + g
  Eigen::VectorXd affine_part(int k, int i, int m, const PolicyParams& theta) const;
  /// pos_dim x noise_dim map from (w; n) to the relative position deviation.
  Eigen::MatrixXd noise_map(int k, int i, int m, const PolicyParams& theta) const;

  double Y(int k, int i, int m, const PolicyParams& theta, const Eigen::VectorXd& lam,
           const Eigen::VectorXd& nu) const;
  Eigen::RowVectorXd Z(int k, int i, int m, const PolicyParams& theta, const Eigen::VectorXd& lam) const;
  double Ybar(int k, int j, const PolicyParams& theta) const;
  Eigen::RowVectorXd Zbar(int k, int j, const PolicyParams& theta) const;

  /// Row over the u-stack: -lam' G R_k' C Sx_k B.
  Eigen::RowVectorXd input_weight(int k, const Eigen::VectorXd& lam) const;

 private:
  StackedSystem stk_;
  AgentModel agent_;
  std::vector<ObstacleModel> obstacles_;
  Eigen::VectorXd x0_;
  std::vector<Eigen::VectorXd> o0_;
  StateInputRows rows_;
  std::vector<std::vector<Eigen::MatrixXd>> dev_;
  Eigen::MatrixXd dev_nominal_;
  std::vector<std::vector<Eigen::VectorXd>> obar_;
};

enum class ResidualKind { CollisionAvoid, StateInput, DualFeasibility };

/// nominal + noise . (w; n) as affine functions of the decision vector.
struct AffineResidual {
  ResidualKind kind = ResidualKind::CollisionAvoid;
  int k = 0, i = -1, m = -1, j = -1;
  LinearExpr nominal;
  std::vector<LinearExpr> noise;  // one per (w; n) column
};

/// Adds beta . u-stack, with u = h + M w + K D n, to nominal/noise.
void add_policy_terms(const Eigen::RowVectorXd& beta, const Eigen::MatrixXd& dev_map, const StackedSystem& stk,
                      const DecisionLayout& layout, LinearExpr& nominal, std::vector<LinearExpr>& noise);

/// The state-input residual (k, j); affine in the policy so no linearization is needed.
AffineResidual state_input_residual(const ResidualForms& forms, const DecisionLayout& layout, int k, int j);

enum class NormKind { OneNorm, TwoNorm, None };

/// nominal - margin >= factor * || norm_arg ||  (>= margin for NormKind::None).
/// For DualFeasibility records only (k, i, m) are meaningful.
struct TightenedConstraint {
  ResidualKind kind = ResidualKind::CollisionAvoid;
  int k = 0, i = -1, m = -1, j = -1;
  LinearExpr nominal;
  std::vector<LinearExpr> norm_arg;  // one per scaled noise coordinate, structural zeros dropped
  NormKind norm = NormKind::None;
  double factor = 0.0;
  double margin = 0.0;
};

/// D1: one-norm against P Gamma^{-1}; D2/D3: two-norm against P Sigma^{1/2}.
/// Collision rows use (gamma_ca, d_min); state-input rows use (gamma_xu, 0).
std::vector<TightenedConstraint> tighten(const std::vector<AffineResidual>& residuals, const UncertaintySpec& spec,
                                         const GammaFactors& factors, const Eigen::MatrixXd& weight, double d_min);

/// nominal - margin - factor * ||norm_arg|| at x; nonnegative iff the constraint holds.
double tightened_slack(const TightenedConstraint& tc, const Eigen::VectorXd& x);

/// One DualFeasibility record per (k, i, m) block of the layout.
std::vector<TightenedConstraint> dual_feasibility_records(const DecisionLayout& layout);

}  // namespace dualmpc

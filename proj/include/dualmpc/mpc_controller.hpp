#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dualmpc/convexification.hpp"
#include "dualmpc/mpc_program.hpp"
#include "dualmpc/socp.hpp"
#include "dualmpc/tightening.hpp"
#include "dualmpc/uncertainty.hpp"

namespace dualmpc {

/// RMPC uses the D1 tightening, SMPC D2 and DRMPC D3.
enum class PolicyKind { RMPC, SMPC, DRMPC };

const char* to_string(PolicyKind kind);
PolicyKind parse_policy(const std::string& s);
UncertaintyKind uncertainty_of(PolicyKind kind);

struct ControllerConfig {
  AgentModel agent;  // horizon N is agent.horizon()
  StateInputRows rows;
  TrackingCost cost;
  UncertaintySpec uncertainty;
  double d_min = 0.01;
  Eigen::VectorXd fallback;
  /// Separation the bootstrap linearization trajectory must keep from every obstacle.
  double bootstrap_clearance = 1.0;
  SolverOptions solver;

  void validate() const;
};

struct StepDiagnostics {
  int step = 0;
  SolveStatus status = SolveStatus::NumericalFailure;
  bool used_fallback = true;
  LinearizationOrigin origin = LinearizationOrigin::Bootstrap;
  double solve_ms = 0.0;   // conic solve only
  double total_ms = 0.0;   // linearize + tighten + assemble + solve
  int iterations = 0;
  double objective = 0.0;  // cone program objective
  double cost = 0.0;       // tracking cost at the returned policy
  KktResiduals kkt;
  double gamma_ca = 0.0;
  double gamma_xu = 0.0;
  /// Per obstacle: smallest linearized certified distance LY over steps and modes.
  std::vector<double> min_certified;
  /// Per obstacle: smallest certificate value Y at the returned (theta, lam, nu).
  std::vector<double> min_certificate;
  std::string message;
};

/// Collision-constraint blocks (k, i, m) imposed by the controller, k = 1..N.
struct ConstraintInstance {
  int k = 0, i = 0, m = 0;
};

/// One block per (step, obstacle, mode); the policy is shared across modes.
std::vector<ConstraintInstance> expand_modes(const std::vector<ObstacleModel>& obstacles, int N);

class Controller {
 public:
  explicit Controller(ControllerConfig config);

  /// Solves the convexified program at (x_t, o_t) and returns u_t = h_0, or the
  /// fallback input on any failure. A failed solve from the shifted previous solution is
  /// retried once from a fresh bootstrap. Never throws for solver failures.
  Eigen::VectorXd step(const Eigen::VectorXd& x_t, const std::vector<ObstacleModel>& obstacles,
                       const std::vector<Eigen::VectorXd>& o_t, StepDiagnostics* diag = nullptr);

  /// Assembles the program that step() would solve, without solving it.
  AssembledProgram build_program(const Eigen::VectorXd& x_t, const std::vector<ObstacleModel>& obstacles,
                                 const std::vector<Eigen::VectorXd>& o_t);

  void reset();
  const ControllerConfig& config() const { return cfg_; }
  const std::optional<LinearizationPoint>& linearization_point() const { return point_; }
  const std::optional<MpcSolution>& last_solution() const { return last_; }
  int steps_taken() const { return t_; }

 private:
  struct Prepared {
    StackedSystem stk;
    std::optional<ResidualForms> forms;
    DecisionLayout layout;
    LinearizationPoint point;
    GammaFactors factors;
    AssembledProgram program;
  };
  Prepared prepare(const Eigen::VectorXd& x_t, const std::vector<ObstacleModel>& obstacles,
                   const std::vector<Eigen::VectorXd>& o_t, bool bootstrap);
  bool attempt(const Eigen::VectorXd& x_t, const std::vector<ObstacleModel>& obstacles,
               const std::vector<Eigen::VectorXd>& o_t, bool bootstrap, StepDiagnostics& d, Eigen::VectorXd& u);

  ControllerConfig cfg_;
  std::optional<LinearizationPoint> point_;
  std::optional<MpcSolution> last_;
  bool rebootstrap_ = true;
  int t_ = 0;
};

}  // namespace dualmpc

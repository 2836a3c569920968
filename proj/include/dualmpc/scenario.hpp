#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dualmpc/mpc_controller.hpp"

namespace dualmpc {

/// Normal(mu, sigma^2) restricted to [mu + a sigma, mu + b sigma].
struct TruncNormSpec {
  double mu = 0.0;
  double sigma = 1.0;
  double a = -2.0;
  double b = 2.0;

  void validate() const;
  double lower() const { return mu + a * sigma; }
  double upper() const { return mu + b * sigma; }
  /// Closed-form variance of the truncated distribution.
  double variance() const;
};

/// Rejection sampling; deterministic for a given generator state.
double sample_truncnorm(const TruncNormSpec& spec, std::mt19937_64& rng);

enum class PdKind { CrossFast, StopAtLine };

const char* to_string(PdKind kind);
PdKind parse_pd_kind(const std::string& s);

struct PdGains {
  double kp = 0.0;
  double kd = 1.0;
  double target_s = 0.0;
  double v_target = 0.0;
};

/// a = kp (target_s - s) + kd (v_target - v), saturated to [a_min, a_max].
/// CrossFast ignores the position term.
double pd_obstacle_controller(PdKind kind, const PdGains& gains, double s, double v, double a_min = -6.0,
                              double a_max = 5.0);

/// Obstacle driving along a straight lane: world position = origin + s * direction.
struct LaneObstacle {
  std::string name;
  PdKind kind = PdKind::CrossFast;
  PdGains gains;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  Eigen::Vector2d direction = Eigen::Vector2d::UnitX();
  Eigen::Vector2d half_widths{2.4, 1.4};
  double s0 = 0.0;
  double v0 = 0.0;
  /// Reset to (s0, v0) once s exceeds this value.
  std::optional<double> respawn_at;
};

/// Agent on the lane y = lane_y heading east, double-integrator in (s, v).
struct LongitudinalScenario {
  double dt = 0.1;
  int horizon = 12;
  Eigen::Vector2d x0{3.0, 11.8};
  Eigen::Vector2d agent_half_widths{2.4, 1.4};
  double lane_y = 0.0;
  double s_final = 50.0;
  double v_min = 0.0, v_max = 12.0;
  double a_min = -6.0, a_max = 5.0;
  double q_weight = 10.0, r_weight = 20.0;
  double d_min = 0.01;
  double epsilon = 0.0228;
  RiskAllocation allocation = RiskAllocation::PerConstraint;
  TruncNormSpec agent_noise{0.0, 0.01, -2.0, 2.0};
  TruncNormSpec obstacle_noise{0.0, 0.1, -2.0, 2.0};
  /// Multiplies every sampled disturbance (the controller's noise model is unchanged).
  double noise_scale = 1.0;
  double fallback = -6.0;
  double bootstrap_clearance = 2.0;
  int max_steps = 600;
  std::vector<LaneObstacle> obstacles;
  SolverOptions solver;

  /// Two-obstacle intersection: one vehicle crossing at speed, one stopping at the line.
  static LongitudinalScenario intersection();
  void validate() const;
  int num_obstacles() const { return static_cast<int>(obstacles.size()); }
};

Eigen::Matrix2d double_integrator_A(double dt);
Eigen::Vector2d double_integrator_B(double dt);

AgentModel agent_model(const LongitudinalScenario& sc);
StateInputRows state_input_rows(const LongitudinalScenario& sc);
TrackingCost scenario_cost(const LongitudinalScenario& sc);
/// Lane-following linear prediction of obstacle i: the unsaturated PD loop.
ObstacleModel obstacle_prediction(const LongitudinalScenario& sc, int i);
Pose obstacle_pose(const LaneObstacle& ob, const Eigen::Vector2d& o);
Pose agent_pose(const LongitudinalScenario& sc, const Eigen::Vector2d& x);

/// Per-step support/covariance of v_k = (w_k, n_1k, ..., n_Mk).
Eigen::MatrixXd scenario_Gamma(const LongitudinalScenario& sc);
Eigen::MatrixXd scenario_Sigma(const LongitudinalScenario& sc);
UncertaintySpec scenario_uncertainty(const LongitudinalScenario& sc, PolicyKind policy);
ControllerConfig controller_config(const LongitudinalScenario& sc, PolicyKind policy);

struct TraceRow {
  int step = 0;
  double time_s = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  std::vector<Eigen::VectorXd> o;
  bool feasible = false;
  double solve_ms = 0.0;
  double min_dist_m = 0.0;  // certified distance to the nearest obstacle at the actual poses
  bool violation = false;   // geometric overlap or speed bound violated

  bool operator==(const TraceRow&) const = default;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  PolicyKind policy = PolicyKind::SMPC;
  std::vector<TraceRow> rows;
  std::vector<StepDiagnostics> diagnostics;  // one per row
  bool completed = false;
  double completion_s = 0.0;  // time of arrival, or the episode length if never completed
  int collision_steps = 0;    // geometric overlap with some obstacle
  int speed_violation_steps = 0;
};

struct EpisodeOptions {
  bool with_obstacles = true;
  bool keep_diagnostics = true;
};

EpisodeTrace run_episode(const LongitudinalScenario& sc, PolicyKind policy, std::uint64_t seed,
                         const EpisodeOptions& options = {});

struct Metrics {
  PolicyKind policy = PolicyKind::SMPC;
  int episodes = 0;
  int steps = 0;
  double violation_pct = 0.0;  // collision or speed-bound violation
  double collision_pct = 0.0;
  double feasibility_pct = 0.0;
  double avg_solve_ms = 0.0;
  double avg_completion_s = 0.0;
  double avg_min_distance_m = 0.0;
  int completed = 0;
};

Metrics compute_metrics(const std::vector<EpisodeTrace>& traces);

struct ExperimentResult {
  Metrics metrics;
  std::vector<EpisodeTrace> traces;
};

ExperimentResult run_longitudinal_experiment(const LongitudinalScenario& sc, PolicyKind policy,
                                             const std::vector<std::uint64_t>& seeds,
                                             const EpisodeOptions& options = {});

}  // namespace dualmpc

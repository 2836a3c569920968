#include "dualmpc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualmpc/dual_distance.hpp"
#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

}  // namespace

void TruncNormSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("truncnorm: sigma must be positive");
  if (!(a < b)) throw ValidationError("truncnorm: need a < b");
  if (!std::isfinite(mu)) throw ValidationError("truncnorm: mu must be finite");
}

double TruncNormSpec::variance() const {
  validate();
  const double Z = normal_cdf(b) - normal_cdf(a);
  const double pa = std::isfinite(a) ? phi(a) : 0.0, pb = std::isfinite(b) ? phi(b) : 0.0;
  const double ta = std::isfinite(a) ? a * pa : 0.0, tb = std::isfinite(b) ? b * pb : 0.0;
  const double m = (pa - pb) / Z;
  return sigma * sigma * (1.0 + (ta - tb) / Z - m * m);
}

double sample_truncnorm(const TruncNormSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int tries = 0; tries < 1000000; ++tries) {
    const double z = nd(rng);
    if (z >= spec.a && z <= spec.b) return spec.mu + spec.sigma * z;
  }
  throw SolverError("truncnorm: rejection sampling did not accept a sample", "IterLimit");
}

const char* to_string(PdKind kind) { return kind == PdKind::CrossFast ? "cross_fast" : "stop_at_line"; }

PdKind parse_pd_kind(const std::string& s) {
  if (s == "cross_fast") return PdKind::CrossFast;
  if (s == "stop_at_line") return PdKind::StopAtLine;
  throw ValidationError("unknown obstacle controller '" + s + "' (expected cross_fast or stop_at_line)");
}

double pd_obstacle_controller(PdKind kind, const PdGains& gains, double s, double v, double a_min, double a_max) {
  double a = gains.kd * (gains.v_target - v);
  if (kind == PdKind::StopAtLine) a += gains.kp * (gains.target_s - s);
  return std::clamp(a, a_min, a_max);
}

LongitudinalScenario LongitudinalScenario::intersection() {
  LongitudinalScenario sc;
  LaneObstacle cross;
  cross.name = "cross_fast";
  cross.kind = PdKind::CrossFast;
  cross.gains = {0.0, 1.0, 0.0, 10.0};
  cross.origin = {28.25, 0.0};
  cross.direction = {0.0, -1.0};
  cross.s0 = -14.0;
  cross.v0 = 10.0;
  cross.respawn_at = 20.0;
  LaneObstacle stop;
  stop.name = "stop_at_line";
  stop.kind = PdKind::StopAtLine;
  stop.gains = {1.0, 2.0, -6.0, 0.0};
  stop.origin = {31.75, 0.0};
  stop.direction = {0.0, 1.0};
  stop.s0 = -30.0;
  stop.v0 = 10.0;
  sc.obstacles = {cross, stop};
  return sc;
}

void LongitudinalScenario::validate() const {
  if (!(dt > 0.0)) throw ValidationError("scenario: dt must be positive");
  if (horizon < 1) throw ValidationError("scenario: horizon must be >= 1");
  if (!(agent_half_widths.minCoeff() > 0.0)) throw ValidationError("scenario: agent half widths must be positive");
  if (!(v_min < v_max) || !(a_min < a_max)) throw ValidationError("scenario: empty speed or acceleration range");
  if (!(q_weight >= 0.0 && r_weight >= 0.0)) throw ValidationError("scenario: negative cost weight");
  if (!(d_min >= 0.0)) throw ValidationError("scenario: d_min must be nonnegative");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("scenario: epsilon must be in (0, 1)");
  agent_noise.validate();
  obstacle_noise.validate();
  if (agent_noise.a != -agent_noise.b || obstacle_noise.a != -obstacle_noise.b || agent_noise.mu != 0.0 ||
      obstacle_noise.mu != 0.0)
    throw ValidationError("scenario: noise must be zero-mean and symmetrically truncated");
  if (agent_noise.b != obstacle_noise.b)
    throw ValidationError("scenario: agent and obstacle truncation bounds must agree (one support radius)");
  if (!(noise_scale >= 0.0)) throw ValidationError("scenario: noise_scale must be nonnegative");
  if (fallback < a_min || fallback > a_max) throw ValidationError("scenario: fallback outside the input range");
  if (!(bootstrap_clearance >= 0.0)) throw ValidationError("scenario: bootstrap_clearance must be nonnegative");
  if (max_steps < 1) throw ValidationError("scenario: max_steps must be >= 1");
  for (const auto& ob : obstacles) {
    if (std::abs(ob.direction.norm() - 1.0) > 1e-9) throw ValidationError("scenario: lane direction must be unit");
    if (!(ob.half_widths.minCoeff() > 0.0)) throw ValidationError("scenario: obstacle half widths must be positive");
    if (ob.gains.kd <= 0.0 || ob.gains.kp < 0.0) throw ValidationError("scenario: PD gains must be positive");
    if (ob.kind == PdKind::StopAtLine && ob.gains.kp <= 0.0)
      throw ValidationError("scenario: stop_at_line needs kp > 0");
  }
}

Eigen::Matrix2d double_integrator_A(double dt) {
  Eigen::Matrix2d A;
  A << 1.0, dt, 0.0, 1.0;
  return A;
}

Vector2d double_integrator_B(double dt) { return {0.5 * dt * dt, dt}; }

AgentModel agent_model(const LongitudinalScenario& sc) {
  AgentModel ag;
  const int N = sc.horizon;
  ag.A.assign(N, double_integrator_A(sc.dt));
  ag.B.assign(N, MatrixXd(double_integrator_B(sc.dt)));
  ag.E.assign(N, MatrixXd::Identity(2, 2));
  ag.C = MatrixXd::Zero(2, 2);
  ag.C(0, 0) = 1.0;
  ag.c.assign(N + 1, Vector2d(0.0, sc.lane_y));
  ag.R.assign(N + 1, MatrixXd::Identity(2, 2));
  ag.shape = make_box(sc.agent_half_widths);
  return ag;
}

StateInputRows state_input_rows(const LongitudinalScenario& sc) {
  StateInputRows r;
  r.Fx = MatrixXd::Zero(4, 2);
  r.Fu = MatrixXd::Zero(4, 1);
  r.f.resize(4);
  r.Fx(0, 1) = 1.0;
  r.f(0) = sc.v_max;
  r.Fx(1, 1) = -1.0;
  r.f(1) = -sc.v_min;
  r.Fu(2, 0) = 1.0;
  r.f(2) = sc.a_max;
  r.Fu(3, 0) = -1.0;
  r.f(3) = -sc.a_min;
  return r;
}

TrackingCost scenario_cost(const LongitudinalScenario& sc) {
  TrackingCost c;
  c.Q = sc.q_weight * MatrixXd::Identity(2, 2);
  c.R = sc.r_weight * MatrixXd::Identity(1, 1);
  c.x_ref = Vector2d(2.0 * sc.s_final, 0.0);
  c.u_ref = VectorXd::Zero(1);
  return c;
}

namespace {

MatrixXd heading_rotation(const Vector2d& d) {
  MatrixXd R(2, 2);
  R << d(0), -d(1), d(1), d(0);
  return R;
}

}  // namespace

ObstacleModel obstacle_prediction(const LongitudinalScenario& sc, int i) {
  const LaneObstacle& ob = sc.obstacles.at(i);
  const int N = sc.horizon;
  const Eigen::Matrix2d A = double_integrator_A(sc.dt);
  const Vector2d B = double_integrator_B(sc.dt);
  const double kp = ob.kind == PdKind::StopAtLine ? ob.gains.kp : 0.0;
  Eigen::RowVector2d Kpd(kp, ob.gains.kd);
  ObstacleMode mode;
  mode.T.assign(N, MatrixXd(A - B * Kpd));
  mode.q.assign(N, VectorXd(B * (kp * ob.gains.target_s + ob.gains.kd * ob.gains.v_target)));
  mode.F.assign(N, MatrixXd::Identity(2, 2));
  mode.C = MatrixXd::Zero(2, 2);
  mode.C.col(0) = ob.direction;
  mode.c = ob.origin;
  mode.R.assign(N + 1, heading_rotation(ob.direction));
  ObstacleModel model;
  model.modes.push_back(std::move(mode));
  model.shape = make_box(ob.half_widths);
  return model;
}

Pose obstacle_pose(const LaneObstacle& ob, const Vector2d& o) {
  return Pose(ob.origin + o(0) * ob.direction, heading_rotation(ob.direction));
}

Pose agent_pose(const LongitudinalScenario& sc, const Vector2d& x) {
  return Pose(Vector2d(x(0), sc.lane_y), MatrixXd::Identity(2, 2));
}

MatrixXd scenario_Gamma(const LongitudinalScenario& sc) {
  const int dim = 2 + 2 * sc.num_obstacles();
  VectorXd d(dim);
  d.head(2).setConstant(1.0 / sc.agent_noise.sigma);
  d.tail(dim - 2).setConstant(1.0 / sc.obstacle_noise.sigma);
  return d.asDiagonal();
}

MatrixXd scenario_Sigma(const LongitudinalScenario& sc) {
  const int dim = 2 + 2 * sc.num_obstacles();
  VectorXd d(dim);
  d.head(2).setConstant(sc.agent_noise.variance());
  d.tail(dim - 2).setConstant(sc.obstacle_noise.variance());
  return d.asDiagonal();
}

UncertaintySpec scenario_uncertainty(const LongitudinalScenario& sc, PolicyKind policy) {
  switch (uncertainty_of(policy)) {
    case UncertaintyKind::D1: return UncertaintySpec::robust(scenario_Gamma(sc), sc.agent_noise.b);
    case UncertaintyKind::D2: return UncertaintySpec::gaussian(scenario_Sigma(sc), sc.epsilon, sc.allocation);
    case UncertaintyKind::D3: return UncertaintySpec::moment(scenario_Sigma(sc), sc.epsilon, sc.allocation);
  }
  throw ValidationError("scenario: unknown policy");
}

ControllerConfig controller_config(const LongitudinalScenario& sc, PolicyKind policy) {
  sc.validate();
  ControllerConfig cfg;
  cfg.agent = agent_model(sc);
  cfg.rows = state_input_rows(sc);
  cfg.cost = scenario_cost(sc);
  cfg.uncertainty = scenario_uncertainty(sc, policy);
  cfg.d_min = sc.d_min;
  cfg.fallback = VectorXd::Constant(1, sc.fallback);
  cfg.bootstrap_clearance = sc.bootstrap_clearance;
  cfg.solver = sc.solver;
  return cfg;
}

namespace {

struct Separation {
  double certified = 0.0;
  bool overlap = false;
};

Separation separation(const ConeSet& A, const Pose& pa, const ConeSet& B, const Pose& pb) {
  Separation s;
  s.certified = std::max(0.0, solve_dual_separation(A, pa, B, pb).value);
  double dist;
  try {
    dist = primal_distance_oracle(A, pa, B, pb);
  } catch (const OracleError&) {
    dist = s.certified;
  }
  s.overlap = dist <= 0.0;
  return s;
}

}  // namespace

EpisodeTrace run_episode(const LongitudinalScenario& sc, PolicyKind policy, std::uint64_t seed,
                         const EpisodeOptions& options) {
  sc.validate();
  LongitudinalScenario scene = sc;
  if (!options.with_obstacles) scene.obstacles.clear();
  const int M = scene.num_obstacles();

  Controller ctrl(controller_config(scene, policy));
  std::vector<ObstacleModel> models;
  for (int i = 0; i < M; ++i) models.push_back(obstacle_prediction(scene, i));
  const ConeSet agent_shape = make_box(scene.agent_half_widths);

  std::mt19937_64 rng(seed);
  const Eigen::Matrix2d A = double_integrator_A(scene.dt);
  const Vector2d B = double_integrator_B(scene.dt);
  Vector2d x = scene.x0;
  std::vector<VectorXd> o(M);
  for (int i = 0; i < M; ++i) o[i] = Vector2d(scene.obstacles[i].s0, scene.obstacles[i].v0);

  EpisodeTrace tr;
  tr.seed = seed;
  tr.policy = policy;
  tr.completion_s = scene.max_steps * scene.dt;
  for (int t = 0; t < scene.max_steps; ++t) {
    if (x(0) >= scene.s_final) {
      tr.completed = true;
      tr.completion_s = t * scene.dt;
      break;
    }
    StepDiagnostics diag;
    const VectorXd u = ctrl.step(x, models, o, &diag);

    TraceRow row;
    row.step = t;
    row.time_s = t * scene.dt;
    row.x = x;
    row.u = u;
    row.o = o;
    row.feasible = !diag.used_fallback;
    row.solve_ms = diag.solve_ms;
    row.min_dist_m = std::numeric_limits<double>::infinity();
    bool collision = false;
    const Pose pa = agent_pose(scene, x);
    for (int i = 0; i < M; ++i) {
      const auto& ob = scene.obstacles[i];
      const Separation s = separation(agent_shape, pa, models[i].shape, obstacle_pose(ob, o[i]));
      row.min_dist_m = std::min(row.min_dist_m, s.certified);
      collision = collision || s.overlap;
    }
    const bool speed = x(1) > scene.v_max + 1e-9 || x(1) < scene.v_min - 1e-9;
    row.violation = collision || speed;
    tr.collision_steps += collision ? 1 : 0;
    tr.speed_violation_steps += speed ? 1 : 0;
    tr.rows.push_back(std::move(row));
    if (options.keep_diagnostics) tr.diagnostics.push_back(std::move(diag));

    Vector2d w;
    for (int r = 0; r < 2; ++r) w(r) = scene.noise_scale * sample_truncnorm(scene.agent_noise, rng);
    x = A * x + B * u(0) + w;
    x(1) = std::max(x(1), 0.0);  // vehicles do not reverse
    for (int i = 0; i < M; ++i) {
      const auto& ob = scene.obstacles[i];
      const double a = pd_obstacle_controller(ob.kind, ob.gains, o[i](0), o[i](1), scene.a_min, scene.a_max);
      Vector2d n;
      for (int r = 0; r < 2; ++r) n(r) = scene.noise_scale * sample_truncnorm(scene.obstacle_noise, rng);
      o[i] = A * o[i] + B * a + n;
      if (ob.respawn_at && o[i](0) > *ob.respawn_at) o[i] = Vector2d(ob.s0, ob.v0);
    }
  }
  if (!tr.completed && x(0) >= scene.s_final && static_cast<int>(tr.rows.size()) == scene.max_steps) {
    tr.completed = true;
    tr.completion_s = scene.max_steps * scene.dt;
  }
  return tr;
}

Metrics compute_metrics(const std::vector<EpisodeTrace>& traces) {
  Metrics m;
  if (traces.empty()) return m;
  m.policy = traces.front().policy;
  m.episodes = static_cast<int>(traces.size());
  int viol = 0, coll = 0, feas = 0, solved = 0;
  double solve_sum = 0.0, completion = 0.0, min_dist = 0.0;
  for (const auto& tr : traces) {
    double ep_min = std::numeric_limits<double>::infinity();
    for (const auto& r : tr.rows) {
      ++m.steps;
      viol += r.violation ? 1 : 0;
      feas += r.feasible ? 1 : 0;
      if (r.feasible) {
        solve_sum += r.solve_ms;
        ++solved;
      }
      ep_min = std::min(ep_min, r.min_dist_m);
    }
    coll += tr.collision_steps;
    completion += tr.completion_s;
    m.completed += tr.completed ? 1 : 0;
    if (std::isfinite(ep_min)) min_dist += ep_min;
  }
  if (m.steps > 0) {
    m.violation_pct = 100.0 * viol / m.steps;
    m.collision_pct = 100.0 * coll / m.steps;
    m.feasibility_pct = 100.0 * feas / m.steps;
  } else {
    m.feasibility_pct = 100.0;
  }
  m.avg_solve_ms = solved > 0 ? solve_sum / solved : 0.0;
  m.avg_completion_s = completion / m.episodes;
  m.avg_min_distance_m = min_dist / m.episodes;
  return m;
}

ExperimentResult run_longitudinal_experiment(const LongitudinalScenario& sc, PolicyKind policy,
                                             const std::vector<std::uint64_t>& seeds,
                                             const EpisodeOptions& options) {
  ExperimentResult res;
  for (std::uint64_t s : seeds) res.traces.push_back(run_episode(sc, policy, s, options));
  res.metrics = compute_metrics(res.traces);
  res.metrics.policy = policy;
  return res;
}

}  // namespace dualmpc

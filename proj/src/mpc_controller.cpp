#include "dualmpc/mpc_controller.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::VectorXd;

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::RMPC: return "rmpc";
    case PolicyKind::SMPC: return "smpc";
    case PolicyKind::DRMPC: return "drmpc";
  }
  return "unknown";
}

PolicyKind parse_policy(const std::string& s) {
  if (s == "rmpc" || s == "RMPC") return PolicyKind::RMPC;
  if (s == "smpc" || s == "SMPC") return PolicyKind::SMPC;
  if (s == "drmpc" || s == "DRMPC") return PolicyKind::DRMPC;
  throw ValidationError("unknown policy '" + s + "' (expected rmpc, smpc or drmpc)");
}

UncertaintyKind uncertainty_of(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::RMPC: return UncertaintyKind::D1;
    case PolicyKind::SMPC: return UncertaintyKind::D2;
    case PolicyKind::DRMPC: return UncertaintyKind::D3;
  }
  return UncertaintyKind::D2;
}

void ControllerConfig::validate() const {
  agent.validate();
  cost.validate(agent.nx(), agent.nu());
  uncertainty.validate();
  if (!(d_min >= 0.0)) throw ValidationError("controller: d_min must be nonnegative");
  if (!(bootstrap_clearance >= 0.0)) throw ValidationError("controller: bootstrap_clearance must be nonnegative");
  if (fallback.size() != agent.nu()) throw ValidationError("controller: fallback input has wrong size");
  if (rows.Fx.cols() != agent.nx() || rows.Fu.cols() != agent.nu() || rows.Fx.rows() != rows.J() ||
      rows.Fu.rows() != rows.J())
    throw ValidationError("controller: state-input rows have wrong size");
}

std::vector<ConstraintInstance> expand_modes(const std::vector<ObstacleModel>& obstacles, int N) {
  std::vector<ConstraintInstance> out;
  for (std::size_t i = 0; i < obstacles.size(); ++i)
    if (obstacles[i].modes.empty()) throw ValidationError("expand_modes: obstacle without modes");
  for (int k = 1; k <= N; ++k)
    for (std::size_t i = 0; i < obstacles.size(); ++i)
      for (std::size_t m = 0; m < obstacles[i].modes.size(); ++m)
        out.push_back({k, static_cast<int>(i), static_cast<int>(m)});
  return out;
}

Controller::Controller(ControllerConfig config) : cfg_(std::move(config)) { cfg_.validate(); }

void Controller::reset() {
  point_.reset();
  last_.reset();
  rebootstrap_ = true;
  t_ = 0;
}

Controller::Prepared Controller::prepare(const VectorXd& x_t, const std::vector<ObstacleModel>& obstacles,
                                         const std::vector<VectorXd>& o_t, bool bootstrap) {
  Prepared p;
  const int N = cfg_.agent.horizon();
  for (const auto& ob : obstacles) ob.validate(N, cfg_.agent.pos_dim());
  p.stk = build_stacked(cfg_.agent, obstacles);
  if (cfg_.uncertainty.dim() != p.stk.nv_step())
    throw ValidationError("controller: uncertainty dimension " + std::to_string(cfg_.uncertainty.dim()) +
                          " does not match the per-step noise dimension " + std::to_string(p.stk.nv_step()));
  p.forms.emplace(p.stk, cfg_.agent, obstacles, x_t, o_t, cfg_.rows);
  p.layout = DecisionLayout(p.stk, cfg_.agent, obstacles);
  if (bootstrap || !point_)
    p.point = bootstrap_duals(*p.forms, p.layout, cfg_.cost, cfg_.solver, &cfg_.fallback, cfg_.bootstrap_clearance);
  else
    p.point = shift_warm_start(&*point_, *p.forms, p.layout, cfg_.cost, cfg_.solver, &cfg_.fallback,
                               cfg_.bootstrap_clearance);

  int modes_per_step = 0;
  for (const auto& ob : obstacles) modes_per_step += static_cast<int>(ob.modes.size());
  p.factors = gamma_factors(cfg_.uncertainty, N, modes_per_step, cfg_.rows.J());

  std::vector<AffineResidual> residuals = linearize(*p.forms, p.layout, p.point);
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < cfg_.rows.J(); ++j) residuals.push_back(state_input_residual(*p.forms, p.layout, k, j));
  const auto weight = noise_weight(cfg_.uncertainty, stack_uncertainty(cfg_.uncertainty, N), p.stk.perm);
  auto constraints = tighten(residuals, cfg_.uncertainty, p.factors, weight, cfg_.d_min);
  for (auto& rec : dual_feasibility_records(p.layout)) constraints.push_back(std::move(rec));
  p.program = assemble(*p.forms, p.layout, cfg_.cost, std::move(constraints));
  return p;
}

AssembledProgram Controller::build_program(const VectorXd& x_t, const std::vector<ObstacleModel>& obstacles,
                                           const std::vector<VectorXd>& o_t) {
  return prepare(x_t, obstacles, o_t, rebootstrap_).program;
}

bool Controller::attempt(const VectorXd& x_t, const std::vector<ObstacleModel>& obstacles,
                         const std::vector<VectorXd>& o_t, bool bootstrap, StepDiagnostics& d, VectorXd& u) {
  try {
    Prepared p = prepare(x_t, obstacles, o_t, bootstrap);
    d.origin = p.point.origin;
    d.gamma_ca = p.factors.ca;
    d.gamma_xu = p.factors.xu;
    SolveResult res = solve(p.program.program, cfg_.solver);
    d.status = res.status;
    d.solve_ms += res.solve_ms;
    d.iterations += res.iterations;
    d.message = res.message;
    if (!res.optimal()) return false;
    d.kkt = kkt_residuals(p.program.program, res.x, res.y, res.z, res.s);
    d.objective = res.objective;
    MpcSolution sol = unpack_solution(p.program, *p.forms, cfg_.cost, std::move(res));
    d.cost = sol.cost;
    for (const auto& tc : p.program.constraints) {
      if (tc.kind != ResidualKind::CollisionAvoid) continue;
      d.min_certified[tc.i] = std::min(d.min_certified[tc.i], tc.nominal.eval(sol.result.x));
      const int b = p.layout.block(tc.k, tc.i, tc.m);
      d.min_certificate[tc.i] =
          std::min(d.min_certificate[tc.i], p.forms->Y(tc.k, tc.i, tc.m, sol.theta, sol.lam[b], sol.nu[b]));
    }
    u = sol.theta.h.head(cfg_.agent.nu());
    d.used_fallback = false;
    point_ = LinearizationPoint{sol.theta, sol.lam, sol.nu, LinearizationOrigin::ShiftedPrevSolve};
    last_ = std::move(sol);
    return true;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    d.message = e.what();
    d.status = SolveStatus::NumericalFailure;
    if (const auto* se = dynamic_cast<const SolverError*>(&e)) d.message += " [" + se->status() + "]";
    return false;
  }
}

VectorXd Controller::step(const VectorXd& x_t, const std::vector<ObstacleModel>& obstacles,
                          const std::vector<VectorXd>& o_t, StepDiagnostics* diag) {
  const auto t0 = std::chrono::steady_clock::now();
  StepDiagnostics d;
  d.step = t_++;
  d.min_certified.assign(obstacles.size(), std::numeric_limits<double>::infinity());
  d.min_certificate = d.min_certified;
  VectorXd u = cfg_.fallback;

  const bool bootstrap = rebootstrap_ || !point_;
  bool ok = attempt(x_t, obstacles, o_t, bootstrap, d, u);
  if (!ok && !bootstrap) ok = attempt(x_t, obstacles, o_t, true, d, u);
  rebootstrap_ = !ok;
  if (!ok) point_.reset();
  d.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (diag) *diag = std::move(d);
  return u;
}

}  // namespace dualmpc

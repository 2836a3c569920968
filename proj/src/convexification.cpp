#include "dualmpc/convexification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualmpc/dual_distance.hpp"
#include "dualmpc/errors.hpp"
#include "dualmpc/program_builder.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

PolicyParams zero_policy(const StackedSystem& stk) {
  return PolicyParams::zeros(stk.N, stk.nu, stk.nx, stk.obs_state_total());
}

Pose agent_pose(const ResidualForms& forms, const PolicyParams& theta, int k) {
  return Pose(forms.agent_position(k, theta), forms.agent().R[k]);
}

Pose obstacle_pose(const ResidualForms& forms, int k, int i, int m) {
  return Pose(forms.obstacle_position(k, i, m), forms.obstacles()[i].modes[m].R[k]);
}

}  // namespace

AffineResidual linearize_block(const ResidualForms& forms, const DecisionLayout& layout,
                               const LinearizationPoint& point, int k, int i, int m) {
  const auto& stk = forms.stacked();
  const int b = layout.block(k, i, m);
  const VectorXd& lam_s = point.lam.at(b);
  const auto& agent = forms.agent();
  const auto& shape_b = forms.obstacles()[i].shape;
  const PolicyParams zero = zero_policy(stk);

  AffineResidual res;
  res.kind = ResidualKind::CollisionAvoid;
  res.k = k;
  res.i = i;
  res.m = m;
  res.noise.assign(forms.noise_dim(), LinearExpr());

  // Y(theta, lam*, nu) and Z(theta, lam*): affine in theta through u = h + M w + K D n.
  add_policy_terms(forms.input_weight(k, lam_s), forms.deviation_map(i, m), stk, layout, res.nominal, res.noise);
  res.nominal.constant = -lam_s.dot(forms.affine_part(k, i, m, zero));
  const int nu0 = layout.nu(k, i, m);
  for (int r = 0; r < shape_b.rows(); ++r) res.nominal.add(nu0 + r, -shape_b.g()(r));
  const RowVectorXd z0 = forms.Z(k, i, m, zero, lam_s);
  for (int c = 0; c < z0.size(); ++c) res.noise[c].constant += z0(c);

  // Y(theta*, lam - lam*, 0) and Z(theta*, lam - lam*).
  const VectorXd a_s = forms.affine_part(k, i, m, point.theta);
  const MatrixXd GD = agent.shape.G() * agent.R[k].transpose() * forms.noise_map(k, i, m, point.theta);
  const int l0 = layout.lam(k, i, m);
  for (int r = 0; r < layout.lam_dim(); ++r) res.nominal.add(l0 + r, -a_s(r));
  res.nominal.constant += lam_s.dot(a_s);
  const RowVectorXd lgd = lam_s.transpose() * GD;
  for (int c = 0; c < GD.cols(); ++c) {
    for (int r = 0; r < GD.rows(); ++r) res.noise[c].add(l0 + r, -GD(r, c));
    res.noise[c].constant += lgd(c);
  }
  return res;
}

std::vector<AffineResidual> linearize(const ResidualForms& forms, const DecisionLayout& layout,
                                      const LinearizationPoint& point) {
  if (static_cast<int>(point.lam.size()) != layout.num_blocks() ||
      static_cast<int>(point.nu.size()) != layout.num_blocks())
    throw ValidationError("linearize: point has the wrong number of dual blocks");
  std::vector<AffineResidual> out;
  for (int k = 1; k <= layout.N(); ++k)
    for (int i = 0; i < layout.num_obstacles(); ++i)
      for (int m = 0; m < layout.num_modes(i); ++m) out.push_back(linearize_block(forms, layout, point, k, i, m));
  return out;
}

double dual_feasibility_violation(const ResidualForms& forms, const DecisionLayout& layout,
                                  const LinearizationPoint& point) {
  const auto& agent = forms.agent();
  double worst = 0.0;
  for (int k = 1; k <= layout.N(); ++k)
    for (int i = 0; i < layout.num_obstacles(); ++i)
      for (int m = 0; m < layout.num_modes(i); ++m) {
        const int b = layout.block(k, i, m);
        const auto& ob = forms.obstacles()[i];
        const VectorXd a = agent.R[k] * (agent.shape.G().transpose() * point.lam[b]);
        const VectorXd c = ob.modes[m].R[k] * (ob.shape.G().transpose() * point.nu[b]);
        worst = std::max({worst, -agent.shape.cone().interior_margin(point.lam[b]),
                          -ob.shape.cone().interior_margin(point.nu[b]), a.norm() - 1.0, c.norm() - 1.0,
                          (a + c).norm()});
      }
  return worst;
}

PolicyParams open_loop_policy(const ResidualForms& forms, const DecisionLayout& layout, const TrackingCost& cost,
                              const SolverOptions& options) {
  const auto& stk = forms.stacked();
  ProgramBuilder pb;
  pb.add_variables(stk.N * stk.nu);  // h occupies the leading block of the layout
  add_tracking_epigraph(pb, forms, layout, cost);
  for (int k = 0; k < stk.N; ++k)
    for (int j = 0; j < forms.rows().J(); ++j) {
      AffineResidual r = state_input_residual(forms, layout, k, j);
      r.nominal.compress();
      pb.add_nonneg(r.nominal);
    }
  const SolveResult res = solve(pb.build(), options);
  if (!res.optimal()) throw SolverError("open-loop tracking solve failed: " + res.message, to_string(res.status));
  PolicyParams th = zero_policy(stk);
  th.h = res.x.head(stk.N * stk.nu);
  return th;
}

VectorXd current_separation_normal(const ResidualForms& forms, int i, int m, const SolverOptions& options) {
  const auto& A = forms.agent().shape;
  const auto& B = forms.obstacles()[i].shape;
  const PolicyParams zero = zero_policy(forms.stacked());
  const Pose pa = agent_pose(forms, zero, 0);
  const Pose pb = obstacle_pose(forms, 0, i, m);
  const SeparationCertificate cert = solve_dual_separation(A, pa, B, pb, options);
  VectorXd normal = -(pa.R * (A.G().transpose() * cert.lam));
  if (cert.value <= 1e-9 || normal.norm() < 1e-9) normal = pa.p - pb.p;
  if (normal.norm() < 1e-9) normal = VectorXd::Unit(pa.dim(), 0);
  return normal.normalized();
}

void certificate_at(const ResidualForms& forms, const PolicyParams& theta, int k, int i, int m, VectorXd& lam,
                    VectorXd& nu, const SolverOptions& options) {
  const auto& A = forms.agent().shape;
  const auto& B = forms.obstacles()[i].shape;
  const Pose pa = agent_pose(forms, theta, k);
  const Pose pb = obstacle_pose(forms, k, i, m);
  SeparationCertificate cert = solve_dual_separation(A, pa, B, pb, options);
  if (cert.value <= 1e-9) {
    cert = directed_certificate(A, pa, B, pb, current_separation_normal(forms, i, m, options), options);
    cert.lam *= 0.5;
    cert.nu *= 0.5;
  }
  lam = cert.lam;
  nu = cert.nu;
}

namespace {

// Smallest nominal separation over all blocks; zero on overlap. Returns early once below stop_below.
double min_separation(const ResidualForms& forms, const DecisionLayout& layout, const PolicyParams& theta,
                      const SolverOptions& options, double stop_below = -1.0) {
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= layout.N(); ++k)
    for (int i = 0; i < layout.num_obstacles(); ++i)
      for (int m = 0; m < layout.num_modes(i); ++m) {
        const Pose pa = agent_pose(forms, theta, k), pb = obstacle_pose(forms, k, i, m);
        const auto& ob = forms.obstacles()[i];
        worst = std::min(worst, solve_dual_separation(forms.agent().shape, pa, ob.shape, pb, options).value);
        if (worst <= stop_below) return worst;
      }
  return worst;
}

}  // namespace

LinearizationPoint bootstrap_duals(const ResidualForms& forms, const DecisionLayout& layout,
                                   const TrackingCost& cost, const SolverOptions& options,
                                   const VectorXd* fallback, double clearance) {
  // The distance oracle reports overlap as zero up to solver accuracy.
  clearance = std::max(clearance, 1e-6);
  LinearizationPoint pt;
  pt.origin = LinearizationOrigin::Bootstrap;
  pt.theta = open_loop_policy(forms, layout, cost, options);
  if (fallback != nullptr && min_separation(forms, layout, pt.theta, options, clearance) <= clearance) {
    // Linearizing about a plan that grazes an obstacle yields normals the agent cannot act
    // on later in the horizon; move the nominal inputs towards the fallback instead.
    const int N = layout.N(), nu = static_cast<int>(fallback->size());
    const VectorXd h_ol = pt.theta.h;
    VectorXd best_h = h_ol;
    double best = -std::numeric_limits<double>::infinity();
    for (int step = 1; step <= 10; ++step) {
      const double alpha = 0.1 * step;
      for (int k = 0; k < N; ++k)
        pt.theta.h.segment(k * nu, nu) = (1.0 - alpha) * h_ol.segment(k * nu, nu) + alpha * *fallback;
      const double sep = min_separation(forms, layout, pt.theta, options);
      if (sep > best) best = sep, best_h = pt.theta.h;
      if (sep > clearance) break;
    }
    pt.theta.h = best_h;
  }
  pt.lam.resize(layout.num_blocks());
  pt.nu.resize(layout.num_blocks());
  for (int k = 1; k <= layout.N(); ++k)
    for (int i = 0; i < layout.num_obstacles(); ++i)
      for (int m = 0; m < layout.num_modes(i); ++m) {
        const int b = layout.block(k, i, m);
        certificate_at(forms, pt.theta, k, i, m, pt.lam[b], pt.nu[b], options);
      }
  return pt;
}

LinearizationPoint shift_warm_start(const LinearizationPoint* prev, const ResidualForms& forms,
                                    const DecisionLayout& layout, const TrackingCost& cost,
                                    const SolverOptions& options, const VectorXd* fallback, double clearance) {
  const auto& stk = forms.stacked();
  const int N = stk.N, nu = stk.nu, nx = stk.nx, no = stk.obs_state_total();
  const bool compatible = prev != nullptr && static_cast<int>(prev->lam.size()) == layout.num_blocks() &&
                          prev->theta.h.size() == N * nu && prev->theta.M.cols() == N * nx &&
                          prev->theta.K.cols() == N * no;
  if (!compatible) return bootstrap_duals(forms, layout, cost, options, fallback, clearance);

  LinearizationPoint pt;
  pt.origin = LinearizationOrigin::ShiftedPrevSolve;
  pt.theta = zero_policy(stk);
  const PolicyParams& old = prev->theta;
  for (int k = 0; k < N; ++k) {
    const int src = std::min(k + 1, N - 1);
    pt.theta.h.segment(k * nu, nu) = old.h.segment(src * nu, nu);
  }
  for (int k = 1; k < N; ++k) {
    if (k + 1 <= N - 1) {
      for (int l = 0; l < k; ++l) pt.theta.M.block(k * nu, l * nx, nu, nx) = old.M.block((k + 1) * nu, (l + 1) * nx, nu, nx);
      pt.theta.K.block(k * nu, k * no, nu, no) = old.K.block((k + 1) * nu, (k + 1) * no, nu, no);
    } else {
      pt.theta.M.block(k * nu, 0, nu, k * nx) = old.M.block(k * nu, 0, nu, k * nx);
      pt.theta.K.block(k * nu, k * no, nu, no) = old.K.block(k * nu, k * no, nu, no);
    }
  }

  pt.lam.resize(layout.num_blocks());
  pt.nu.resize(layout.num_blocks());
  const auto& agent = forms.agent();
  for (int k = 1; k <= N; ++k)
    for (int i = 0; i < layout.num_obstacles(); ++i)
      for (int m = 0; m < layout.num_modes(i); ++m) {
        const int b = layout.block(k, i, m);
        const int src = layout.block(std::min(k + 1, N), i, m);
        pt.lam[b] = prev->lam[src];
        pt.nu[b] = prev->nu[src];
        const auto& ob = forms.obstacles()[i];
        const Pose pa = agent_pose(forms, pt.theta, k), pb = obstacle_pose(forms, k, i, m);
        const CertificateCheck chk = check_certificate(pt.lam[b], pt.nu[b], agent.shape, pa, ob.shape, pb, 1e-6);
        // A shifted certificate that no longer proves separation would linearize about a stale normal.
        if (!chk.feasible(1e-6) || certificate_value(pt.lam[b], pt.nu[b], agent.shape, pa, ob.shape, pb) <= 0.0)
          certificate_at(forms, pt.theta, k, i, m, pt.lam[b], pt.nu[b], options);
      }
  return pt;
}

}  // namespace dualmpc

#include "dualmpc/tightening.hpp"

#include <cmath>

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

ResidualForms::ResidualForms(const StackedSystem& stk, const AgentModel& agent,
                             const std::vector<ObstacleModel>& obstacles, const VectorXd& x_t,
                             const std::vector<VectorXd>& o_t, StateInputRows rows)
    : stk_(stk), agent_(agent), obstacles_(obstacles), x0_(x_t), o0_(o_t), rows_(std::move(rows)) {
  if (x0_.size() != stk_.nx) throw ValidationError("ResidualForms: x_t has wrong size");
  if (static_cast<int>(o0_.size()) != stk_.num_obstacles() ||
      static_cast<int>(obstacles_.size()) != stk_.num_obstacles())
    throw ValidationError("ResidualForms: obstacle count mismatch");
  if (rows_.Fx.rows() != rows_.J() || rows_.Fu.rows() != rows_.J() || rows_.Fx.cols() != stk_.nx ||
      rows_.Fu.cols() != stk_.nu)
    throw ValidationError("ResidualForms: state-input rows have wrong size");
  const int M = stk_.num_obstacles();
  dev_nominal_ = stk_.deviation_map(std::vector<int>(M, 0));
  dev_.resize(M);
  obar_.resize(M);
  for (int i = 0; i < M; ++i) {
    if (o0_[i].size() != stk_.no[i]) throw ValidationError("ResidualForms: obstacle state has wrong size");
    for (int m = 0; m < static_cast<int>(obstacles_[i].modes.size()); ++m) {
      dev_[i].push_back(stk_.deviation_map(mode_choice(i, m)));
      const auto& os = stk_.obs[i][m];
      obar_[i].push_back(os.T * o0_[i] + os.q);
    }
  }
}

std::vector<int> ResidualForms::mode_choice(int i, int m) const {
  std::vector<int> mc(stk_.num_obstacles(), 0);
  mc[i] = m;
  return mc;
}

VectorXd ResidualForms::agent_position(int k, const PolicyParams& theta) const {
  const VectorXd xk = stk_.A.middleRows(stk_.sx(k), stk_.nx) * x0_ +
                      stk_.B.middleRows(stk_.sx(k), stk_.nx) * theta.h;
  return agent_.C * xk + agent_.c[k];
}

VectorXd ResidualForms::obstacle_position(int k, int i, int m) const {
  const auto& md = obstacles_[i].modes[m];
  return md.C * obar_[i][m].segment(stk_.so(i, k), stk_.no[i]) + md.c;
}

VectorXd ResidualForms::affine_part(int k, int i, int m, const PolicyParams& theta) const {
  const VectorXd rel = agent_position(k, theta) - obstacle_position(k, i, m);
  return agent_.shape.G() * (agent_.R[k].transpose() * rel) + agent_.shape.g();
}

MatrixXd ResidualForms::noise_map(int k, int i, int m, const PolicyParams& theta) const {
  const int nw = stk_.nw();
  const MatrixXd CB = agent_.C * stk_.B.middleRows(stk_.sx(k), stk_.nx);
  MatrixXd D(agent_.pos_dim(), noise_dim());
  D.leftCols(nw) = CB * theta.M + agent_.C * stk_.E.middleRows(stk_.sx(k), stk_.nx);
  D.rightCols(stk_.nn()) = CB * theta.K * dev_[i][m];
  const auto& md = obstacles_[i].modes[m];
  const int n = stk_.no[i];
  D.block(0, nw + stk_.n_offset(i), D.rows(), stk_.N * n) -= md.C * stk_.obs[i][m].F.middleRows(stk_.so(i, k), n);
  return D;
}

double ResidualForms::Y(int k, int i, int m, const PolicyParams& theta, const VectorXd& lam,
                        const VectorXd& nu) const {
  return -lam.dot(affine_part(k, i, m, theta)) - nu.dot(obstacles_[i].shape.g());
}

RowVectorXd ResidualForms::Z(int k, int i, int m, const PolicyParams& theta, const VectorXd& lam) const {
  const RowVectorXd lg = -(lam.transpose() * agent_.shape.G() * agent_.R[k].transpose());
  return lg * noise_map(k, i, m, theta);
}

RowVectorXd ResidualForms::input_weight(int k, const VectorXd& lam) const {
  return -(lam.transpose() * agent_.shape.G() * agent_.R[k].transpose() * agent_.C *
           stk_.B.middleRows(stk_.sx(k), stk_.nx));
}

double ResidualForms::Ybar(int k, int j, const PolicyParams& theta) const {
  const VectorXd x1 = stk_.A.middleRows(stk_.sx(k + 1), stk_.nx) * x0_ +
                      stk_.B.middleRows(stk_.sx(k + 1), stk_.nx) * theta.h;
  return rows_.f(j) - rows_.Fx.row(j).dot(x1) - rows_.Fu.row(j).dot(theta.h.segment(stk_.su(k), stk_.nu));
}

RowVectorXd ResidualForms::Zbar(int k, int j, const PolicyParams& theta) const {
  RowVectorXd rho = rows_.Fx.row(j) * stk_.B.middleRows(stk_.sx(k + 1), stk_.nx);
  rho.segment(stk_.su(k), stk_.nu) += rows_.Fu.row(j);
  RowVectorXd out(noise_dim());
  out.head(stk_.nw()) = -(rho * theta.M) - rows_.Fx.row(j) * stk_.E.middleRows(stk_.sx(k + 1), stk_.nx);
  out.tail(stk_.nn()) = -(rho * theta.K * dev_nominal_);
  return out;
}

void add_policy_terms(const RowVectorXd& beta, const MatrixXd& dev_map, const StackedSystem& stk,
                      const DecisionLayout& layout, LinearExpr& nominal, std::vector<LinearExpr>& noise) {
  const int nu = stk.nu, nx = stk.nx, nw = stk.nw(), nobs = stk.obs_state_total();
  for (int j = 0; j < stk.N; ++j)
    for (int r = 0; r < nu; ++r) {
      const double b = beta(j * nu + r);
      if (b == 0.0) continue;
      nominal.add(layout.h(j, r), b);
      if (j == 0) continue;
      for (int l = 0; l < j; ++l)
        for (int c = 0; c < nx; ++c) noise[l * nx + c].add(layout.M(j, l, r, c), b);
      for (int c = 0; c < nobs; ++c) {
        const auto drow = dev_map.row(j * nobs + c);
        for (int e = 0; e < drow.size(); ++e)
          if (drow(e) != 0.0) noise[nw + e].add(layout.K(j, r, c), b * drow(e));
      }
    }
}

AffineResidual state_input_residual(const ResidualForms& forms, const DecisionLayout& layout, int k, int j) {
  const auto& stk = forms.stacked();
  const auto& rows = forms.rows();
  AffineResidual res;
  res.kind = ResidualKind::StateInput;
  res.k = k;
  res.j = j;
  res.noise.assign(forms.noise_dim(), LinearExpr());
  RowVectorXd rho = rows.Fx.row(j) * stk.B.middleRows(stk.sx(k + 1), stk.nx);
  rho.segment(stk.su(k), stk.nu) += rows.Fu.row(j);
  res.nominal.constant = rows.f(j) - rows.Fx.row(j).dot(stk.A.middleRows(stk.sx(k + 1), stk.nx) * forms.x0());
  add_policy_terms(-rho, forms.deviation_map_nominal(), stk, layout, res.nominal, res.noise);
  const RowVectorXd ew = -(rows.Fx.row(j) * stk.E.middleRows(stk.sx(k + 1), stk.nx));
  for (int c = 0; c < stk.nw(); ++c) res.noise[c].constant += ew(c);
  return res;
}

std::vector<TightenedConstraint> tighten(const std::vector<AffineResidual>& residuals, const UncertaintySpec& spec,
                                         const GammaFactors& factors, const MatrixXd& weight, double d_min) {
  const bool robust = spec.kind == UncertaintyKind::D1;
  // Sparse columns of the weight: for each scaled coordinate v, the (w; n) rows it feeds.
  std::vector<std::vector<std::pair<int, double>>> cols(weight.cols());
  for (int v = 0; v < weight.cols(); ++v)
    for (int c = 0; c < weight.rows(); ++c)
      if (weight(c, v) != 0.0) cols[v].emplace_back(c, weight(c, v));

  std::vector<TightenedConstraint> out;
  out.reserve(residuals.size());
  for (const auto& r : residuals) {
    if (static_cast<int>(r.noise.size()) != weight.rows())
      throw ValidationError("tighten: residual noise row has " + std::to_string(r.noise.size()) +
                            " columns, weight has " + std::to_string(weight.rows()) + " rows");
    if (r.kind == ResidualKind::DualFeasibility) throw ValidationError("tighten: not a residual row");
    TightenedConstraint tc;
    tc.kind = r.kind;
    tc.k = r.k;
    tc.i = r.i;
    tc.m = r.m;
    tc.j = r.j;
    tc.nominal = r.nominal;
    tc.nominal.compress();
    tc.norm = robust ? NormKind::OneNorm : NormKind::TwoNorm;
    const bool collision = r.kind == ResidualKind::CollisionAvoid;
    tc.factor = collision ? factors.ca : factors.xu;
    tc.margin = collision ? d_min : 0.0;
    for (int v = 0; v < weight.cols(); ++v) {
      LinearExpr arg;
      for (const auto& [c, wv] : cols[v]) {
        const LinearExpr& src = r.noise[c];
        if (src.idx.empty() && src.constant == 0.0) continue;
        for (std::size_t t = 0; t < src.idx.size(); ++t) arg.add(src.idx[t], wv * src.val[t]);
        arg.constant += wv * src.constant;
      }
      arg.compress();
      if (arg.idx.empty() && arg.constant == 0.0) continue;
      tc.norm_arg.push_back(std::move(arg));
    }
    if (tc.norm_arg.empty() || tc.factor == 0.0) {
      tc.norm = NormKind::None;
      tc.norm_arg.clear();
    }
    out.push_back(std::move(tc));
  }
  return out;
}

double tightened_slack(const TightenedConstraint& tc, const VectorXd& x) {
  if (tc.kind == ResidualKind::DualFeasibility) throw ValidationError("tightened_slack: not a residual row");
  double norm = 0.0;
  if (tc.norm == NormKind::OneNorm)
    for (const auto& a : tc.norm_arg) norm += std::abs(a.eval(x));
  else if (tc.norm == NormKind::TwoNorm) {
    for (const auto& a : tc.norm_arg) norm += a.eval(x) * a.eval(x);
    norm = std::sqrt(norm);
  }
  return tc.nominal.eval(x) - tc.margin - tc.factor * norm;
}

std::vector<TightenedConstraint> dual_feasibility_records(const DecisionLayout& layout) {
  std::vector<TightenedConstraint> out;
  for (int k = 1; k <= layout.N(); ++k)
    for (int i = 0; i < layout.num_obstacles(); ++i)
      for (int m = 0; m < layout.num_modes(i); ++m) {
        TightenedConstraint tc;
        tc.kind = ResidualKind::DualFeasibility;
        tc.k = k;
        tc.i = i;
        tc.m = m;
        out.push_back(std::move(tc));
      }
  return out;
}

}  // namespace dualmpc

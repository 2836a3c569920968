#include "dualmpc/mpc_program.hpp"

#include <cmath>

#include "dualmpc/errors.hpp"
#include "dualmpc/program_builder.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void TrackingCost::validate(int nx, int nu) const {
  if (Q.rows() != nx || Q.cols() != nx) throw ValidationError("cost: Q must be nx x nx");
  if (R.rows() != nu || R.cols() != nu) throw ValidationError("cost: R must be nu x nu");
  if (x_ref.size() != nx || u_ref.size() != nu) throw ValidationError("cost: reference has wrong size");
  for (const MatrixXd* W : {&Q, &R}) {
    if ((*W - W->transpose()).cwiseAbs().maxCoeff() > 1e-10) throw ValidationError("cost: weight not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(*W);
    if (es.eigenvalues().minCoeff() < -1e-10) throw ValidationError("cost: weight not positive semidefinite");
  }
}

double tracking_cost(const ResidualForms& forms, const TrackingCost& cost, const PolicyParams& theta) {
  const auto& stk = forms.stacked();
  const VectorXd x = stk.A * forms.x0() + stk.B * theta.h;
  double J = 0.0;
  for (int k = 1; k <= stk.N; ++k) {
    const VectorXd e = x.segment(stk.sx(k), stk.nx) - cost.x_ref;
    J += e.dot(cost.Q * e);
  }
  for (int k = 0; k < stk.N; ++k) {
    const VectorXd e = theta.h.segment(stk.su(k), stk.nu) - cost.u_ref;
    J += e.dot(cost.R * e);
  }
  return J;
}

namespace {

MatrixXd sym_sqrt(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

int add_tracking_epigraph(ProgramBuilder& pb, const ResidualForms& forms, const DecisionLayout& layout,
                          const TrackingCost& cost) {
  const auto& stk = forms.stacked();
  cost.validate(stk.nx, stk.nu);
  const MatrixXd Qh = sym_sqrt(cost.Q), Rh = sym_sqrt(cost.R);
  const VectorXd free = stk.A * forms.x0();
  std::vector<LinearExpr> v;
  for (int k = 1; k <= stk.N; ++k) {
    const MatrixXd QB = Qh * stk.B.middleRows(stk.sx(k), stk.nx);
    const VectorXd q0 = Qh * (free.segment(stk.sx(k), stk.nx) - cost.x_ref);
    for (int r = 0; r < stk.nx; ++r) {
      LinearExpr e(q0(r));
      for (int j = 0; j < k; ++j)
        for (int c = 0; c < stk.nu; ++c) e.add(layout.h(j, c), QB(r, j * stk.nu + c));
      v.push_back(std::move(e));
    }
  }
  for (int k = 0; k < stk.N; ++k) {
    const VectorXd r0 = -(Rh * cost.u_ref);
    for (int r = 0; r < stk.nu; ++r) {
      LinearExpr e(r0(r));
      for (int c = 0; c < stk.nu; ++c) e.add(layout.h(k, c), Rh(r, c));
      v.push_back(std::move(e));
    }
  }
  const int t = pb.add_variables(1);
  pb.add_objective(t, 1.0);
  // t >= |v|, so t* = sqrt(cost); the plain cone keeps the iterates well scaled
  // where the rotated form t >= |v|^2 degenerates for large costs.
  std::vector<LinearExpr> rows;
  LinearExpr top;
  top.add(t, 1.0);
  rows.push_back(top);
  for (auto& e : v) rows.push_back(std::move(e));
  pb.add_soc(rows);
  return t;
}

AssembledProgram assemble(const ResidualForms& forms, const DecisionLayout& layout, const TrackingCost& cost,
                          std::vector<TightenedConstraint> constraints) {
  ProgramBuilder pb;
  pb.add_variables(layout.size());
  AssembledProgram ap;
  ap.layout = layout;
  ap.epigraph = add_tracking_epigraph(pb, forms, layout, cost);

  const auto& agent = forms.agent();
  for (const auto& tc : constraints) {
    if (tc.kind == ResidualKind::DualFeasibility) {
      const auto& ob = forms.obstacles().at(tc.i);
      const auto& mode = ob.modes.at(tc.m);
      const int l0 = layout.lam(tc.k, tc.i, tc.m), n0 = layout.nu(tc.k, tc.i, tc.m);
      std::vector<LinearExpr> lam(layout.lam_dim()), nu(layout.nu_dim(tc.i));
      for (int r = 0; r < layout.lam_dim(); ++r) lam[r].add(l0 + r, 1.0);
      for (int r = 0; r < layout.nu_dim(tc.i); ++r) nu[r].add(n0 + r, 1.0);
      pb.add_cone(lam, agent.shape.cone());
      pb.add_cone(nu, ob.shape.cone());
      const MatrixXd a = agent.R[tc.k] * agent.shape.G().transpose();
      const MatrixXd b = mode.R[tc.k] * ob.shape.G().transpose();
      std::vector<LinearExpr> capa{LinearExpr(1.0)}, capb{LinearExpr(1.0)};
      for (int r = 0; r < a.rows(); ++r) {
        LinearExpr ea, eb;
        for (int c = 0; c < a.cols(); ++c) ea.add(l0 + c, a(r, c));
        for (int c = 0; c < b.cols(); ++c) eb.add(n0 + c, b(r, c));
        capa.push_back(ea);
        capb.push_back(eb);
        pb.add_equality(ea + eb);
      }
      pb.add_soc(capa);
      pb.add_soc(capb);
      continue;
    }
    LinearExpr lhs = tc.nominal;
    lhs.constant -= tc.margin;
    switch (tc.norm) {
      case NormKind::None:
        pb.add_nonneg(lhs);
        break;
      case NormKind::TwoNorm: {
        std::vector<LinearExpr> rows{lhs};
        for (const auto& arg : tc.norm_arg) rows.push_back(tc.factor * arg);
        pb.add_soc(rows);
        break;
      }
      case NormKind::OneNorm: {
        for (const auto& arg : tc.norm_arg) {
          if (arg.is_constant()) {
            lhs.constant -= tc.factor * std::abs(arg.constant);
            continue;
          }
          const int s = pb.add_variables(1);
          LinearExpr up = -1.0 * arg, dn = arg;
          up.add(s, 1.0);
          dn.add(s, 1.0);
          pb.add_nonneg(up);
          pb.add_nonneg(dn);
          lhs.add(s, -tc.factor);
        }
        pb.add_nonneg(lhs);
        break;
      }
    }
  }
  ap.program = pb.build();
  ap.constraints = std::move(constraints);
  return ap;
}

MpcSolution unpack_solution(const AssembledProgram& ap, const ResidualForms& forms, const TrackingCost& cost,
                            SolveResult result) {
  MpcSolution sol;
  if (result.x.size() >= ap.layout.size()) {
    sol.theta = ap.layout.unpack_policy(result.x);
    for (int k = 1; k <= ap.layout.N(); ++k)
      for (int i = 0; i < ap.layout.num_obstacles(); ++i)
        for (int m = 0; m < ap.layout.num_modes(i); ++m) {
          sol.lam.push_back(result.x.segment(ap.layout.lam(k, i, m), ap.layout.lam_dim()));
          sol.nu.push_back(result.x.segment(ap.layout.nu(k, i, m), ap.layout.nu_dim(i)));
        }
    sol.cost = tracking_cost(forms, cost, sol.theta);
  }
  sol.result = std::move(result);
  return sol;
}

}  // namespace dualmpc

#include "dualmpc/socp.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int ConeDims::total() const {
  int t = nonneg;
  for (int q : soc) t += q;
  return t;
}

int ConeDims::degree() const { return nonneg + static_cast<int>(soc.size()); }

void ConeProgram::validate() const {
  const int n = num_vars();
  if (A.cols() != n && !(A.rows() == 0 && A.cols() == 0))
    throw ValidationError("ConeProgram: A has " + std::to_string(A.cols()) + " columns, expected " +
                          std::to_string(n));
  if (A.rows() != b.size()) throw ValidationError("ConeProgram: A rows != b size");
  if (G.cols() != n && !(G.rows() == 0 && G.cols() == 0))
    throw ValidationError("ConeProgram: G column count mismatch");
  if (G.rows() != h.size()) throw ValidationError("ConeProgram: G rows != h size");
  if (cones.total() != h.size())
    throw ValidationError("ConeProgram: cone dimensions sum to " + std::to_string(cones.total()) +
                          " but h has " + std::to_string(h.size()) + " rows");
  if (cones.nonneg < 0) throw ValidationError("ConeProgram: negative orthant dimension");
  for (int q : cones.soc)
    if (q < 1) throw ValidationError("ConeProgram: second-order cone of dimension < 1");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterLimit: return "IterLimit";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Layout {
  int nonneg = 0;
  std::vector<int> soc_dim;
  std::vector<int> soc_start;
  int total = 0;
  int degree = 0;

  explicit Layout(const ConeDims& dims) : nonneg(dims.nonneg), soc_dim(dims.soc) {
    int off = nonneg;
    for (int q : soc_dim) {
      soc_start.push_back(off);
      off += q;
    }
    total = off;
    degree = dims.degree();
  }
};

VectorXd cone_identity(const Layout& L) {
  VectorXd e = VectorXd::Zero(L.total);
  e.head(L.nonneg).setOnes();
  for (int start : L.soc_start) e(start) = 1.0;
  return e;
}

VectorXd jordan_product(const Layout& L, const VectorXd& u, const VectorXd& v) {
  VectorXd out(L.total);
  out.head(L.nonneg) = u.head(L.nonneg).cwiseProduct(v.head(L.nonneg));
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int s = L.soc_start[k], q = L.soc_dim[k];
    out(s) = u.segment(s, q).dot(v.segment(s, q));
    if (q > 1) out.segment(s + 1, q - 1) = u(s) * v.segment(s + 1, q - 1) + v(s) * u.segment(s + 1, q - 1);
  }
  return out;
}

// Solves lambda o x = v for x.
VectorXd jordan_divide(const Layout& L, const VectorXd& lambda, const VectorXd& v) {
  VectorXd out(L.total);
  out.head(L.nonneg) = v.head(L.nonneg).cwiseQuotient(lambda.head(L.nonneg));
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int s = L.soc_start[k], q = L.soc_dim[k];
    const double l0 = lambda(s);
    if (q == 1) {
      out(s) = v(s) / l0;
      continue;
    }
    const auto l1 = lambda.segment(s + 1, q - 1);
    const auto v1 = v.segment(s + 1, q - 1);
    const double l1n = l1.norm();
    const double det = (l0 - l1n) * (l0 + l1n);
    const double x0 = (l0 * v(s) - l1.dot(v1)) / det;
    out(s) = x0;
    out.segment(s + 1, q - 1) = (v1 - x0 * l1) / l0;
  }
  return out;
}

// Largest alpha >= 0 such that x + alpha*d stays in K (x interior).
double max_step(const Layout& L, const VectorXd& x, const VectorXd& d) {
  double alpha = kInf;
  for (int i = 0; i < L.nonneg; ++i)
    if (d(i) < 0.0) alpha = std::min(alpha, -x(i) / d(i));
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int s = L.soc_start[k], q = L.soc_dim[k];
    if (q == 1) {
      if (d(s) < 0.0) alpha = std::min(alpha, -x(s) / d(s));
      continue;
    }
    const auto x1 = x.segment(s + 1, q - 1);
    const auto d1 = d.segment(s + 1, q - 1);
    const double a = d(s) * d(s) - d1.squaredNorm();
    const double bq = x(s) * d(s) - x1.dot(d1);
    const double x1n = x1.norm();
    const double c = std::max(0.0, (x(s) - x1n) * (x(s) + x1n));
    const double disc = bq * bq - a * c;
    if (disc >= 0.0) {
      const double denom = -bq + std::sqrt(disc);
      if (denom > 0.0) alpha = std::min(alpha, c / denom);
    }
    if (d(s) < 0.0) alpha = std::min(alpha, -x(s) / d(s));
  }
  return alpha;
}

// Smallest alpha with x + alpha*e in K (negative when x is interior).
double boundary_shift(const Layout& L, const VectorXd& x) {
  double alpha = -kInf;
  for (int i = 0; i < L.nonneg; ++i) alpha = std::max(alpha, -x(i));
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int s = L.soc_start[k], q = L.soc_dim[k];
    const double r = q > 1 ? x.segment(s + 1, q - 1).norm() : 0.0;
    alpha = std::max(alpha, r - x(s));
  }
  return alpha;
}

// Nesterov-Todd scaling point: W z = W^{-1} s = lambda.
struct NtScaling {
  VectorXd lin;  // orthant W = diag(lin)
  // SOC block k: W = eta * H(wb), H = [w0 w1'; w1 I + w1 w1'/(1 + w0)], wb' J wb = 1.
  std::vector<double> eta;
  std::vector<VectorXd> wb;
  VectorXd lambda;

  static NtScaling identity(const Layout& L) {
    NtScaling sc;
    sc.lin = VectorXd::Ones(L.nonneg);
    for (int q : L.soc_dim) {
      sc.eta.push_back(1.0);
      sc.wb.push_back(VectorXd::Unit(q, 0));
    }
    sc.lambda = cone_identity(L);
    return sc;
  }

  bool compute(const Layout& L, const VectorXd& s, const VectorXd& z) {
    lin.resize(L.nonneg);
    lambda.resize(L.total);
    for (int i = 0; i < L.nonneg; ++i) {
      if (!(s(i) > 0.0 && z(i) > 0.0)) return false;
      lin(i) = std::sqrt(s(i) / z(i));
      lambda(i) = std::sqrt(s(i) * z(i));
    }
    eta.resize(L.soc_dim.size());
    wb.resize(L.soc_dim.size());
    for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
      const int st = L.soc_start[k], q = L.soc_dim[k];
      const VectorXd sk = s.segment(st, q), zk = z.segment(st, q);
      if (q == 1) {
        if (!(sk(0) > 0.0 && zk(0) > 0.0)) return false;
        eta[k] = std::sqrt(sk(0) / zk(0));
        wb[k] = VectorXd::Ones(1);
        lambda(st) = std::sqrt(sk(0) * zk(0));
        continue;
      }
      const double sn = sk.tail(q - 1).norm(), zn = zk.tail(q - 1).norm();
      const double sres = (sk(0) - sn) * (sk(0) + sn);
      const double zres = (zk(0) - zn) * (zk(0) + zn);
      if (!(sres > 0.0 && zres > 0.0 && sk(0) > 0.0 && zk(0) > 0.0)) return false;
      const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      const VectorXd sb = sk / snorm, zb = zk / znorm;
      const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
      VectorXd w(q);
      w(0) = (sb(0) + zb(0)) / (2.0 * gamma);
      w.tail(q - 1) = (sb.tail(q - 1) - zb.tail(q - 1)) / (2.0 * gamma);
      eta[k] = std::sqrt(snorm / znorm);
      wb[k] = std::move(w);
      lambda.segment(st, q) = apply_block(k, zk, false);
    }
    return lambda.allFinite();
  }

  // W v (or W^-1 v) on block k; the inverse flips the sign of the off-diagonal part.
  VectorXd apply_block(std::size_t k, const VectorXd& v, bool inverse) const {
    const VectorXd& w = wb[k];
    const int q = static_cast<int>(w.size());
    if (q == 1) return inverse ? VectorXd(v / eta[k]) : VectorXd(v * eta[k]);
    const double sign = inverse ? -1.0 : 1.0;
    const auto w1 = w.tail(q - 1);
    const auto v1 = v.tail(q - 1);
    const double w1v1 = w1.dot(v1);
    VectorXd out(q);
    out(0) = w(0) * v(0) + sign * w1v1;
    out.tail(q - 1) = v1 + (sign * v(0) + w1v1 / (1.0 + w(0))) * w1;
    return inverse ? VectorXd(out / eta[k]) : VectorXd(out * eta[k]);
  }

  VectorXd apply_W(const Layout& L, const VectorXd& v) const {
    VectorXd out(L.total);
    out.head(L.nonneg) = lin.cwiseProduct(v.head(L.nonneg));
    for (std::size_t k = 0; k < wb.size(); ++k)
      out.segment(L.soc_start[k], L.soc_dim[k]) = apply_block(k, v.segment(L.soc_start[k], L.soc_dim[k]), false);
    return out;
  }

  VectorXd apply_Winv(const Layout& L, const VectorXd& v) const {
    VectorXd out(L.total);
    out.head(L.nonneg) = v.head(L.nonneg).cwiseQuotient(lin);
    for (std::size_t k = 0; k < wb.size(); ++k)
      out.segment(L.soc_start[k], L.soc_dim[k]) = apply_block(k, v.segment(L.soc_start[k], L.soc_dim[k]), true);
    return out;
  }
};

// Symmetric KKT system
//   [ reg*I   A'      G'         ]
//   [ A      -reg*I   0          ]
//   [ G       0      -W^2 - reg*I ]
// factored by sparse LDL', with iterative refinement against the unregularized matrix.
// Each SOC block is expanded with two auxiliary unknowns so that its dense W^2 never
// enters the matrix: W^2 = eta^2 (D + a a' - b b') with D = diag(d1, I), and the
// auxiliaries carry the columns eta^2 a (pivot eta^2) and eta^2 b (pivot -eta^2).
class KktSystem {
 public:
  KktSystem(const SparseMatrix& A, const SparseMatrix& G, const Layout& L, double reg, int refine)
      : A_(A), G_(G), L_(L), n_(static_cast<int>(A.cols() > 0 ? A.cols() : G.cols())),
        p_(static_cast<int>(A.rows())), m_(static_cast<int>(G.rows())), reg_(reg), refine_(refine) {
    for (std::size_t k = 0; k < L.soc_dim.size(); ++k)
      if (L.soc_dim[k] > 1) expanded_.push_back(static_cast<int>(k));
    const int dim = n_ + p_ + m_ + 2 * static_cast<int>(expanded_.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nonZeros() + G.nonZeros() + dim + 2 * m_);
    for (int j = 0; j < A.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(A, j); it; ++it) trip.emplace_back(n_ + it.row(), j, it.value());
    for (int j = 0; j < G.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(G, j); it; ++it)
        trip.emplace_back(n_ + p_ + it.row(), j, it.value());
    for (int i = 0; i < dim; ++i) trip.emplace_back(i, i, 0.0);
    for (std::size_t e = 0; e < expanded_.size(); ++e) {
      const int k = expanded_[e], base = n_ + p_ + L.soc_start[k], q = L.soc_dim[k];
      const int ia = aux(e), ib = ia + 1;
      for (int r = 0; r < q; ++r) trip.emplace_back(ia, base + r, 0.0);
      for (int r = 1; r < q; ++r) trip.emplace_back(ib, base + r, 0.0);
    }
    K_.resize(dim, dim);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();

    diag_slot_.resize(dim);
    for (int i = 0; i < dim; ++i) diag_slot_[i] = slot(i, i);
    for (std::size_t e = 0; e < expanded_.size(); ++e) {
      const int k = expanded_[e], base = n_ + p_ + L.soc_start[k], q = L.soc_dim[k];
      std::vector<int> slots;
      slots.reserve(2 * q - 1);
      for (int r = 0; r < q; ++r) slots.push_back(slot(aux(e), base + r));
      for (int r = 1; r < q; ++r) slots.push_back(slot(aux(e) + 1, base + r));
      block_slots_.push_back(std::move(slots));
    }
    ldlt_.analyzePattern(K_);
  }

  // Near the optimum the scaling can cancel a pivot exactly; the regularization is then
  // raised and refinement against the unregularized matrix recovers the accuracy.
  bool factor(const NtScaling& sc) {
    for (double reg : {reg_, reg_ * 1e3, reg_ * 1e6}) {
      fill(sc, reg);
      ldlt_.factorize(K_);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Solves K0 [dx; dy; dz] = [rx; ry; rz].
  bool solve(const VectorXd& rx, const VectorXd& ry, const VectorXd& rz, VectorXd& dx, VectorXd& dy,
             VectorXd& dz) const {
    const int dim = static_cast<int>(K_.rows());
    VectorXd rhs = VectorXd::Zero(dim);
    rhs.head(n_) = rx;
    rhs.segment(n_, p_) = ry;
    rhs.segment(n_ + p_, m_) = rz;
    VectorXd sol = ldlt_.solve(rhs);
    if (!sol.allFinite()) return false;
    const double rhs_norm = rhs.lpNorm<Eigen::Infinity>();
    VectorXd res = rhs - apply_unregularized(sol);
    double res_norm = res.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < refine_; ++it) {
      if (res_norm <= 1e-14 * (1.0 + rhs_norm)) break;
      const VectorXd corr = ldlt_.solve(res);
      if (!corr.allFinite()) break;
      const VectorXd trial = sol + corr;
      VectorXd trial_res = rhs - apply_unregularized(trial);
      const double trial_norm = trial_res.lpNorm<Eigen::Infinity>();
      if (!(trial_norm < res_norm)) break;
      const bool slow = trial_norm > 0.5 * res_norm;
      sol = trial;
      res = std::move(trial_res);
      res_norm = trial_norm;
      if (slow) break;
    }
    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz = sol.segment(n_ + p_, m_);
    return sol.allFinite();
  }

 private:
  int aux(std::size_t e) const { return n_ + p_ + m_ + 2 * static_cast<int>(e); }

  void fill(const NtScaling& sc, double reg) {
    cur_reg_ = reg;
    double* val = K_.valuePtr();
    for (int i = 0; i < n_; ++i) val[diag_slot_[i]] = reg;
    for (int i = 0; i < p_; ++i) val[diag_slot_[n_ + i]] = -reg;
    for (int i = 0; i < L_.nonneg; ++i) val[diag_slot_[n_ + p_ + i]] = -sc.lin(i) * sc.lin(i) - reg;
    std::size_t e = 0;
    for (std::size_t k = 0; k < L_.soc_dim.size(); ++k) {
      const int base = n_ + p_ + L_.soc_start[k], q = L_.soc_dim[k];
      const double eta2 = sc.eta[k] * sc.eta[k];
      if (q == 1) {
        val[diag_slot_[base]] = -eta2 - reg;
        continue;
      }
      // 2 wb wb' - J = D + a a' - b b' with D = diag(d1, 1, ..., 1), a = (u0, alpha w1),
      // b = (0, beta w1). d1 and b stay small as w0 grows, so nothing cancels.
      const VectorXd& w = sc.wb[k];
      const double a0 = w(0), c0 = 2.0 * a0 * a0 - 1.0;
      const double d1 = 0.5 / c0;
      const double u0 = std::sqrt(c0 - d1);
      const double alpha = 2.0 * a0 / u0;
      const double beta = std::sqrt(2.0 + 2.0 * d1) / u0;
      val[diag_slot_[base]] = -eta2 * d1 - reg;
      for (int i = 1; i < q; ++i) val[diag_slot_[base + i]] = -eta2 - reg;
      const int ia = aux(e);
      val[diag_slot_[ia]] = eta2;
      val[diag_slot_[ia + 1]] = -eta2;
      const std::vector<int>& sl = block_slots_[e];
      val[sl[0]] = eta2 * u0;
      for (int i = 1; i < q; ++i) val[sl[i]] = eta2 * alpha * w(i);
      for (int i = 1; i < q; ++i) val[sl[q - 1 + i]] = eta2 * beta * w(i);
      ++e;
    }
  }

  int slot(int row, int col) const {
    const int* outer = K_.outerIndexPtr();
    const int* inner = K_.innerIndexPtr();
    const int* begin = inner + outer[col];
    const int* end = inner + outer[col + 1];
    const int* it = std::lower_bound(begin, end, row);
    return static_cast<int>(it - inner);
  }

  VectorXd apply_unregularized(const VectorXd& v) const {
    VectorXd out = K_.selfadjointView<Eigen::Lower>() * v;
    out.head(n_) -= cur_reg_ * v.head(n_);
    out.segment(n_, p_ + m_) += cur_reg_ * v.segment(n_, p_ + m_);
    return out;
  }

  const SparseMatrix& A_;
  const SparseMatrix& G_;
  const Layout& L_;
  int n_, p_, m_;
  double reg_;
  double cur_reg_ = 0.0;
  int refine_;
  std::vector<int> expanded_;
  SparseMatrix K_;
  std::vector<int> diag_slot_;
  std::vector<std::vector<int>> block_slots_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

// Ruiz equilibration of [A; G]; SOC blocks get one row factor each so the cone is preserved.
struct Equilibration {
  VectorXd D;   // column scaling
  VectorXd EA;  // equality row scaling
  VectorXd EG;  // cone row scaling
};

Equilibration equilibrate(SparseMatrix& A, SparseMatrix& G, const Layout& L, int passes) {
  const int n = static_cast<int>(std::max(A.cols(), G.cols()));
  Equilibration eq{VectorXd::Ones(n), VectorXd::Ones(A.rows()), VectorXd::Ones(G.rows())};
  auto inv_sqrt = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
  for (int pass = 0; pass < passes; ++pass) {
    VectorXd colmax = VectorXd::Zero(n), rowA = VectorXd::Zero(A.rows()), rowG = VectorXd::Zero(G.rows());
    for (int j = 0; j < A.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
        const double a = std::abs(it.value());
        colmax(j) = std::max(colmax(j), a);
        rowA(it.row()) = std::max(rowA(it.row()), a);
      }
    for (int j = 0; j < G.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(G, j); it; ++it) {
        const double a = std::abs(it.value());
        colmax(j) = std::max(colmax(j), a);
        rowG(it.row()) = std::max(rowG(it.row()), a);
      }
    for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
      const double mx = rowG.segment(L.soc_start[k], L.soc_dim[k]).maxCoeff();
      rowG.segment(L.soc_start[k], L.soc_dim[k]).setConstant(mx);
    }
    VectorXd dc(n), ra(A.rows()), rg(G.rows());
    for (int j = 0; j < n; ++j) dc(j) = inv_sqrt(colmax(j));
    for (int i = 0; i < A.rows(); ++i) ra(i) = inv_sqrt(rowA(i));
    for (int i = 0; i < G.rows(); ++i) rg(i) = inv_sqrt(rowG(i));
    if (A.rows() > 0) A = ra.asDiagonal() * A * dc.asDiagonal();
    if (G.rows() > 0) G = rg.asDiagonal() * G * dc.asDiagonal();
    eq.D.array() *= dc.array();
    eq.EA.array() *= ra.array();
    eq.EG.array() *= rg.array();
  }
  return eq;
}

struct Iterate {
  VectorXd x, y, z, s;
  double tau = 1.0, kappa = 1.0;
};

}  // namespace

bool in_cone(const ConeDims& dims, const VectorXd& v, double tol) {
  const Layout L(dims);
  for (int i = 0; i < L.nonneg; ++i)
    if (v(i) < -tol) return false;
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int s = L.soc_start[k], q = L.soc_dim[k];
    const double r = q > 1 ? v.segment(s + 1, q - 1).norm() : 0.0;
    if (r > v(s) + tol) return false;
  }
  return true;
}

KktResiduals kkt_residuals(const ConeProgram& prog, const VectorXd& x, const VectorXd& y, const VectorXd& z,
                           const VectorXd& s) {
  KktResiduals r;
  double pres = 0.0;
  if (prog.num_eq() > 0) pres = (prog.A * x - prog.b).norm() / (1.0 + prog.b.norm());
  if (prog.num_cone_rows() > 0)
    pres = std::max(pres, (prog.G * x + s - prog.h).norm() / (1.0 + prog.h.norm()));
  VectorXd dres = prog.c;
  if (prog.num_eq() > 0) dres += prog.A.transpose() * y;
  if (prog.num_cone_rows() > 0) dres += prog.G.transpose() * z;
  r.primal = pres;
  r.dual = dres.norm() / (1.0 + prog.c.norm());
  const double pobj = prog.c.dot(x);
  const double dobj = -(prog.num_eq() > 0 ? prog.b.dot(y) : 0.0) - prog.h.dot(z);
  r.gap = std::max(std::abs(s.dot(z)), std::abs(pobj - dobj)) / (1.0 + std::abs(pobj));
  return r;
}

SolveResult solve(const ConeProgram& prog, const SolverOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  prog.validate();
  const int n = prog.num_vars(), p = prog.num_eq(), m = prog.num_cone_rows();
  const Layout L(prog.cones);

  SparseMatrix A = prog.A.rows() == 0 ? SparseMatrix(0, n) : prog.A;
  SparseMatrix G = prog.G.rows() == 0 ? SparseMatrix(0, n) : prog.G;
  Equilibration eq{VectorXd::Ones(n), VectorXd::Ones(p), VectorXd::Ones(m)};
  if (opt.equilibrate) eq = equilibrate(A, G, L, opt.ruiz_passes);
  const VectorXd c = eq.D.cwiseProduct(prog.c);
  const VectorXd b = eq.EA.cwiseProduct(prog.b);
  const VectorXd h = eq.EG.cwiseProduct(prog.h);

  SolveResult res;
  auto finish = [&](SolveStatus st, const std::string& msg) {
    res.status = st;
    res.message = msg;
    res.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };

  KktSystem kkt(A, G, L, opt.static_reg, opt.refine_steps);
  const VectorXd e = cone_identity(L);

  Iterate it;
  {
    NtScaling ident = NtScaling::identity(L);
    if (!kkt.factor(ident)) return finish(SolveStatus::NumericalFailure, "initial factorization failed");
    VectorXd dx, dy, dz;
    kkt.solve(VectorXd::Zero(n), b, h, dx, dy, dz);
    it.x = dx;
    it.s = -dz;
    kkt.solve(-c, VectorXd::Zero(p), VectorXd::Zero(m), dx, dy, dz);
    it.y = dy;
    it.z = dz;
    const double ap = boundary_shift(L, it.s);
    if (ap >= -1e-8) it.s += (1.0 + std::max(ap, 0.0)) * e;
    const double ad = boundary_shift(L, it.z);
    if (ad >= -1e-8) it.z += (1.0 + std::max(ad, 0.0)) * e;
  }

  auto unscaled = [&](const Iterate& cur, double div, VectorXd& x, VectorXd& y, VectorXd& z, VectorXd& s) {
    x = eq.D.cwiseProduct(cur.x) / div;
    y = eq.EA.cwiseProduct(cur.y) / div;
    z = eq.EG.cwiseProduct(cur.z) / div;
    s = cur.s.cwiseQuotient(eq.EG) / div;
  };

  NtScaling sc;
  const int deg = L.degree;
  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    res.iterations = iter;
    VectorXd xo, yo, zo, so;
    unscaled(it, it.tau, xo, yo, zo, so);
    const KktResiduals kr = kkt_residuals(prog, xo, yo, zo, so);
    const double pobj = prog.c.dot(xo);
    res.x = xo;
    res.y = yo;
    res.z = zo;
    res.s = so;
    res.objective = pobj;
    res.primal_residual = kr.primal;
    res.dual_residual = kr.dual;
    res.gap = kr.gap;
    if (opt.verbose)
      std::cerr << std::setw(3) << iter << "  pobj " << std::setw(14) << pobj << "  pres " << kr.primal
                << "  dres " << kr.dual << "  gap " << kr.gap << "  tau " << it.tau << "  kappa " << it.kappa
                << "\n";
    if (!std::isfinite(pobj)) return finish(SolveStatus::NumericalFailure, "non-finite iterate");
    if (kr.primal <= opt.tol && kr.dual <= opt.tol && kr.gap <= opt.tol)
      return finish(SolveStatus::Optimal, "");

    // Certificates from the raw (tau-free) iterate.
    {
      VectorXd xr, yr, zr, sr;
      unscaled(it, 1.0, xr, yr, zr, sr);
      const double byhz = (p > 0 ? prog.b.dot(yr) : 0.0) + prog.h.dot(zr);
      if (byhz < 0.0) {
        VectorXd r = VectorXd::Zero(n);
        if (p > 0) r += prog.A.transpose() * yr;
        if (m > 0) r += prog.G.transpose() * zr;
        const double ratio = r.norm() / -byhz;
        if (ratio <= opt.tol) {
          res.cert_y = yr / -byhz;
          res.cert_z = zr / -byhz;
          res.cert_residual = ratio;
          return finish(SolveStatus::Infeasible, "primal infeasible");
        }
      }
      const double cx = prog.c.dot(xr);
      if (cx < 0.0) {
        double r = 0.0;
        if (p > 0) r = std::max(r, (prog.A * xr).norm());
        if (m > 0) r = std::max(r, (prog.G * xr + sr).norm());
        if (r / -cx <= opt.tol) return finish(SolveStatus::Unbounded, "dual infeasible");
      }
    }
    if (iter == opt.max_iter) break;

    if (!sc.compute(L, it.s, it.z)) return finish(SolveStatus::NumericalFailure, "iterate left the cone");
    if (!kkt.factor(sc)) return finish(SolveStatus::NumericalFailure, "KKT factorization failed");

    // Residuals of the embedding.
    VectorXd rx = c * it.tau;
    if (p > 0) rx += A.transpose() * it.y;
    if (m > 0) rx += G.transpose() * it.z;
    VectorXd ry = b * it.tau;
    if (p > 0) ry -= A * it.x;
    VectorXd rz = h * it.tau - it.s;
    if (m > 0) rz -= G * it.x;
    const double rtau = -c.dot(it.x) - (p > 0 ? b.dot(it.y) : 0.0) - h.dot(it.z) - it.kappa;

    VectorXd x1, y1, z1;
    if (!kkt.solve(-c, b, h, x1, y1, z1)) return finish(SolveStatus::NumericalFailure, "KKT solve failed");
    const double denom1 = it.kappa / it.tau - c.dot(x1) - (p > 0 ? b.dot(y1) : 0.0) - h.dot(z1);

    const double mu = (it.s.dot(it.z) + it.tau * it.kappa) / (deg + 1);

    struct Direction {
      VectorXd dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](const VectorXd& rhs_c, double rhs_tau, double f, Direction& d) {
      const VectorXd q = jordan_divide(L, sc.lambda, rhs_c);
      VectorXd x2, y2, z2;
      const VectorXd rz2 = f * rz - sc.apply_W(L, q);
      if (!kkt.solve(-f * rx, f * ry, rz2, x2, y2, z2)) return false;
      const double num = -f * rtau + rhs_tau / it.tau + c.dot(x2) + (p > 0 ? b.dot(y2) : 0.0) + h.dot(z2);
      d.dtau = num / denom1;
      d.dx = x2 + d.dtau * x1;
      d.dy = y2 + d.dtau * y1;
      d.dz = z2 + d.dtau * z1;
      // From the primal row rather than W (q - W dz): near the boundary W^2 is huge and the
      // latter loses the primal residual.
      d.ds = f * rz + d.dtau * h;
      if (m > 0) d.ds -= G * d.dx;
      d.dkappa = (rhs_tau - it.kappa * d.dtau) / it.tau;
      return d.dx.allFinite() && d.dz.allFinite() && std::isfinite(d.dtau);
    };
    auto step_length = [&](const Direction& d) {
      double a = std::min(max_step(L, it.s, d.ds), max_step(L, it.z, d.dz));
      if (d.dtau < 0.0) a = std::min(a, -it.tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -it.kappa / d.dkappa);
      return a;
    };

    Direction aff;
    const VectorXd lam2 = jordan_product(L, sc.lambda, sc.lambda);
    if (!direction(-lam2, -it.tau * it.kappa, 1.0, aff))
      return finish(SolveStatus::NumericalFailure, "affine direction failed");
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    const VectorXd ds_scaled = sc.apply_Winv(L, aff.ds);
    const VectorXd dz_scaled = sc.apply_W(L, aff.dz);
    const VectorXd rhs_c = -lam2 - jordan_product(L, ds_scaled, dz_scaled) + sigma * mu * e;
    const double rhs_tau = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma * mu;
    Direction cmb;
    if (!direction(rhs_c, rhs_tau, 1.0 - sigma, cmb))
      return finish(SolveStatus::NumericalFailure, "combined direction failed");
    const double alpha = std::min(1.0, 0.99 * step_length(cmb));
    if (!(alpha > 1e-12)) return finish(SolveStatus::NumericalFailure, "step length collapsed");
    if (opt.verbose) std::cerr << "     alpha_aff " << alpha_aff << "  alpha " << alpha << "  sigma " << sigma << "  mu " << mu << "\n";

    it.x += alpha * cmb.dx;
    if (p > 0) it.y += alpha * cmb.dy;
    it.z += alpha * cmb.dz;
    it.s += alpha * cmb.ds;
    it.tau += alpha * cmb.dtau;
    it.kappa += alpha * cmb.dkappa;
  }
  return finish(SolveStatus::IterLimit, "iteration limit reached");
}

// --- interchange format -------------------------------------------------

namespace {

void write_sparse(std::ostream& os, const std::string& name, const SparseMatrix& M) {
  os << name << " " << M.rows() << " " << M.cols() << " " << M.nonZeros() << "\n";
  for (int j = 0; j < M.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) os << it.row() << " " << j << " " << it.value() << "\n";
}

void write_vec(std::ostream& os, const std::string& name, const VectorXd& v) {
  os << name << " " << v.size() << "\n";
  for (int i = 0; i < v.size(); ++i) os << v(i) << (i + 1 == v.size() ? "" : " ");
  os << "\n";
}

void expect(std::istream& is, const std::string& tag) {
  std::string word;
  if (!(is >> word) || word != tag) throw ValidationError("program dump: expected '" + tag + "', got '" + word + "'");
}

VectorXd read_vec(std::istream& is, const std::string& name) {
  expect(is, name);
  long n = 0;
  is >> n;
  VectorXd v(n);
  for (long i = 0; i < n; ++i) is >> v(i);
  if (!is) throw ValidationError("program dump: truncated vector " + name);
  return v;
}

SparseMatrix read_sparse(std::istream& is, const std::string& name) {
  expect(is, name);
  long rows = 0, cols = 0, nnz = 0;
  is >> rows >> cols >> nnz;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    long r = 0, c = 0;
    double v = 0.0;
    is >> r >> c >> v;
    trip.emplace_back(r, c, v);
  }
  if (!is) throw ValidationError("program dump: truncated matrix " + name);
  SparseMatrix M(rows, cols);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

}  // namespace

void write_program(std::ostream& os, const ConeProgram& prog) {
  prog.validate();
  const auto old_prec = os.precision(17);
  os << "CONEPROG 1\n";
  os << "dims " << prog.num_vars() << " " << prog.num_eq() << " " << prog.num_cone_rows() << "\n";
  os << "cones l " << prog.cones.nonneg << " q " << prog.cones.soc.size();
  for (int q : prog.cones.soc) os << " " << q;
  os << "\n";
  write_vec(os, "c", prog.c);
  write_sparse(os, "A", prog.A.rows() == 0 ? SparseMatrix(0, prog.num_vars()) : prog.A);
  write_vec(os, "b", prog.b);
  write_sparse(os, "G", prog.G.rows() == 0 ? SparseMatrix(0, prog.num_vars()) : prog.G);
  write_vec(os, "h", prog.h);
  os << "END\n";
  os.precision(old_prec);
}

ConeProgram read_program(std::istream& is) {
  expect(is, "CONEPROG");
  int version = 0;
  is >> version;
  if (version != 1) throw ValidationError("program dump: unsupported version");
  expect(is, "dims");
  long n = 0, p = 0, m = 0;
  is >> n >> p >> m;
  ConeProgram prog;
  expect(is, "cones");
  expect(is, "l");
  is >> prog.cones.nonneg;
  expect(is, "q");
  long nq = 0;
  is >> nq;
  prog.cones.soc.resize(nq);
  for (auto& q : prog.cones.soc) is >> q;
  prog.c = read_vec(is, "c");
  prog.A = read_sparse(is, "A");
  prog.b = read_vec(is, "b");
  prog.G = read_sparse(is, "G");
  prog.h = read_vec(is, "h");
  expect(is, "END");
  if (prog.num_vars() != n || prog.num_eq() != p || prog.num_cone_rows() != m)
    throw ValidationError("program dump: header dims disagree with body");
  prog.validate();
  return prog;
}

}  // namespace dualmpc

#include "dualmpc/dual_distance.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <variant>

#include "dualmpc/errors.hpp"
#include "dualmpc/program_builder.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double certificate_value(const VectorXd& lam, const VectorXd& nu, const ConeSet& A, const Pose& poseA,
                         const ConeSet& B, const Pose& poseB) {
  if (lam.size() != A.rows() || nu.size() != B.rows())
    throw ValidationError("certificate_value: multiplier sizes do not match the shapes");
  const VectorXd rel = A.G() * (poseA.R.transpose() * (poseA.p - poseB.p)) + A.g();
  return -lam.dot(rel) - nu.dot(B.g());
}

CertificateCheck check_certificate(const VectorXd& lam, const VectorXd& nu, const ConeSet& A, const Pose& poseA,
                                   const ConeSet& B, const Pose& poseB, double tol) {
  CertificateCheck c;
  c.lam_in_cone = dual_cone_membership(lam, A.cone(), tol);
  c.nu_in_cone = dual_cone_membership(nu, B.cone(), tol);
  const VectorXd a = poseA.R * (A.G().transpose() * lam);
  const VectorXd b = poseB.R * (B.G().transpose() * nu);
  c.cap_a = a.norm();
  c.cap_b = b.norm();
  c.alignment = (a + b).norm();
  return c;
}

namespace {

// Projection onto {y : G y <= g} by enumerating active sets of size <= n.
class PolytopePiece {
 public:
  PolytopePiece(MatrixXd G, VectorXd g) : G_(std::move(G)), g_(std::move(g)) {}

  VectorXd project(const VectorXd& a) const {
    const int n = static_cast<int>(a.size());
    const int l = static_cast<int>(G_.rows());
    const double scale = 1.0 + g_.cwiseAbs().maxCoeff() + a.cwiseAbs().maxCoeff();
    const double ftol = 1e-12 * scale;
    if (((G_ * a - g_).array() <= ftol).all()) return a;
    VectorXd best;
    double best_d = std::numeric_limits<double>::infinity();
    std::vector<int> subset;
    // Depth-first enumeration of increasing index subsets.
    std::function<void(int)> rec = [&](int start) {
      if (!subset.empty()) {
        const int k = static_cast<int>(subset.size());
        MatrixXd Gs(k, n);
        VectorXd gs(k);
        for (int i = 0; i < k; ++i) {
          Gs.row(i) = G_.row(subset[i]);
          gs(i) = g_(subset[i]);
        }
        Eigen::FullPivLU<MatrixXd> lu(Gs * Gs.transpose());
        if (lu.isInvertible()) {
          const VectorXd mu = lu.solve(Gs * a - gs);
          const VectorXd y = a - Gs.transpose() * mu;
          const double d = (y - a).norm();
          if (d < best_d && ((G_ * y - g_).array() <= ftol).all()) {
            best_d = d;
            best = y;
          }
        }
      }
      if (static_cast<int>(subset.size()) == n) return;
      for (int i = start; i < l; ++i) {
        subset.push_back(i);
        rec(i + 1);
        subset.pop_back();
      }
    };
    rec(0);
    if (best.size() == 0) throw OracleError("polytope projection found no feasible active set", 0.0);
    return best;
  }

 private:
  MatrixXd G_;
  VectorXd g_;
};

// Projection onto {y : ||g1 - G1 y|| <= g0} by root finding on the multiplier.
class EllipsoidPiece {
 public:
  EllipsoidPiece(const MatrixXd& G1, const VectorXd& g1, double g0) : G1_(G1), g1_(g1), g0_(g0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G1.transpose() * G1);
    V_ = es.eigenvectors();
    d_ = es.eigenvalues();
    if (d_.minCoeff() <= 1e-14 * std::max(1.0, d_.maxCoeff()))
      throw OracleError("second-order block is not of ellipsoid form (G1 rank deficient)", 0.0);
    G1tg1_ = G1.transpose() * g1;
  }

  VectorXd project(const VectorXd& a) const {
    if ((g1_ - G1_ * a).norm() <= g0_) return a;
    auto y_of = [&](double mu) {
      const VectorXd r = V_.transpose() * (a + mu * G1tg1_);
      return VectorXd(V_ * (r.array() / (1.0 + mu * d_.array())).matrix());
    };
    auto phi = [&](double mu) { return (g1_ - G1_ * y_of(mu)).norm() - g0_; };
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (phi(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 200) throw OracleError("ellipsoid projection multiplier diverged", 0.0);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (phi(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    return y_of(hi);
  }

 private:
  MatrixXd G1_;
  VectorXd g1_;
  double g0_;
  MatrixXd V_;
  VectorXd d_;
  VectorXd G1tg1_;
};

using Piece = std::variant<PolytopePiece, EllipsoidPiece>;

std::vector<Piece> split_pieces(const ConeSet& S) {
  std::vector<Piece> pieces;
  std::vector<int> lin_rows;
  int off = 0;
  for (const auto& b : S.cone().blocks()) {
    if (b.kind == ConeKind::NonnegativeOrthant) {
      for (int i = 0; i < b.dim; ++i) lin_rows.push_back(off + i);
    } else {
      if (S.G().row(off).cwiseAbs().maxCoeff() != 0.0)
        throw OracleError("second-order block with a non-constant first row is not supported", 0.0);
      pieces.emplace_back(EllipsoidPiece(S.G().block(off + 1, 0, b.dim - 1, S.dim()),
                                         S.g().segment(off + 1, b.dim - 1), S.g()(off)));
    }
    off += b.dim;
  }
  if (!lin_rows.empty()) {
    MatrixXd G(lin_rows.size(), S.dim());
    VectorXd g(lin_rows.size());
    for (std::size_t i = 0; i < lin_rows.size(); ++i) {
      G.row(i) = S.G().row(lin_rows[i]);
      g(i) = S.g()(lin_rows[i]);
    }
    pieces.insert(pieces.begin(), PolytopePiece(G, g));
  }
  return pieces;
}

VectorXd project_piece(const Piece& p, const VectorXd& a) {
  return std::visit([&](const auto& piece) { return piece.project(a); }, p);
}

VectorXd project_local(const std::vector<Piece>& pieces, const VectorXd& a) {
  if (pieces.size() == 1) return project_piece(pieces[0], a);
  // Dykstra's method over the pieces.
  std::vector<VectorXd> inc(pieces.size(), VectorXd::Zero(a.size()));
  VectorXd x = a;
  for (int it = 0; it < 100000; ++it) {
    const VectorXd prev = x;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const VectorXd y = project_piece(pieces[i], x + inc[i]);
      inc[i] = x + inc[i] - y;
      x = y;
    }
    if ((x - prev).norm() < 1e-14 * (1.0 + x.norm())) return x;
  }
  throw OracleError("Dykstra projection did not converge", 0.0);
}

class PosedProjector {
 public:
  PosedProjector(const ConeSet& S, const Pose& pose) : pieces_(split_pieces(S)), pose_(pose) {
    if (pose.dim() != S.dim()) throw ValidationError("projection: pose dimension differs from shape");
  }
  VectorXd operator()(const VectorXd& z) const { return pose_.to_world(project_local(pieces_, pose_.to_body(z))); }

 private:
  std::vector<Piece> pieces_;
  const Pose& pose_;
};

}  // namespace

VectorXd project_onto(const ConeSet& shape, const Pose& pose, const VectorXd& z) {
  if (z.size() != shape.dim()) throw ValidationError("project_onto: point dimension mismatch");
  return PosedProjector(shape, pose)(z);
}

double primal_distance_oracle(const ConeSet& A, const Pose& poseA, const ConeSet& B, const Pose& poseB,
                              const OracleOptions& opt) {
  if (A.dim() != B.dim()) throw ValidationError("primal_distance_oracle: shapes live in different dimensions");
  const PosedProjector projA(A, poseA), projB(B, poseB);
  VectorXd z1 = poseA.to_world(A.witness());
  VectorXd z2 = projB(z1);
  z1 = projA(z2);
  for (int it = 0; it < opt.max_iter; ++it) {
    const VectorXd n2 = projB(z1);
    const VectorXd n1 = projA(n2);
    const double change = std::max((n1 - z1).norm(), (n2 - z2).norm());
    z1 = n1;
    z2 = n2;
    if (change < opt.tol) {
      const double gap = (z1 - z2).norm();
      return gap <= 1e-8 ? 0.0 : gap;
    }
  }
  throw OracleError("alternating projections hit the iteration cap", (z1 - z2).norm());
}

namespace {

struct DualVars {
  int lam0, nu0;
};

// Builds variables, dual-cone memberships and the objective shared by both dual problems.
DualVars add_dual_common(ProgramBuilder& pb, const ConeSet& A, const Pose& poseA, const ConeSet& B,
                         const Pose& poseB) {
  DualVars v{pb.add_variables(A.rows()), pb.add_variables(B.rows())};
  const VectorXd rel = A.G() * (poseA.R.transpose() * (poseA.p - poseB.p)) + A.g();
  for (int i = 0; i < A.rows(); ++i) pb.add_objective(v.lam0 + i, rel(i));
  for (int i = 0; i < B.rows(); ++i) pb.add_objective(v.nu0 + i, B.g()(i));
  std::vector<LinearExpr> la(A.rows()), lb(B.rows());
  for (int i = 0; i < A.rows(); ++i) la[i].add(v.lam0 + i, 1.0);
  for (int i = 0; i < B.rows(); ++i) lb[i].add(v.nu0 + i, 1.0);
  pb.add_cone(la, A.cone());
  pb.add_cone(lb, B.cone());
  return v;
}

// Rows of R G' mult as linear expressions in the multiplier variables.
std::vector<LinearExpr> normal_rows(const ConeSet& S, const Pose& pose, int first) {
  const MatrixXd RGt = pose.R * S.G().transpose();
  std::vector<LinearExpr> rows(RGt.rows());
  for (int r = 0; r < RGt.rows(); ++r)
    for (int c = 0; c < RGt.cols(); ++c) rows[r].add(first + c, RGt(r, c));
  return rows;
}

SeparationCertificate finish(const SolveResult& res, const DualVars& v, const ConeSet& A, const Pose& poseA,
                             const ConeSet& B, const Pose& poseB) {
  if (!res.optimal()) throw SolverError("dual separation solve failed: " + res.message, to_string(res.status));
  SeparationCertificate cert;
  cert.lam = res.x.segment(v.lam0, A.rows());
  cert.nu = res.x.segment(v.nu0, B.rows());
  cert.value = certificate_value(cert.lam, cert.nu, A, poseA, B, poseB);
  return cert;
}

}  // namespace

SeparationCertificate solve_dual_separation(const ConeSet& A, const Pose& poseA, const ConeSet& B,
                                            const Pose& poseB, const SolverOptions& options) {
  if (A.dim() != B.dim() || poseA.dim() != A.dim() || poseB.dim() != B.dim())
    throw ValidationError("solve_dual_separation: dimension mismatch");
  ProgramBuilder pb;
  const DualVars v = add_dual_common(pb, A, poseA, B, poseB);
  const auto ra = normal_rows(A, poseA, v.lam0);
  const auto rb = normal_rows(B, poseB, v.nu0);
  for (const auto* rows : {&ra, &rb}) {
    std::vector<LinearExpr> cap{LinearExpr(1.0)};
    cap.insert(cap.end(), rows->begin(), rows->end());
    pb.add_soc(cap);
  }
  for (std::size_t r = 0; r < ra.size(); ++r) pb.add_equality(ra[r] + rb[r]);
  return finish(solve(pb.build(), options), v, A, poseA, B, poseB);
}

SeparationCertificate directed_certificate(const ConeSet& A, const Pose& poseA, const ConeSet& B,
                                           const Pose& poseB, const VectorXd& normal,
                                           const SolverOptions& options) {
  if (normal.size() != A.dim()) throw ValidationError("directed_certificate: normal dimension mismatch");
  ProgramBuilder pb;
  const DualVars v = add_dual_common(pb, A, poseA, B, poseB);
  auto ra = normal_rows(A, poseA, v.lam0);
  auto rb = normal_rows(B, poseB, v.nu0);
  for (std::size_t r = 0; r < ra.size(); ++r) {
    ra[r].constant = normal(r);
    rb[r].constant = -normal(r);
    pb.add_equality(ra[r]);
    pb.add_equality(rb[r]);
  }
  return finish(solve(pb.build(), options), v, A, poseA, B, poseB);
}

Hyperplane separating_hyperplane(const SeparationCertificate& cert, const ConeSet& A, const Pose& poseA,
                                 const ConeSet& B, const Pose& poseB) {
  const double value = certificate_value(cert.lam, cert.nu, A, poseA, B, poseB);
  if (!(value > 0.0)) throw NoSeparationError("certificate does not prove a positive distance");
  Hyperplane hp;
  hp.normal = -(poseA.R * (A.G().transpose() * cert.lam));
  hp.threshold = hp.normal.dot(poseB.p) + cert.nu.dot(B.g());
  return hp;
}

}  // namespace dualmpc

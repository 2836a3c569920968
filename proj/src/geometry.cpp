#include "dualmpc/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dualmpc/errors.hpp"
#include "dualmpc/program_builder.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ConeDescriptor::ConeDescriptor(std::vector<ConeBlock> blocks) : blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) {
    if (b.dim < 1) throw ValidationError("cone block dimension must be >= 1");
    if (b.kind == ConeKind::SecondOrder && b.dim < 2)
      throw ValidationError("second-order cone block needs dimension >= 2");
    dim_ += b.dim;
  }
}

ConeDescriptor ConeDescriptor::orthant(int dim) { return ConeDescriptor({{ConeKind::NonnegativeOrthant, dim}}); }

ConeDescriptor ConeDescriptor::second_order(int dim) { return ConeDescriptor({{ConeKind::SecondOrder, dim}}); }

double ConeDescriptor::interior_margin(const VectorXd& v) const {
  if (v.size() != dim_)
    throw ValidationError("cone vector has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(dim_));
  double margin = std::numeric_limits<double>::infinity();
  int off = 0;
  for (const auto& b : blocks_) {
    if (b.kind == ConeKind::NonnegativeOrthant)
      margin = std::min(margin, v.segment(off, b.dim).minCoeff());
    else
      margin = std::min(margin, v(off) - v.segment(off + 1, b.dim - 1).norm());
    off += b.dim;
  }
  return margin;
}

bool ConeDescriptor::contains(const VectorXd& v, double tol) const { return interior_margin(v) >= -tol; }

bool dual_cone_membership(const VectorXd& v, const ConeDescriptor& cone, double tol) {
  return cone.contains(v, tol);
}

ConeSet::ConeSet(MatrixXd G, VectorXd g, ConeDescriptor cone, VectorXd witness, Check check)
    : G_(std::move(G)), g_(std::move(g)), cone_(std::move(cone)), witness_(std::move(witness)) {
  if (G_.rows() != g_.size()) throw ValidationError("ConeSet: G rows and g size differ");
  if (cone_.dim() != G_.rows()) throw ValidationError("ConeSet: cone dimension differs from G rows");
  if (witness_.size() != G_.cols()) throw ValidationError("ConeSet: witness dimension differs from G columns");
  if (G_.cols() < 1) throw ValidationError("ConeSet: empty ambient dimension");
  const double margin = cone_.interior_margin(g_ - G_ * witness_);
  if (margin < 1e-6)
    throw ValidationError("ConeSet: interior witness has margin " + std::to_string(margin) + " < 1e-6");
  if (check == Check::Validate) {
    for (int i = 0; i < dim(); ++i) {
      for (double sign : {1.0, -1.0}) {
        VectorXd d = VectorXd::Zero(dim());
        d(i) = sign;
        try {
          support(d);
        } catch (const SolverError& e) {
          throw ValidationError("ConeSet: set is not bounded along coordinate " + std::to_string(i) + " (" +
                                e.what() + ")");
        }
      }
    }
  }
}

bool ConeSet::contains_local(const VectorXd& y, double tol) const {
  if (y.size() != dim()) throw ValidationError("ConeSet: point dimension mismatch");
  return cone_.contains(g_ - G_ * y, tol);
}

double ConeSet::support(const VectorXd& direction) const {
  if (direction.size() != dim()) throw ValidationError("ConeSet: direction dimension mismatch");
  ProgramBuilder pb;
  const int y0 = pb.add_variables(dim());
  for (int i = 0; i < dim(); ++i) pb.add_objective(y0 + i, -direction(i));
  std::vector<LinearExpr> slack(G_.rows());
  for (int r = 0; r < G_.rows(); ++r) {
    slack[r].constant = g_(r);
    for (int c = 0; c < dim(); ++c)
      if (G_(r, c) != 0.0) slack[r].add(y0 + c, -G_(r, c));
  }
  pb.add_cone(slack, cone_);
  const SolveResult res = solve(pb.build());
  if (!res.optimal())
    throw SolverError("support value not finite or solve failed", to_string(res.status));
  return -res.objective;
}

Pose::Pose(VectorXd position, MatrixXd rotation) : p(std::move(position)), R(std::move(rotation)) {
  const int n = static_cast<int>(p.size());
  if (R.rows() != n || R.cols() != n) throw ValidationError("Pose: rotation size differs from position size");
  if ((R.transpose() * R - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-9)
    throw ValidationError("Pose: rotation is not orthogonal");
  if (std::abs(R.determinant() - 1.0) > 1e-9) throw ValidationError("Pose: rotation determinant is not +1");
}

Pose Pose::identity(int n) { return Pose(VectorXd::Zero(n), MatrixXd::Identity(n, n)); }

Eigen::Matrix2d rotation2d(double angle) {
  Eigen::Matrix2d R;
  R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return R;
}

Pose Pose::planar(double x, double y, double heading) {
  return Pose(Eigen::Vector2d(x, y), rotation2d(heading));
}

ConeSet make_box(const VectorXd& half_widths) {
  const int n = static_cast<int>(half_widths.size());
  if (n < 1) throw ValidationError("make_box: empty half-width vector");
  if ((half_widths.array() <= 0.0).any()) throw ValidationError("make_box: half-widths must be positive");
  MatrixXd G(2 * n, n);
  G << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  VectorXd g(2 * n);
  g << half_widths, half_widths;
  return ConeSet(G, g, ConeDescriptor::orthant(2 * n), VectorXd::Zero(n), ConeSet::Check::Trusted);
}

ConeSet make_ellipsoid(const VectorXd& semi_axes) {
  const int n = static_cast<int>(semi_axes.size());
  if (n < 1) throw ValidationError("make_ellipsoid: empty axis vector");
  if ((semi_axes.array() <= 0.0).any()) throw ValidationError("make_ellipsoid: semi-axes must be positive");
  MatrixXd G = MatrixXd::Zero(n + 1, n);
  G.bottomRows(n) = semi_axes.cwiseInverse().asDiagonal();
  VectorXd g = VectorXd::Zero(n + 1);
  g(0) = 1.0;
  return ConeSet(G, g, ConeDescriptor::second_order(n + 1), VectorXd::Zero(n), ConeSet::Check::Trusted);
}

bool contains(const ConeSet& shape, const Pose& pose, const VectorXd& z, double tol) {
  if (pose.dim() != shape.dim() || z.size() != shape.dim())
    throw ValidationError("contains: dimension mismatch between shape, pose and point");
  return shape.contains_local(pose.to_body(z), tol);
}

}  // namespace dualmpc

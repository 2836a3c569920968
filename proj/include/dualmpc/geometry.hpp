#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dualmpc/socp.hpp"

namespace dualmpc {

constexpr double kMembershipTol = 1e-9;

enum class ConeKind { NonnegativeOrthant, SecondOrder };

struct ConeBlock {
  ConeKind kind;
  int dim;
};

/// Ordered product of orthant and second-order cone blocks.
class ConeDescriptor {
 public:
  ConeDescriptor() = default;
  explicit ConeDescriptor(std::vector<ConeBlock> blocks);

  static ConeDescriptor orthant(int dim);
  static ConeDescriptor second_order(int dim);

  const std::vector<ConeBlock>& blocks() const { return blocks_; }
  int dim() const { return dim_; }

  bool contains(const Eigen::VectorXd& v, double tol = kMembershipTol) const;
  /// Smallest block slack: min entry for orthant blocks, v0 - ||v1|| for SOC blocks.
  double interior_margin(const Eigen::VectorXd& v) const;

 private:
  std::vector<ConeBlock> blocks_;
  int dim_ = 0;
};

/// Both cone kinds are self-dual, so this is membership in the cone itself.
bool dual_cone_membership(const Eigen::VectorXd& v, const ConeDescriptor& cone,
                          double tol = kMembershipTol);

/// Compact convex set {y : G y <=_K g} in body coordinates.
class ConeSet {
 public:
  enum class Check { Validate, Trusted };

  /// Empty placeholder (dimension 0); assign a real shape before use.
  ConeSet() = default;
  ConeSet(Eigen::MatrixXd G, Eigen::VectorXd g, ConeDescriptor cone, Eigen::VectorXd witness,
          Check check = Check::Validate);

  const Eigen::MatrixXd& G() const { return G_; }
  const Eigen::VectorXd& g() const { return g_; }
  const ConeDescriptor& cone() const { return cone_; }
  const Eigen::VectorXd& witness() const { return witness_; }
  int dim() const { return static_cast<int>(G_.cols()); }
  int rows() const { return static_cast<int>(G_.rows()); }

  bool contains_local(const Eigen::VectorXd& y, double tol = kMembershipTol) const;
  /// max d'y over the set, computed with the conic solver. Throws SolverError
  /// if the support value is unbounded or the solve fails.
  double support(const Eigen::VectorXd& direction) const;

 private:
  Eigen::MatrixXd G_;
  Eigen::VectorXd g_;
  ConeDescriptor cone_;
  Eigen::VectorXd witness_;
};

struct Pose {
  Eigen::VectorXd p;
  Eigen::MatrixXd R;

  Pose(Eigen::VectorXd position, Eigen::MatrixXd rotation);
  static Pose identity(int n);
  static Pose planar(double x, double y, double heading);
  int dim() const { return static_cast<int>(p.size()); }
  Eigen::VectorXd to_world(const Eigen::VectorXd& y) const { return R * y + p; }
  Eigen::VectorXd to_body(const Eigen::VectorXd& z) const { return R.transpose() * (z - p); }
};

Eigen::Matrix2d rotation2d(double angle);

ConeSet make_box(const Eigen::VectorXd& half_widths);
ConeSet make_ellipsoid(const Eigen::VectorXd& semi_axes);

bool contains(const ConeSet& shape, const Pose& pose, const Eigen::VectorXd& z,
              double tol = kMembershipTol);

}  // namespace dualmpc

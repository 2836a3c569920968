#pragma once

#include <Eigen/Dense>

#include "dualmpc/geometry.hpp"
#include "dualmpc/socp.hpp"

namespace dualmpc {

/// Dual multipliers proving a lower bound on the distance between two posed sets.
struct SeparationCertificate {
  Eigen::VectorXd lam;  // agent side, in K_A*
  Eigen::VectorXd nu;   // obstacle side, in K_B*
  double value = 0.0;   // at the poses it was computed for
};

/// -lam'(G_A R_A'(p_A - p_B) + g_A) - nu' g_B
double certificate_value(const Eigen::VectorXd& lam, const Eigen::VectorXd& nu, const ConeSet& A,
                         const Pose& poseA, const ConeSet& B, const Pose& poseB);

struct CertificateCheck {
  bool lam_in_cone = false;
  bool nu_in_cone = false;
  double cap_a = 0.0;      // ||R_A G_A' lam||
  double cap_b = 0.0;      // ||R_B G_B' nu||
  double alignment = 0.0;  // ||R_A G_A' lam + R_B G_B' nu||

  bool feasible(double tol) const {
    return lam_in_cone && nu_in_cone && cap_a <= 1.0 + tol && cap_b <= 1.0 + tol && alignment <= tol;
  }
};

CertificateCheck check_certificate(const Eigen::VectorXd& lam, const Eigen::VectorXd& nu, const ConeSet& A,
                                   const Pose& poseA, const ConeSet& B, const Pose& poseB, double tol = 1e-8);

/// Euclidean projection of a world point onto a posed set. Supports orthant
/// blocks (any polytope) and SOC blocks of the form ||g1 - G1 y|| <= g0 with
/// G1 of full column rank; products of these are handled by Dykstra's method.
Eigen::VectorXd project_onto(const ConeSet& shape, const Pose& pose, const Eigen::VectorXd& z);

struct OracleOptions {
  double tol = 1e-10;
  int max_iter = 10000;
};

/// Distance by alternating projections; 0 when the sets intersect.
double primal_distance_oracle(const ConeSet& A, const Pose& poseA, const ConeSet& B, const Pose& poseB,
                              const OracleOptions& options = {});

/// Maximizes the dual distance objective with both norm caps and the alignment equality.
SeparationCertificate solve_dual_separation(const ConeSet& A, const Pose& poseA, const ConeSet& B,
                                            const Pose& poseB, const SolverOptions& options = {});

/// Best certificate whose separating normal is fixed to `normal` (unit length,
/// pointing from B towards A). Used when the sets overlap and the free optimum is zero.
SeparationCertificate directed_certificate(const ConeSet& A, const Pose& poseA, const ConeSet& B,
                                           const Pose& poseB, const Eigen::VectorXd& normal,
                                           const SolverOptions& options = {});

struct Hyperplane {
  Eigen::VectorXd normal;
  double threshold = 0.0;
};

/// normal'z1 >= threshold + value on A and normal'z2 <= threshold on B.
Hyperplane separating_hyperplane(const SeparationCertificate& cert, const ConeSet& A, const Pose& poseA,
                                 const ConeSet& B, const Pose& poseB);

}  // namespace dualmpc

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <string>
#include <vector>

namespace dualmpc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Cone of the slack vector s: `nonneg` orthant rows first, then one
/// second-order cone per entry of `soc` (s0 >= ||s1..||).
struct ConeDims {
  int nonneg = 0;
  std::vector<int> soc;

  int total() const;
  /// Barrier degree: orthant rows count one each, every SOC counts one.
  int degree() const;
};

/**
 * Conic program in standard form
 *
 *   minimize    c'x
 *   subject to  A x = b
 *               G x + s = h,  s in K
 *
 * with K a product of a nonnegative orthant and second-order cones.
 * The dual is  maximize -b'y - h'z  s.t.  A'y + G'z + c = 0,  z in K.
 */
struct ConeProgram {
  Eigen::VectorXd c;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  ConeDims cones;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_eq() const { return static_cast<int>(b.size()); }
  int num_cone_rows() const { return static_cast<int>(h.size()); }

  /// Throws ValidationError on inconsistent dimensions.
  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NumericalFailure };

const char* to_string(SolveStatus status);

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 200;
  bool equilibrate = true;
  int ruiz_passes = 15;
  double static_reg = 1e-9;
  int refine_steps = 6;
  bool verbose = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  Eigen::VectorXd s;
  double objective = 0.0;
  /// max(||Ax-b||/(1+||b||), ||Gx+s-h||/(1+||h||))
  double primal_residual = 0.0;
  /// ||A'y+G'z+c||/(1+||c||)
  double dual_residual = 0.0;
  /// max(s'z, |c'x + b'y + h'z|), absolute
  double gap = 0.0;
  int iterations = 0;
  double solve_ms = 0.0;
  /// For Infeasible: (y, z) with z in K*, b'y + h'z = -1, residual ||A'y + G'z||.
  Eigen::VectorXd cert_y;
  Eigen::VectorXd cert_z;
  double cert_residual = 0.0;
  std::string message;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding,
/// Nesterov-Todd scaling, Mehrotra predictor-corrector.
SolveResult solve(const ConeProgram& prog, const SolverOptions& options = {});

/// Residual norms of a candidate point against the unscaled program.
struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};
KktResiduals kkt_residuals(const ConeProgram& prog, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& s);

/// True if v lies in the cone product described by `dims` within `tol`.
bool in_cone(const ConeDims& dims, const Eigen::VectorXd& v, double tol);

/// Plain-text interchange format (see README, "Program dump format").
void write_program(std::ostream& os, const ConeProgram& prog);
ConeProgram read_program(std::istream& is);

}  // namespace dualmpc

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dualmpc/geometry.hpp"
#include "dualmpc/socp.hpp"

namespace dualmpc {

/// Sparse affine function  sum_i val[i] * x[idx[i]] + constant.
struct LinearExpr {
  std::vector<int> idx;
  std::vector<double> val;
  double constant = 0.0;

  LinearExpr() = default;
  explicit LinearExpr(double c) : constant(c) {}

  void add(int var, double coef) {
    if (coef == 0.0) return;
    idx.push_back(var);
    val.push_back(coef);
  }
  LinearExpr& operator+=(const LinearExpr& other);
  LinearExpr& operator*=(double s);
  bool is_constant() const { return idx.empty(); }
  double eval(const Eigen::VectorXd& x) const;
  /// Merges duplicate indices and drops exact zeros.
  void compress();
};

LinearExpr operator+(LinearExpr a, const LinearExpr& b);
LinearExpr operator*(double s, LinearExpr a);

/// Collects a linear objective, equalities and cone memberships over a growing
/// variable vector, then emits a ConeProgram (orthant rows first, then SOC blocks).
class ProgramBuilder {
 public:
  /// Returns the index of the first new variable.
  int add_variables(int count);
  int num_vars() const { return n_; }

  void add_objective(int var, double coef);
  void add_objective(const LinearExpr& e);

  /// e == 0
  void add_equality(const LinearExpr& e);
  /// e >= 0
  void add_nonneg(const LinearExpr& e);
  /// rows[0] >= || rows[1..] ||
  void add_soc(const std::vector<LinearExpr>& rows);
  /// rows in cone, block by block.
  void add_cone(const std::vector<LinearExpr>& rows, const ConeDescriptor& cone);

  int num_equalities() const { return static_cast<int>(eq_.size()); }
  int num_nonneg() const { return static_cast<int>(lin_.size()); }
  int num_soc() const { return static_cast<int>(soc_.size()); }
  /// Constant part of the objective, not carried by the ConeProgram.
  double objective_constant() const { return cost_const_; }

  ConeProgram build() const;

 private:
  int n_ = 0;
  std::vector<double> cost_;
  double cost_const_ = 0.0;
  std::vector<LinearExpr> eq_;
  std::vector<LinearExpr> lin_;
  std::vector<std::vector<LinearExpr>> soc_;
};

}  // namespace dualmpc

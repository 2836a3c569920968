#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dualmpc {

enum class UncertaintyKind { D1, D2, D3 };
enum class RiskAllocation { JointBudget, PerConstraint };

const char* to_string(UncertaintyKind kind);
UncertaintyKind parse_uncertainty_kind(const std::string& s);
const char* to_string(RiskAllocation a);
RiskAllocation parse_allocation(const std::string& s);

/// Per-step noise description of v_k = (w_k, n_{1,k}, ..., n_{M,k}).
///   D1: ||Gamma v_k||_inf <= gamma (compact support, unknown distribution)
///   D2: v_k ~ N(0, Sigma)
///   D3: unknown distribution with zero mean and covariance Sigma
struct UncertaintySpec {
  UncertaintyKind kind = UncertaintyKind::D2;
  Eigen::MatrixXd Gamma;
  double gamma = 0.0;
  Eigen::MatrixXd Sigma;
  double epsilon = 0.05;
  RiskAllocation allocation = RiskAllocation::PerConstraint;

  static UncertaintySpec robust(Eigen::MatrixXd Gamma, double gamma);
  static UncertaintySpec gaussian(Eigen::MatrixXd Sigma, double epsilon, RiskAllocation allocation);
  static UncertaintySpec moment(Eigen::MatrixXd Sigma, double epsilon, RiskAllocation allocation);

  int dim() const;
  void validate() const;
};

struct StackedUncertainty {
  Eigen::MatrixXd Gamma_stk;   // I_N (x) Gamma (D1 only)
  Eigen::MatrixXd Sigma_stk;   // I_N (x) Sigma (D2/D3 only)
  Eigen::MatrixXd Sigma_sqrt;  // symmetric PSD root of Sigma_stk
};

StackedUncertainty stack_uncertainty(const UncertaintySpec& spec, int N);

/// Symmetric PSD square root; eigenvalues below 1e-12 (relative) are clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S);

/// Weight mapping scaled noise coordinates to (w; n): P Gamma_stk^{-1} for D1,
/// P Sigma_sqrt for D2/D3. `perm` gives the (w; n) row of every interleaved v entry.
Eigen::MatrixXd noise_weight(const UncertaintySpec& spec, const StackedUncertainty& stacked,
                             const std::vector<int>& perm);

struct GammaFactors {
  double ca = 0.0;  // collision avoidance
  double xu = 0.0;  // state-input
};

/// M: collision constraints per step, J: state-input rows per step.
GammaFactors gamma_factors(const UncertaintySpec& spec, int N, int M, int J);

double normal_cdf(double x);
double inverse_normal_cdf(double p);
double cantelli_factor(double eps);

}  // namespace dualmpc

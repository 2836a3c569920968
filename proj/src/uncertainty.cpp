#include "dualmpc/uncertainty.hpp"

#include <cmath>

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::D1: return "D1";
    case UncertaintyKind::D2: return "D2";
    case UncertaintyKind::D3: return "D3";
  }
  return "?";
}

UncertaintyKind parse_uncertainty_kind(const std::string& s) {
  if (s == "D1" || s == "d1" || s == "robust") return UncertaintyKind::D1;
  if (s == "D2" || s == "d2" || s == "gaussian") return UncertaintyKind::D2;
  if (s == "D3" || s == "d3" || s == "moment") return UncertaintyKind::D3;
  throw ValidationError("unknown uncertainty kind '" + s + "' (expected D1, D2 or D3)");
}

const char* to_string(RiskAllocation a) {
  return a == RiskAllocation::JointBudget ? "joint" : "per-constraint";
}

RiskAllocation parse_allocation(const std::string& s) {
  if (s == "joint") return RiskAllocation::JointBudget;
  if (s == "per-constraint" || s == "per_constraint") return RiskAllocation::PerConstraint;
  throw ValidationError("unknown risk allocation '" + s + "' (expected joint or per-constraint)");
}

UncertaintySpec UncertaintySpec::robust(MatrixXd Gamma, double gamma) {
  UncertaintySpec s;
  s.kind = UncertaintyKind::D1;
  s.Gamma = std::move(Gamma);
  s.gamma = gamma;
  s.validate();
  return s;
}

UncertaintySpec UncertaintySpec::gaussian(MatrixXd Sigma, double epsilon, RiskAllocation allocation) {
  UncertaintySpec s;
  s.kind = UncertaintyKind::D2;
  s.Sigma = std::move(Sigma);
  s.epsilon = epsilon;
  s.allocation = allocation;
  s.validate();
  return s;
}

UncertaintySpec UncertaintySpec::moment(MatrixXd Sigma, double epsilon, RiskAllocation allocation) {
  UncertaintySpec s = gaussian(std::move(Sigma), epsilon, allocation);
  s.kind = UncertaintyKind::D3;
  return s;
}

int UncertaintySpec::dim() const {
  return static_cast<int>(kind == UncertaintyKind::D1 ? Gamma.rows() : Sigma.rows());
}

void UncertaintySpec::validate() const {
  if (kind == UncertaintyKind::D1) {
    if (Gamma.rows() != Gamma.cols() || Gamma.rows() == 0) throw ValidationError("D1: Gamma must be square");
    if (!(gamma > 0.0)) throw ValidationError("D1: gamma must be positive");
    Eigen::JacobiSVD<MatrixXd> svd(Gamma);
    const VectorXd sv = svd.singularValues();
    if (sv.minCoeff() <= 1e-12 * sv.maxCoeff()) throw ValidationError("D1: Gamma is singular");
    return;
  }
  if (Sigma.rows() != Sigma.cols() || Sigma.rows() == 0) throw ValidationError("Sigma must be square");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw ValidationError("Sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sigma);
  if (es.eigenvalues().minCoeff() < -1e-10) throw ValidationError("Sigma is not positive semidefinite");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
}

MatrixXd psd_sqrt(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()));
  VectorXd ev = es.eigenvalues();
  const double cut = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (int i = 0; i < ev.size(); ++i) ev(i) = ev(i) > cut ? std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

MatrixXd kron_identity(int N, const MatrixXd& B) {
  MatrixXd out = MatrixXd::Zero(N * B.rows(), N * B.cols());
  for (int k = 0; k < N; ++k) out.block(k * B.rows(), k * B.cols(), B.rows(), B.cols()) = B;
  return out;
}

}  // namespace

StackedUncertainty stack_uncertainty(const UncertaintySpec& spec, int N) {
  spec.validate();
  if (N < 1) throw ValidationError("stack_uncertainty: horizon must be >= 1");
  StackedUncertainty s;
  if (spec.kind == UncertaintyKind::D1) {
    s.Gamma_stk = kron_identity(N, spec.Gamma);
  } else {
    s.Sigma_stk = kron_identity(N, spec.Sigma);
    s.Sigma_sqrt = kron_identity(N, psd_sqrt(spec.Sigma));
  }
  return s;
}

MatrixXd noise_weight(const UncertaintySpec& spec, const StackedUncertainty& stacked, const std::vector<int>& perm) {
  const MatrixXd base =
      spec.kind == UncertaintyKind::D1 ? MatrixXd(stacked.Gamma_stk.inverse()) : stacked.Sigma_sqrt;
  if (static_cast<int>(perm.size()) != base.rows())
    throw ValidationError("noise_weight: permutation size " + std::to_string(perm.size()) +
                          " differs from stacked noise dimension " + std::to_string(base.rows()));
  MatrixXd W(base.rows(), base.cols());
  for (int v = 0; v < base.rows(); ++v) W.row(perm[v]) = base.row(v);
  return W;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("inverse_normal_cdf: p must lie in (0, 1)");
  // Acklam's rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement.
  for (int it = 0; it < 2; ++it) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double cantelli_factor(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("cantelli_factor: eps must lie in (0, 1)");
  return std::sqrt((1.0 - eps) / eps);
}

GammaFactors gamma_factors(const UncertaintySpec& spec, int N, int M, int J) {
  spec.validate();
  if (spec.kind == UncertaintyKind::D1) return {spec.gamma, spec.gamma};
  const double eps = spec.epsilon;
  auto factor = [&](int count) {
    if (spec.allocation == RiskAllocation::PerConstraint)
      return spec.kind == UncertaintyKind::D2 ? inverse_normal_cdf(1.0 - eps) : cantelli_factor(eps);
    if (count <= 0) return 0.0;
    const double budget = 2.0 * N * count;
    if (!(eps / budget < 1.0)) throw ValidationError("epsilon exceeds the per-constraint risk budget");
    return spec.kind == UncertaintyKind::D2 ? inverse_normal_cdf(1.0 - eps / budget)
                                            : std::sqrt((budget - eps) / eps);
  };
  return {factor(M), factor(J)};
}

}  // namespace dualmpc

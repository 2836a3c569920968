#include "dualmpc/validation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dualmpc/dual_distance.hpp"
#include "dualmpc/errors.hpp"
#include "dualmpc/program_builder.hpp"
#include "dualmpc/tightening.hpp"
#include "dualmpc/uncertainty.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ConeSet random_shape(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> size(0.3, 3.0);
  const Eigen::Vector2d axes(size(rng), size(rng));
  return std::bernoulli_distribution(0.5)(rng) ? make_box(axes) : make_ellipsoid(axes);
}

// A random residual nominal + noise . v with nominal and every noise entry affine in x.
AffineResidual random_residual(std::mt19937_64& rng, int nx, int nv, double noise_scale) {
  std::normal_distribution<double> g(0.0, 1.0);
  AffineResidual r;
  r.kind = ResidualKind::StateInput;
  for (int i = 0; i < nx; ++i) r.nominal.add(i, g(rng));
  r.noise.resize(nv);
  for (auto& e : r.noise) {
    e.constant = noise_scale * g(rng);
    for (int i = 0; i < nx; ++i) e.add(i, noise_scale * g(rng));
  }
  return r;
}

double raw_residual(const AffineResidual& r, const VectorXd& x, const VectorXd& v) {
  double out = r.nominal.eval(x);
  for (int c = 0; c < v.size(); ++c) out += r.noise[c].eval(x) * v(c);
  return out;
}

std::vector<int> identity_perm(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  return p;
}

}  // namespace

SuiteReport validate_duality(int pairs, std::uint64_t seed, double tol) {
  SuiteReport rep;
  rep.name = "duality";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), radius(0.0, 10.0);
  int made = 0;
  while (made < pairs) {
    const ConeSet A = random_shape(rng), B = random_shape(rng);
    const double ra = radius(rng), ta = angle(rng);
    const Pose pa = Pose::planar(0.0, 0.0, angle(rng));
    const Pose pb = Pose::planar(ra * std::cos(ta), ra * std::sin(ta), angle(rng));
    double primal;
    try {
      primal = primal_distance_oracle(A, pa, B, pb);
    } catch (const OracleError&) {
      continue;
    }
    if (primal < 1e-3) continue;  // overlapping or touching: not a separated pair
    ++made;
    double err;
    try {
      err = std::abs(solve_dual_separation(A, pa, B, pb).value - primal);
    } catch (const SolverError& e) {
      ++rep.failed;
      rep.detail = e.what();
      continue;
    }
    rep.worst = std::max(rep.worst, err);
    (err <= tol ? rep.passed : rep.failed)++;
  }
  if (rep.detail.empty()) rep.detail = fmt::format("max |dual - primal| = {:.3e}", rep.worst);
  return rep;
}

SuiteReport validate_vertex_oracle(int instances, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "vertex";
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> horizon(1, 3);
  std::uniform_real_distribution<double> gscale(0.5, 3.0), gam(0.5, 2.0), offset(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const int nx = 3;
  int made = 0;
  while (made < instances) {
    const int N = horizon(rng);
    const int d = std::uniform_int_distribution<int>(1, 8 / N)(rng);
    VectorXd gdiag(d);
    for (int i = 0; i < d; ++i) gdiag(i) = gscale(rng);
    const double gamma = gam(rng);
    const UncertaintySpec spec = UncertaintySpec::robust(gdiag.asDiagonal(), gamma);
    const int nv = N * d;
    const MatrixXd weight = noise_weight(spec, stack_uncertainty(spec, N), identity_perm(nv));
    AffineResidual r = random_residual(rng, nx, nv, 0.5);
    VectorXd x(nx);
    for (int i = 0; i < nx; ++i) x(i) = g(rng);
    const GammaFactors factors{gamma, gamma};
    const double base = tightened_slack(tighten({r}, spec, factors, weight, 0.0)[0], x);
    r.nominal.constant = -base + offset(rng);
    const double slack = tightened_slack(tighten({r}, spec, factors, weight, 0.0)[0], x);
    if (std::abs(slack) < 1e-9) continue;
    ++made;

    // Box vertices of the stacked noise: v_c = +-gamma / Gamma_cc.
    double worst = std::numeric_limits<double>::infinity();
    VectorXd v(nv);
    for (long mask = 0; mask < (1L << nv); ++mask) {
      for (int c = 0; c < nv; ++c) v(c) = ((mask >> c) & 1 ? 1.0 : -1.0) * gamma / gdiag(c % d);
      worst = std::min(worst, raw_residual(r, x, v));
    }
    ((slack >= 0.0) == (worst >= 0.0) ? rep.passed : rep.failed)++;
    rep.worst = std::max(rep.worst, std::abs(slack - worst));
  }
  rep.detail = fmt::format("{} disagreements, max |slack - vertex min| = {:.3e}", rep.failed, rep.worst);
  return rep;
}

SuiteReport validate_chance(int constraints, int samples, std::uint64_t seed, double epsilon) {
  SuiteReport rep;
  rep.name = "chance";
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const int nx = 2;
  const double bound = epsilon + 3.0 * std::sqrt(epsilon * (1.0 - epsilon) / samples);
  double worst_rate = 0.0;
  int made = 0, attempts = 0;
  while (made < constraints) {
    if (++attempts > 20 * constraints) throw SolverError("chance suite: could not build active instances", "IterLimit");
    const int N = std::uniform_int_distribution<int>(1, 2)(rng);
    const int d = std::uniform_int_distribution<int>(2, 4)(rng);
    MatrixXd L = MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) L(i, j) = 0.5 * g(rng);
    const MatrixXd Sigma = L * L.transpose() + 0.1 * MatrixXd::Identity(d, d);
    const UncertaintySpec spec = UncertaintySpec::gaussian(Sigma, epsilon, RiskAllocation::PerConstraint);
    const int nv = N * d;
    const StackedUncertainty stacked = stack_uncertainty(spec, N);
    const MatrixXd weight = noise_weight(spec, stacked, identity_perm(nv));
    const GammaFactors factors = gamma_factors(spec, N, 1, 1);
    AffineResidual r = random_residual(rng, nx, nv, 1.0);
    r.nominal.constant = 0.0;
    const TightenedConstraint at0 = tighten({r}, spec, factors, weight, 0.0)[0];
    r.nominal.constant = -tightened_slack(at0, VectorXd::Zero(nx)) + 1.0;  // x = 0 strictly feasible
    const TightenedConstraint tc = tighten({r}, spec, factors, weight, 0.0)[0];

    // minimize c'x over the tightened set and a box; keep instances where the cone is active.
    ProgramBuilder pb;
    pb.add_variables(nx);
    for (int i = 0; i < nx; ++i) {
      pb.add_objective(i, g(rng));
      LinearExpr hi(50.0), lo(50.0);
      hi.add(i, -1.0);
      lo.add(i, 1.0);
      pb.add_nonneg(hi);
      pb.add_nonneg(lo);
    }
    std::vector<LinearExpr> rows{(1.0 / tc.factor) * tc.nominal};
    rows.insert(rows.end(), tc.norm_arg.begin(), tc.norm_arg.end());
    pb.add_soc(rows);
    const SolveResult res = solve(pb.build());
    if (!res.optimal()) continue;
    const VectorXd x = res.x;
    if (std::abs(tightened_slack(tc, x)) > 1e-6 * (1.0 + std::abs(tc.nominal.eval(x)))) continue;
    ++made;

    const Eigen::LLT<MatrixXd> chol(Sigma);
    const MatrixXd Ls = chol.matrixL();
    int violations = 0;
    VectorXd v(nv), z(d);
    for (int s = 0; s < samples; ++s) {
      for (int k = 0; k < N; ++k) {
        for (int i = 0; i < d; ++i) z(i) = g(rng);
        v.segment(k * d, d) = Ls * z;
      }
      if (raw_residual(r, x, v) < 0.0) ++violations;
    }
    const double rate = static_cast<double>(violations) / samples;
    worst_rate = std::max(worst_rate, rate);
    (rate <= bound ? rep.passed : rep.failed)++;
  }
  rep.worst = worst_rate - bound;
  rep.detail = fmt::format("worst violation rate {:.5f}, bound {:.5f}", worst_rate, bound);
  return rep;
}

SuiteReport validate_gamma_table() {
  SuiteReport rep;
  rep.name = "gamma";
  struct Row {
    double eps, d2, d3;
  };
  const MatrixXd S = MatrixXd::Identity(1, 1);
  for (const Row& row : {Row{0.0228, 2.00, 6.55}, Row{0.05, 1.64, 4.36}}) {
    const double d2 = gamma_factors(UncertaintySpec::gaussian(S, row.eps, RiskAllocation::PerConstraint), 12, 2, 4).ca;
    const double d3 = gamma_factors(UncertaintySpec::moment(S, row.eps, RiskAllocation::PerConstraint), 12, 2, 4).ca;
    for (const auto& [got, want] : {std::pair{d2, row.d2}, std::pair{d3, row.d3}}) {
      const double err = std::abs(got - want);
      rep.worst = std::max(rep.worst, err);
      (err <= 0.01 ? rep.passed : rep.failed)++;
      rep.detail += fmt::format("eps={} got {:.4f} want {:.2f}; ", row.eps, got, want);
    }
  }
  return rep;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"duality", "vertex", "chance", "gamma"};
  return names;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
  if (name == "duality") return validate_duality(200, seed);
  if (name == "vertex") return validate_vertex_oracle(50, seed);
  if (name == "chance") return validate_chance(20, 100000, seed);
  if (name == "gamma") return validate_gamma_table();
  throw ValidationError("unknown suite '" + name + "' (expected duality, vertex, chance, gamma or all)");
}

}  // namespace dualmpc

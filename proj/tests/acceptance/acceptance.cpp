// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "dualmpc/convexification.hpp"
#include "dualmpc/dual_distance.hpp"
#include "dualmpc/program_builder.hpp"
#include "dualmpc/scenario.hpp"
#include "dualmpc/socp.hpp"
#include "dualmpc/tightening.hpp"
#include "dualmpc/uncertainty.hpp"

using namespace dualmpc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ConeSet to_library(const oracle::Shape2& s) { return s.box ? make_box(s.half) : make_ellipsoid(s.half); }
Pose pose_of(const oracle::Shape2& s) { return Pose::planar(s.p(0), s.p(1), s.heading); }

// 1. Dual certificate value against an alternating-projection distance.
Outcome duality_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> size(0.3, 3.0), ang(0.0, 2.0 * M_PI), rad(0.0, 10.0);
  int pairs = 0, bad = 0;
  double worst = 0.0;
  while (pairs < 250) {
    oracle::Shape2 a, b;
    a.box = std::bernoulli_distribution(0.5)(rng);
    b.box = std::bernoulli_distribution(0.5)(rng);
    a.half = {size(rng), size(rng)};
    b.half = {size(rng), size(rng)};
    a.heading = ang(rng);
    b.heading = ang(rng);
    const double r = rad(rng), t = ang(rng);
    b.p = {r * std::cos(t), r * std::sin(t)};
    const double primal = oracle::distance(a, b);
    if (primal < 1e-3) continue;
    ++pairs;
    const double dual = solve_dual_separation(to_library(a), pose_of(a), to_library(b), pose_of(b)).value;
    const double err = std::abs(dual - primal);
    worst = std::max(worst, err);
    if (err > 1e-6) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs <= 30.0,
          fmt::format("{} pairs, {} beyond 1e-6, max err {:.2e}, {:.1f} s", pairs, bad, worst, secs)};
}

// 2. D1 tightening against explicit enumeration of the noise box vertices.
Outcome vertex_oracle() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> gs(0.5, 3.0), gam(0.5, 2.5), off(-1.0, 1.0);
  int disagree = 0, made = 0;
  while (made < 50) {
    const int N = std::uniform_int_distribution<int>(1, 3)(rng);
    const int d = std::uniform_int_distribution<int>(1, 8 / N)(rng);
    const int nv = N * d, nx = 4;
    VectorXd gd(d);
    for (int i = 0; i < d; ++i) gd(i) = gs(rng);
    const double gamma = gam(rng);
    const UncertaintySpec spec = UncertaintySpec::robust(gd.asDiagonal(), gamma);
    std::vector<int> perm(nv);
    for (int i = 0; i < nv; ++i) perm[i] = i;
    const MatrixXd W = noise_weight(spec, stack_uncertainty(spec, N), perm);

    AffineResidual r;
    r.kind = ResidualKind::StateInput;
    for (int i = 0; i < nx; ++i) r.nominal.add(i, g(rng));
    r.noise.resize(nv);
    for (auto& e : r.noise) {
      e.constant = 0.3 * g(rng);
      for (int i = 0; i < nx; ++i) e.add(i, 0.3 * g(rng));
    }
    VectorXd x(nx);
    for (int i = 0; i < nx; ++i) x(i) = g(rng);

    // Vertex minimum of nominal + sum_c noise_c v_c over |v_c| <= gamma / Gamma_c.
    auto vertex_min = [&] {
      double best = std::numeric_limits<double>::infinity();
      for (long mask = 0; mask < (1L << nv); ++mask) {
        double val = r.nominal.eval(x);
        for (int c = 0; c < nv; ++c) val += r.noise[c].eval(x) * (((mask >> c) & 1) ? 1.0 : -1.0) * gamma / gd(c % d);
        best = std::min(best, val);
      }
      return best;
    };
    r.nominal.constant = -vertex_min() + off(rng);
    const double vm = vertex_min();
    if (std::abs(vm) < 1e-9) continue;
    ++made;
    const double slack = tightened_slack(tighten({r}, spec, {gamma, gamma}, W, 0.0)[0], x);
    if ((slack >= 0.0) != (vm >= 0.0)) ++disagree;
  }
  return {disagree == 0, fmt::format("{} instances, {} disagreements", made, disagree)};
}

// 3. Gaussian chance constraints driven active by a small cone program, then sampled.
Outcome chance_validity() {
  const double eps = 0.0228;
  const int samples = 100000;
  const double bound = eps + 3.0 * std::sqrt(eps * (1.0 - eps) / samples);
  std::mt19937_64 rng(303);
  std::normal_distribution<double> g(0.0, 1.0);
  int made = 0, bad = 0, tries = 0;
  double worst = 0.0;
  while (made < 20 && ++tries < 400) {
    const int d = std::uniform_int_distribution<int>(2, 4)(rng), N = std::uniform_int_distribution<int>(1, 2)(rng);
    const int nv = N * d, nx = 2;
    MatrixXd L(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) L(i, j) = 0.4 * g(rng);
    const MatrixXd Sigma = L * L.transpose() + 0.05 * MatrixXd::Identity(d, d);
    const UncertaintySpec spec = UncertaintySpec::gaussian(Sigma, eps, RiskAllocation::PerConstraint);
    std::vector<int> perm(nv);
    for (int i = 0; i < nv; ++i) perm[i] = i;
    const MatrixXd W = noise_weight(spec, stack_uncertainty(spec, N), perm);
    const GammaFactors f = gamma_factors(spec, N, 1, 1);

    AffineResidual r;
    r.kind = ResidualKind::StateInput;
    for (int i = 0; i < nx; ++i) r.nominal.add(i, g(rng));
    r.noise.resize(nv);
    for (auto& e : r.noise) {
      e.constant = g(rng);
      for (int i = 0; i < nx; ++i) e.add(i, g(rng));
    }
    r.nominal.constant = -tightened_slack(tighten({r}, spec, f, W, 0.0)[0], VectorXd::Zero(nx)) + 1.0;
    const TightenedConstraint tc = tighten({r}, spec, f, W, 0.0)[0];

    ProgramBuilder pb;
    pb.add_variables(nx);
    for (int i = 0; i < nx; ++i) {
      pb.add_objective(i, g(rng));
      LinearExpr up(30.0), dn(30.0);
      up.add(i, -1.0);
      dn.add(i, 1.0);
      pb.add_nonneg(up);
      pb.add_nonneg(dn);
    }
    std::vector<LinearExpr> rows{(1.0 / tc.factor) * tc.nominal};
    rows.insert(rows.end(), tc.norm_arg.begin(), tc.norm_arg.end());
    pb.add_soc(rows);
    const SolveResult res = solve(pb.build());
    if (!res.optimal()) continue;
    if (std::abs(tightened_slack(tc, res.x)) > 1e-6 * (1.0 + std::abs(tc.nominal.eval(res.x)))) continue;
    ++made;

    const MatrixXd Ls = Eigen::LLT<MatrixXd>(Sigma).matrixL();
    int viol = 0;
    VectorXd z(d), v(nv);
    for (int s = 0; s < samples; ++s) {
      for (int k = 0; k < N; ++k) {
        for (int i = 0; i < d; ++i) z(i) = g(rng);
        v.segment(k * d, d) = Ls * z;
      }
      double val = r.nominal.eval(res.x);
      for (int c = 0; c < nv; ++c) val += r.noise[c].eval(res.x) * v(c);
      if (val < 0.0) ++viol;
    }
    const double rate = double(viol) / samples;
    worst = std::max(worst, rate);
    if (rate > bound) ++bad;
  }
  return {made == 20 && bad == 0,
          fmt::format("{} active constraints, worst rate {:.5f} vs bound {:.5f}", made, worst, bound)};
}

// 4. Tightening constants.
Outcome gamma_table() {
  struct Row {
    double eps, d2, d3;
  };
  const MatrixXd S = MatrixXd::Identity(1, 1);
  double worst = 0.0;
  std::string got;
  for (const Row& row : {Row{0.0228, 2.00, 6.55}, Row{0.05, 1.64, 4.36}}) {
    const double d2 = gamma_factors(UncertaintySpec::gaussian(S, row.eps, RiskAllocation::PerConstraint), 12, 2, 4).ca;
    const double d3 = gamma_factors(UncertaintySpec::moment(S, row.eps, RiskAllocation::PerConstraint), 12, 2, 4).ca;
    // independent values: normal quantile and the one-sided Chebyshev constant
    const double q = oracle::normal_quantile(1.0 - row.eps), c = std::sqrt((1.0 - row.eps) / row.eps);
    worst = std::max({worst, std::abs(d2 - row.d2), std::abs(d3 - row.d3), std::abs(d2 - q), std::abs(d3 - c)});
    got += fmt::format("eps={}: D2 {:.4f} D3 {:.4f}; ", row.eps, d2, d3);
  }
  return {worst <= 0.01, got + fmt::format("max deviation {:.4f}", worst)};
}

// 5. Truncated-normal sampling moments and the scenario's Sigma^{1/2} vs 0.88 Gamma^{-1}.
Outcome truncnorm_moments() {
  const LongitudinalScenario sc = LongitudinalScenario::intersection();
  TruncNormSpec spec = sc.obstacle_noise;
  std::mt19937_64 rng(505);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_truncnorm(spec, rng);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  const double target = 0.7737 * spec.sigma * spec.sigma;
  const double rel = std::abs(var - target) / target;
  const double exact_rel = std::abs(oracle::truncated_variance(spec.sigma, spec.b) - target) / target;

  const MatrixXd Sigma = scenario_Sigma(sc), Gamma = scenario_Gamma(sc);
  const MatrixXd Ginv = Gamma.inverse();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Sigma);
  const MatrixXd root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const double lhs = (root - 0.88 * Ginv).operatorNorm(), rhs = 0.005 * Ginv.operatorNorm();
  return {rel <= 0.01 && exact_rel <= 1e-3 && lhs <= rhs,
          fmt::format("sample var {:.4e} vs {:.4e} ({:.3f}%), root mismatch {:.2e} <= {:.2e}", var, target, 100 * rel,
                      lhs, rhs)};
}

// 6. gamma ||Z P Gamma^-1||_1 >= gamma_ca ||Z P Sigma^1/2||_2 for random rows Z.
Outcome feasible_set_inclusion() {
  const LongitudinalScenario sc = LongitudinalScenario::intersection();
  std::vector<ObstacleModel> obs;
  for (int i = 0; i < sc.num_obstacles(); ++i) obs.push_back(obstacle_prediction(sc, i));
  const StackedSystem stk = build_stacked(agent_model(sc), obs);
  const UncertaintySpec d1 = scenario_uncertainty(sc, PolicyKind::RMPC);
  const UncertaintySpec d2 = scenario_uncertainty(sc, PolicyKind::SMPC);
  const MatrixXd W1 = noise_weight(d1, stack_uncertainty(d1, stk.N), stk.perm);
  const MatrixXd W2 = noise_weight(d2, stack_uncertainty(d2, stk.N), stk.perm);
  std::mt19937_64 rng(606);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution sparse(0.3);
  int viol = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 1000; ++t) {
    Eigen::RowVectorXd Z(W1.rows());
    for (int i = 0; i < Z.size(); ++i) Z(i) = (t % 2 && sparse(rng)) ? 0.0 : g(rng);
    const double lhs = 2.0 * (Z * W1).lpNorm<1>(), rhs = 2.0 * (Z * W2).norm();
    tightest = std::min(tightest, lhs / rhs);
    if (lhs < rhs) ++viol;
  }
  return {viol == 0, fmt::format("1000 rows, {} violations, smallest ratio {:.3f}", viol, tightest)};
}

// 7. |Y - LY| is quadratic in the perturbation size and zero at the point.
Outcome linearization_order() {
  LongitudinalScenario sc = LongitudinalScenario::intersection();
  std::vector<ObstacleModel> obs;
  for (int i = 0; i < sc.num_obstacles(); ++i) obs.push_back(obstacle_prediction(sc, i));
  const AgentModel agent = agent_model(sc);
  const StackedSystem stk = build_stacked(agent, obs);
  const DecisionLayout layout(stk, agent, obs);
  std::mt19937_64 rng(707);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> as(0.0, 20.0), av(2.0, 12.0), os(-25.0, -8.0);
  double slope_lo = 1e9, slope_hi = -1e9, exact = 0.0;
  int made = 0, tries = 0;
  while (made < 20 && ++tries < 200) {
    const VectorXd x0 = Eigen::Vector2d(as(rng), av(rng));
    std::vector<VectorXd> o0;
    for (int i = 0; i < sc.num_obstacles(); ++i) o0.push_back(Eigen::Vector2d(os(rng), 8.0));
    const ResidualForms forms(stk, agent, obs, x0, o0, state_input_rows(sc));
    LinearizationPoint pt;
    try {
      pt = bootstrap_duals(forms, layout, scenario_cost(sc));
    } catch (const std::exception&) {
      continue;
    }
    const int k = std::uniform_int_distribution<int>(1, stk.N)(rng);
    const int i = std::uniform_int_distribution<int>(0, sc.num_obstacles() - 1)(rng);
    const AffineResidual lin = linearize_block(forms, layout, pt, k, i, 0);

    VectorXd xs = VectorXd::Zero(layout.size());
    layout.pack_policy(pt.theta, xs);
    for (int kk = 1; kk <= stk.N; ++kk)
      for (int ii = 0; ii < sc.num_obstacles(); ++ii) {
        const int blk = layout.block(kk, ii, 0);
        xs.segment(layout.lam(kk, ii, 0), layout.lam_dim()) = pt.lam[blk];
        xs.segment(layout.nu(kk, ii, 0), layout.nu_dim(ii)) = pt.nu[blk];
      }
    auto Y_at = [&](const VectorXd& x) {
      return forms.Y(k, i, 0, layout.unpack_policy(x), x.segment(layout.lam(k, i, 0), layout.lam_dim()),
                     x.segment(layout.nu(k, i, 0), layout.nu_dim(i)));
    };
    exact = std::max(exact, std::abs(Y_at(xs) - lin.nominal.eval(xs)));

    VectorXd dir(layout.size());
    for (int j = 0; j < dir.size(); ++j) dir(j) = g(rng);
    std::vector<double> ts, errs;
    bool usable = true;
    for (double t = 0.5; t >= 0.5 / 64; t /= 2.0) {
      const VectorXd x = xs + t * dir;
      const double e = std::abs(Y_at(x) - lin.nominal.eval(x));
      if (e < 1e-9) usable = false;
      ts.push_back(t);
      errs.push_back(e);
    }
    if (!usable) continue;
    ++made;
    const double s = oracle::loglog_slope(ts, errs);
    slope_lo = std::min(slope_lo, s);
    slope_hi = std::max(slope_hi, s);
  }
  return {made == 20 && slope_lo >= 1.9 && slope_hi <= 2.1 && exact <= 1e-12,
          fmt::format("{} instances, slopes in [{:.4f}, {:.4f}], error at point {:.1e}", made, slope_lo, slope_hi,
                      exact)};
}

// Cone program with a known optimum built from complementary primal-dual pairs.
struct Constructed {
  ConeProgram prog;
  double optimum = 0.0;
};

Constructed constructed_program(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  std::uniform_int_distribution<int> pick(0, 2);
  const int l = std::uniform_int_distribution<int>(2, 6)(rng);
  const int nsoc = std::uniform_int_distribution<int>(1, 3)(rng);
  std::vector<int> soc;
  for (int j = 0; j < nsoc; ++j) soc.push_back(std::uniform_int_distribution<int>(2, 5)(rng));
  int m = l;
  for (int q : soc) m += q;
  const int n = std::uniform_int_distribution<int>(2, std::min(8, m - 1))(rng);
  const int p = std::uniform_int_distribution<int>(0, std::min(2, n - 1))(rng);

  VectorXd s = VectorXd::Zero(m), z = VectorXd::Zero(m);
  for (int i = 0; i < l; ++i) (pick(rng) == 0 ? s(i) : z(i)) = pos(rng);
  int at = l;
  for (int q : soc) {
    VectorXd u(q - 1);
    for (int j = 0; j < q - 1; ++j) u(j) = g(rng);
    u.normalize();
    switch (pick(rng)) {
      case 0:  // both on the boundary, opposite rays
        s(at) = pos(rng);
        s.segment(at + 1, q - 1) = s(at) * u;
        z(at) = pos(rng);
        z.segment(at + 1, q - 1) = -z(at) * u;
        break;
      case 1:  // s interior
        s(at) = 2.0 * pos(rng);
        s.segment(at + 1, q - 1) = 0.5 * pos(rng) * u;
        break;
      default:  // z interior
        z(at) = 2.0 * pos(rng);
        z.segment(at + 1, q - 1) = 0.5 * pos(rng) * u;
    }
    at += q;
  }
  MatrixXd G(m, n), A(p, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = g(rng);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  VectorXd x(n), y(p);
  for (int j = 0; j < n; ++j) x(j) = g(rng);
  for (int j = 0; j < p; ++j) y(j) = g(rng);

  Constructed out;
  out.prog.c = -A.transpose() * y - G.transpose() * z;
  out.prog.A = A.sparseView();
  out.prog.b = A * x;
  out.prog.G = G.sparseView();
  out.prog.h = G * x + s;
  out.prog.cones.nonneg = l;
  out.prog.cones.soc = soc;
  out.optimum = out.prog.c.dot(x);
  return out;
}

struct ClosedLoop {
  std::vector<ExperimentResult> runs;  // RMPC, SMPC, DRMPC
  double seconds = 0.0;
};

// 8. Solver contract: KKT on every optimal step of the closed-loop run, plus known optima.
Outcome solver_contract(const ClosedLoop& cl) {
  int optimal = 0, kkt_bad = 0;
  double worst = 0.0;
  for (const auto& run : cl.runs)
    for (const auto& tr : run.traces)
      for (const auto& d : tr.diagnostics) {
        if (d.status != SolveStatus::Optimal) continue;
        ++optimal;
        const double r = std::max({d.kkt.primal, d.kkt.dual, d.kkt.gap});
        worst = std::max(worst, r);
        if (r > 1e-8) ++kkt_bad;
      }
  std::mt19937_64 rng(808);
  int known_bad = 0;
  double known_worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Constructed c = constructed_program(rng);
    const SolveResult res = solve(c.prog);
    const double err = res.optimal() ? std::abs(res.objective - c.optimum) : std::numeric_limits<double>::infinity();
    known_worst = std::max(known_worst, err);
    if (err > 1e-6) ++known_bad;
  }
  return {kkt_bad == 0 && known_bad == 0 && optimal > 0,
          fmt::format("{} optimal steps, {} with KKT > 1e-8 (max {:.1e}); 50 known optima, {} off by > 1e-6 (max {:.1e})",
                      optimal, kkt_bad, worst, known_bad, known_worst)};
}

oracle::Shape2 agent_box(const LongitudinalScenario& sc, const VectorXd& x) {
  oracle::Shape2 s;
  s.half = sc.agent_half_widths;
  s.p = {x(0), sc.lane_y};
  return s;
}

oracle::Shape2 obstacle_box(const LaneObstacle& ob, const VectorXd& o) {
  oracle::Shape2 s;
  s.half = ob.half_widths;
  s.p = ob.origin + o(0) * ob.direction;
  s.heading = std::atan2(ob.direction(1), ob.direction(0));
  return s;
}

struct PolicyStats {
  double feasibility = 0.0, completion = 0.0, min_distance = 0.0, collision = 0.0;
};

// Recomputes the closed-loop statistics from the raw traces.
PolicyStats stats_of(const LongitudinalScenario& sc, const ExperimentResult& run) {
  PolicyStats st;
  int steps = 0, feasible = 0, overlap = 0;
  for (const auto& tr : run.traces) {
    double ep_min = std::numeric_limits<double>::infinity();
    for (const auto& r : tr.rows) {
      ++steps;
      feasible += r.feasible ? 1 : 0;
      const auto a = agent_box(sc, r.x);
      bool hit = false;
      for (int i = 0; i < sc.num_obstacles(); ++i) {
        const auto b = obstacle_box(sc.obstacles[i], r.o[i]);
        if (oracle::rectangles_overlap(a, b)) {
          hit = true;
          ep_min = 0.0;
        } else {
          ep_min = std::min(ep_min, oracle::distance(a, b));
        }
      }
      overlap += hit ? 1 : 0;
    }
    const bool reached = static_cast<int>(tr.rows.size()) < sc.max_steps;
    st.completion += (reached ? tr.rows.size() : sc.max_steps) * sc.dt;
    st.min_distance += ep_min;
  }
  const double ne = static_cast<double>(run.traces.size());
  st.feasibility = 100.0 * feasible / steps;
  st.collision = 100.0 * overlap / steps;
  st.completion /= ne;
  st.min_distance /= ne;
  return st;
}

// 9. Directional closed-loop comparison over shared seeds.
Outcome closed_loop(const ClosedLoop& cl) {
  const LongitudinalScenario sc = LongitudinalScenario::intersection();
  const PolicyStats r = stats_of(sc, cl.runs[0]), s = stats_of(sc, cl.runs[1]), d = stats_of(sc, cl.runs[2]);
  const bool a = r.feasibility >= 90.0 && s.feasibility >= 90.0 && d.feasibility >= 90.0;
  const bool b = s.completion <= d.completion && d.completion <= r.completion;
  const bool c = r.min_distance >= d.min_distance && d.min_distance >= s.min_distance;
  const bool e = r.collision <= 5.0 && s.collision <= 5.0 && d.collision <= 5.0;
  const bool time_ok = cl.seconds <= 900.0;
  auto mark = [](bool ok) { return ok ? "ok" : "FAILED"; };
  return {a && b && c && e && time_ok,
          fmt::format("(a) feasibility R/S/D {:.1f}/{:.1f}/{:.1f}% {}; (b) completion S/D/R {:.2f}/{:.2f}/{:.2f} s {}; "
                      "(c) min distance R/D/S {:.3f}/{:.3f}/{:.3f} m {}; (d) overlap R/S/D {:.1f}/{:.1f}/{:.1f}% {}; "
                      "{:.0f} s {}",
                      r.feasibility, s.feasibility, d.feasibility, mark(a), s.completion, d.completion, r.completion,
                      mark(b), r.min_distance, d.min_distance, s.min_distance, mark(c), r.collision, s.collision,
                      d.collision, mark(e), cl.seconds, mark(time_ok))};
}

// 10. Median conic solve time of the N = 12, M = 2 program.
Outcome solve_budget(const ClosedLoop& cl) {
  std::vector<double> ms;
  for (const auto& run : cl.runs)
    for (const auto& tr : run.traces)
      for (const auto& dg : tr.diagnostics) ms.push_back(dg.solve_ms);
  const double med = oracle::median(ms);
  return {!ms.empty() && med <= 1000.0, fmt::format("median {:.1f} ms over {} solves", med, ms.size())};
}

}  // namespace

int main() {
  const LongitudinalScenario sc = LongitudinalScenario::intersection();
  ClosedLoop cl;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
  const auto t0 = Clock::now();
  for (PolicyKind p : {PolicyKind::RMPC, PolicyKind::SMPC, PolicyKind::DRMPC})
    cl.runs.push_back(run_longitudinal_experiment(sc, p, seeds));
  cl.seconds = seconds_since(t0);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"duality exactness", duality_exactness},
      {"robust vertex oracle", vertex_oracle},
      {"gaussian chance validity", chance_validity},
      {"gamma table", gamma_table},
      {"truncated-normal moments", truncnorm_moments},
      {"feasible-set inclusion", feasible_set_inclusion},
      {"linearization order", linearization_order},
      {"solver contract", [&] { return solver_contract(cl); }},
      {"closed-loop comparison", [&] { return closed_loop(cl); }},
      {"solve budget", [&] { return solve_budget(cl); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    fmt::print("{} {:>2}. {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

#pragma once

// Reference computations used by the tests. Nothing here calls into the library,
// so agreement with library results is a genuine cross-check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct Shape2 {
  bool box = true;
  Eigen::Vector2d half{1.0, 1.0};  // box half widths or ellipse semi-axes
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  double heading = 0.0;

  Eigen::Matrix2d R() const {
    const double c = std::cos(heading), s = std::sin(heading);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
  }
};

// Closest point of an axis-aligned ellipse to y (y outside or inside).
inline Eigen::Vector2d project_ellipse_local(const Eigen::Vector2d& a, const Eigen::Vector2d& y) {
  if ((y.array() / a.array()).square().sum() <= 1.0) return y;
  // x_i = a_i^2 y_i / (a_i^2 + t) with t > 0 the root of sum (a_i y_i / (a_i^2 + t))^2 = 1.
  auto f = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < 2; ++i) s += std::pow(a(i) * y(i) / (a(i) * a(i) + t), 2);
    return s - 1.0;
  };
  double lo = 0.0, hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  Eigen::Vector2d x;
  for (int i = 0; i < 2; ++i) x(i) = a(i) * a(i) * y(i) / (a(i) * a(i) + t);
  return x;
}

inline Eigen::Vector2d project(const Shape2& sh, const Eigen::Vector2d& z) {
  const Eigen::Matrix2d R = sh.R();
  const Eigen::Vector2d y = R.transpose() * (z - sh.p);
  Eigen::Vector2d q;
  if (sh.box)
    q = y.cwiseMax(-sh.half).cwiseMin(sh.half);
  else
    q = project_ellipse_local(sh.half, y);
  return R * q + sh.p;
}

// Distance between two convex shapes by alternating projections (0 if they meet).
inline double distance(const Shape2& A, const Shape2& B, int max_iter = 200000) {
  Eigen::Vector2d b = B.p, a = project(A, b);
  double prev = (a - b).norm();
  for (int it = 0; it < max_iter; ++it) {
    b = project(B, a);
    a = project(A, b);
    const double d = (a - b).norm();
    if (prev - d <= 1e-15 * (1.0 + d)) {
      prev = d;
      break;
    }
    prev = d;
  }
  return prev;
}

// Separating-axis test for two rectangles; touching counts as overlap.
inline bool rectangles_overlap(const Shape2& A, const Shape2& B) {
  const Eigen::Matrix2d RA = A.R(), RB = B.R();
  const Eigen::Vector2d d = B.p - A.p;
  for (const Eigen::Matrix2d* R : {&RA, &RB}) {
    for (int ax = 0; ax < 2; ++ax) {
      const Eigen::Vector2d n = R->col(ax);
      const double ra = A.half(0) * std::abs(n.dot(RA.col(0))) + A.half(1) * std::abs(n.dot(RA.col(1)));
      const double rb = B.half(0) * std::abs(n.dot(RB.col(0))) + B.half(1) * std::abs(n.dot(RB.col(1)));
      if (std::abs(n.dot(d)) > ra + rb) return false;
    }
  }
  return true;
}

// Standard normal quantile by bisection on erfc.
inline double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Variance of N(0, sigma^2) truncated to [-b sigma, b sigma].
inline double truncated_variance(double sigma, double b) {
  const double phi = std::exp(-0.5 * b * b) / std::sqrt(2.0 * M_PI);
  const double mass = std::erf(b / std::sqrt(2.0));
  return sigma * sigma * (1.0 - 2.0 * b * phi / mass);
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Least-squares slope of log(err) against log(t).
inline double loglog_slope(const std::vector<double>& t, const std::vector<double>& err) {
  const int n = static_cast<int>(t.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(t[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle

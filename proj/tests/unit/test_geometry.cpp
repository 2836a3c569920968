#include <gtest/gtest.h>

#include <random>

#include "dualmpc/errors.hpp"
#include "dualmpc/geometry.hpp"

using namespace dualmpc;
using Eigen::Vector2d;
using Eigen::VectorXd;

TEST(Geometry, BoxMembership) {
  const ConeSet box = make_box(Vector2d(2.0, 1.0));
  EXPECT_TRUE(box.contains_local(Vector2d(1.9, -0.9)));
  EXPECT_TRUE(box.contains_local(Vector2d(2.0, 1.0)));
  EXPECT_FALSE(box.contains_local(Vector2d(2.1, 0.0)));
  EXPECT_FALSE(box.contains_local(Vector2d(0.0, -1.1)));
}

TEST(Geometry, EllipseMembership) {
  const ConeSet e = make_ellipsoid(Vector2d(2.0, 1.0));
  EXPECT_TRUE(e.contains_local(Vector2d(1.9, 0.0)));
  EXPECT_FALSE(e.contains_local(Vector2d(1.5, 0.8)));
  EXPECT_TRUE(e.contains_local(Vector2d(1.5, 0.6)));
}

TEST(Geometry, SupportMatchesClosedForm) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const Vector2d a(1.7, 0.6);
  const ConeSet box = make_box(a), ell = make_ellipsoid(a);
  for (int t = 0; t < 20; ++t) {
    const Vector2d d(g(rng), g(rng));
    EXPECT_NEAR(box.support(d), a.cwiseProduct(d).cwiseAbs().sum(), 1e-6);
    EXPECT_NEAR(ell.support(d), a.cwiseProduct(d).norm(), 1e-6);
  }
}

TEST(Geometry, PoseRoundTrip) {
  const Pose p = Pose::planar(1.0, -2.0, 0.7);
  const Vector2d z(3.0, 4.0);
  EXPECT_LT((p.to_world(p.to_body(z)) - z).norm(), 1e-12);
  EXPECT_NEAR(p.R.determinant(), 1.0, 1e-12);
}

TEST(Geometry, PosedContainment) {
  const ConeSet box = make_box(Vector2d(2.0, 0.5));
  const Pose p = Pose::planar(5.0, 0.0, M_PI / 2);
  EXPECT_TRUE(contains(box, p, Vector2d(5.0, 1.9)));
  EXPECT_FALSE(contains(box, p, Vector2d(6.9, 0.0)));
}

TEST(Geometry, SelfDualCones) {
  const ConeDescriptor soc = ConeDescriptor::second_order(3);
  EXPECT_TRUE(dual_cone_membership(Eigen::Vector3d(1.0, 0.6, 0.8), soc));
  EXPECT_FALSE(dual_cone_membership(Eigen::Vector3d(1.0, 0.7, 0.8), soc));
  const ConeDescriptor orth = ConeDescriptor::orthant(2);
  EXPECT_TRUE(dual_cone_membership(Vector2d(0.0, 3.0), orth));
  EXPECT_FALSE(dual_cone_membership(Vector2d(-1e-3, 3.0), orth));
}

TEST(Geometry, RejectsBadShapes) {
  EXPECT_THROW(make_box(Vector2d(-1.0, 1.0)), ValidationError);
  EXPECT_THROW(make_ellipsoid(Vector2d(0.0, 1.0)), ValidationError);
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(ConeSet(G, Eigen::VectorXd::Ones(3), ConeDescriptor::orthant(2), VectorXd::Zero(2)), ValidationError);
}

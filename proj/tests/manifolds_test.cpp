#include "rfree/manifolds/euclidean.hpp"
#include "rfree/manifolds/grassmann.hpp"
#include "rfree/manifolds/poincare.hpp"
#include "rfree/manifolds/product.hpp"
#include "rfree/manifolds/sphere.hpp"
#include "rfree/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

namespace rfree {
namespace {

Vec unit(int dim, int i) {
  Vec e = Vec::Zero(dim);
  e(i) = 1.0;
  return e;
}

Vec random_unit(int dim, Rng& rng) {
  Vec g(dim);
  for (int i = 0; i < dim; ++i) g(i) = rng.normal();
  return g / g.norm();
}

// ---------------------------------------------------------------------------
// Euclidean
// ---------------------------------------------------------------------------

TEST(Euclidean, ExpIsAddition) {
  EuclideanManifold m(2);
  Vec x(2), v(2);
  x << 1, 1;
  v << 2, -1;
  Vec y = m.exp(x, v);
  EXPECT_EQ(y(0), 3.0);
  EXPECT_EQ(y(1), 0.0);
  EXPECT_EQ(m.distance(x, y), v.norm());
  EXPECT_TRUE(m.log(x, y).isApprox(v));
}

// ---------------------------------------------------------------------------
// Sphere
// ---------------------------------------------------------------------------

TEST(Sphere, DistanceAndLogBetweenAxes) {
  SphereManifold m(3);
  const Vec e1 = unit(3, 0), e2 = unit(3, 1);
  EXPECT_NEAR(m.distance(e1, e2), M_PI / 2.0, 1e-15);
  const Vec l = m.log(e1, e2);
  EXPECT_NEAR((l - (M_PI / 2.0) * e2).norm(), 0.0, 1e-14);
}

TEST(Sphere, ExpQuarterAndHalfTurns) {
  SphereManifold m(3);
  const Vec e1 = unit(3, 0), e2 = unit(3, 1), e3 = unit(3, 2);
  EXPECT_NEAR((m.exp(e3, Vec((M_PI / 2.0) * e1)) - e1).norm(), 0.0, 1e-14);
  EXPECT_NEAR((m.exp(e1, Vec(-(M_PI / 2.0) * e2)) + e2).norm(), 0.0, 1e-14);
  EXPECT_NEAR((m.exp(e1, Vec(M_PI * e2)) + e1).norm(), 0.0, 1e-14);  // antipode
  EXPECT_TRUE(m.exp(e1, Vec(Vec::Zero(3))).isApprox(e1));
}

TEST(Sphere, AntipodalLogFlagsCutLocus) {
  SphereManifold m(3);
  const Vec e1 = unit(3, 0);
  bool cut = false;
  const Vec l = m.log(e1, Vec(-e1), &cut);
  EXPECT_TRUE(cut);
  EXPECT_NEAR(l.norm(), M_PI, 1e-12);
  EXPECT_NEAR(e1.dot(l), 0.0, 1e-12);                     // tangent
  EXPECT_NEAR(m.distance(m.exp(e1, l), Vec(-e1)), 0.0, 1e-7);  // still lands there
  cut = true;
  m.log(e1, unit(3, 1), &cut);
  EXPECT_FALSE(cut);
}

TEST(Sphere, ProjectToTangent) {
  SphereManifold m(3);
  const Vec e1 = unit(3, 0), e2 = unit(3, 1);
  EXPECT_NEAR(m.project_to_tangent(e1, e1).norm(), 0.0, 1e-15);
  EXPECT_TRUE(m.project_to_tangent(e1, e2).isApprox(e2));
}

TEST(Sphere, TransportModes) {
  SphereManifold proj(4, false);
  SphereManifold exact(4, true);
  EXPECT_FALSE(proj.transport_is_exact());
  EXPECT_TRUE(exact.transport_is_exact());
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec x = random_unit(4, rng);
    const Vec y = random_unit(4, rng);
    const Vec v = proj.project_to_tangent(x, random_unit(4, rng));
    const Vec tv = exact.transport(x, y, v);
    EXPECT_TRUE(exact.in_tangent(y, tv, 1e-9));
    EXPECT_NEAR(tv.norm(), v.norm(), 1e-9);  // exact transport preserves norms
    // Projection transport lands in the tangent space but may shrink.
    const Vec pv = proj.transport(x, y, v);
    EXPECT_TRUE(proj.in_tangent(y, pv, 1e-9));
    EXPECT_LE(pv.norm(), v.norm() + 1e-12);
  }
}

TEST(Sphere, RoundTrip) {
  SphereManifold m(5);
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = random_unit(5, rng);
    const Vec y = random_unit(5, rng);
    const Vec l = m.log(x, y);
    EXPECT_NEAR(m.distance(m.exp(x, l), y), 0.0, 1e-7);
    EXPECT_NEAR(m.norm(x, l), m.distance(x, y), 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Grassmann
// ---------------------------------------------------------------------------

TEST(Grassmann, RotatedRepresentativesAreEqual) {
  GrassmannManifold m(4, 2);
  Mat X(4, 2);
  X << 1, 0, 0, 1, 0, 0, 0, 0;
  const double c = std::cos(0.7), s = std::sin(0.7);
  Mat R(2, 2);
  R << c, -s, s, c;
  const Vec x = GrassmannManifold::flatten(X);
  const Vec y = GrassmannManifold::flatten(Mat(X * R));
  EXPECT_TRUE(m.contains(y, 1e-12));
  EXPECT_NEAR(m.distance(x, y), 0.0, 1e-9);
  EXPECT_TRUE(m.points_equal(x, y, 1e-9));
  // Ambient vectors in the column span project to zero tangents.
  EXPECT_NEAR(m.project_to_tangent(x, y).norm(), 0.0, 1e-12);
}

TEST(Grassmann, OrthogonalSubspacesDistance) {
  GrassmannManifold m(4, 2);
  Mat X(4, 2), Y(4, 2);
  X << 1, 0, 0, 1, 0, 0, 0, 0;
  Y << 0, 0, 0, 0, 1, 0, 0, 1;
  // Both principal angles are pi/2.
  EXPECT_NEAR(m.distance(GrassmannManifold::flatten(X), GrassmannManifold::flatten(Y)),
              M_PI / std::sqrt(2.0), 1e-12);
}

TEST(Grassmann, SingularOverlapFlagsCutLocus) {
  GrassmannManifold m(4, 2);
  Mat X(4, 2), Y(4, 2);
  X << 1, 0, 0, 1, 0, 0, 0, 0;
  Y << 1, 0, 0, 0, 0, 1, 0, 0;  // shares e1, second direction orthogonal
  bool cut = false;
  m.log(GrassmannManifold::flatten(X), GrassmannManifold::flatten(Y), &cut);
  EXPECT_TRUE(cut);  // x^T y is singular
}

TEST(Grassmann, ExpLogRoundTrip) {
  GrassmannManifold m(6, 2);
  Rng rng(9);
  for (int i = 0; i < 300; ++i) {
    Vec gx(12), gy(12);
    for (int k = 0; k < 12; ++k) {
      gx(k) = rng.normal();
      gy(k) = rng.normal();
    }
    const Vec x = m.project(gx);
    const Vec y = m.project(gy);
    ASSERT_TRUE(m.contains(x, 1e-10));
    const Vec l = m.log(x, y);
    EXPECT_TRUE(m.in_tangent(x, l, 1e-8));
    EXPECT_NEAR(m.distance(m.exp(x, l), y), 0.0, 1e-6);
    EXPECT_NEAR(m.norm(x, l), m.distance(x, y), 1e-6);
  }
}

TEST(Grassmann, ExpStaysOnManifoldAndMatchesNorm) {
  GrassmannManifold m(5, 2);
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    Vec gx(10), gv(10);
    for (int k = 0; k < 10; ++k) {
      gx(k) = rng.normal();
      gv(k) = rng.normal();
    }
    const Vec x = m.project(gx);
    Vec v = m.project_to_tangent(x, gv);
    v *= 0.5 / std::max(v.norm(), 1e-12);  // inside injectivity margin
    const Vec y = m.exp(x, v);
    EXPECT_TRUE(m.contains(y, 1e-9));
    EXPECT_NEAR(m.distance(x, y), v.norm(), 1e-7);
  }
}

// ---------------------------------------------------------------------------
// Poincare ball
// ---------------------------------------------------------------------------

TEST(Poincare, MobiusIdentities) {
  Rng rng(13);
  Vec zero = Vec::Zero(3);
  for (int i = 0; i < 50; ++i) {
    Vec x(3);
    for (int k = 0; k < 3; ++k) x(k) = rng.uniform(-0.5, 0.5);
    EXPECT_NEAR((mobius_add(x, zero) - x).norm(), 0.0, 1e-15);
    EXPECT_NEAR((mobius_add(zero, x) - x).norm(), 0.0, 1e-15);
    EXPECT_NEAR(mobius_add(Vec(-x), x).norm(), 0.0, 1e-14);
  }
  // Frozen value: substitution of x = y = (0.3, 0) into the closed form.
  Vec x(2);
  x << 0.3, 0.0;
  const Vec s = mobius_add(x, x);
  // ((1 + 2*0.09 + 0.09)*0.3 + (1-0.09)*0.3) / (1 + 2*0.09 + 0.0081)
  EXPECT_NEAR(s(0), (1.27 * 0.3 + 0.91 * 0.3) / 1.1881, 1e-15);
  EXPECT_NEAR(s(1), 0.0, 1e-15);
}

TEST(Poincare, DistanceFromOrigin) {
  PoincareBall m(2);
  Vec zero = Vec::Zero(2);
  Vec y(2);
  y << 0.5, 0.0;
  // 2 artanh(0.5) = ln 3.
  EXPECT_NEAR(m.distance(zero, y), 1.0986122886681098, 1e-14);
  const Vec l = m.log(zero, y);
  EXPECT_NEAR(l(0), 0.5493061443340548, 1e-14);  // artanh(0.5)
  EXPECT_NEAR(l(1), 0.0, 1e-15);
  EXPECT_NEAR(m.norm(zero, l), m.distance(zero, y), 1e-14);
}

TEST(Poincare, ExpLogRoundTrip) {
  PoincareBall m(4);
  Rng rng(15);
  for (int i = 0; i < 1000; ++i) {
    auto sample = [&] {
      Vec g(4);
      for (int k = 0; k < 4; ++k) g(k) = rng.normal();
      return Vec((0.9 * rng.uniform() / g.norm()) * g);
    };
    const Vec x = sample(), y = sample();
    const Vec l = m.log(x, y);
    EXPECT_NEAR(m.distance(m.exp(x, l), y), 0.0, 1e-7);
    EXPECT_NEAR(m.norm(x, l), m.distance(x, y), 1e-9);
  }
}

TEST(Poincare, TransportPreservesNorm) {
  PoincareBall m(3);
  EXPECT_TRUE(m.transport_is_exact());
  Rng rng(16);
  for (int i = 0; i < 200; ++i) {
    auto sample = [&] {
      Vec g(3);
      for (int k = 0; k < 3; ++k) g(k) = rng.normal();
      return Vec((0.8 * rng.uniform() / g.norm()) * g);
    };
    const Vec x = sample(), y = sample();
    Vec v(3);
    for (int k = 0; k < 3; ++k) v(k) = rng.normal();
    const Vec tv = m.transport(x, y, v);
    EXPECT_NEAR(m.norm(y, tv), m.norm(x, v), 1e-9 * (1.0 + m.norm(x, v)));
  }
}

TEST(Poincare, BoundaryClipAndGuards) {
  PoincareBall m(2);
  Vec far(2);
  far << 5.0, 0.0;
  const Vec p = m.project(far);
  EXPECT_LE(p.norm(), PoincareBall::kMaxNorm + 1e-15);
  EXPECT_FALSE(m.contains(far));
  EXPECT_TRUE(m.contains(p));
  // Huge tangent steps stay inside the ball.
  Vec x = Vec::Zero(2), v(2);
  v << 1e6, 0.0;
  const Vec y = m.exp(x, v);
  EXPECT_LT(y.norm(), 1.0);
  EXPECT_TRUE(std::isfinite(m.distance(x, y)));
}

TEST(Poincare, EgradScaling) {
  PoincareBall m(2);
  Vec zero = Vec::Zero(2), g(2);
  g << 2.0, -4.0;
  EXPECT_TRUE(m.egrad_to_rgrad(zero, g).isApprox(Vec(0.25 * g)));
  Vec x(2);
  x << 0.6, 0.0;  // (1 - 0.36)^2 / 4 = 0.1024
  EXPECT_TRUE(m.egrad_to_rgrad(x, g).isApprox(Vec(0.1024 * g), 1e-12));
}

// ---------------------------------------------------------------------------
// Product
// ---------------------------------------------------------------------------

TEST(Product, DistanceDecomposesAndKappaIsMin) {
  auto sphere = std::make_shared<const SphereManifold>(3);
  auto ball = std::make_shared<const PoincareBall>(2);
  ProductManifold m({sphere, ball});
  EXPECT_EQ(m.ambient_dim(), 5);
  EXPECT_EQ(m.kappa(), -1.0);

  Vec x(5), y(5);
  x << 1, 0, 0, 0.0, 0.0;
  y << 0, 1, 0, 0.5, 0.0;
  const double d1 = sphere->distance(x.head(3), y.head(3));
  const double d2 = ball->distance(x.tail(2), y.tail(2));
  EXPECT_NEAR(m.distance(x, y), std::sqrt(d1 * d1 + d2 * d2), 1e-15);
  EXPECT_TRUE(m.contains(x));
  EXPECT_TRUE(m.contains(y));
}

TEST(Product, ComponentwiseExpLogTransport) {
  auto flat = std::make_shared<const EuclideanManifold>(2);
  auto ball = std::make_shared<const PoincareBall>(2);
  ProductManifold m({flat, ball});
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    Vec x(4), y(4);
    for (int k = 0; k < 2; ++k) {
      x(k) = rng.normal();
      y(k) = rng.normal();
    }
    for (int k = 2; k < 4; ++k) {
      x(k) = rng.uniform(-0.5, 0.5);
      y(k) = rng.uniform(-0.5, 0.5);
    }
    const Vec l = m.log(x, y);
    EXPECT_NEAR(m.distance(m.exp(x, l), y), 0.0, 1e-8);
    EXPECT_NEAR(m.norm(x, l), m.distance(x, y), 1e-9);
  }
  EXPECT_FALSE(ProductManifold({flat, std::make_shared<const SphereManifold>(3)})
                   .transport_is_exact());
  EXPECT_TRUE(m.transport_is_exact());
}

TEST(Product, ReplicateAndBlocks) {
  auto ball = std::make_shared<const PoincareBall>(3);
  ProductManifold m = ProductManifold::replicate(ball, 4);
  EXPECT_EQ(m.num_components(), 4u);
  EXPECT_EQ(m.ambient_dim(), 12);
  EXPECT_EQ(m.offset(2), 6);
  Vec x = Vec::Zero(12);
  x(7) = 0.25;
  EXPECT_EQ(m.block(x, 2)(1), 0.25);
}

}  // namespace
}  // namespace rfree

#include "rfree/problems.hpp"
#include "rfree/data.hpp"
#include "rfree/metrics.hpp"
#include "rfree/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>

namespace rfree {
namespace {

// ---------------------------------------------------------------------------
// Rayleigh quotient
// ---------------------------------------------------------------------------

TEST(Rayleigh, IdentityMatrixLoss) {
  RayleighProblem p{Mat::Identity(4, 4)};
  SphereManifold m(4);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    Vec x(4);
    for (int k = 0; k < 4; ++k) x(k) = rng.normal();
    x /= x.norm();
    EXPECT_NEAR(p.loss(x), -0.5, 1e-14);
    EXPECT_NEAR(p.grad(m, x).norm(), 0.0, 1e-14);
  }
}

TEST(Rayleigh, GradientVanishesAtEigenvectors) {
  Mat A(2, 2);
  A << 2, 0, 0, 1;
  RayleighProblem p{A};
  SphereManifold m(2);
  Vec e2(2);
  e2 << 0, 1;
  EXPECT_NEAR(p.loss(e2), -0.5, 1e-15);
  EXPECT_NEAR(p.grad(m, e2).norm(), 0.0, 1e-15);
  // Non-eigenvector: gradient points toward the dominant axis.
  Vec x(2);
  x << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const Vec g = p.grad(m, x);
  EXPECT_GT(g.norm(), 0.1);
  EXPECT_NEAR(x.dot(g), 0.0, 1e-14);  // tangent
}

TEST(Rayleigh, FiniteDifferenceGradient) {
  auto m = std::make_shared<const SphereManifold>(6);
  RayleighProblem p = RayleighProblem::generate(6, 8, 42);
  EXPECT_NEAR((p.A - p.A.transpose()).norm(), 0.0, 1e-14);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vec x = random_point(*m, rng);
    const double err = fd_gradient_error(
        *m, [&](const Vec& y) { return p.loss(y); }, x, p.grad(*m, x), rng);
    ASSERT_LE(err, 1e-4);
  }
}

TEST(Rayleigh, GeneratedMatrixIsPSD) {
  const Mat A = generate_rayleigh_matrix(10, 12, 7);
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  // Optimum matches an independent eigendecomposition.
  const ReferenceSolution ref = rayleigh_reference(A);
  SphereManifold m(10);
  RayleighProblem p{A};
  EXPECT_NEAR(p.grad(m, ref.x_star).norm(), 0.0, 1e-10);
  EXPECT_NEAR(p.loss(ref.x_star), ref.f_star, 1e-12);
}

// ---------------------------------------------------------------------------
// PCA on the Grassmann manifold
// ---------------------------------------------------------------------------

TEST(PCA, FullRankSubspaceHasZeroLoss) {
  Rng rng(3);
  Mat Z(5, 3);
  for (int i = 0; i < 15; ++i) Z.data()[i] = rng.normal();
  GrassmannManifold m(3, 3);
  PCAProblem p{Z, 3, 0};
  const Vec x = GrassmannManifold::flatten(Mat(Mat::Identity(3, 3)));
  EXPECT_NEAR(p.loss(m, x), 0.0, 1e-12);
}

TEST(PCA, ToyResidual) {
  // r = 1, x = e1: loss is the mean of the squared non-first coordinates.
  Mat Z(3, 3);
  Z << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  GrassmannManifold m(3, 1);
  PCAProblem p{Z, 1, 0};
  Mat X(3, 1);
  X << 1, 0, 0;
  const double expect = (4.0 + 9.0 + 25.0 + 36.0 + 64.0 + 81.0) / 3.0;
  EXPECT_NEAR(p.loss(m, GrassmannManifold::flatten(X)), expect, 1e-12);
}

TEST(PCA, GradientVanishesAtTopEigenspace) {
  TabularDataset ds = generate_gaussian_mixture(200, 6, 2, 11);
  standardize(ds.features);
  GrassmannManifold m(6, 2);
  PCAProblem p{ds.features, 2, 0};
  const ReferenceSolution ref = pca_reference(ds.features, 2);
  EXPECT_NEAR(p.grad_full(m, ref.x_star).norm(), 0.0, 1e-9);
  EXPECT_NEAR(p.loss(m, ref.x_star), ref.f_star, 1e-10);
}

TEST(PCA, FiniteDifferenceGradient) {
  auto m = std::make_shared<const GrassmannManifold>(5, 2);
  TabularDataset ds = generate_gaussian_mixture(100, 5, 2, 4);
  standardize(ds.features);
  PCAProblem p{ds.features, 2, 0};
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec x = random_point(*m, rng);
    const double err = fd_gradient_error(
        *m, [&](const Vec& y) { return p.loss(*m, y); }, x, p.grad_full(*m, x), rng);
    ASSERT_LE(err, 1e-4);
  }
}

TEST(PCA, MinibatchGradientUnbiased) {
  auto m = std::make_shared<const GrassmannManifold>(4, 1);
  TabularDataset ds = generate_gaussian_mixture(50, 4, 2, 9);
  standardize(ds.features);
  PCAProblem p{ds.features, 1, 8};
  Rng rng(6);
  const Vec x = random_point(*m, rng);
  const Vec full = p.grad_full(*m, x);
  StochasticOracle oracle = p.oracle(m);

  const int trials = 10000;
  Vec mean = Vec::Zero(4);
  Mat samples(trials, 4);
  for (int i = 0; i < trials; ++i) {
    const Vec g = oracle.grad(x, rng);
    mean += g;
    samples.row(i) = g.transpose();
  }
  mean /= trials;
  for (int k = 0; k < 4; ++k) {
    const double sd = std::sqrt((samples.col(k).array() - mean(k)).square().sum() /
                                (trials - 1));
    const double se = sd / std::sqrt(static_cast<double>(trials));
    ASSERT_NEAR(mean(k), full(k), 3.0 * se + 1e-12);
  }
  EXPECT_THROW(p.egrad(*m, x, {}), std::invalid_argument);  // empty batch
}

// ---------------------------------------------------------------------------
// Poincare embedding
// ---------------------------------------------------------------------------

EmbeddingProblem make_tree_problem(int depth = 2, int dim = 2, int negs = 3, int batch = 4) {
  return EmbeddingProblem(transitive_closure(balanced_tree(depth)), dim, negs, batch);
}

TEST(Embedding, RequiresClosedGraph) {
  EXPECT_THROW(EmbeddingProblem(balanced_tree(2), 2, 3, 4), std::invalid_argument);
  EXPECT_NO_THROW(make_tree_problem());
}

TEST(Embedding, NegativeCandidatesExcludeRelatedNodes) {
  const EmbeddingProblem p = make_tree_problem(2);
  // Root relates to everything after closure: no candidates.
  EXPECT_TRUE(p.negative_candidates(0).empty());
  // A leaf relates to nothing: everyone else is a candidate.
  const auto leaf = p.negative_candidates(6);
  EXPECT_EQ(static_cast<int>(leaf.size()), p.num_nodes() - 1);
  // Node 1 (internal): candidates exclude itself and its 2 children, plus
  // descendants 3, 4.
  const auto n1 = p.negative_candidates(1);
  for (int c : n1) {
    EXPECT_NE(c, 1);
    EXPECT_NE(c, 3);
    EXPECT_NE(c, 4);
  }
}

TEST(Embedding, SingletonCandidateLossIsZero) {
  const EmbeddingProblem p = make_tree_problem(2);
  Rng rng(7);
  Vec theta(p.num_nodes() * p.dim());
  for (int i = 0; i < theta.size(); ++i) theta(i) = rng.uniform(-0.1, 0.1);
  // Softmax over {v} alone: -log(1) = 0.
  EXPECT_NEAR(p.pair_loss(theta, 0, 1, {1}), 0.0, 1e-15);
}

TEST(Embedding, EquidistantPairGivesLogTwo) {
  const EmbeddingProblem p = make_tree_problem(2, 2);
  Vec theta = Vec::Zero(p.num_nodes() * 2);
  theta(1 * 2 + 0) = 0.3;   // node 1 at (0.3, 0)
  theta(5 * 2 + 0) = -0.3;  // node 5 at (-0.3, 0): same distance from node 0
  EXPECT_NEAR(p.pair_loss(theta, 0, 1, {5, 1}), std::log(2.0), 1e-12);
}

TEST(Embedding, SampleNegativesStatistics) {
  // 5-node star a->b,c,d,e: anchor b has 4 candidates minus related = c,d,e? No:
  // use a hand graph where anchor u = 1 has exactly 2 candidates.
  RelationGraph g;
  g.node_names = {"a", "b", "c", "d"};
  g.edges = {{0, 1}, {0, 2}, {0, 3}, {1, 2}};  // closed already (no chains)
  g.closed = true;
  EmbeddingProblem p(g, 2, 1, 1);
  const auto cand = p.negative_candidates(1);  // b: excludes itself, c -> {a, d}
  ASSERT_EQ(cand.size(), 2u);

  Rng rng(8);
  std::map<int, int> counts;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    const auto s = p.sample_negatives(1, 1, rng, NegScheme::kUniform);
    counts[s[0]]++;
  }
  // Chi-squared against the uniform split; 1 dof, 99.9% quantile ~ 10.8.
  double chi2 = 0.0;
  for (int c : cand) {
    const double e = trials / 2.0;
    chi2 += (counts[c] - e) * (counts[c] - e) / e;
  }
  EXPECT_LT(chi2, 10.8);
  EXPECT_THROW(p.sample_negatives(1, 0, rng, NegScheme::kUniform), std::invalid_argument);
}

TEST(Embedding, DegreeWeightedSamplingRatio) {
  // Anchor 0 has exactly two candidates with degrees 1 and 16: node 0 relates
  // to node 1 and to every filler node, leaving candidates 2 (degree 1 via its
  // single edge) and 3 (degree 16 via 15 filler edges plus one to node 1).
  RelationGraph g;
  const int extra = 15;
  g.node_names = {"u", "v", "lo", "hi"};
  g.edges = {{0, 1}, {2, 1}, {3, 1}};
  for (int i = 0; i < extra; ++i) {
    g.node_names.push_back("x" + std::to_string(i));
    g.edges.insert({0, 4 + i});
    g.edges.insert({3, 4 + i});
  }
  g.closed = true;  // no two-hop chains, already closed
  EmbeddingProblem p(g, 2, 1, 1);
  ASSERT_EQ(p.negative_candidates(0).size(), 2u);
  // degree(2) = 1, degree(3) = 16; expected draw ratio 16^0.75 = 8.
  Rng rng(9);
  int lo = 0, hi = 0;
  const int trials = 45000;
  for (int i = 0; i < trials; ++i) {
    const auto s = p.sample_negatives(0, 1, rng, NegScheme::kDegree34);
    if (s[0] == 2) ++lo;
    if (s[0] == 3) ++hi;
  }
  ASSERT_EQ(lo + hi, trials);
  EXPECT_NEAR(static_cast<double>(hi) / lo, 8.0, 0.5);
}

TEST(Embedding, FiniteDifferenceGradient) {
  const EmbeddingProblem p = make_tree_problem(2, 2);
  auto m = p.make_manifold();
  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    Vec theta(m->ambient_dim());
    for (int k = 0; k < theta.size(); ++k) theta(k) = rng.uniform(-0.4, 0.4);
    const Vec g = p.grad_full(theta);
    const double err = fd_gradient_error(
        *m, [&](const Vec& y) { return p.full_loss(y); }, theta, g, rng, 6, 1e-6);
    ASSERT_LE(err, 1e-4);
  }
}

TEST(Embedding, OracleEpochCoversEveryRelationOnce) {
  const EmbeddingProblem p = make_tree_problem(2, 2, 2, 3);
  // 7 nodes, closure has 10 edges; batch 3 -> 4 oracle calls per epoch.
  EXPECT_EQ(static_cast<int>(p.relations().size()), 10);
  EXPECT_EQ(p.iterations_per_epoch(), 4);
  StochasticOracle oracle = p.oracle();
  Vec theta = Vec::Zero(p.num_nodes() * 2);
  Rng rng(11);
  for (int call = 0; call < 8; ++call) {
    const Vec g = oracle.grad(theta, rng);
    EXPECT_TRUE(g.allFinite());
  }
}

TEST(Embedding, DistanceGradientClosedForm) {
  PoincareBall ball(3);
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    Vec x(3), y(3);
    for (int k = 0; k < 3; ++k) {
      x(k) = rng.uniform(-0.4, 0.4);
      y(k) = rng.uniform(-0.4, 0.4);
    }
    if ((x - y).norm() < 1e-3) continue;
    const Vec eg = poincare_distance_egrad(x, y);
    // Central differences of the ambient distance function.
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Vec xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      const double fd = (ball.distance(xp, y) - ball.distance(xm, y)) / (2.0 * h);
      ASSERT_NEAR(eg(k), fd, 1e-5 * (1.0 + std::abs(fd)));
    }
  }
}

}  // namespace
}  // namespace rfree

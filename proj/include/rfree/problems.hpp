#pragma once

#include "rfree/data.hpp"
#include "rfree/geometry.hpp"
#include "rfree/manifolds/grassmann.hpp"
#include "rfree/manifolds/poincare.hpp"
#include "rfree/manifolds/product.hpp"
#include "rfree/manifolds/sphere.hpp"
#include "rfree/optim.hpp"

#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace rfree {

// ---------------------------------------------------------------------------
// Rayleigh quotient on the sphere: minimize -1/2 x^T A x.
// ---------------------------------------------------------------------------

struct RayleighProblem {
  Mat A;  // symmetric PSD

  int dim() const { return static_cast<int>(A.rows()); }

  double loss(const Vec& x) const { return -0.5 * x.dot(A * x); }

  Vec grad(const SphereManifold& m, const Vec& x) const {
    return m.project_to_tangent(x, -(A * x));
  }

  // Deterministic full-batch oracle.
  StochasticOracle oracle(std::shared_ptr<const SphereManifold> m) const {
    const Mat A_copy = A;
    return StochasticOracle{
        [A_copy](const Vec& x) { return -0.5 * x.dot(A_copy * x); },
        [A_copy, m](const Vec& x, Rng&) {
          return m->project_to_tangent(x, Vec(-(A_copy * x)));
        }};
  }

  static RayleighProblem generate(int d, int q, std::uint64_t seed) {
    return RayleighProblem{generate_rayleigh_matrix(d, q, seed)};
  }
};

// ---------------------------------------------------------------------------
// PCA on the Grassmann manifold: minimize (1/n) sum ||z - x x^T z||^2.
// ---------------------------------------------------------------------------

struct PCAProblem {
  Mat Z;  // n x d data matrix (rows are samples)
  int r = 1;
  int batch_size = 0;  // 0: full batch

  int n() const { return static_cast<int>(Z.rows()); }
  int d() const { return static_cast<int>(Z.cols()); }

  double loss(const GrassmannManifold& m, const Vec& xflat) const {
    const Mat X = m.unflatten(xflat);
    const Mat P = Z * X;  // n x r
    return (Z.squaredNorm() - P.squaredNorm()) / n();
  }

  // Euclidean gradient over the given rows: -(2/|B|) sum z z^T x.
  Vec egrad(const GrassmannManifold& m, const Vec& xflat,
            const std::vector<int>& batch) const {
    if (batch.empty()) throw std::invalid_argument("pca: empty batch");
    const Mat X = m.unflatten(xflat);
    Mat G = Mat::Zero(d(), r);
    for (int i : batch) {
      const Vec z = Z.row(i).transpose();
      G.noalias() -= z * (z.transpose() * X);
    }
    G *= 2.0 / static_cast<double>(batch.size());
    return GrassmannManifold::flatten(G);
  }

  Vec grad_full(const GrassmannManifold& m, const Vec& xflat) const {
    std::vector<int> all(n());
    std::iota(all.begin(), all.end(), 0);
    return m.project_to_tangent(xflat, egrad(m, xflat, all));
  }

  StochasticOracle oracle(std::shared_ptr<const GrassmannManifold> m) const {
    auto self = std::make_shared<PCAProblem>(*this);
    return StochasticOracle{
        [self, m](const Vec& x) { return self->loss(*m, x); },
        [self, m](const Vec& x, Rng& rng) {
          if (self->batch_size <= 0 || self->batch_size >= self->n())
            return self->grad_full(*m, x);
          std::vector<int> batch(self->batch_size);
          for (int& b : batch) b = static_cast<int>(rng.uniform_int(self->n()));
          return m->project_to_tangent(x, self->egrad(*m, x, batch));
        }};
  }
};

// ---------------------------------------------------------------------------
// Poincare-ball graph embedding with negative sampling.
// ---------------------------------------------------------------------------

enum class NegScheme { kUniform, kDegree34 };

// Euclidean gradient of the arcosh ball distance with respect to x.
inline Vec poincare_distance_egrad(const Vec& x, const Vec& y) {
  const double alpha = 1.0 - x.squaredNorm();
  const double beta = 1.0 - y.squaredNorm();
  const double gamma = 1.0 + 2.0 * (x - y).squaredNorm() / (alpha * beta);
  const double denom = std::sqrt(std::max(gamma * gamma - 1.0, 1e-30));
  return (4.0 / (beta * denom)) *
         (((y.squaredNorm() - 2.0 * x.dot(y) + 1.0) / (alpha * alpha)) * x - y / alpha);
}

class EmbeddingProblem {
 public:
  EmbeddingProblem(RelationGraph graph, int dim, int neg_count, int batch_size,
                   NegScheme scheme = NegScheme::kUniform)
      : graph_(std::move(graph)),
        dim_(dim),
        neg_count_(neg_count),
        batch_size_(batch_size),
        scheme_(scheme) {
    if (!graph_.closed)
      throw std::invalid_argument("embedding: relation graph must be transitively closed");
    if (neg_count_ < 1) throw std::invalid_argument("embedding: neg_count >= 1");
    const int n = graph_.num_nodes();
    out_.assign(n, {});
    degree_.assign(n, 0.0);
    for (const auto& [u, v] : graph_.edges) {
      relations_.emplace_back(u, v);
      out_[u].insert(v);
      degree_[u] += 1.0;
      degree_[v] += 1.0;
    }
  }

  const RelationGraph& graph() const { return graph_; }
  int dim() const { return dim_; }
  int num_nodes() const { return graph_.num_nodes(); }
  const std::vector<std::pair<int, int>>& relations() const { return relations_; }
  int iterations_per_epoch() const {
    return (static_cast<int>(relations_.size()) + batch_size_ - 1) / batch_size_;
  }

  std::shared_ptr<ProductManifold> make_manifold() const {
    auto ball = std::make_shared<const PoincareBall>(dim_);
    return std::make_shared<ProductManifold>(
        std::vector<std::shared_ptr<const Manifold>>(num_nodes(), ball));
  }

  Vec node_coords(const Vec& theta, int u) const { return theta.segment(u * dim_, dim_); }

  // Candidate negatives for anchor u: nodes v' with (u, v') not in R, v' != u.
  std::vector<int> negative_candidates(int u) const {
    std::vector<int> out;
    for (int v = 0; v < num_nodes(); ++v)
      if (v != u && out_[u].count(v) == 0) out.push_back(v);
    return out;
  }

  // count i.i.d. draws, scheme-weighted; the observed target is appended by
  // the caller per the Neg(u, v) definition.
  std::vector<int> sample_negatives(int u, int count, Rng& rng, NegScheme scheme) const {
    if (count < 1) throw std::invalid_argument("sample_negatives: count >= 1");
    const std::vector<int> cand = negative_candidates(u);
    if (cand.empty())
      throw std::runtime_error("sample_negatives: no valid negatives for node " +
                               graph_.node_names[u]);
    std::vector<int> out(count);
    if (scheme == NegScheme::kUniform) {
      for (int& o : out) o = cand[rng.uniform_int(cand.size())];
      return out;
    }
    std::vector<double> cum(cand.size());
    double total = 0.0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      total += std::pow(degree_[cand[i]], 0.75);
      cum[i] = total;
    }
    for (int& o : out) {
      const double r = rng.uniform(0.0, total);
      o = cand[std::lower_bound(cum.begin(), cum.end(), r) - cum.begin()];
    }
    return out;
  }

  // Softmax-of-negative-distances loss for one pair against a candidate set
  // that must contain v.
  double pair_loss(const Vec& theta, int u, int v, const std::vector<int>& neg) const {
    const Vec xu = node_coords(theta, u);
    PoincareBall ball(dim_);
    const double d_uv = ball.distance(xu, node_coords(theta, v));
    // log-sum-exp of -d(u, v') over the candidate set.
    double max_logit = -d_uv;
    std::vector<double> logits;
    logits.reserve(neg.size());
    for (int w : neg) {
      const double l = -ball.distance(xu, node_coords(theta, w));
      logits.push_back(l);
      max_logit = std::max(max_logit, l);
    }
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - max_logit);
    return d_uv + max_logit + std::log(sum);
  }

  // Exact loss: every pair scored against its full negative set.
  double full_loss(const Vec& theta) const {
    double total = 0.0;
    for (const auto& [u, v] : relations_) {
      std::vector<int> neg = negative_candidates(u);
      neg.push_back(v);
      total += pair_loss(theta, u, v, neg);
    }
    return total;
  }

  // Accumulates the Riemannian gradient of one pair's loss into grad.
  void accumulate_pair_grad(const Vec& theta, int u, int v, const std::vector<int>& neg,
                            Vec& grad) const {
    PoincareBall ball(dim_);
    const Vec xu = node_coords(theta, u);
    // Softmax over the candidate set (which contains v).
    std::vector<double> dist(neg.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < neg.size(); ++i) {
      dist[i] = ball.distance(xu, node_coords(theta, neg[i]));
      max_logit = std::max(max_logit, -dist[i]);
    }
    double zsum = 0.0;
    for (double d : dist) zsum += std::exp(-d - max_logit);

    auto add = [&](int node, const Vec& eg) {
      grad.segment(node * dim_, dim_) +=
          ball.egrad_to_rgrad(node_coords(theta, node), eg);
    };

    // Observed edge term: dL/dd(u,v) includes +1.
    {
      const Vec xv = node_coords(theta, v);
      add(u, poincare_distance_egrad(xu, xv));
      add(v, poincare_distance_egrad(xv, xu));
    }
    // Softmax terms: dL/dd(u,v') = -p_{v'}.
    for (std::size_t i = 0; i < neg.size(); ++i) {
      const double p = std::exp(-dist[i] - max_logit) / zsum;
      const Vec xw = node_coords(theta, neg[i]);
      add(u, Vec(-p * poincare_distance_egrad(xu, xw)));
      add(neg[i], Vec(-p * poincare_distance_egrad(xw, xu)));
    }
  }

  // Deterministic full gradient (all pairs, full negative sets).
  Vec grad_full(const Vec& theta) const {
    Vec grad = Vec::Zero(theta.size());
    for (const auto& [u, v] : relations_) {
      std::vector<int> neg = negative_candidates(u);
      neg.push_back(v);
      accumulate_pair_grad(theta, u, v, neg, grad);
    }
    return grad;
  }

  // Stochastic oracle. Batches walk the relation list in a seeded shuffle,
  // one epoch per pass; loss is summed over the batch. burn_in_steps > 0
  // switches negative sampling to degree^{3/4} for that many grad queries.
  StochasticOracle oracle(int burn_in_steps = 0) const {
    struct EpochState {
      std::vector<int> perm;
      std::size_t pos = 0;
      long long calls = 0;
    };
    auto self = std::make_shared<EmbeddingProblem>(*this);
    auto state = std::make_shared<EpochState>();
    return StochasticOracle{
        [self](const Vec& theta) { return self->full_loss(theta); },
        [self, state, burn_in_steps](const Vec& theta, Rng& rng) {
          const auto& rel = self->relations_;
          Vec grad = Vec::Zero(theta.size());
          const NegScheme scheme = (state->calls < burn_in_steps)
                                       ? NegScheme::kDegree34
                                       : self->scheme_;
          ++state->calls;
          for (int b = 0; b < self->batch_size_; ++b) {
            if (state->pos >= state->perm.size()) {
              state->perm.resize(rel.size());
              std::iota(state->perm.begin(), state->perm.end(), 0);
              for (std::size_t i = rel.size() - 1; i > 0; --i)
                std::swap(state->perm[i], state->perm[rng.uniform_int(i + 1)]);
              state->pos = 0;
            }
            const auto [u, v] = rel[state->perm[state->pos++]];
            // Anchors related to every other node have Neg = {v} only.
            std::vector<int> neg;
            if (!self->negative_candidates(u).empty())
              neg = self->sample_negatives(u, self->neg_count_, rng, scheme);
            neg.push_back(v);
            self->accumulate_pair_grad(theta, u, v, neg, grad);
          }
          return grad;
        }};
  }

 private:
  RelationGraph graph_;
  int dim_;
  int neg_count_;
  int batch_size_;
  NegScheme scheme_;
  std::vector<std::pair<int, int>> relations_;
  std::vector<std::set<int>> out_;
  std::vector<double> degree_;
};

}  // namespace rfree

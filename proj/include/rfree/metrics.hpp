#pragma once

#include "rfree/data.hpp"
#include "rfree/geometry.hpp"
#include "rfree/manifolds/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rfree {

// ---------------------------------------------------------------------------
// Reference solutions (independent closed-form optima)
// ---------------------------------------------------------------------------

struct ReferenceSolution {
  Vec x_star;
  double f_star = 0.0;
};

// Top eigenvector of A; optimum of -1/2 x^T A x on the unit sphere.
inline ReferenceSolution rayleigh_reference(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("rayleigh_reference: eigendecomposition failed");
  const int last = static_cast<int>(A.rows()) - 1;  // ascending eigenvalues
  ReferenceSolution ref;
  ref.x_star = es.eigenvectors().col(last);
  ref.f_star = -0.5 * es.eigenvalues()(last);
  return ref;
}

// Dominant r-dimensional eigenspace of the sample second-moment matrix;
// optimum of the reconstruction loss (1/n) sum ||z - x x^T z||^2.
inline ReferenceSolution pca_reference(const Mat& Z, int r) {
  const int n = static_cast<int>(Z.rows());
  const Mat C = (Z.transpose() * Z) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Mat> es(C);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("pca_reference: eigendecomposition failed");
  const int d = static_cast<int>(C.rows());
  Mat X(d, r);
  double kept = 0.0;
  for (int j = 0; j < r; ++j) {
    X.col(j) = es.eigenvectors().col(d - 1 - j);
    kept += es.eigenvalues()(d - 1 - j);
  }
  ReferenceSolution ref;
  ref.x_star = GrassmannManifold::flatten(X);
  ref.f_star = C.trace() - kept;
  return ref;
}

// ---------------------------------------------------------------------------
// Regret and ideal step sizes
// ---------------------------------------------------------------------------

// Cumulative suboptimality sum_{s<=t} (f(x_s) - f_star).
inline std::vector<double> regret_series(const std::vector<double>& losses, double f_star) {
  std::vector<double> out(losses.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    acc += losses[i] - f_star;
    out[i] = acc;
  }
  return out;
}

// Oracle step size d0 / sqrt(zeta_k(d0) sum ||g||^2) with d0 = d(x_0, x*).
inline double ideal_step_size_adaptive(double d0, const std::vector<double>& grad_norms,
                                       double kappa) {
  double gsum = 0.0;
  for (double g : grad_norms) gsum += g * g;
  if (gsum <= 0.0)
    throw std::invalid_argument("ideal_step_size: all-zero gradient norms");
  return d0 / std::sqrt(zeta(kappa, d0) * gsum);
}

// Fixed-horizon variant d0 / sqrt(T zeta_k(d0)).
inline double ideal_step_size_horizon(double d0, int T, double kappa) {
  if (T < 1) throw std::invalid_argument("ideal_step_size: T >= 1");
  return d0 / std::sqrt(static_cast<double>(T) * zeta(kappa, d0));
}

// ---------------------------------------------------------------------------
// Mean average precision for graph embeddings
// ---------------------------------------------------------------------------

struct MapResult {
  double map_per_edge = 0.0;    // every (u, v) weighted equally
  double map_per_anchor = 0.0;  // per-anchor AP averaged over anchors
  int anchors = 0;
  int skipped_anchors = 0;  // nodes with no observed out-edges
};

// For each observed (u, v): rank v by distance from u among the candidate set
// {v' : (u,v') not observed, v' != u} plus v itself; ties broken by node
// index. AP per anchor combines the sorted ranks r_1 <= ... <= r_k as
// (1/k) sum_i i / (r_i + i - 1).
inline MapResult mean_average_precision(const RelationGraph& g, const Vec& theta,
                                        const Manifold& ball_component, int dim) {
  const int n = g.num_nodes();
  std::vector<std::vector<int>> out(n);
  for (const auto& [u, v] : g.edges) out[u].push_back(v);

  auto coords = [&](int u) { return theta.segment(u * dim, dim); };

  MapResult res;
  double ap_sum = 0.0;
  double edge_ap_sum = 0.0;
  int edge_count = 0;
  for (int u = 0; u < n; ++u) {
    if (out[u].empty()) {
      ++res.skipped_anchors;
      continue;
    }
    std::vector<double> dist(n);
    for (int v = 0; v < n; ++v) dist[v] = ball_component.distance(coords(u), coords(v));
    std::vector<bool> neighbor(n, false);
    for (int v : out[u]) neighbor[v] = true;

    std::vector<int> ranks;
    ranks.reserve(out[u].size());
    for (int v : out[u]) {
      int rank = 1;
      for (int c = 0; c < n; ++c) {
        if (c == u || c == v || neighbor[c]) continue;  // candidates: non-neighbors + v
        if (dist[c] < dist[v] || (dist[c] == dist[v] && c < v)) ++rank;
      }
      ranks.push_back(rank);
    }
    std::sort(ranks.begin(), ranks.end());
    double ap = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      const double prec = static_cast<double>(i + 1) / (ranks[i] + static_cast<double>(i));
      ap += prec;
      edge_ap_sum += prec;
    }
    ap /= static_cast<double>(ranks.size());
    edge_count += static_cast<int>(ranks.size());
    ap_sum += ap;
    ++res.anchors;
  }
  if (res.anchors > 0) res.map_per_anchor = ap_sum / res.anchors;
  if (edge_count > 0) res.map_per_edge = edge_ap_sum / edge_count;
  return res;
}

// ---------------------------------------------------------------------------
// Sensitivity-grid aggregation
// ---------------------------------------------------------------------------

struct CellStats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stderr_mean = std::numeric_limits<double>::quiet_NaN();
  int n = 0;
  int n_diverged = 0;
};

// Mean and standard error over finished replications; diverged runs are
// excluded from the statistics but counted.
inline CellStats aggregate_cell(const std::vector<double>& finals,
                                const std::vector<bool>& diverged) {
  if (finals.size() != diverged.size())
    throw std::invalid_argument("aggregate_cell: size mismatch");
  CellStats cs;
  std::vector<double> ok;
  for (std::size_t i = 0; i < finals.size(); ++i) {
    if (diverged[i] || !std::isfinite(finals[i])) {
      ++cs.n_diverged;
    } else {
      ok.push_back(finals[i]);
    }
  }
  cs.n = static_cast<int>(ok.size());
  if (cs.n == 0) return cs;
  double mean = 0.0;
  for (double v : ok) mean += v;
  mean /= cs.n;
  cs.mean = mean;
  if (cs.n > 1) {
    double var = 0.0;
    for (double v : ok) var += (v - mean) * (v - mean);
    var /= (cs.n - 1);
    cs.stderr_mean = std::sqrt(var / cs.n);
  } else {
    cs.stderr_mean = 0.0;
  }
  return cs;
}

}  // namespace rfree

#pragma once

#include "rfree/geometry.hpp"
#include "rfree/manifolds/euclidean.hpp"
#include "rfree/manifolds/grassmann.hpp"
#include "rfree/manifolds/poincare.hpp"
#include "rfree/manifolds/product.hpp"
#include "rfree/manifolds/sphere.hpp"
#include "rfree/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfree {

// ---------------------------------------------------------------------------
// Tabular data
// ---------------------------------------------------------------------------

struct TabularDataset {
  Mat features;  // n x d
  std::vector<double> labels;
  std::string provenance;

  int rows() const { return static_cast<int>(features.rows()); }
  int cols() const { return static_cast<int>(features.cols()); }
};

struct CsvOptions {
  char delimiter = ',';
  bool has_header = false;
  int label_column = -1;  // -1: no label column
};

inline TabularDataset load_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && opts.has_header) continue;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    double label = 0.0;
    while (std::getline(ss, cell, opts.delimiter)) {
      ++col;
      std::size_t pos = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != cell.size())
        throw std::runtime_error("load_csv: non-numeric cell at row " +
                                 std::to_string(lineno) + ", column " + std::to_string(col));
      if (!std::isfinite(value))
        throw std::runtime_error("load_csv: non-finite value at row " +
                                 std::to_string(lineno) + ", column " + std::to_string(col));
      if (col - 1 == opts.label_column) {
        label = value;
      } else {
        row.push_back(value);
      }
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw std::runtime_error("load_csv: ragged row " + std::to_string(lineno));
    rows.push_back(std::move(row));
    if (opts.label_column >= 0) labels.push_back(label);
  }
  if (rows.empty()) throw std::runtime_error("load_csv: empty file " + path);
  TabularDataset ds;
  ds.features.resize(static_cast<int>(rows.size()), static_cast<int>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) ds.features(i, j) = rows[i][j];
  ds.labels = std::move(labels);
  ds.provenance = path;
  return ds;
}

// Center and scale features to unit variance (train-split statistics).
inline void standardize(Mat& features) {
  for (int j = 0; j < features.cols(); ++j) {
    const double mean = features.col(j).mean();
    features.col(j).array() -= mean;
    const double sd = std::sqrt(features.col(j).squaredNorm() /
                                std::max<int>(1, features.rows() - 1));
    if (sd > 0.0) features.col(j) /= sd;
  }
}

// ---------------------------------------------------------------------------
// Relation graphs
// ---------------------------------------------------------------------------

struct RelationGraph {
  std::vector<std::string> node_names;
  std::set<std::pair<int, int>> edges;  // directed (u, v)
  bool closed = false;

  int num_nodes() const { return static_cast<int>(node_names.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  bool has_edge(int u, int v) const { return edges.count({u, v}) > 0; }
};

inline RelationGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  RelationGraph g;
  std::map<std::string, int> ids;
  auto id_of = [&](const std::string& name) {
    auto it = ids.find(name);
    if (it != ids.end()) return it->second;
    const int id = static_cast<int>(g.node_names.size());
    ids.emplace(name, id);
    g.node_names.push_back(name);
    return id;
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    for (char& c : line)
      if (c == ',') c = ' ';
    std::stringstream ss(line);
    std::string u, v;
    if (!(ss >> u)) continue;
    if (!(ss >> v))
      throw std::runtime_error("load_edge_list: missing second node at line " +
                               std::to_string(lineno));
    if (u == v)
      throw std::runtime_error("load_edge_list: self-loop at line " + std::to_string(lineno));
    g.edges.insert({id_of(u), id_of(v)});
  }
  return g;
}

namespace detail {
// DFS cycle check; returns a cycle path when found.
inline bool find_cycle(const std::vector<std::vector<int>>& adj, int u,
                       std::vector<int>& color, std::vector<int>& path) {
  color[u] = 1;
  path.push_back(u);
  for (int v : adj[u]) {
    if (color[v] == 1) {
      path.push_back(v);
      return true;
    }
    if (color[v] == 0 && find_cycle(adj, v, color, path)) return true;
  }
  color[u] = 2;
  path.pop_back();
  return false;
}
}  // namespace detail

// Transitive closure via DFS from every node. Rejects cyclic inputs.
inline RelationGraph transitive_closure(const RelationGraph& g) {
  const int n = g.num_nodes();
  std::vector<std::vector<int>> adj(n);
  for (const auto& [u, v] : g.edges) adj[u].push_back(v);

  std::vector<int> color(n, 0), path;
  for (int u = 0; u < n; ++u) {
    if (color[u] == 0 && detail::find_cycle(adj, u, color, path)) {
      std::string msg = "transitive_closure: cycle detected:";
      for (int p : path) msg += " " + g.node_names[p];
      throw std::runtime_error(msg);
    }
  }

  RelationGraph out;
  out.node_names = g.node_names;
  out.closed = true;
  for (int u = 0; u < n; ++u) {
    std::vector<bool> seen(n, false);
    std::vector<int> stack = adj[u];
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (seen[v]) continue;
      seen[v] = true;
      out.edges.insert({u, v});
      for (int w : adj[v]) stack.push_back(w);
    }
  }
  return out;
}

// Balanced binary tree of the given depth; edges point ancestor -> descendant
// after closure (raw edges are parent -> child).
inline RelationGraph balanced_tree(int depth) {
  RelationGraph g;
  const int n = (1 << (depth + 1)) - 1;
  for (int i = 0; i < n; ++i) g.node_names.push_back("n" + std::to_string(i));
  for (int i = 1; i < n; ++i) g.edges.insert({(i - 1) / 2, i});
  return g;
}

// ---------------------------------------------------------------------------
// Splits and generators
// ---------------------------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

inline Split make_split(int n, const SplitSpec& spec) {
  if (spec.train_fraction <= 0.0 || spec.train_fraction > 1.0)
    throw std::invalid_argument("make_split: train_fraction in (0,1]");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(spec.seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);
  const int n_train = static_cast<int>(std::llround(spec.train_fraction * n));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.test.assign(idx.begin() + n_train, idx.end());
  return s;
}

// A = (1/d) B B^T with standard Gaussian B in R^{d x q}.
inline Mat generate_rayleigh_matrix(int d, int q, std::uint64_t seed) {
  if (d < 1 || q < 1) throw std::invalid_argument("generate_rayleigh_matrix: d, q >= 1");
  Rng rng(seed);
  Mat B(d, q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < d; ++i) B(i, j) = rng.normal();
  return (B * B.transpose()) / static_cast<double>(d);
}

// Synthetic Gaussian-mixture tabular data (desk-scale dataset stand-in).
inline TabularDataset generate_gaussian_mixture(int n, int d, int components,
                                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec> means(components);
  for (auto& mu : means) {
    mu = Vec(d);
    for (int i = 0; i < d; ++i) mu(i) = 3.0 * rng.normal();
  }
  // Anisotropic scales so the covariance has a clear dominant subspace.
  Vec scales(d);
  for (int i = 0; i < d; ++i) scales(i) = std::pow(0.7, i) + 0.05;
  TabularDataset ds;
  ds.features.resize(n, d);
  for (int r = 0; r < n; ++r) {
    const auto& mu = means[rng.uniform_int(components)];
    for (int i = 0; i < d; ++i) ds.features(r, i) = mu(i) + scales(i) * rng.normal();
  }
  ds.provenance = "synthetic:gaussian_mixture(n=" + std::to_string(n) +
                  ",d=" + std::to_string(d) + ",k=" + std::to_string(components) +
                  ",seed=" + std::to_string(seed) + ")";
  return ds;
}

enum class InitScheme { kGaussianNormalized, kGaussianQR, kUniformBall, kZero };

// On-manifold initial point, deterministic from seed.
inline Vec init_point(const Manifold& m, InitScheme scheme, std::uint64_t seed) {
  Rng rng(seed);
  if (const auto* prod = dynamic_cast<const ProductManifold*>(&m)) {
    Vec x(m.ambient_dim());
    for (std::size_t i = 0; i < prod->num_components(); ++i) {
      Rng child = rng.split(i);
      x.segment(prod->offset(i), prod->component(i).ambient_dim()) =
          init_point(prod->component(i), scheme, child.seed());
    }
    return x;
  }
  switch (scheme) {
    case InitScheme::kGaussianNormalized: {
      if (dynamic_cast<const SphereManifold*>(&m) == nullptr &&
          dynamic_cast<const EuclideanManifold*>(&m) == nullptr)
        throw std::invalid_argument("init_point: gaussian_normalized needs sphere/euclidean");
      Vec x(m.ambient_dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.normal();
      if (dynamic_cast<const SphereManifold*>(&m)) x /= x.norm();
      return x;
    }
    case InitScheme::kGaussianQR: {
      if (dynamic_cast<const GrassmannManifold*>(&m) == nullptr)
        throw std::invalid_argument("init_point: gaussian_qr needs grassmann");
      Vec x(m.ambient_dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.normal();
      return m.project(x);
    }
    case InitScheme::kUniformBall: {
      if (dynamic_cast<const PoincareBall*>(&m) == nullptr)
        throw std::invalid_argument("init_point: uniform_ball needs poincare");
      Vec x(m.ambient_dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1e-3, 1e-3);
      return x;
    }
    case InitScheme::kZero:
      return Vec::Zero(m.ambient_dim());
  }
  throw std::invalid_argument("init_point: unknown scheme");
}

}  // namespace rfree

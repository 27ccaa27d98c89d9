#pragma once

#include "rfree/geometry.hpp"

#include <memory>
#include <numeric>
#include <vector>

namespace rfree {

// Product of manifolds acting componentwise on concatenated ambient
// coordinates. distance^2 is the pairwise-summed sum of component distances.
class ProductManifold : public Manifold {
 public:
  explicit ProductManifold(std::vector<std::shared_ptr<const Manifold>> parts)
      : parts_(std::move(parts)) {
    offsets_.reserve(parts_.size() + 1);
    offsets_.push_back(0);
    for (const auto& p : parts_) offsets_.push_back(offsets_.back() + p->ambient_dim());
  }

  static ProductManifold replicate(const std::shared_ptr<const Manifold>& m, int count) {
    return ProductManifold(std::vector<std::shared_ptr<const Manifold>>(count, m));
  }

  std::string name() const override {
    return "product(" + std::to_string(parts_.size()) + ")";
  }
  int ambient_dim() const override { return offsets_.back(); }
  std::size_t num_components() const { return parts_.size(); }
  const Manifold& component(std::size_t i) const { return *parts_[i]; }

  Eigen::VectorBlock<const Vec> block(const Vec& x, std::size_t i) const {
    return x.segment(offsets_[i], parts_[i]->ambient_dim());
  }
  Eigen::VectorBlock<Vec> block(Vec& x, std::size_t i) const {
    return x.segment(offsets_[i], parts_[i]->ambient_dim());
  }
  int offset(std::size_t i) const { return offsets_[i]; }

  double kappa() const override {
    double k = 0.0;
    for (const auto& p : parts_) k = std::min(k, p->kappa());
    return k;
  }

  bool contains(const Vec& x, double tol = 1e-9) const override {
    if (x.size() != ambient_dim()) return false;
    for (std::size_t i = 0; i < parts_.size(); ++i)
      if (!parts_[i]->contains(block(x, i), tol)) return false;
    return true;
  }
  bool in_tangent(const Vec& x, const Vec& v, double tol = 1e-9) const override {
    if (v.size() != ambient_dim()) return false;
    for (std::size_t i = 0; i < parts_.size(); ++i)
      if (!parts_[i]->in_tangent(block(x, i), block(v, i), tol)) return false;
    return true;
  }

  Vec project(const Vec& x) const override {
    Vec out(ambient_dim());
    for (std::size_t i = 0; i < parts_.size(); ++i)
      block(out, i) = parts_[i]->project(block(x, i));
    return out;
  }

  double inner(const Vec& x, const Vec& u, const Vec& v) const override {
    std::vector<double> terms(parts_.size());
    for (std::size_t i = 0; i < parts_.size(); ++i)
      terms[i] = parts_[i]->inner(block(x, i), block(u, i), block(v, i));
    return pairwise_sum(terms, 0, terms.size());
  }

  double distance(const Vec& x, const Vec& y) const override {
    std::vector<double> terms(parts_.size());
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      const double d = parts_[i]->distance(block(x, i), block(y, i));
      terms[i] = d * d;
    }
    return std::sqrt(pairwise_sum(terms, 0, terms.size()));
  }

  Vec exp(const Vec& x, const Vec& v) const override {
    Vec out(ambient_dim());
    for (std::size_t i = 0; i < parts_.size(); ++i)
      block(out, i) = parts_[i]->exp(block(x, i), block(v, i));
    return out;
  }

  Vec log(const Vec& x, const Vec& y, bool* cut_locus = nullptr) const override {
    Vec out(ambient_dim());
    bool any_cut = false;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      bool cut = false;
      block(out, i) = parts_[i]->log(block(x, i), block(y, i), &cut);
      any_cut = any_cut || cut;
    }
    if (cut_locus) *cut_locus = any_cut;
    return out;
  }

  Vec transport(const Vec& x, const Vec& y, const Vec& v) const override {
    Vec out(ambient_dim());
    for (std::size_t i = 0; i < parts_.size(); ++i)
      block(out, i) = parts_[i]->transport(block(x, i), block(y, i), block(v, i));
    return out;
  }
  bool transport_is_exact() const override {
    for (const auto& p : parts_)
      if (!p->transport_is_exact()) return false;
    return true;
  }

  Vec project_to_tangent(const Vec& x, const Vec& w) const override {
    Vec out(ambient_dim());
    for (std::size_t i = 0; i < parts_.size(); ++i)
      block(out, i) = parts_[i]->project_to_tangent(block(x, i), block(w, i));
    return out;
  }

  Vec egrad_to_rgrad(const Vec& x, const Vec& g) const override {
    Vec out(ambient_dim());
    for (std::size_t i = 0; i < parts_.size(); ++i)
      block(out, i) = parts_[i]->egrad_to_rgrad(block(x, i), block(g, i));
    return out;
  }

 private:
  // Order-independent reduction.
  static double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t n) {
    if (n == 0) return 0.0;
    if (n == 1) return v[lo];
    const std::size_t half = n / 2;
    return pairwise_sum(v, lo, half) + pairwise_sum(v, lo + half, n - half);
  }

  std::vector<std::shared_ptr<const Manifold>> parts_;
  std::vector<int> offsets_;
};

}  // namespace rfree

#pragma once

#include "rfree/geometry.hpp"

namespace rfree {

class EuclideanManifold : public Manifold {
 public:
  explicit EuclideanManifold(int dim) : dim_(dim) {}

  std::string name() const override { return "euclidean(" + std::to_string(dim_) + ")"; }
  int ambient_dim() const override { return dim_; }
  double kappa() const override { return 0.0; }

  bool contains(const Vec& x, double /*tol*/ = 1e-9) const override {
    return x.size() == dim_ && x.allFinite();
  }
  bool in_tangent(const Vec& /*x*/, const Vec& v, double /*tol*/ = 1e-9) const override {
    return v.size() == dim_;
  }

  Vec project(const Vec& x) const override { return x; }

  double inner(const Vec& /*x*/, const Vec& u, const Vec& v) const override {
    return u.dot(v);
  }
  double distance(const Vec& x, const Vec& y) const override { return (x - y).norm(); }

  Vec exp(const Vec& x, const Vec& v) const override { return x + v; }
  Vec log(const Vec& x, const Vec& y, bool* cut_locus = nullptr) const override {
    if (cut_locus) *cut_locus = false;
    return y - x;
  }

  Vec transport(const Vec& /*x*/, const Vec& /*y*/, const Vec& v) const override { return v; }
  bool transport_is_exact() const override { return true; }

  Vec project_to_tangent(const Vec& /*x*/, const Vec& w) const override { return w; }

 private:
  int dim_;
};

}  // namespace rfree

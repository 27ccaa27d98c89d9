#pragma once

#include "rfree/geometry.hpp"

namespace rfree {

// Unit sphere S^{d-1} in R^d with the induced Euclidean metric.
class SphereManifold : public Manifold {
 public:
  // exact_transport selects closed-form transport along the connecting
  // geodesic instead of the projection approximation.
  explicit SphereManifold(int dim, bool exact_transport = false)
      : dim_(dim), exact_transport_(exact_transport) {}

  std::string name() const override { return "sphere(" + std::to_string(dim_) + ")"; }
  int ambient_dim() const override { return dim_; }
  double kappa() const override { return 1.0; }

  bool contains(const Vec& x, double tol = 1e-9) const override {
    return x.size() == dim_ && std::abs(x.norm() - 1.0) <= tol;
  }
  bool in_tangent(const Vec& x, const Vec& v, double tol = 1e-9) const override {
    return v.size() == dim_ && std::abs(x.dot(v)) <= tol * (1.0 + v.norm());
  }

  Vec project(const Vec& x) const override { return x / x.norm(); }

  double inner(const Vec& /*x*/, const Vec& u, const Vec& v) const override {
    return u.dot(v);
  }

  double distance(const Vec& x, const Vec& y) const override {
    return std::acos(std::clamp(x.dot(y), -1.0, 1.0));
  }

  Vec exp(const Vec& x, const Vec& v) const override {
    const double t = v.norm();
    if (t == 0.0) return x;
    return project(std::cos(t) * x + (std::sin(t) / t) * v);
  }

  Vec log(const Vec& x, const Vec& y, bool* cut_locus = nullptr) const override {
    if (cut_locus) *cut_locus = false;
    const double angle = distance(x, y);
    if (angle == 0.0) return Vec::Zero(dim_);
    Vec dir = project_to_tangent(x, y - x);
    const double n = dir.norm();
    if (n < 1e-14) {
      // Antipodal: log is non-unique. Deterministic branch: first canonical
      // basis direction with a nonzero tangent projection.
      if (cut_locus) *cut_locus = true;
      for (int i = 0; i < dim_; ++i) {
        Vec e = Vec::Zero(dim_);
        e(i) = 1.0;
        dir = project_to_tangent(x, e);
        if (dir.norm() > 1e-8) break;
      }
      return angle * dir / dir.norm();
    }
    return angle * dir / n;
  }

  Vec transport(const Vec& x, const Vec& y, const Vec& v) const override {
    if (!exact_transport_) return project_to_tangent(y, v);
    // Closed-form transport along the geodesic from x to y.
    const Vec u = log(x, y);
    const double t = u.norm();
    if (t < 1e-14) return v;
    const Vec e = u / t;
    const double ve = v.dot(e);
    return v + (std::cos(t) - 1.0) * ve * e - std::sin(t) * ve * x;
  }
  bool transport_is_exact() const override { return exact_transport_; }

  Vec project_to_tangent(const Vec& x, const Vec& w) const override {
    return w - x.dot(w) * x;
  }

 private:
  int dim_;
  bool exact_transport_;
};

}  // namespace rfree

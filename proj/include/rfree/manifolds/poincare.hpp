#pragma once

#include "rfree/geometry.hpp"

namespace rfree {

// Mobius addition on the open unit ball.
inline Vec mobius_add(const Vec& x, const Vec& y) {
  const double x2 = x.squaredNorm();
  const double y2 = y.squaredNorm();
  const double xy = x.dot(y);
  const double denom = 1.0 + 2.0 * xy + x2 * y2;
  return ((1.0 + 2.0 * xy + y2) * x + (1.0 - x2) * y) / denom;
}

// Gyration operator gyr[u,v]w (closed form, valid for any ambient w).
inline Vec gyration(const Vec& u, const Vec& v, const Vec& w) {
  const double u2 = u.squaredNorm();
  const double v2 = v.squaredNorm();
  const double uv = u.dot(v);
  const double uw = u.dot(w);
  const double vw = v.dot(w);
  const double d = 1.0 + 2.0 * uv + u2 * v2;
  const double a = -uw * v2 + vw + 2.0 * uv * vw;
  const double b = -vw * u2 - uw;
  return w + (2.0 / d) * (a * u + b * v);
}

// Poincare ball B_d with metric <u,v>_x = (2/(1-|x|^2))^2 <u,v>.
class PoincareBall : public Manifold {
 public:
  static constexpr double kMaxNorm = 1.0 - 1e-12;

  explicit PoincareBall(int dim) : dim_(dim) {}

  std::string name() const override { return "poincare(" + std::to_string(dim_) + ")"; }
  int ambient_dim() const override { return dim_; }
  double kappa() const override { return -1.0; }

  double conformal_factor(const Vec& x) const { return 2.0 / (1.0 - x.squaredNorm()); }

  bool contains(const Vec& x, double /*tol*/ = 1e-9) const override {
    return x.size() == dim_ && x.norm() < 1.0;
  }
  bool in_tangent(const Vec& /*x*/, const Vec& v, double /*tol*/ = 1e-9) const override {
    return v.size() == dim_;
  }

  Vec project(const Vec& x) const override {
    const double n = x.norm();
    if (n >= kMaxNorm) return x * (kMaxNorm / n);
    return x;
  }

  double inner(const Vec& x, const Vec& u, const Vec& v) const override {
    const double lam = conformal_factor(x);
    return lam * lam * u.dot(v);
  }

  double distance(const Vec& x, const Vec& y) const override {
    const double num = 2.0 * (x - y).squaredNorm();
    const double den = (1.0 - x.squaredNorm()) * (1.0 - y.squaredNorm());
    return std::acosh(1.0 + num / den);
  }

  Vec exp(const Vec& x, const Vec& v) const override {
    const double n = v.norm();
    if (n == 0.0) return x;
    const double t = std::tanh(conformal_factor(x) * n / 2.0);
    return project(mobius_add(x, (t / n) * v));
  }

  Vec log(const Vec& x, const Vec& y, bool* cut_locus = nullptr) const override {
    if (cut_locus) *cut_locus = false;
    const Vec w = mobius_add(-x, y);
    const double n = w.norm();
    if (n == 0.0) return Vec::Zero(dim_);
    const double arg = std::min(n, 1.0 - 1e-15);
    return (2.0 / conformal_factor(x)) * std::atanh(arg) * (w / n);
  }

  // Exact gyrovector transport; preserves the Riemannian norm.
  Vec transport(const Vec& x, const Vec& y, const Vec& v) const override {
    return (conformal_factor(x) / conformal_factor(y)) * gyration(y, -x, v);
  }
  bool transport_is_exact() const override { return true; }

  Vec project_to_tangent(const Vec& /*x*/, const Vec& w) const override { return w; }

  // Inverse-metric scaling of the Euclidean gradient.
  Vec egrad_to_rgrad(const Vec& x, const Vec& g) const override {
    const double s = (1.0 - x.squaredNorm());
    return (s * s / 4.0) * g;
  }

 private:
  int dim_;
};

}  // namespace rfree

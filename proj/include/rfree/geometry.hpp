#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rfree {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Geometric curvature function: sqrt(|k|) d / tanh(sqrt(|k|) d) for k < 0,
// identically 1 for k >= 0. Always >= 1 and nondecreasing in d.
inline double zeta(double kappa, double d) {
  if (d < 0.0) throw std::domain_error("zeta: negative distance");
  if (!std::isfinite(kappa)) throw std::domain_error("zeta: kappa must be finite");
  if (kappa >= 0.0) return 1.0;
  const double a = std::sqrt(-kappa) * d;
  // Series d/tanh(d) = 1 + d^2/3 - ... near zero; avoids 0/0.
  if (a < 1e-4) return 1.0 + a * a / 3.0;
  return a / std::tanh(a);
}

// Sectional-curvature lower bound. Positive bounds are stored as given but
// zeta uses the k >= 0 branch.
struct CurvatureBound {
  double kappa = 0.0;

  explicit CurvatureBound(double k = 0.0) : kappa(k) {
    if (!std::isfinite(k)) throw std::domain_error("CurvatureBound: kappa must be finite");
  }
};

// Abstract manifold contract. Points and tangent vectors are ambient-coordinate
// Eigen vectors (matrices are stored flattened, column-major). Tangent vectors
// passed to inner/norm/exp/transport must be based at the accompanying point.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual std::string name() const = 0;
  virtual int ambient_dim() const = 0;
  virtual double kappa() const = 0;

  virtual bool contains(const Vec& x, double tol = 1e-9) const = 0;
  virtual bool in_tangent(const Vec& x, const Vec& v, double tol = 1e-9) const = 0;

  // Re-projection onto the manifold (drift control after exp steps).
  virtual Vec project(const Vec& x) const = 0;

  virtual double inner(const Vec& x, const Vec& u, const Vec& v) const = 0;
  double norm(const Vec& x, const Vec& v) const { return std::sqrt(inner(x, v, v)); }

  virtual double distance(const Vec& x, const Vec& y) const = 0;

  virtual Vec exp(const Vec& x, const Vec& v) const = 0;

  // Inverse exponential map. On cut-locus inputs the result is a deterministic
  // branch choice and *cut_locus (when given) is set.
  virtual Vec log(const Vec& x, const Vec& y, bool* cut_locus = nullptr) const = 0;

  // Parallel transport of v from T_x to T_y. transport_is_exact() reports
  // whether norms are preserved or the transport is a projection approximation.
  virtual Vec transport(const Vec& x, const Vec& y, const Vec& v) const = 0;
  virtual bool transport_is_exact() const = 0;

  virtual Vec project_to_tangent(const Vec& x, const Vec& w) const = 0;

  // Euclidean gradient -> Riemannian gradient. Default: tangent projection.
  virtual Vec egrad_to_rgrad(const Vec& x, const Vec& g) const {
    return project_to_tangent(x, g);
  }

  // Points identified up to a symmetry (Grassmann) override this.
  virtual bool points_equal(const Vec& x, const Vec& y, double tol = 1e-9) const {
    return distance(x, y) <= tol;
  }
};

// Evaluates the curved law-of-cosines bound
//   d(y,z)^2 <= zeta_k(d(x,z)) d(x,y)^2 + d(x,z)^2 - 2 d(x,y) d(x,z) cos(A)
// with A the tangent angle at x. Test-suite utility.
inline bool check_triangle_bound(const Manifold& m, const Vec& x, const Vec& y,
                                 const Vec& z, double tol = 1e-9) {
  const double a = m.distance(y, z);
  const double b = m.distance(x, y);
  const double c = m.distance(x, z);
  double cross = 0.0;
  if (b * c > 0.0) {
    const Vec ly = m.log(x, y);
    const Vec lz = m.log(x, z);
    const double denom = m.norm(x, ly) * m.norm(x, lz);
    if (denom > 0.0) {
      const double cosA = std::clamp(m.inner(x, ly, lz) / denom, -1.0, 1.0);
      cross = 2.0 * b * c * cosA;
    }
  }
  return a * a <= zeta(m.kappa(), c) * b * b + c * c - cross + tol;
}

}  // namespace rfree

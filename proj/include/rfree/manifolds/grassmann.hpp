#pragma once

#include "rfree/geometry.hpp"

namespace rfree {

// Grassmann manifold G(d, r): r-dimensional subspaces of R^d, represented by
// d x r matrices with orthonormal columns (flattened column-major). Points are
// equivalence classes under right rotation; equality is subspace distance.
class GrassmannManifold : public Manifold {
 public:
  GrassmannManifold(int d, int r) : d_(d), r_(r) {
    if (d < r || r < 1) throw std::invalid_argument("grassmann: need d >= r >= 1");
  }

  std::string name() const override {
    return "grassmann(" + std::to_string(d_) + "," + std::to_string(r_) + ")";
  }
  int ambient_dim() const override { return d_ * r_; }
  int rows() const { return d_; }
  int cols() const { return r_; }
  double kappa() const override { return 0.0; }

  Mat unflatten(const Vec& x) const {
    return Eigen::Map<const Mat>(x.data(), d_, r_);
  }
  static Vec flatten(const Mat& m) {
    return Eigen::Map<const Vec>(m.data(), m.size());
  }

  bool contains(const Vec& x, double tol = 1e-9) const override {
    if (x.size() != d_ * r_) return false;
    const Mat X = unflatten(x);
    return (X.transpose() * X - Mat::Identity(r_, r_)).norm() <= tol * r_;
  }
  bool in_tangent(const Vec& x, const Vec& v, double tol = 1e-9) const override {
    if (v.size() != d_ * r_) return false;
    const Mat X = unflatten(x);
    const Mat V = unflatten(v);
    return (X.transpose() * V).norm() <= tol * (1.0 + V.norm());
  }

  Vec project(const Vec& x) const override {
    Eigen::HouseholderQR<Mat> qr(unflatten(x));
    Mat Q = qr.householderQ() * Mat::Identity(d_, r_);
    Mat R = qr.matrixQR().topRows(r_).triangularView<Eigen::Upper>();
    // Fix the sign convention so projection is deterministic.
    for (int j = 0; j < r_; ++j)
      if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return flatten(Q);
  }

  double inner(const Vec& /*x*/, const Vec& u, const Vec& v) const override {
    return u.dot(v);
  }

  // Geodesic distance via principal angles.
  double distance(const Vec& x, const Vec& y) const override {
    const Mat XtY = unflatten(x).transpose() * unflatten(y);
    Eigen::JacobiSVD<Mat> svd(XtY);
    double sum = 0.0;
    for (int i = 0; i < r_; ++i) {
      const double s = std::clamp(svd.singularValues()(i), -1.0, 1.0);
      const double theta = std::acos(s);
      sum += theta * theta;
    }
    return std::sqrt(sum);
  }

  // exp_x(v) = (x V cos(S) + U sin(S)) V^T for thin SVD v = U S V^T,
  // re-orthonormalized by QR.
  Vec exp(const Vec& x, const Vec& v) const override {
    if (v.norm() == 0.0) return x;
    const Mat X = unflatten(x);
    Eigen::JacobiSVD<Mat> svd(unflatten(v), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec s = svd.singularValues();
    const Mat cosS = s.array().cos().matrix().asDiagonal();
    const Mat sinS = s.array().sin().matrix().asDiagonal();
    const Mat Y = (X * svd.matrixV() * cosS + svd.matrixU() * sinS) * svd.matrixV().transpose();
    return project(flatten(Y));
  }

  // log_x(y) = U atan(S) V^T for thin SVD of (y - x x^T y)(x^T y)^{-1}.
  Vec log(const Vec& x, const Vec& y, bool* cut_locus = nullptr) const override {
    if (cut_locus) *cut_locus = false;
    const Mat X = unflatten(x);
    const Mat Y = unflatten(y);
    const Mat XtY = X.transpose() * Y;
    Eigen::FullPivLU<Mat> lu(XtY);
    if (!lu.isInvertible()) {
      // Cut locus: some principal angle is pi/2. Flag and return the
      // pseudoinverse-based direction rather than NaN.
      if (cut_locus) *cut_locus = true;
      const Mat M = (Y - X * XtY) * XtY.completeOrthogonalDecomposition().pseudoInverse();
      return flatten(atan_factor(M));
    }
    const Mat M = (Y - X * XtY) * lu.inverse();
    return flatten(atan_factor(M));
  }

  // Projection-based transport, per common Grassmann toolbox practice.
  Vec transport(const Vec& /*x*/, const Vec& y, const Vec& v) const override {
    return project_to_tangent(y, v);
  }
  bool transport_is_exact() const override { return false; }

  Vec project_to_tangent(const Vec& x, const Vec& w) const override {
    const Mat X = unflatten(x);
    const Mat W = unflatten(w);
    return flatten(W - X * (X.transpose() * W));
  }

  bool points_equal(const Vec& x, const Vec& y, double tol = 1e-9) const override {
    return distance(x, y) <= tol;
  }

 private:
  static Mat atan_factor(const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Mat atanS = svd.singularValues().array().atan().matrix().asDiagonal();
    return svd.matrixU() * atanS * svd.matrixV().transpose();
  }

  int d_, r_;
};

}  // namespace rfree

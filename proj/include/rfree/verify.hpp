#pragma once

#include "rfree/data.hpp"
#include "rfree/geometry.hpp"
#include "rfree/manifolds/euclidean.hpp"
#include "rfree/manifolds/grassmann.hpp"
#include "rfree/manifolds/poincare.hpp"
#include "rfree/manifolds/product.hpp"
#include "rfree/manifolds/sphere.hpp"
#include "rfree/optim.hpp"
#include "rfree/rng.hpp"

#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace rfree {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  void add(const std::string& name, bool passed, const std::string& detail) {
    checks.push_back({name, passed, detail});
  }
};

// Generic on-manifold sampler for property fuzzing.
inline Vec random_point(const Manifold& m, Rng& rng) {
  if (const auto* prod = dynamic_cast<const ProductManifold*>(&m)) {
    Vec x(m.ambient_dim());
    for (std::size_t i = 0; i < prod->num_components(); ++i) {
      Rng child = rng.split(rng.next_u64() & 0xffff);
      x.segment(prod->offset(i), prod->component(i).ambient_dim()) =
          random_point(prod->component(i), child);
    }
    return x;
  }
  Vec g(m.ambient_dim());
  for (int i = 0; i < g.size(); ++i) g(i) = rng.normal();
  if (dynamic_cast<const PoincareBall*>(&m)) {
    const double r = 0.85 * rng.uniform();
    return (r / g.norm()) * g;
  }
  return m.project(g);  // sphere/grassmann normalize, euclidean is identity
}

inline Vec random_tangent(const Manifold& m, const Vec& x, Rng& rng) {
  Vec g(m.ambient_dim());
  for (int i = 0; i < g.size(); ++i) g(i) = rng.normal();
  return m.project_to_tangent(x, g);
}

// Max relative error of <grad, v>_x against central differences of f(exp_x(h v))
// over random unit tangent directions.
inline double fd_gradient_error(const Manifold& m, const std::function<double(const Vec&)>& f,
                                const Vec& x, const Vec& grad, Rng& rng,
                                int directions = 8, double h = 1e-5) {
  const double gnorm = m.norm(x, grad);
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    Vec v = random_tangent(m, x, rng);
    const double vn = m.norm(x, v);
    if (vn == 0.0) continue;
    v /= vn;
    const double fd = (f(m.exp(x, h * v)) - f(m.exp(x, -h * v))) / (2.0 * h);
    const double an = m.inner(x, grad, v);
    const double scale = std::max({std::abs(an), std::abs(fd), gnorm, 1e-12});
    worst = std::max(worst, std::abs(fd - an) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Property suites
// ---------------------------------------------------------------------------

inline void verify_roundtrip(const Manifold& m, VerifyReport& report, Rng rng,
                             int trials = 200, double exp_log_tol = 1e-6,
                             double dist_tol = 1e-7) {
  double worst_rt = 0.0, worst_dist = 0.0;
  for (int i = 0; i < trials; ++i) {
    const Vec x = random_point(m, rng);
    const Vec y = random_point(m, rng);
    const Vec l = m.log(x, y);
    worst_rt = std::max(worst_rt, m.distance(m.exp(x, l), y));
    worst_dist = std::max(worst_dist, std::abs(m.norm(x, l) - m.distance(x, y)));
  }
  std::ostringstream os;
  os << "max exp(log) gap " << worst_rt << ", max |norm(log)-dist| " << worst_dist;
  report.add(m.name() + "/log_exp_roundtrip", worst_rt <= exp_log_tol, os.str());
  report.add(m.name() + "/distance_consistency", worst_dist <= dist_tol, os.str());
}

inline void verify_triangle_bound(const Manifold& m, VerifyReport& report, Rng rng,
                                  int trials = 10000, double slack = 1e-9) {
  int violations = 0;
  for (int i = 0; i < trials; ++i) {
    const Vec x = random_point(m, rng);
    const Vec y = random_point(m, rng);
    const Vec z = random_point(m, rng);
    if (!check_triangle_bound(m, x, y, z, slack)) ++violations;
  }
  report.add(m.name() + "/triangle_bound",
             violations == 0, std::to_string(violations) + " violations / " +
                                  std::to_string(trials) + " triangles");
}

inline void verify_zeta_monotone(VerifyReport& report, Rng rng, int trials = 1000) {
  bool ok = true;
  for (int i = 0; i < trials; ++i) {
    const double kappa = -std::exp(rng.uniform(-6.0, 2.0));
    const double d1 = std::exp(rng.uniform(-8.0, 2.0));
    const double d2 = d1 * (1.0 + rng.uniform());
    const double z1 = zeta(kappa, d1);
    const double z2 = zeta(kappa, d2);
    if (!(z1 >= 1.0 && z2 >= z1)) ok = false;
    if (zeta(0.0, d1) != 1.0 || zeta(1.0, d1) != 1.0) ok = false;  // flat branch
  }
  report.add("geometry/zeta_monotone", ok,
             std::to_string(trials) + " sampled (kappa, d) pairs");
}

// ---------------------------------------------------------------------------
// Flat-space reference schedules (straight-line implementations, no manifold
// machinery) for the reduction check.
// ---------------------------------------------------------------------------

struct FlatQuadratic {
  Mat A;
  Vec b;
  double f(const Vec& x) const { return 0.5 * x.dot(A * x) - b.dot(x); }
  Vec g(const Vec& x) const { return A * x - b; }
};

inline std::vector<Vec> reference_dog(const FlatQuadratic& q, const Vec& x0, int T, double eps) {
  std::vector<Vec> xs{x0};
  double rbar = eps, gsum = 0.0;
  Vec x = x0;
  for (int t = 0; t < T; ++t) {
    const Vec g = q.g(x);
    rbar = std::max(rbar, (x - x0).norm());
    gsum += g.squaredNorm();
    if (gsum > 0.0) x -= (rbar / std::sqrt(gsum)) * g;
    xs.push_back(x);
  }
  return xs;
}

inline std::vector<Vec> reference_dowg(const FlatQuadratic& q, const Vec& x0, int T, double eps) {
  std::vector<Vec> xs{x0};
  double rbar = eps, v = 0.0;
  Vec x = x0;
  for (int t = 0; t < T; ++t) {
    const Vec g = q.g(x);
    rbar = std::max(rbar, (x - x0).norm());
    v += rbar * rbar * g.squaredNorm();
    if (v > 0.0) x -= (rbar * rbar / std::sqrt(v)) * g;
    xs.push_back(x);
  }
  return xs;
}

inline std::vector<Vec> reference_ngd(const FlatQuadratic& q, const Vec& x0, int T, double eps) {
  std::vector<Vec> xs{x0};
  double rbar = eps;
  Vec x = x0;
  for (int t = 0; t < T; ++t) {
    const Vec g = q.g(x);
    rbar = std::max(rbar, (x - x0).norm());
    const double gn = g.norm();
    if (gn > 0.0) x -= (rbar / std::sqrt(t + 1.0) / gn) * g;
    xs.push_back(x);
  }
  return xs;
}

// Runs the library optimizers on EuclideanManifold and compares every iterate
// coordinate against the references above.
inline void verify_euclidean_reduction(VerifyReport& report, Rng rng, int quadratics = 20,
                                       int steps = 200, double tol = 1e-12) {
  const int d = 5;
  EuclideanManifold flat(d);
  double worst = 0.0;
  std::string worst_kind;
  for (int qidx = 0; qidx < quadratics; ++qidx) {
    Mat B(d, d);
    Vec b(d), x0(d);
    for (int i = 0; i < d; ++i) {
      b(i) = rng.normal();
      x0(i) = rng.normal();
      for (int j = 0; j < d; ++j) B(i, j) = rng.normal();
    }
    FlatQuadratic quad{B * B.transpose() / d + Mat::Identity(d, d) * 0.1, b};
    StochasticOracle oracle{[&quad](const Vec& x) { return quad.f(x); },
                            [&quad](const Vec& x, Rng&) { return quad.g(x); }};
    const double eps = 0.05;

    struct Case {
      OptimizerKind kind;
      std::vector<Vec> ref;
    };
    std::vector<Case> cases;
    cases.push_back({OptimizerKind::kRDoG, reference_dog(quad, x0, steps, eps)});
    cases.push_back({OptimizerKind::kRDoWG, reference_dowg(quad, x0, steps, eps)});
    cases.push_back({OptimizerKind::kNRDoG, reference_ngd(quad, x0, steps, eps)});
    for (const auto& c : cases) {
      OptimizerOptions opt;
      opt.kind = c.kind;
      opt.eps = eps;
      opt.averaging = Averaging::kNone;
      RunOptions ro;
      ro.record_every = steps;
      ro.evaluate_loss = false;
      ro.divergence_rbar_factor = 1e18;
      double local_worst = 0.0;
      ro.on_iterate = [&](int t, const Vec& x) {
        local_worst = std::max(
            local_worst,
            (x - c.ref[static_cast<std::size_t>(t) + 1]).cwiseAbs().maxCoeff());
      };
      (void)run(flat, oracle, x0, steps, opt, Rng(7), ro);
      if (local_worst > worst) {
        worst = local_worst;
        worst_kind = optimizer_to_string(c.kind);
      }
    }
  }
  std::ostringstream os;
  os << "max per-coordinate gap " << worst << " (" << worst_kind << ")";
  report.add("optim/euclidean_reduction", worst <= tol, os.str());
}

// Full default suite (used by the command-line verify mode).
inline VerifyReport verify_suite(std::uint64_t seed = 1234) {
  VerifyReport report;
  Rng rng(seed);
  SphereManifold sphere(8);
  GrassmannManifold grass(6, 2);
  PoincareBall ball(5);
  EuclideanManifold flat(7);
  verify_roundtrip(sphere, report, rng.split(1));
  verify_roundtrip(grass, report, rng.split(2), 200, 1e-6, 1e-6);
  verify_roundtrip(ball, report, rng.split(3));
  verify_roundtrip(flat, report, rng.split(4), 200, 1e-9, 1e-9);
  verify_triangle_bound(ball, report, rng.split(5));
  verify_triangle_bound(sphere, report, rng.split(6), 2000);
  verify_zeta_monotone(report, rng.split(7));
  verify_euclidean_reduction(report, rng.split(8));
  return report;
}

}  // namespace rfree

#pragma once

#include "rfree/geometry.hpp"
#include "rfree/manifolds/product.hpp"
#include "rfree/rng.hpp"

#include <chrono>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfree {

// ---------------------------------------------------------------------------
// Step-size schedules
// ---------------------------------------------------------------------------

inline double log_plus(double z) { return 1.0 + std::log(z); }

// Confidence factor log(60 log(6T) / delta).
inline double theta_confidence(int horizon, double delta) {
  if (horizon < 1 || delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("theta_confidence: need T >= 1 and delta in (0,1)");
  return std::log(60.0 * std::log(6.0 * horizon) / delta);
}

enum class DowgForm { kCanonical, kMainText };

// eta = r / sqrt(zeta_k(r) G). Zero gradient sum -> 0 (no-op step).
inline double rdog_step_size(double r_bar, double grad_sq_sum, double kappa) {
  if (grad_sq_sum <= 0.0) return 0.0;
  return r_bar / std::sqrt(zeta(kappa, r_bar) * grad_sq_sum);
}

// Weighted-gradient increment for v: canonical carries the curvature factor
// inside the weight, the main-text form does not.
inline double rdowg_v_increment(double r_bar, double grad_sq, double kappa, DowgForm form) {
  const double w = r_bar * r_bar;
  if (form == DowgForm::kCanonical) return w / zeta(kappa, r_bar) * grad_sq;
  return w * grad_sq;
}

inline double rdowg_step_size(double r_bar, double v, double kappa, DowgForm form) {
  if (v <= 0.0) return 0.0;
  const double z = zeta(kappa, r_bar);
  if (form == DowgForm::kCanonical) return r_bar * r_bar / (z * std::sqrt(v));
  return r_bar / std::sqrt(z * v);
}

// eta = r / sqrt((t+1) zeta_k(r)); the step direction is normalized.
inline double nrdog_step_size(double r_bar, int t, double kappa) {
  return r_bar / std::sqrt((t + 1.0) * zeta(kappa, r_bar));
}

// Tamed gradient sum G'_t = 8^4 theta^2 log+^2((1+t) l^2 / l0^2)(G_{t-1} + 16 l^2).
inline double trdog_step_size(double r_bar, double grad_sq_sum_prev, double ell_bar,
                              double ell0, int t, double kappa, double theta) {
  if (ell0 <= 0.0) return 0.0;
  const double lp = log_plus((1.0 + t) * ell_bar * ell_bar / (ell0 * ell0));
  const double g_tamed =
      4096.0 * theta * theta * lp * lp * (grad_sq_sum_prev + 16.0 * ell_bar * ell_bar);
  return r_bar / std::sqrt(zeta(kappa, r_bar) * g_tamed);
}

// Tamed weighted sum; v_prev follows the canonical v-recursion. The default
// step uses r / sqrt(zeta v'), the alternate form uses r^2 / (zeta sqrt(v')).
inline double trdowg_step_size(double r_bar, double v_prev, double ell_bar, double ell0,
                               double r_bar0, int t, double kappa, double theta,
                               DowgForm form) {
  if (ell0 <= 0.0) return 0.0;
  const double z = zeta(kappa, r_bar);
  const double w = r_bar * r_bar / z;
  const double w0 = r_bar0 * r_bar0 / zeta(kappa, r_bar0);
  const double lp =
      log_plus((1.0 + t) * w * ell_bar * ell_bar / (w0 * ell0 * ell0));
  const double v_tamed = 4096.0 * theta * theta * lp * lp * (v_prev + 16.0 * w * ell_bar * ell_bar);
  if (form == DowgForm::kCanonical) return r_bar / std::sqrt(z * v_tamed);
  return r_bar * r_bar / (z * std::sqrt(v_tamed));
}

// Curvature-omitted schedules.
inline double co_rdog_step_size(double r_bar, double grad_sq_sum) {
  if (grad_sq_sum <= 0.0) return 0.0;
  return r_bar / std::sqrt(grad_sq_sum);
}
inline double co_rdowg_step_size(double r_bar, double v) {
  if (v <= 0.0) return 0.0;
  return r_bar * r_bar / std::sqrt(v);
}

// ---------------------------------------------------------------------------
// Optimizer configuration and state
// ---------------------------------------------------------------------------

enum class OptimizerKind {
  kRSGD,
  kNRSGD,
  kRDoG,
  kNRDoG,
  kRDoWG,
  kTRDoG,
  kTRDoWG,
  kCORDoG,
  kCORDoWG,
  kRAdam,
};

inline OptimizerKind optimizer_from_string(const std::string& key) {
  if (key == "rsgd") return OptimizerKind::kRSGD;
  if (key == "nrsgd") return OptimizerKind::kNRSGD;
  if (key == "rdog") return OptimizerKind::kRDoG;
  if (key == "nrdog") return OptimizerKind::kNRDoG;
  if (key == "rdowg") return OptimizerKind::kRDoWG;
  if (key == "t-rdog") return OptimizerKind::kTRDoG;
  if (key == "t-rdowg") return OptimizerKind::kTRDoWG;
  if (key == "co-rdog") return OptimizerKind::kCORDoG;
  if (key == "co-rdowg") return OptimizerKind::kCORDoWG;
  if (key == "radam") return OptimizerKind::kRAdam;
  throw std::invalid_argument("unknown optimizer: " + key);
}

inline std::string optimizer_to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kRSGD: return "rsgd";
    case OptimizerKind::kNRSGD: return "nrsgd";
    case OptimizerKind::kRDoG: return "rdog";
    case OptimizerKind::kNRDoG: return "nrdog";
    case OptimizerKind::kRDoWG: return "rdowg";
    case OptimizerKind::kTRDoG: return "t-rdog";
    case OptimizerKind::kTRDoWG: return "t-rdowg";
    case OptimizerKind::kCORDoG: return "co-rdog";
    case OptimizerKind::kCORDoWG: return "co-rdowg";
    case OptimizerKind::kRAdam: return "radam";
  }
  return "?";
}

inline bool is_lr_free(OptimizerKind k) {
  return k != OptimizerKind::kRSGD && k != OptimizerKind::kNRSGD &&
         k != OptimizerKind::kRAdam;
}

enum class Averaging { kWeighted, kUniform, kNone };
enum class RbarScope { kGlobal, kPerComponent };

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::kRDoG;
  double eps = 1e-2;    // initial distance estimate
  double lr = 1e-2;     // rsgd / nrsgd / radam
  double delta = 0.1;   // tamed confidence
  DowgForm dowg_form = DowgForm::kCanonical;
  Averaging averaging = Averaging::kWeighted;
  RbarScope rbar_scope = RbarScope::kGlobal;
  double ell_override = 0.0;  // > 0 fixes the gradient-norm bound surrogate
  // RAdam moments.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  // Burn-in (lr-dependent optimizers only): first burn_in_steps use burn_in_lr.
  int burn_in_steps = 0;
  double burn_in_lr = 0.0;

  void validate() const {
    if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
    if (!is_lr_free(kind) && lr <= 0.0) throw std::invalid_argument("lr must be positive");
    if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("delta must be in (0,1)");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw std::invalid_argument("adam betas must be in [0,1)");
  }
};

// Online geodesic running mean; weight_sum accumulates the scheme weights.
struct AveragedIterate {
  Vec x_tilde;
  double weight_sum = 0.0;

  bool initialized() const { return weight_sum > 0.0; }
};

inline void update_average(AveragedIterate& avg, const Manifold& m, const Vec& x_t,
                           double w_t) {
  if (w_t <= 0.0) return;
  avg.weight_sum += w_t;
  if (avg.x_tilde.size() == 0) {
    avg.x_tilde = x_t;
    return;
  }
  const double coeff = w_t / avg.weight_sum;
  avg.x_tilde = m.exp(avg.x_tilde, coeff * m.log(avg.x_tilde, x_t));
}

// Per-run adaptive statistics. In per-component scope one state exists per
// product-manifold component.
struct OptimizerState {
  double r_bar = 0.0;                // max(eps, max_s d(x_s, x_0))
  double grad_sq_sum = 0.0;          // G_t
  double grad_sq_sum_prev = 0.0;     // G_{t-1}
  double weighted_grad_sq_sum = 0.0;       // v_t
  double weighted_grad_sq_sum_prev = 0.0;  // v_{t-1}
  double grad_norm_max = 0.0;        // running max of ||g_s||
  double ell0 = 0.0;                 // bound surrogate at the first nonzero gradient
};

// ---------------------------------------------------------------------------
// Oracle and run loop
// ---------------------------------------------------------------------------

// Objective plus stochastic Riemannian (sub)gradient source. grad must return
// a tangent vector at the query point; E[grad | x] is a subgradient.
struct StochasticOracle {
  std::function<double(const Vec&)> loss;
  std::function<Vec(const Vec&, Rng&)> grad;
};

struct TraceRecord {
  int t = 0;
  double eta = 0.0;
  double r_bar = 0.0;
  double grad_norm = 0.0;
  double accum = 0.0;  // G_t or v_t
  double f_raw = std::numeric_limits<double>::quiet_NaN();
  double f_avg = std::numeric_limits<double>::quiet_NaN();
  double dist_raw = std::numeric_limits<double>::quiet_NaN();
  double dist_avg = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
};

struct RunOptions {
  int record_every = 1;
  bool evaluate_loss = true;                  // f(x_t), f(x~_t) at record points
  std::optional<Vec> reference;               // x_star for distance columns
  // Divergence: r_bar > factor * max(eps, floor). The floor keeps deliberately
  // tiny initial estimates from flagging healthy runs whose iterates travel
  // an O(1) distance to the solution.
  double divergence_rbar_factor = 1e6;
  double divergence_rbar_floor = 1.0;
  std::function<void(int, const Vec&)> on_iterate;  // called with (t, x_{t+1})
};

struct RunResult {
  Vec final_x;
  Vec averaged_x;  // empty when averaging == none
  Vec best_x;      // lowest recorded raw loss
  double final_f = std::numeric_limits<double>::quiet_NaN();
  double averaged_f = std::numeric_limits<double>::quiet_NaN();
  double best_f = std::numeric_limits<double>::quiet_NaN();
  int tau = 0;  // argmax_t sum_{s<t} w_s / w_t, post-hoc
  bool diverged = false;
  int steps = 0;
  std::vector<TraceRecord> trace;
};

namespace detail {

// One statistics scope: the whole manifold (global) or one product component.
struct Scope {
  const Manifold* manifold;
  int offset;
  int len;
  OptimizerState st;
};

inline double scheme_weight(OptimizerKind kind, Averaging avg, double r_bar, double kappa) {
  if (avg == Averaging::kNone) return 0.0;
  if (avg == Averaging::kUniform) return 1.0;
  switch (kind) {
    case OptimizerKind::kRDoG:
    case OptimizerKind::kNRDoG:
    case OptimizerKind::kTRDoG:
      return r_bar / std::sqrt(zeta(kappa, r_bar));
    case OptimizerKind::kRDoWG:
    case OptimizerKind::kTRDoWG:
      return r_bar * r_bar / zeta(kappa, r_bar);
    case OptimizerKind::kCORDoG:
      return r_bar;
    case OptimizerKind::kCORDoWG:
      return r_bar * r_bar;
    default:
      return 1.0;  // lr-dependent baselines: plain running mean
  }
}

}  // namespace detail

// Executes T iterations in the algorithm order: query oracle, update r_bar,
// update gradient statistics, compute eta, advance the average, exp step.
inline RunResult run(const Manifold& m, const StochasticOracle& oracle, const Vec& x0,
                     int T, const OptimizerOptions& opt, Rng rng,
                     const RunOptions& ro = RunOptions{}) {
  opt.validate();
  if (T < 1) throw std::invalid_argument("run: T >= 1 required");
  if (!m.contains(x0, 1e-6)) throw std::invalid_argument("run: x0 not on manifold");

  const auto t_start = std::chrono::steady_clock::now();

  // Resolve statistics scopes.
  std::vector<detail::Scope> scopes;
  const auto* prod = dynamic_cast<const ProductManifold*>(&m);
  if (opt.rbar_scope == RbarScope::kPerComponent) {
    if (prod == nullptr)
      throw std::invalid_argument("per-component scope requires a product manifold");
    for (std::size_t i = 0; i < prod->num_components(); ++i)
      scopes.push_back({&prod->component(i), prod->offset(i),
                        prod->component(i).ambient_dim(), OptimizerState{}});
  } else {
    scopes.push_back({&m, 0, m.ambient_dim(), OptimizerState{}});
  }
  for (auto& s : scopes) s.st.r_bar = opt.eps;

  const double theta = is_lr_free(opt.kind) ? theta_confidence(T, opt.delta) : 0.0;

  Vec x = x0;
  AveragedIterate avg;
  std::vector<double> weight_log;  // per-iteration scheme weight, for tau
  weight_log.reserve(T);
  std::vector<double> comp_weight_sums(scopes.size(), 0.0);

  // RAdam moments.
  Vec adam_m = Vec::Zero(m.ambient_dim());
  Vec adam_u = Vec::Zero(m.ambient_dim());

  RunResult out;
  out.trace.reserve(T / std::max(1, ro.record_every) + 1);
  bool seen_gradient = false;

  auto slice = [](const Vec& v, const detail::Scope& s) { return v.segment(s.offset, s.len); };

  for (int t = 0; t < T; ++t) {
    Vec g = oracle.grad(x, rng);
    const double gnorm2_total = m.inner(x, g, g);
    const double gnorm_total = std::sqrt(gnorm2_total);

    // All-zero gradients before the first real one: r_bar stays frozen at eps.
    if (gnorm2_total == 0.0 && !seen_gradient) {
      weight_log.push_back(0.0);
      continue;
    }
    seen_gradient = true;

    double eta_record = 0.0;
    double r_bar_record = 0.0;
    double accum_record = 0.0;
    double w_total = 0.0;

    Vec step = Vec::Zero(m.ambient_dim());
    if (opt.kind == OptimizerKind::kRAdam) {
      const double lr = (t < opt.burn_in_steps && opt.burn_in_lr > 0.0) ? opt.burn_in_lr : opt.lr;
      adam_m = opt.beta1 * adam_m + (1.0 - opt.beta1) * g;
      adam_u = opt.beta2 * adam_u.eval() +
               (1.0 - opt.beta2) * g.cwiseProduct(g).eval();
      const double bc1 = 1.0 - std::pow(opt.beta1, t + 1);
      const double bc2 = 1.0 - std::pow(opt.beta2, t + 1);
      const Vec m_hat = adam_m / bc1;
      const Vec u_hat = adam_u / bc2;
      step = m.project_to_tangent(
          x, (-lr * m_hat.array() / (u_hat.array().sqrt() + opt.eps_adam)).matrix());
      eta_record = lr;
      r_bar_record = scopes[0].st.r_bar;
      w_total = detail::scheme_weight(opt.kind, opt.averaging, 1.0, m.kappa());
    } else {
      for (auto& sc : scopes) {
        OptimizerState& st = sc.st;
        const Vec xs = slice(x, sc);
        const Vec x0s = slice(x0, sc);
        const Vec gs = slice(g, sc);
        const double kap = sc.manifold->kappa();
        const double gnorm2 = sc.manifold->inner(xs, gs, gs);
        const double gnorm = std::sqrt(gnorm2);

        st.r_bar = std::max(st.r_bar, std::max(opt.eps, sc.manifold->distance(xs, x0s)));
        if (opt.ell_override > 0.0) {
          st.grad_norm_max = opt.ell_override;
        } else {
          st.grad_norm_max = std::max(st.grad_norm_max, gnorm);
        }
        if (st.ell0 == 0.0 && st.grad_norm_max > 0.0) st.ell0 = st.grad_norm_max;

        st.grad_sq_sum_prev = st.grad_sq_sum;
        st.grad_sq_sum += gnorm2;
        st.weighted_grad_sq_sum_prev = st.weighted_grad_sq_sum;
        const DowgForm vform = (opt.kind == OptimizerKind::kCORDoWG)
                                   ? DowgForm::kMainText  // v without curvature factor
                                   : (opt.kind == OptimizerKind::kTRDoWG ? DowgForm::kCanonical
                                                                         : opt.dowg_form);
        st.weighted_grad_sq_sum += rdowg_v_increment(st.r_bar, gnorm2, kap, vform);

        double eta = 0.0;
        bool normalized = false;
        switch (opt.kind) {
          case OptimizerKind::kRSGD:
            eta = (t < opt.burn_in_steps && opt.burn_in_lr > 0.0) ? opt.burn_in_lr : opt.lr;
            break;
          case OptimizerKind::kNRSGD:
            eta = (t < opt.burn_in_steps && opt.burn_in_lr > 0.0) ? opt.burn_in_lr : opt.lr;
            normalized = true;
            break;
          case OptimizerKind::kRDoG:
            eta = rdog_step_size(st.r_bar, st.grad_sq_sum, kap);
            break;
          case OptimizerKind::kNRDoG:
            eta = nrdog_step_size(st.r_bar, t, kap);
            normalized = true;
            break;
          case OptimizerKind::kRDoWG:
            eta = rdowg_step_size(st.r_bar, st.weighted_grad_sq_sum, kap, opt.dowg_form);
            break;
          case OptimizerKind::kTRDoG:
            eta = trdog_step_size(st.r_bar, st.grad_sq_sum_prev, st.grad_norm_max, st.ell0,
                                  t, kap, theta);
            break;
          case OptimizerKind::kTRDoWG:
            eta = trdowg_step_size(st.r_bar, st.weighted_grad_sq_sum_prev, st.grad_norm_max,
                                   st.ell0, opt.eps, t, kap, theta, opt.dowg_form);
            break;
          case OptimizerKind::kCORDoG:
            eta = co_rdog_step_size(st.r_bar, st.grad_sq_sum);
            break;
          case OptimizerKind::kCORDoWG:
            eta = co_rdowg_step_size(st.r_bar, st.weighted_grad_sq_sum);
            break;
          case OptimizerKind::kRAdam:
            break;  // handled above
        }

        if (normalized) {
          if (gnorm > 0.0) step.segment(sc.offset, sc.len) = (-eta / gnorm) * gs;
        } else {
          step.segment(sc.offset, sc.len) = -eta * gs;
        }
        eta_record = eta;
        r_bar_record = std::max(r_bar_record, st.r_bar);
        accum_record += (opt.kind == OptimizerKind::kRDoWG ||
                         opt.kind == OptimizerKind::kTRDoWG ||
                         opt.kind == OptimizerKind::kCORDoWG)
                            ? st.weighted_grad_sq_sum
                            : st.grad_sq_sum;
        w_total += detail::scheme_weight(opt.kind, opt.averaging, st.r_bar, kap);
      }
    }
    weight_log.push_back(w_total);

    // Average x_t (before stepping): x~_1 = x_0 when t = 0.
    if (opt.averaging != Averaging::kNone) {
      if (opt.rbar_scope == RbarScope::kPerComponent) {
        // Componentwise recursion, each component with its own scheme weight.
        if (avg.x_tilde.size() == 0) avg.x_tilde = x;
        for (std::size_t i = 0; i < scopes.size(); ++i) {
          auto& sc = scopes[i];
          const double w =
              detail::scheme_weight(opt.kind, opt.averaging, sc.st.r_bar, sc.manifold->kappa());
          if (w <= 0.0) continue;
          comp_weight_sums[i] += w;
          const double coeff = w / comp_weight_sums[i];
          const Vec base = avg.x_tilde.segment(sc.offset, sc.len);
          avg.x_tilde.segment(sc.offset, sc.len) =
              sc.manifold->exp(base, coeff * sc.manifold->log(base, slice(x, sc)));
        }
        avg.weight_sum += w_total;
      } else {
        update_average(avg, m, x, w_total);
      }
    }

    // Step.
    const Vec x_prev = x;
    x = m.exp(x, step);
    if (opt.kind == OptimizerKind::kRAdam) adam_m = m.transport(x_prev, x, adam_m);
    out.steps = t + 1;
    if (ro.on_iterate) ro.on_iterate(t, x);

    // Record.
    const bool record = (t % std::max(1, ro.record_every) == 0) || t == T - 1;
    double f_raw = std::numeric_limits<double>::quiet_NaN();
    if (record || t == T - 1) {
      TraceRecord rec;
      rec.t = t;
      rec.eta = eta_record;
      rec.r_bar = r_bar_record;
      rec.grad_norm = gnorm_total;
      rec.accum = accum_record;
      if (ro.evaluate_loss && oracle.loss) {
        f_raw = oracle.loss(x);
        rec.f_raw = f_raw;
        if (avg.x_tilde.size() > 0) rec.f_avg = oracle.loss(avg.x_tilde);
      }
      if (ro.reference) {
        rec.dist_raw = m.distance(x, *ro.reference);
        if (avg.x_tilde.size() > 0) rec.dist_avg = m.distance(avg.x_tilde, *ro.reference);
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
      out.trace.push_back(rec);

      if (std::isfinite(f_raw) && (!std::isfinite(out.best_f) || f_raw < out.best_f)) {
        out.best_f = f_raw;
        out.best_x = x;
      }
    }

    // Divergence: non-finite loss or runaway distance estimate.
    const bool f_bad = ro.evaluate_loss && oracle.loss && record && !std::isfinite(f_raw);
    if (f_bad || !x.allFinite() ||
        r_bar_record >
            ro.divergence_rbar_factor * std::max(opt.eps, ro.divergence_rbar_floor)) {
      out.diverged = true;
      break;
    }
  }

  out.final_x = x;
  if (oracle.loss) out.final_f = oracle.loss(x);
  if (avg.x_tilde.size() > 0) {
    out.averaged_x = avg.x_tilde;
    if (oracle.loss) out.averaged_f = oracle.loss(avg.x_tilde);
  }
  if (out.best_x.size() == 0) {
    out.best_x = x;
    out.best_f = out.final_f;
  }

  // tau in argmax_t sum_{s<t} w_s / w_t over iterations with positive weight.
  double best_ratio = -1.0;
  double wsum = 0.0;
  for (std::size_t t = 0; t < weight_log.size(); ++t) {
    if (weight_log[t] > 0.0 && t > 0) {
      const double ratio = wsum / weight_log[t];
      if (ratio > best_ratio) {
        best_ratio = ratio;
        out.tau = static_cast<int>(t);
      }
    }
    wsum += weight_log[t];
  }
  return out;
}

}  // namespace rfree

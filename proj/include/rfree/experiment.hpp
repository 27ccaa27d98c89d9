#pragma once

#include "rfree/data.hpp"
#include "rfree/metrics.hpp"
#include "rfree/optim.hpp"
#include "rfree/problems.hpp"
#include "rfree/verify.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rfree {

using nlohmann::json;

inline std::vector<double> log_spaced(double lo, double hi, int count) {
  if (lo <= 0.0 || hi <= 0.0) throw std::invalid_argument("log_spaced: bounds must be > 0");
  if (count < 1) throw std::invalid_argument("log_spaced: count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
  return out;
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

struct BurnInConfig {
  bool enabled = false;
  int epochs = 10;
  double lr_divisor = 10.0;
};

struct RunConfig {
  std::string experiment = "rayleigh";  // rayleigh | pca | embed
  std::vector<std::string> optimizers = {"rdog"};
  std::vector<double> eps_grid = {1e-2};  // swept for lr-free optimizers
  std::vector<double> lr_grid = {1e-2};   // swept for lr-dependent optimizers
  int T = 1000;
  int reps = 1;
  std::uint64_t seed = 0;
  int record_every = 1;
  int workers = 0;  // 0: hardware concurrency
  std::string dowg_form = "canonical";
  std::string averaging = "weighted";
  std::string rbar_scope = "global";
  double delta = 0.1;
  BurnInConfig burn_in;
  std::string out_dir = "out";

  // Problem parameters.
  int rayleigh_d = 50, rayleigh_q = 55;
  int pca_n = 1000, pca_d = 20, pca_r = 2, pca_batch = 64, pca_components = 3;
  int embed_depth = 4, embed_dim = 5, embed_batch = 10, embed_negatives = 10;
  std::string embed_graph_path;  // empty: generated balanced tree
  std::uint64_t data_seed = 77;

  void validate() const {
    if (experiment != "rayleigh" && experiment != "pca" && experiment != "embed")
      throw std::invalid_argument("config: unknown experiment '" + experiment + "'");
    if (optimizers.empty()) throw std::invalid_argument("config: optimizers list empty");
    for (const auto& o : optimizers) (void)optimizer_from_string(o);
    if (eps_grid.empty() || lr_grid.empty())
      throw std::invalid_argument("config: parameter grids must be nonempty");
    for (double e : eps_grid)
      if (e <= 0.0) throw std::invalid_argument("config: eps grid values must be > 0");
    for (double l : lr_grid)
      if (l <= 0.0) throw std::invalid_argument("config: lr grid values must be > 0");
    if (T < 1) throw std::invalid_argument("config: T >= 1");
    if (reps < 1) throw std::invalid_argument("config: reps >= 1");
    if (record_every < 1) throw std::invalid_argument("config: record_every >= 1");
    if (dowg_form != "canonical" && dowg_form != "maintext")
      throw std::invalid_argument("config: dowg_form must be canonical|maintext");
    if (averaging != "weighted" && averaging != "uniform" && averaging != "none")
      throw std::invalid_argument("config: averaging must be weighted|uniform|none");
    if (rbar_scope != "global" && rbar_scope != "per_component")
      throw std::invalid_argument("config: rbar_scope must be global|per_component");
    if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("config: delta in (0,1)");
  }

  json to_json() const {
    json j;
    j["experiment"] = experiment;
    j["optimizers"] = optimizers;
    j["eps"] = eps_grid;
    j["lr"] = lr_grid;
    j["T"] = T;
    j["reps"] = reps;
    j["seed"] = seed;
    j["record_every"] = record_every;
    j["workers"] = workers;
    j["dowg_form"] = dowg_form;
    j["averaging"] = averaging;
    j["rbar_scope"] = rbar_scope;
    j["delta"] = delta;
    j["burn_in"] = {{"enabled", burn_in.enabled},
                    {"epochs", burn_in.epochs},
                    {"lr_divisor", burn_in.lr_divisor}};
    j["out"] = out_dir;
    j["rayleigh"] = {{"d", rayleigh_d}, {"q", rayleigh_q}};
    j["pca"] = {{"n", pca_n}, {"d", pca_d}, {"r", pca_r},
                {"batch", pca_batch}, {"components", pca_components}};
    j["embed"] = {{"depth", embed_depth}, {"dim", embed_dim}, {"batch", embed_batch},
                  {"negatives", embed_negatives}, {"graph", embed_graph_path}};
    j["data_seed"] = data_seed;
    return j;
  }
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
  }
}

// Grid value: number, array of numbers, or {"min","max","count"} (log-spaced).
inline std::vector<double> parse_grid(const json& j, const std::string& name) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
  }
  if (j.is_object()) {
    reject_unknown_keys(j, {"min", "max", "count"}, name);
    return log_spaced(j.at("min").get<double>(), j.at("max").get<double>(),
                      j.at("count").get<int>());
  }
  throw std::invalid_argument("config: " + name + " must be number, array or {min,max,count}");
}

}  // namespace detail

inline RunConfig parse_config_json(const json& j) {
  RunConfig cfg;
  detail::reject_unknown_keys(
      j,
      {"experiment", "optimizers", "optimizer", "eps", "lr", "T", "reps", "seed",
       "record_every", "workers", "dowg_form", "averaging", "rbar_scope", "delta",
       "burn_in", "out", "rayleigh", "pca", "embed", "data_seed"},
      "top level");
  if (j.contains("experiment")) cfg.experiment = j.at("experiment").get<std::string>();
  if (j.contains("optimizer")) cfg.optimizers = {j.at("optimizer").get<std::string>()};
  if (j.contains("optimizers")) {
    cfg.optimizers.clear();
    for (const auto& o : j.at("optimizers")) cfg.optimizers.push_back(o.get<std::string>());
  }
  if (j.contains("eps")) cfg.eps_grid = detail::parse_grid(j.at("eps"), "eps");
  if (j.contains("lr")) cfg.lr_grid = detail::parse_grid(j.at("lr"), "lr");
  if (j.contains("T")) cfg.T = j.at("T").get<int>();
  if (j.contains("reps")) cfg.reps = j.at("reps").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("record_every")) cfg.record_every = j.at("record_every").get<int>();
  if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
  if (j.contains("dowg_form")) cfg.dowg_form = j.at("dowg_form").get<std::string>();
  if (j.contains("averaging")) cfg.averaging = j.at("averaging").get<std::string>();
  if (j.contains("rbar_scope")) cfg.rbar_scope = j.at("rbar_scope").get<std::string>();
  if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  if (j.contains("data_seed")) cfg.data_seed = j.at("data_seed").get<std::uint64_t>();
  if (j.contains("burn_in")) {
    const json& b = j.at("burn_in");
    detail::reject_unknown_keys(b, {"enabled", "epochs", "lr_divisor"}, "burn_in");
    if (b.contains("enabled")) cfg.burn_in.enabled = b.at("enabled").get<bool>();
    if (b.contains("epochs")) cfg.burn_in.epochs = b.at("epochs").get<int>();
    if (b.contains("lr_divisor")) cfg.burn_in.lr_divisor = b.at("lr_divisor").get<double>();
  }
  if (j.contains("rayleigh")) {
    const json& r = j.at("rayleigh");
    detail::reject_unknown_keys(r, {"d", "q"}, "rayleigh");
    if (r.contains("d")) cfg.rayleigh_d = r.at("d").get<int>();
    if (r.contains("q")) cfg.rayleigh_q = r.at("q").get<int>();
  }
  if (j.contains("pca")) {
    const json& p = j.at("pca");
    detail::reject_unknown_keys(p, {"n", "d", "r", "batch", "components"}, "pca");
    if (p.contains("n")) cfg.pca_n = p.at("n").get<int>();
    if (p.contains("d")) cfg.pca_d = p.at("d").get<int>();
    if (p.contains("r")) cfg.pca_r = p.at("r").get<int>();
    if (p.contains("batch")) cfg.pca_batch = p.at("batch").get<int>();
    if (p.contains("components")) cfg.pca_components = p.at("components").get<int>();
  }
  if (j.contains("embed")) {
    const json& e = j.at("embed");
    detail::reject_unknown_keys(e, {"depth", "dim", "batch", "negatives", "graph"}, "embed");
    if (e.contains("depth")) cfg.embed_depth = e.at("depth").get<int>();
    if (e.contains("dim")) cfg.embed_dim = e.at("dim").get<int>();
    if (e.contains("batch")) cfg.embed_batch = e.at("batch").get<int>();
    if (e.contains("negatives")) cfg.embed_negatives = e.at("negatives").get<int>();
    if (e.contains("graph")) cfg.embed_graph_path = e.at("graph").get<std::string>();
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  in >> j;
  return parse_config_json(j);
}

// ---------------------------------------------------------------------------
// Grid cells and artifacts
// ---------------------------------------------------------------------------

struct GridCell {
  int index = 0;
  std::string optimizer;
  std::string param_name;  // eps | lr
  double param_value = 0.0;
  int replication = 0;
  std::uint64_t seed = 0;
  std::string trace_file;
};

struct CellOutcome {
  double final_metric = std::numeric_limits<double>::quiet_NaN();
  std::string status = "failed";
};

inline std::vector<GridCell> enumerate_cells(const RunConfig& cfg) {
  std::vector<GridCell> cells;
  const Rng root(cfg.seed);
  int idx = 0;
  for (const auto& opt_name : cfg.optimizers) {
    const bool lr_free = is_lr_free(optimizer_from_string(opt_name));
    const auto& grid = lr_free ? cfg.eps_grid : cfg.lr_grid;
    for (double value : grid) {
      for (int rep = 0; rep < cfg.reps; ++rep) {
        GridCell c;
        c.index = idx;
        c.optimizer = opt_name;
        c.param_name = lr_free ? "eps" : "lr";
        c.param_value = value;
        c.replication = rep;
        c.seed = root.split(static_cast<std::uint64_t>(idx)).seed();
        c.trace_file = "cell_" + std::to_string(idx) + "_" + opt_name + ".jsonl";
        cells.push_back(c);
        ++idx;
      }
    }
  }
  return cells;
}

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline json trace_json(const TraceRecord& r) {
  json j;
  j["t"] = r.t;
  j["eta"] = r.eta;
  j["r_bar"] = r.r_bar;
  j["grad_norm"] = r.grad_norm;
  j["f_raw"] = r.f_raw;
  j["f_avg"] = r.f_avg;
  j["dist_raw"] = r.dist_raw;
  j["dist_avg"] = r.dist_avg;
  return j;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

// Immutable, shared problem instances, built once per experiment run.
struct ExperimentContext {
  RunConfig cfg;

  std::shared_ptr<const SphereManifold> sphere;
  RayleighProblem rayleigh;
  ReferenceSolution rayleigh_ref;

  std::shared_ptr<const GrassmannManifold> grassmann;
  PCAProblem pca;
  ReferenceSolution pca_ref;

  std::shared_ptr<const EmbeddingProblem> embed;
  std::shared_ptr<const ProductManifold> embed_manifold;
};

inline ExperimentContext build_context(const RunConfig& cfg) {
  ExperimentContext ctx;
  ctx.cfg = cfg;
  if (cfg.experiment == "rayleigh") {
    ctx.sphere = std::make_shared<const SphereManifold>(cfg.rayleigh_d);
    ctx.rayleigh = RayleighProblem::generate(cfg.rayleigh_d, cfg.rayleigh_q, cfg.data_seed);
    ctx.rayleigh_ref = rayleigh_reference(ctx.rayleigh.A);
  } else if (cfg.experiment == "pca") {
    TabularDataset ds =
        generate_gaussian_mixture(cfg.pca_n, cfg.pca_d, cfg.pca_components, cfg.data_seed);
    standardize(ds.features);
    ctx.grassmann = std::make_shared<const GrassmannManifold>(cfg.pca_d, cfg.pca_r);
    ctx.pca = PCAProblem{ds.features, cfg.pca_r, cfg.pca_batch};
    ctx.pca_ref = pca_reference(ds.features, cfg.pca_r);
  } else {  // embed
    RelationGraph g = cfg.embed_graph_path.empty() ? balanced_tree(cfg.embed_depth)
                                                   : load_edge_list(cfg.embed_graph_path);
    g = transitive_closure(g);
    ctx.embed = std::make_shared<const EmbeddingProblem>(
        g, cfg.embed_dim, cfg.embed_negatives, cfg.embed_batch, NegScheme::kUniform);
    ctx.embed_manifold = ctx.embed->make_manifold();
  }
  return ctx;
}

// Executes one grid cell; pure given (ctx, cell).
inline CellOutcome run_cell(const ExperimentContext& ctx, const GridCell& cell,
                            std::vector<TraceRecord>* trace_out = nullptr) {
  const RunConfig& cfg = ctx.cfg;
  CellOutcome outcome;
  try {
    OptimizerOptions opt;
    opt.kind = optimizer_from_string(cell.optimizer);
    opt.delta = cfg.delta;
    opt.dowg_form = cfg.dowg_form == "maintext" ? DowgForm::kMainText : DowgForm::kCanonical;
    opt.averaging = cfg.averaging == "none"
                        ? Averaging::kNone
                        : (cfg.averaging == "uniform" ? Averaging::kUniform : Averaging::kWeighted);
    opt.rbar_scope =
        cfg.rbar_scope == "per_component" ? RbarScope::kPerComponent : RbarScope::kGlobal;
    if (cell.param_name == "eps")
      opt.eps = cell.param_value;
    else
      opt.lr = cell.param_value;

    Rng cell_rng(cell.seed);
    Rng init_rng = cell_rng.split(1);
    Rng run_rng = cell_rng.split(2);

    RunOptions ro;
    ro.record_every = cfg.record_every;

    if (cfg.experiment == "rayleigh") {
      const auto& m = *ctx.sphere;
      const Vec x0 = init_point(m, InitScheme::kGaussianNormalized, init_rng.seed());
      ro.reference = ctx.rayleigh_ref.x_star;
      RunResult res = run(m, ctx.rayleigh.oracle(ctx.sphere), x0, cfg.T, opt, run_rng, ro);
      // Success metric: weighted-average iterate, sign-ambiguity resolved.
      const Vec& x_final = res.averaged_x.size() > 0 ? res.averaged_x : res.final_x;
      const double d_plus = m.distance(x_final, ctx.rayleigh_ref.x_star);
      const double d_minus = m.distance(x_final, Vec(-ctx.rayleigh_ref.x_star));
      outcome.final_metric = std::min(d_plus, d_minus);
      outcome.status = res.diverged ? "diverged" : "ok";
      if (trace_out) *trace_out = std::move(res.trace);
    } else if (cfg.experiment == "pca") {
      const auto& m = *ctx.grassmann;
      const Vec x0 = init_point(m, InitScheme::kGaussianQR, init_rng.seed());
      ro.reference = ctx.pca_ref.x_star;
      RunResult res = run(m, ctx.pca.oracle(ctx.grassmann), x0, cfg.T, opt, run_rng, ro);
      const Vec& x_final = res.averaged_x.size() > 0 ? res.averaged_x : res.final_x;
      outcome.final_metric = m.distance(x_final, ctx.pca_ref.x_star);
      outcome.status = res.diverged ? "diverged" : "ok";
      if (trace_out) *trace_out = std::move(res.trace);
    } else {
      const auto& m = *ctx.embed_manifold;
      const Vec x0 = init_point(m, InitScheme::kUniformBall, init_rng.seed());
      int burn_steps = 0;
      if (cfg.burn_in.enabled && !is_lr_free(opt.kind)) {
        burn_steps = cfg.burn_in.epochs * ctx.embed->iterations_per_epoch();
        opt.burn_in_steps = burn_steps;
        opt.burn_in_lr = opt.lr / cfg.burn_in.lr_divisor;
      }
      RunResult res = run(m, ctx.embed->oracle(burn_steps), x0, cfg.T, opt, run_rng, ro);
      PoincareBall ball(cfg.embed_dim);
      const MapResult mr =
          mean_average_precision(ctx.embed->graph(), res.final_x, ball, cfg.embed_dim);
      outcome.final_metric = mr.map_per_edge;
      outcome.status = res.diverged ? "diverged" : "ok";
      if (trace_out) *trace_out = std::move(res.trace);
    }
  } catch (const std::exception& e) {
    outcome.status = std::string("failed: ") + e.what();
  }
  return outcome;
}

// Runs the whole grid on a worker pool and writes traces, summary.csv,
// config_resolved.json, and manifest.json. Returns the process exit status.
inline int run_experiment(const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  const ExperimentContext ctx = build_context(cfg);
  const std::vector<GridCell> cells = enumerate_cells(cfg);
  std::vector<CellOutcome> outcomes(cells.size());

  const int workers = cfg.workers > 0
                          ? cfg.workers
                          : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      std::vector<TraceRecord> trace;
      outcomes[i] = run_cell(ctx, cells[i], &trace);
      std::ofstream tf(fs::path(cfg.out_dir) / cells[i].trace_file);
      for (const auto& r : trace) tf << detail::trace_json(r).dump() << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Summary CSV, rows in cell order (scheduling-independent).
  {
    std::ofstream csv(fs::path(cfg.out_dir) / "summary.csv");
    csv << "experiment,optimizer,param_name,param_value,replication,final_metric,status\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      const auto& o = outcomes[i];
      std::string status = o.status;
      for (char& ch : status)
        if (ch == ',' || ch == '\n') ch = ';';
      csv << cfg.experiment << ',' << c.optimizer << ',' << c.param_name << ','
          << detail::fmt_double(c.param_value) << ',' << c.replication << ','
          << detail::fmt_double(o.final_metric) << ',' << status << "\n";
    }
  }

  const std::string resolved = ctx.cfg.to_json().dump(2);
  {
    std::ofstream cf(fs::path(cfg.out_dir) / "config_resolved.json");
    cf << resolved << "\n";
  }
  {
    json manifest;
    manifest["config_hash"] = detail::fnv1a(resolved);
    manifest["rng_algorithm"] = Rng::kAlgorithm;
    manifest["seed"] = cfg.seed;
    json jcells = json::array();
    for (const auto& c : cells)
      jcells.push_back({{"index", c.index},
                        {"optimizer", c.optimizer},
                        {"param_name", c.param_name},
                        {"param_value", c.param_value},
                        {"replication", c.replication},
                        {"seed", c.seed},
                        {"trace_file", c.trace_file}});
    manifest["cells"] = jcells;
    std::ofstream mf(fs::path(cfg.out_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";
  }
  return 0;
}

}  // namespace rfree

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixflow/config.hpp"
#include "mixflow/dataset.hpp"
#include "mixflow/diagnostics.hpp"
#include "mixflow/errors.hpp"
#include "mixflow/hamflow.hpp"
#include "mixflow/io.hpp"
#include "mixflow/mixflow.hpp"
#include "mixflow/regression.hpp"
#include "mixflow/rng.hpp"
#include "mixflow/synthetic.hpp"

namespace mixflow_cli {

using namespace mixflow;

namespace {

// Every stochastic stage derives its generator from (seed, lane, index), so
// results do not depend on thread count or on which other stages ran.
enum Lane : std::uint64_t {
  kLaneSamples = 1,
  kLaneKsd = 2,
  kLaneStability = 3,
  kLaneEss = 4,
  kLaneCompare = 5,
  kLaneFit = 6,
  kLaneCells = 1000,  // (cell c, replicate r) -> (kLaneCells + c, r)
};

// Reads keys out of the user config while recording the value actually
// used (default or explicit) so run_meta.json carries the full resolved
// configuration.
class Resolver {
 public:
  explicit Resolver(ConfigMap cfg) : in_(std::move(cfg)) {}

  std::string str(const std::string& key) {
    std::string v = in_.get_string(key);
    out_.set(key, v);
    return v;
  }
  std::string str(const std::string& key, const std::string& fallback) {
    std::string v = in_.get_string(key, fallback);
    out_.set(key, v);
    return v;
  }
  double num(const std::string& key) {
    double v = in_.get_double(key);
    out_.set(key, format_double(v));
    return v;
  }
  double num(const std::string& key, double fallback) {
    double v = in_.get_double(key, fallback);
    out_.set(key, format_double(v));
    return v;
  }
  long integer(const std::string& key) {
    long v = in_.get_long(key);
    out_.set(key, std::to_string(v));
    return v;
  }
  long integer(const std::string& key, long fallback) {
    long v = in_.get_long(key, fallback);
    out_.set(key, std::to_string(v));
    return v;
  }
  bool flag(const std::string& key, bool fallback) {
    bool v = in_.get_bool(key, fallback);
    out_.set(key, v ? "true" : "false");
    return v;
  }
  std::vector<double> num_list(const std::string& key) {
    std::vector<double> v = in_.get_double_list(key);
    record_list(key, v);
    return v;
  }
  std::vector<double> num_list(const std::string& key,
                               const std::vector<double>& fallback) {
    std::vector<double> v =
        in_.has(key) ? in_.get_double_list(key) : fallback;
    record_list(key, v);
    return v;
  }
  std::vector<long> int_list(const std::string& key) {
    std::vector<long> v = in_.get_long_list(key);
    record_int_list(key, v);
    return v;
  }
  std::vector<long> int_list(const std::string& key,
                             const std::vector<long>& fallback) {
    std::vector<long> v = in_.has(key) ? in_.get_long_list(key) : fallback;
    record_int_list(key, v);
    return v;
  }
  bool has(const std::string& key) const { return in_.has(key); }
  void record(const std::string& key, const std::string& value) {
    out_.set(key, value);
  }
  const ConfigMap& resolved() const { return out_; }

 private:
  void record_list(const std::string& key, const std::vector<double>& v) {
    std::string joined;
    for (double x : v) {
      if (!joined.empty()) joined += ", ";
      joined += format_double(x);
    }
    out_.set(key, joined);
  }
  void record_int_list(const std::string& key, const std::vector<long>& v) {
    std::string joined;
    for (long x : v) {
      if (!joined.empty()) joined += ", ";
      joined += std::to_string(x);
    }
    out_.set(key, joined);
  }

  ConfigMap in_;
  ConfigMap out_;
};

const std::vector<std::string>& synthetic_names() {
  static const std::vector<std::string> names = {
      "gauss1d", "gmm1d", "cauchy1d", "banana", "funnel", "cross", "warp"};
  return names;
}

const std::vector<std::string>& regression_names() {
  static const std::vector<std::string> names = {
      "linear_normal", "linear_cauchy", "logistic",
      "poisson",       "student_t",     "sparse"};
  return names;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

TargetPtr build_target(Resolver& r) {
  std::string name = r.str("target.name");
  if (contains(synthetic_names(), name)) {
    long dim = r.integer("target.dim", 2);
    return synthetic_target(name, dim);
  }
  if (contains(regression_names(), name)) {
    std::string path = r.str("target.dataset");
    std::string response = r.str("target.response");
    std::string std_mode = r.str("target.standardize", "none");
    Standardize mode;
    if (std_mode == "none") {
      mode = Standardize::kNone;
    } else if (std_mode == "features") {
      mode = Standardize::kFeatures;
    } else if (std_mode == "features_and_response") {
      mode = Standardize::kFeaturesAndResponse;
    } else {
      throw InvalidArgument("config: target.standardize must be none, "
                            "features, or features_and_response");
    }
    Dataset data = load_dataset(path, response, mode);
    return regression_target(name, data);
  }
  throw InvalidArgument("config: unknown target.name '" + name + "'");
}

MomentumModel build_momentum(Resolver& r) {
  std::string kind = r.str("momentum", "laplace");
  if (kind == "laplace") return MomentumModel(MomentumKind::kLaplace);
  if (kind == "gaussian") return MomentumModel(MomentumKind::kGaussian);
  throw InvalidArgument("config: momentum must be laplace or gaussian");
}

Eigen::VectorXd resolve_vector(Resolver& r, const std::string& key,
                               Eigen::Index dim, double fallback) {
  std::vector<double> v =
      r.num_list(key, std::vector<double>(static_cast<std::size_t>(dim),
                                          fallback));
  if (v.size() == 1 && dim > 1) {
    v.assign(static_cast<std::size_t>(dim), v[0]);
  }
  if (v.size() != static_cast<std::size_t>(dim)) {
    throw InvalidArgument("config: " + key + " must have 1 or " +
                          std::to_string(dim) + " entries");
  }
  Eigen::VectorXd out(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    out[i] = v[static_cast<std::size_t>(i)];
  }
  return out;
}

AugmentedReference build_reference(Resolver& r, const TargetModel& target,
                                   const MomentumModel& momentum,
                                   unsigned long long seed) {
  std::string kind = r.str("reference.kind", "fixed");
  Eigen::Index d = target.dim();
  if (kind == "fixed") {
    Eigen::VectorXd mean = resolve_vector(r, "reference.mean", d, 0.0);
    Eigen::VectorXd scale = resolve_vector(r, "reference.scale", d, 1.0);
    return AugmentedReference(mean, scale, momentum);
  }
  if (kind == "fit") {
    long steps = r.integer("reference.fit.steps", 2000);
    double step_size = r.num("reference.fit.step_size", 0.05);
    long batch = r.integer("reference.fit.batch", 16);
    if (steps < 0 || batch < 1) {
      throw InvalidArgument("config: reference.fit.steps must be >= 0 and "
                            "reference.fit.batch >= 1");
    }
    Rng rng = make_stream(seed, kLaneFit, 0);
    MeanFieldFit fit = fit_meanfield(target, momentum, static_cast<int>(steps),
                                     step_size, static_cast<int>(batch), rng);
    return fit.reference;
  }
  throw InvalidArgument("config: reference.kind must be fixed or fit");
}

// Flow pieces that do not depend on epsilon.
struct FlowSpec {
  std::string kind;  // hamiltonian | identity
  long n_leapfrog = 50;
  double xi = kDefaultXi;
};

FlowSpec resolve_flow_spec(Resolver& r) {
  FlowSpec spec;
  spec.kind = r.str("flow.kind", "hamiltonian");
  if (spec.kind != "hamiltonian" && spec.kind != "identity") {
    throw InvalidArgument("config: flow.kind must be hamiltonian or identity");
  }
  spec.n_leapfrog = r.integer("flow.n_leapfrog", 50);
  spec.xi = r.num("flow.xi", kDefaultXi);
  if (spec.kind == "hamiltonian" && spec.n_leapfrog < 1) {
    throw InvalidArgument("config: flow.n_leapfrog must be >= 1");
  }
  return spec;
}

FlowPtr build_transform(const FlowSpec& spec, double epsilon,
                        const TargetPtr& target,
                        const MomentumModel& momentum) {
  if (spec.kind == "identity") {
    return std::make_shared<IdentityTransform>(target->dim());
  }
  HamFlowParams params;
  params.epsilon = epsilon;
  params.n_leapfrog = static_cast<int>(spec.n_leapfrog);
  params.xi = spec.xi;
  return std::make_shared<HamiltonianFlow>(params, target, momentum);
}

void validate_epsilons(const FlowSpec& spec, const std::vector<double>& eps) {
  if (eps.empty()) throw InvalidArgument("config: flow.epsilon is empty");
  if (spec.kind != "hamiltonian") return;
  for (double e : eps) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw InvalidArgument("config: flow.epsilon entries must be positive "
                            "and finite");
    }
  }
}

// Buffered outputs: nothing touches the filesystem until the whole command
// has succeeded, and a failure while flushing removes what was written.
class OutputSet {
 public:
  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }

  void flush(const std::string& out_dir) {
    ensure_directory(out_dir);
    std::vector<std::string> written;
    try {
      for (const auto& [name, content] : files_) {
        std::string path = (std::filesystem::path(out_dir) / name).string();
        write_text_file(path, content);
        written.push_back(path);
      }
    } catch (...) {
      std::error_code ec;
      for (const std::string& path : written) {
        std::filesystem::remove(path, ec);
      }
      throw;
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string meta_json(const std::string& command, unsigned long long seed,
                      const ConfigMap& resolved) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : resolved.entries()) cfg[k] = v;
  nlohmann::json meta = {
      {"command", command},
      {"config", cfg},
      {"seed", seed},
      {"version", kVersion},
  };
  return meta.dump(2) + "\n";
}

// Runs job(0..n_jobs-1) on `threads` workers. Each job must only write its
// own result slot. The first non-divergence exception is rethrown once all
// workers have stopped.
void run_pool(std::size_t n_jobs, int threads,
              const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n_jobs || failed.load()) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  int t = std::max(1, threads);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t - 1));
  for (int k = 0; k < t - 1; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double l1_norm(const AugmentedState& s) { return s.x.cwiseAbs().sum(); }

struct CommandContext {
  explicit CommandContext(ConfigMap cfg) : r(std::move(cfg)) {}

  Resolver r;
  unsigned long long seed = 0;
  int threads = 1;
  TargetPtr target;
  MomentumModel momentum{MomentumKind::kLaplace};
  FlowSpec flow_spec;
  OutputSet outputs;
};

CommandContext make_context(const CliArgs& args) {
  CommandContext ctx(ConfigMap::load_file(args.config_path));

  if (args.seed.has_value()) {
    ctx.seed = *args.seed;
  } else if (ctx.r.has("seed")) {
    long s = ctx.r.integer("seed");
    if (s < 0) throw InvalidArgument("config: seed must be >= 0");
    ctx.seed = static_cast<unsigned long long>(s);
  } else {
    throw InvalidArgument("config: seed is required (config key or --seed)");
  }
  ctx.r.record("seed", std::to_string(ctx.seed));

  long hw = static_cast<long>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  long threads = args.threads.has_value()
                     ? *args.threads
                     : ctx.r.integer("threads", hw);
  if (threads < 1) throw InvalidArgument("config: threads must be >= 1");
  ctx.r.record("threads", std::to_string(threads));
  ctx.threads = static_cast<int>(threads);

  ctx.target = build_target(ctx.r);
  ctx.momentum = build_momentum(ctx.r);
  ctx.flow_spec = resolve_flow_spec(ctx.r);
  return ctx;
}

std::vector<std::string> state_header(Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index i = 0; i < d; ++i) h.push_back("x" + std::to_string(i));
  for (Eigen::Index i = 0; i < d; ++i) h.push_back("rho" + std::to_string(i));
  h.push_back("u");
  return h;
}

std::vector<double> state_row(const AugmentedState& s) {
  std::vector<double> row;
  const Eigen::Index d = s.x.size();
  row.reserve(static_cast<std::size_t>(2 * d + 1));
  for (Eigen::Index i = 0; i < d; ++i) row.push_back(s.x[i]);
  for (Eigen::Index i = 0; i < d; ++i) row.push_back(s.rho[i]);
  row.push_back(s.u);
  return row;
}

std::string samples_csv(const MixFlow& flow, long count,
                        unsigned long long seed) {
  CsvWriter csv(state_header(flow.reference().dim()));
  Rng rng = make_stream(seed, kLaneSamples, 0);
  for (long i = 0; i < count; ++i) csv.add_row(state_row(flow.sample(rng)));
  return csv.str();
}

std::string ksd_json(const MixFlow& flow, const TargetModel& target,
                     long n_samples, double c, double beta,
                     unsigned long long seed) {
  Rng rng = make_stream(seed, kLaneKsd, 0);
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(static_cast<std::size_t>(n_samples));
  for (long i = 0; i < n_samples; ++i) xs.push_back(flow.sample(rng).x);
  double v = ksd_imq(
      xs, [&](const Eigen::VectorXd& x) { return target.grad_log_density(x); },
      c, beta);
  nlohmann::json out = {
      {"ksd", v}, {"samples", n_samples}, {"c", c}, {"beta", beta}};
  return out.dump(2) + "\n";
}

std::string stability_csv(const FlowTransform& transform,
                          const AugmentedReference& reference,
                          const std::vector<long>& ks, long draws,
                          unsigned long long seed) {
  Rng rng = make_stream(seed, kLaneStability, 0);
  StabilityProfile profile =
      stability_profile(transform, reference, ks, static_cast<int>(draws), rng);
  CsvWriter csv({"k", "fwd_inv_q25", "fwd_inv_q50", "fwd_inv_q75",
                 "inv_fwd_q25", "inv_fwd_q50", "inv_fwd_q75"});
  for (const StabilityRecord& rec : profile) {
    csv.add_row(std::vector<double>{static_cast<double>(rec.k),
                                    rec.fwd_inv_q25, rec.fwd_inv_q50,
                                    rec.fwd_inv_q75, rec.inv_fwd_q25,
                                    rec.inv_fwd_q50, rec.inv_fwd_q75});
  }
  return csv.str();
}

// Replicated single-trajectory ELBO estimates over a grid of (epsilon, N)
// cells, farmed out cell-by-replicate. A NaN entry marks a replicate whose
// trajectory diverged.
struct SweepResultTable {
  std::vector<double> elbo;  // cell-major, replicate inner
  std::size_t n_cells = 0;
  long replicates = 0;

  bool cell_diverged(std::size_t cell) const {
    for (long r = 0; r < replicates; ++r) {
      if (std::isnan(elbo[cell * static_cast<std::size_t>(replicates) +
                          static_cast<std::size_t>(r)])) {
        return true;
      }
    }
    return false;
  }
  double cell_mean(std::size_t cell) const {
    double sum = 0.0;
    for (long r = 0; r < replicates; ++r) {
      sum += elbo[cell * static_cast<std::size_t>(replicates) +
                  static_cast<std::size_t>(r)];
    }
    return sum / static_cast<double>(replicates);
  }
  double cell_se(std::size_t cell) const {
    std::vector<double> vals(
        elbo.begin() + static_cast<long>(cell) * replicates,
        elbo.begin() + (static_cast<long>(cell) + 1) * replicates);
    if (vals.size() < 2) return 0.0;
    return std::sqrt(sample_variance(vals) /
                     static_cast<double>(vals.size()));
  }
};

SweepResultTable run_elbo_grid(const CommandContext& ctx,
                               const AugmentedReference& reference,
                               const std::vector<FlowPtr>& cell_transforms,
                               const std::vector<long>& cell_n_steps,
                               long burn_in, long replicates) {
  SweepResultTable table;
  table.n_cells = cell_transforms.size();
  table.replicates = replicates;
  table.elbo.assign(table.n_cells * static_cast<std::size_t>(replicates),
                    0.0);
  AugmentedTarget aug(ctx.target, ctx.momentum);

  run_pool(table.elbo.size(), ctx.threads, [&](std::size_t job) {
    std::size_t cell = job / static_cast<std::size_t>(replicates);
    std::size_t rep = job % static_cast<std::size_t>(replicates);
    Rng rng = make_stream(ctx.seed, kLaneCells + cell, rep);
    MixFlow flow(reference, cell_transforms[cell], cell_n_steps[cell],
                 burn_in);
    try {
      table.elbo[job] = flow.estimate_elbo(aug, rng);
    } catch (const NumericalDivergence&) {
      table.elbo[job] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return table;
}

void cmd_sweep(CommandContext& ctx, const CliArgs& args) {
  std::vector<double> eps_grid = ctx.r.num_list("flow.epsilon");
  validate_epsilons(ctx.flow_spec, eps_grid);
  std::vector<long> n_grid = ctx.r.int_list("flow.n_grid");
  if (n_grid.empty()) throw InvalidArgument("config: flow.n_grid is empty");
  for (long n : n_grid) {
    if (n < 1) throw InvalidArgument("config: flow.n_grid entries must be >= 1");
  }
  long burn_in = ctx.r.integer("flow.burn_in", 0);
  long min_n = *std::min_element(n_grid.begin(), n_grid.end());
  if (burn_in < 0 || burn_in >= min_n) {
    throw InvalidArgument("config: flow.burn_in must lie in [0, min n_steps)");
  }
  long replicates = ctx.r.integer("elbo.replicates", 32);
  if (replicates < 1) {
    throw InvalidArgument("config: elbo.replicates must be >= 1");
  }

  AugmentedReference reference =
      build_reference(ctx.r, *ctx.target, ctx.momentum, ctx.seed);

  std::vector<FlowPtr> transforms;
  std::vector<long> cell_n;
  std::vector<double> cell_eps;
  for (double eps : eps_grid) {
    FlowPtr t = build_transform(ctx.flow_spec, eps, ctx.target, ctx.momentum);
    for (long n : n_grid) {
      transforms.push_back(t);
      cell_n.push_back(n);
      cell_eps.push_back(eps);
    }
  }

  SweepResultTable table =
      run_elbo_grid(ctx, reference, transforms, cell_n, burn_in, replicates);

  CsvWriter sweep_csv({"epsilon", "n_steps", "replicate", "elbo"});
  for (std::size_t cell = 0; cell < table.n_cells; ++cell) {
    for (long rep = 0; rep < replicates; ++rep) {
      sweep_csv.add_row(std::vector<double>{
          cell_eps[cell], static_cast<double>(cell_n[cell]),
          static_cast<double>(rep),
          table.elbo[cell * static_cast<std::size_t>(replicates) +
                     static_cast<std::size_t>(rep)]});
    }
  }
  ctx.outputs.add("elbo_sweep.csv", sweep_csv.str());

  CsvWriter cells_csv({"epsilon", "n_steps", "status", "elbo_mean",
                       "elbo_se"});
  bool have_best = false;
  std::size_t best_cell = 0;
  double best_mean = -kInf;
  for (std::size_t cell = 0; cell < table.n_cells; ++cell) {
    bool diverged = table.cell_diverged(cell);
    double mean = diverged ? std::numeric_limits<double>::quiet_NaN()
                           : table.cell_mean(cell);
    double se = diverged ? std::numeric_limits<double>::quiet_NaN()
                         : table.cell_se(cell);
    cells_csv.add_row(std::vector<std::string>{
        format_double(cell_eps[cell]), std::to_string(cell_n[cell]),
        diverged ? "diverged" : "ok", format_double(mean),
        format_double(se)});
    if (!diverged && mean > best_mean) {
      best_mean = mean;
      best_cell = cell;
      have_best = true;
    }
  }
  ctx.outputs.add("sweep_cells.csv", cells_csv.str());

  nlohmann::json best;
  if (have_best) {
    best = {{"status", "ok"},
            {"epsilon", cell_eps[best_cell]},
            {"n_steps", cell_n[best_cell]},
            {"elbo_mean", best_mean},
            {"elbo_se", table.cell_se(best_cell)}};
  } else {
    best = {{"status", "no_valid_cell"}};
  }
  ctx.outputs.add("best.json", best.dump(2) + "\n");
  ctx.outputs.add("run_meta.json",
                  meta_json(args.command, ctx.seed, ctx.r.resolved()));
}

// Shared by run/sample/density/diagnose: a single fixed-(epsilon, N) flow.
struct SingleFlow {
  FlowPtr transform;
  long n_steps = 0;
  long burn_in = 0;
};

SingleFlow resolve_single_flow(CommandContext& ctx) {
  double eps = ctx.flow_spec.kind == "hamiltonian"
                   ? ctx.r.num("flow.epsilon")
                   : ctx.r.num("flow.epsilon", 0.0);
  validate_epsilons(ctx.flow_spec, {eps});
  SingleFlow sf;
  sf.n_steps = ctx.r.integer("flow.n_steps");
  if (sf.n_steps < 1) {
    throw InvalidArgument("config: flow.n_steps must be >= 1");
  }
  sf.burn_in = ctx.r.integer("flow.burn_in", 0);
  if (sf.burn_in < 0 || sf.burn_in >= sf.n_steps) {
    throw InvalidArgument("config: flow.burn_in must lie in [0, n_steps)");
  }
  sf.transform = build_transform(ctx.flow_spec, eps, ctx.target, ctx.momentum);
  return sf;
}

struct KsdSettings {
  bool enabled = true;
  long samples = 0;
  double c = 1.0;
  double beta = -0.5;
};

KsdSettings resolve_ksd(CommandContext& ctx, long default_samples) {
  KsdSettings k;
  k.enabled = ctx.r.flag("ksd.enabled", true);
  if (!k.enabled) return k;
  k.samples = ctx.r.integer("ksd.samples", default_samples);
  k.c = ctx.r.num("ksd.c", 1.0);
  k.beta = ctx.r.num("ksd.beta", -0.5);
  if (k.samples < 1) {
    throw InvalidArgument("config: ksd requested with ksd.samples < 1");
  }
  if (!(k.c > 0.0) || !(k.beta < 0.0)) {
    throw InvalidArgument("config: ksd.c must be > 0 and ksd.beta < 0");
  }
  return k;
}

struct StabilitySettings {
  bool enabled = true;
  std::vector<long> ks;
  long draws = 100;
};

StabilitySettings resolve_stability(CommandContext& ctx) {
  StabilitySettings s;
  s.enabled = ctx.r.flag("stability.enabled", true);
  if (!s.enabled) return s;
  s.ks = ctx.r.int_list("stability.ks", {0, 10, 100});
  s.draws = ctx.r.integer("stability.draws", 100);
  if (s.draws < 1) {
    throw InvalidArgument("config: stability.draws must be >= 1");
  }
  return s;
}

void cmd_run(CommandContext& ctx, const CliArgs& args) {
  long count = ctx.r.integer("samples.count", 1000);
  if (count < 1) throw InvalidArgument("config: samples.count must be >= 1");
  long replicates = ctx.r.integer("elbo.replicates", 32);
  if (replicates < 1) {
    throw InvalidArgument("config: elbo.replicates must be >= 1");
  }
  KsdSettings ksd = resolve_ksd(ctx, count);
  StabilitySettings stab = resolve_stability(ctx);

  AugmentedReference reference =
      build_reference(ctx.r, *ctx.target, ctx.momentum, ctx.seed);
  SingleFlow sf = resolve_single_flow(ctx);
  MixFlow flow(reference, sf.transform, sf.n_steps, sf.burn_in);
  std::vector<long> n_grid =
      ctx.r.int_list("flow.n_grid", {sf.n_steps});
  for (long n : n_grid) {
    if (n <= sf.burn_in) {
      throw InvalidArgument(
          "config: flow.n_grid entries must exceed flow.burn_in");
    }
  }

  ctx.outputs.add("samples.csv", samples_csv(flow, count, ctx.seed));

  std::vector<FlowPtr> transforms(n_grid.size(), sf.transform);
  SweepResultTable table = run_elbo_grid(ctx, reference, transforms, n_grid,
                                         sf.burn_in, replicates);
  CsvWriter curve({"n_steps", "elbo_mean", "elbo_se", "status"});
  for (std::size_t cell = 0; cell < table.n_cells; ++cell) {
    bool diverged = table.cell_diverged(cell);
    curve.add_row(std::vector<std::string>{
        std::to_string(n_grid[cell]),
        format_double(diverged ? std::numeric_limits<double>::quiet_NaN()
                               : table.cell_mean(cell)),
        format_double(diverged ? std::numeric_limits<double>::quiet_NaN()
                               : table.cell_se(cell)),
        diverged ? "diverged" : "ok"});
  }
  ctx.outputs.add("elbo_vs_n.csv", curve.str());

  if (ksd.enabled) {
    ctx.outputs.add("ksd.json", ksd_json(flow, *ctx.target, ksd.samples,
                                         ksd.c, ksd.beta, ctx.seed));
  }
  if (stab.enabled) {
    ctx.outputs.add("stability.csv",
                    stability_csv(flow.transform(), reference, stab.ks,
                                  stab.draws, ctx.seed));
  }
  ctx.outputs.add("run_meta.json",
                  meta_json(args.command, ctx.seed, ctx.r.resolved()));
}

void cmd_sample(CommandContext& ctx, const CliArgs& args) {
  long count = ctx.r.integer("samples.count", 1000);
  if (count < 1) throw InvalidArgument("config: samples.count must be >= 1");
  AugmentedReference reference =
      build_reference(ctx.r, *ctx.target, ctx.momentum, ctx.seed);
  SingleFlow sf = resolve_single_flow(ctx);
  MixFlow flow(reference, sf.transform, sf.n_steps, sf.burn_in);
  ctx.outputs.add("samples.csv", samples_csv(flow, count, ctx.seed));
  ctx.outputs.add("run_meta.json",
                  meta_json(args.command, ctx.seed, ctx.r.resolved()));
}

void cmd_density(CommandContext& ctx, const CliArgs& args) {
  std::string points_path = ctx.r.str("density.points");
  AugmentedReference reference =
      build_reference(ctx.r, *ctx.target, ctx.momentum, ctx.seed);
  SingleFlow sf = resolve_single_flow(ctx);
  MixFlow flow(reference, sf.transform, sf.n_steps, sf.burn_in);
  const Eigen::Index d = reference.dim();

  Dataset points = load_dataset(points_path, "u");
  std::vector<std::string> expected = state_header(d);
  expected.pop_back();  // u arrives as the response column
  if (points.feature_names != expected) {
    throw InvalidArgument(
        "config: density.points columns must be x0..x" +
        std::to_string(d - 1) + ", rho0..rho" + std::to_string(d - 1) +
        ", u (the samples.csv layout)");
  }

  std::vector<std::string> header = state_header(d);
  header.push_back("log_density");
  CsvWriter csv(header);
  for (Eigen::Index row = 0; row < points.rows(); ++row) {
    AugmentedState s;
    s.x = points.features.row(row).head(d).transpose();
    s.rho = points.features.row(row).tail(d).transpose();
    s.u = points.responses[row];
    if (!(s.u >= 0.0 && s.u < 1.0)) {
      throw InvalidArgument("density.points row " + std::to_string(row + 1) +
                            ": u must lie in [0, 1)");
    }
    double ld;
    try {
      ld = flow.log_density(s);
    } catch (const NumericalDivergence&) {
      ld = std::numeric_limits<double>::quiet_NaN();
    }
    std::vector<double> out = state_row(s);
    out.push_back(ld);
    csv.add_row(out);
  }
  ctx.outputs.add("density.csv", csv.str());
  ctx.outputs.add("run_meta.json",
                  meta_json(args.command, ctx.seed, ctx.r.resolved()));
}

void cmd_diagnose(CommandContext& ctx, const CliArgs& args) {
  KsdSettings ksd = resolve_ksd(ctx, 500);
  StabilitySettings stab = resolve_stability(ctx);
  bool ess_enabled = ctx.r.flag("diag.ess.enabled", true);
  long ess_length = 0;
  if (ess_enabled) {
    ess_length = ctx.r.integer("diag.ess.length", 1000);
    if (ess_length < 10) {
      throw InvalidArgument("config: diag.ess.length must be >= 10");
    }
  }
  bool compare_enabled = ctx.r.flag("diag.compare.enabled", false);

  AugmentedReference reference =
      build_reference(ctx.r, *ctx.target, ctx.momentum, ctx.seed);
  SingleFlow sf = resolve_single_flow(ctx);
  MixFlow flow(reference, sf.transform, sf.n_steps, sf.burn_in);

  long compare_budget = 0, compare_trials = 0;
  if (compare_enabled) {
    compare_budget =
        ctx.r.integer("diag.compare.budget", 50 * flow.n_steps());
    compare_trials = ctx.r.integer("diag.compare.trials", 10);
  }

  if (ksd.enabled) {
    ctx.outputs.add("ksd.json", ksd_json(flow, *ctx.target, ksd.samples,
                                         ksd.c, ksd.beta, ctx.seed));
  }
  if (stab.enabled) {
    ctx.outputs.add("stability.csv",
                    stability_csv(flow.transform(), reference, stab.ks,
                                  stab.draws, ctx.seed));
  }
  if (ess_enabled) {
    // ESS of the trajectory series f(T^n(X0)), f = the l1 norm of x: the
    // dependence along one flow orbit is what trajectory averaging pays for.
    Rng rng = make_stream(ctx.seed, kLaneEss, 0);
    AugmentedState s = reference.sample(rng);
    std::vector<double> series;
    series.reserve(static_cast<std::size_t>(ess_length));
    series.push_back(l1_norm(s));
    for (long i = 1; i < ess_length; ++i) {
      s = flow.transform().forward(s).first;
      series.push_back(l1_norm(s));
    }
    double ess = ess_batch_means(series);
    nlohmann::json out = {{"length", ess_length},
                          {"ess", ess},
                          {"ess_per_point",
                           ess / static_cast<double>(ess_length)}};
    ctx.outputs.add("ess.json", out.dump(2) + "\n");
  }
  if (compare_enabled) {
    Rng rng = make_stream(ctx.seed, kLaneCompare, 0);
    EstimatorComparison cmp = compare_estimators(
        flow, l1_norm, compare_budget, static_cast<int>(compare_trials), rng);
    nlohmann::json out = {{"eval_budget", compare_budget},
                          {"trials", compare_trials},
                          {"iid_mean", cmp.iid_mean},
                          {"iid_variance", cmp.iid_variance},
                          {"traj_mean", cmp.traj_mean},
                          {"traj_variance", cmp.traj_variance},
                          {"iid_draws_per_trial", cmp.iid_draws_per_trial},
                          {"traj_draws_per_trial", cmp.traj_draws_per_trial}};
    ctx.outputs.add("variance_compare.json", out.dump(2) + "\n");
  }
  ctx.outputs.add("run_meta.json",
                  meta_json(args.command, ctx.seed, ctx.r.resolved()));
}

}  // namespace

void run_command(const CliArgs& args) {
  CommandContext ctx = make_context(args);
  if (args.command == "sweep") {
    cmd_sweep(ctx, args);
  } else if (args.command == "run") {
    cmd_run(ctx, args);
  } else if (args.command == "sample") {
    cmd_sample(ctx, args);
  } else if (args.command == "density") {
    cmd_density(ctx, args);
  } else if (args.command == "diagnose") {
    cmd_diagnose(ctx, args);
  } else {
    throw InvalidArgument("unknown command '" + args.command + "'");
  }
  ctx.outputs.flush(args.out_dir);
}

std::string config_key_help() {
  return
      "Config keys (key = value lines, # comments; flag --seed overrides "
      "seed):\n"
      "  seed                     u64, required unless --seed given\n"
      "  threads                  worker count (results do not depend on it)\n"
      "  target.name              gauss1d|gmm1d|cauchy1d|banana|funnel|cross|"
      "warp\n"
      "                           or linear_normal|linear_cauchy|logistic|"
      "poisson|student_t|sparse\n"
      "  target.dim               funnel dimension (default 2)\n"
      "  target.dataset           CSV path (regression targets)\n"
      "  target.response          response column name (regression targets)\n"
      "  target.standardize       none|features|features_and_response\n"
      "  momentum                 laplace|gaussian (default laplace)\n"
      "  reference.kind           fixed|fit (default fixed)\n"
      "  reference.mean           list or scalar (default 0)\n"
      "  reference.scale          list or scalar (default 1)\n"
      "  reference.fit.steps      optimizer steps (default 2000)\n"
      "  reference.fit.step_size  optimizer step size (default 0.05)\n"
      "  reference.fit.batch      gradient batch size (default 16)\n"
      "  flow.kind                hamiltonian|identity (default hamiltonian)\n"
      "  flow.epsilon             leapfrog step size; list for sweep\n"
      "  flow.n_leapfrog          leapfrog steps per map (default 50)\n"
      "  flow.xi                  pseudotime shift (default pi/16)\n"
      "  flow.n_steps             mixture length N (run/sample/density/"
      "diagnose)\n"
      "  flow.n_grid              N grid (sweep; optional N grid for run)\n"
      "  flow.burn_in             drop T^0..T^{M-1} terms (default 0)\n"
      "  elbo.replicates          ELBO replicates per cell (default 32)\n"
      "  samples.count            draws for samples.csv (default 1000)\n"
      "  ksd.enabled              default true\n"
      "  ksd.samples              draws for the KSD (default samples.count)\n"
      "  ksd.c, ksd.beta          IMQ kernel parameters (default 1, -0.5)\n"
      "  stability.enabled        default true\n"
      "  stability.ks             K grid (default 0, 10, 100)\n"
      "  stability.draws          reference draws (default 100)\n"
      "  density.points           CSV of states to evaluate (density)\n"
      "  diag.ess.enabled         default true (diagnose)\n"
      "  diag.ess.length          trajectory length (default 1000)\n"
      "  diag.compare.enabled     default false (diagnose)\n"
      "  diag.compare.budget      flow evaluations per trial (default 50 N)\n"
      "  diag.compare.trials      trials (default 10)\n";
}

}  // namespace mixflow_cli

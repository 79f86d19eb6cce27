#include "gbl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "gbl/errors.hpp"
#include "gbl/rng.hpp"

namespace gbl {

namespace {

const std::vector<std::string> kDataKeys = {"data",    "data_dir", "label_rule", "n_train",
                                            "n_test",  "synth_dim", "synth_margin", "seed"};
const std::vector<std::string> kNetKeys = {"depth", "width", "activation", "first_layer",
                                           "init_stddev"};
const std::vector<std::string> kTrainKeys = {"step_size",  "max_iters",  "stop_rule",
                                             "loss_threshold", "eval_every", "safety",
                                             "auto_rule",  "beta_probes", "loss"};
const std::vector<std::string> kBoundKeys = {"margin_iters", "epsilon", "rho_star"};
const std::vector<std::string> kXorKeys = {"dim",      "width",      "batch_factor",
                                           "batch_size", "step_size", "steps",
                                           "log_base", "mc_samples", "exact_batches", "seed"};
const std::vector<std::string> kSweepKeys = {"dims",       "seeds",      "seed",     "width",
                                             "batch_factor", "step_size", "log_base",
                                             "mc_samples", "threshold",  "extra_steps"};

std::vector<std::string> joined(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::filesystem::path data_root(const Config& cfg) {
  if (cfg.has("data_dir")) return cfg.get_string("data_dir", "");
  if (const char* env = std::getenv("GBL_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return "data/mnist5k";
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::size_t ceil_log2(std::size_t d) {
  std::size_t k = 0;
  while ((std::size_t(1) << k) < d) ++k;
  return k;
}

}  // namespace

TrainData load_train_data(const Config& cfg) {
  const std::string kind = cfg.get_string("data", "idx");
  const std::uint64_t seed = cfg.get_count("seed", 1);
  const std::size_t n_train = cfg.get_count("n_train", 0);
  const std::size_t n_test = cfg.get_count("n_test", 0);
  TrainData out;
  if (kind == "idx") {
    const std::filesystem::path root = data_root(cfg);
    const LabelRule rule = LabelRule::parse(cfg.get_string("label_rule", "even-odd"));
    const Dataset train = binarize_normalize(
        load_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte"), rule);
    const Dataset test = binarize_normalize(
        load_idx(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte"), rule);
    out.train = n_train > 0 ? subsample(train, n_train, seed, 0) : train;
    out.test = n_test > 0 ? subsample(test, n_test, seed, 1) : test;
  } else if (kind == "synthetic") {
    const std::size_t d = cfg.get_count("synth_dim", 16);
    const double margin = cfg.get_real("synth_margin", 0.3);
    const std::size_t ntr = n_train > 0 ? n_train : 256;
    const std::size_t nte = n_test > 0 ? n_test : 256;
    if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("synth_margin must lie in (0, 1)");
    if (d == 0) throw ConfigError("synth_dim must be >= 1");
    RngStream rng(seed, stream_id("data/synthetic"));
    const Dataset all = synth_ntk_separable(rng, d, ntr + nte, margin);
    std::vector<std::size_t> idx(ntr + nte);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    out.train = all.subset(std::span<const std::size_t>(idx.data(), ntr));
    out.test = all.subset(std::span<const std::size_t>(idx.data() + ntr, nte));
  } else {
    throw ConfigError("data must be \"idx\" or \"synthetic\", got '" + kind + "'");
  }
  return out;
}

NetConfig net_config_from(const Config& cfg, std::size_t input_dim) {
  NetConfig net;
  net.depth = cfg.get_count("depth", net.depth);
  net.width = cfg.get_count("width", net.width);
  net.input_dim = input_dim;
  net.activation = parse_activation(cfg.get_string("activation", "softplus"));
  net.first_layer = parse_first_layer_scaling(cfg.get_string("first_layer", "unscaled"));
  net.init_stddev = cfg.get_real("init_stddev", net.init_stddev);
  net.validate();
  return net;
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig tc;
  tc.step_size = cfg.get_optional_real("step_size");
  tc.max_iters = cfg.get_count("max_iters", tc.max_iters);
  tc.stop_rule = parse_stop_rule(cfg.get_string("stop_rule", "fixed"));
  tc.loss_threshold = cfg.get_real("loss_threshold", tc.loss_threshold);
  tc.eval_every = cfg.get_count("eval_every", tc.eval_every);
  tc.safety = cfg.get_real("safety", tc.safety);
  const std::string rule = cfg.get_string("auto_rule", "lemma");
  if (rule == "lemma") {
    tc.auto_rule = StepRule::lemma;
  } else if (rule == "fallback") {
    tc.auto_rule = StepRule::fallback;
  } else {
    throw ConfigError("auto_rule must be \"lemma\" or \"fallback\", got '" + rule + "'");
  }
  tc.beta_probes = cfg.get_count("beta_probes", tc.beta_probes);
  tc.validate();
  return tc;
}

XorConfig xor_config_from(const Config& cfg) {
  XorConfig xc;
  xc.dim = cfg.get_count("dim", xc.dim);
  xc.width = cfg.get_count("width", xc.width);
  xc.batch_factor = cfg.get_count("batch_factor", xc.batch_factor);
  if (cfg.has("batch_size")) xc.batch_size = cfg.get_count("batch_size", 0);
  xc.step_size = cfg.get_optional_real("step_size");
  if (cfg.has("steps")) xc.steps = cfg.get_count("steps", 0);
  xc.log_base = cfg.get_real("log_base", xc.log_base);
  xc.mc_samples = cfg.get_count("mc_samples", xc.mc_samples);
  xc.exact_batches = cfg.get_bool("exact_batches", xc.exact_batches);
  xc.seed = cfg.get_count("seed", xc.seed);
  xc.validate();
  return xc;
}

TrainOutcome run_train(const Config& cfg, const std::filesystem::path& out_dir) {
  cfg.require_known(joined({kDataKeys, kNetKeys, kTrainKeys, kBoundKeys}));
  const TrainConfig tc = train_config_from(cfg);
  const LossKind loss = parse_loss_kind(cfg.get_string("loss", "logistic"));
  const std::size_t margin_iters = cfg.get_count("margin_iters", 100);
  const std::uint64_t seed = cfg.get_count("seed", 1);
  const TrainData data = load_train_data(cfg);
  const NetConfig net = net_config_from(cfg, data.train.dim());
  ensure_dir(out_dir);

  const Model model(net);
  const NetworkParams w0 = init_params(net, seed);
  TrainOutcome out{net, {}, {}};
  try {
    out.result = train_gd(model, w0, data.train, &data.test, loss, tc);
  } catch (const TrainingDiverged& e) {
    write_metrics_csv(e.partial(), out_dir / "metrics.csv");
    throw;
  }
  const RunMetrics& metrics = out.result.metrics;
  write_metrics_csv(metrics, out_dir / "metrics.csv");
  save_checkpoint(out_dir / "final.snet", net, out.result.params);

  const std::size_t n = data.train.size();
  const RowMatrix probes = probe_inputs(data.train, tc.beta_probes);
  double G0 = 0.0;
  double beta_hat = 0.0;
  if (out.result.auto_step) {
    G0 = out.result.auto_step->constants.G0;
    beta_hat = out.result.auto_step->constants.beta_hat;
  } else {
    G0 = lipschitz_at_init(model, w0, data.train.inputs()).g0;
    beta_hat = estimate_beta_hat(model, w0, std::span<const NetworkParams>(&w0, 1), probes);
  }
  const double eta = metrics.back().eta;
  const double rho_final = metrics.back().dist_from_init;

  BoundReport report = stability_bounds(metrics, G0, rho_final, eta, n);
  report.B_hat = output_bound(model, w0, data.train);
  report.B_hat_floored = std::max(report.B_hat, 1.0);
  double rho = rho_final;
  if (margin_iters > 0) {
    const MarginEstimate margin = estimate_ntk_margin(model, w0, data.train, margin_iters);
    report.gamma_hat = margin.gamma_hat;
    report.separated = margin.separated;
    if (margin.separated) {
      const std::size_t T = std::max<std::size_t>(metrics.back().iter, 1);
      const double eps = cfg.get_real("epsilon", 1.0 / double(T));
      const Corollary1 c =
          corollary1_construct(net, w0, margin.gamma_hat, report.B_hat, eps, margin.direction,
                               beta_hat);
      report.corollary_rho = c.rho;
      report.corollary_rho_raw = c.rho_raw;
      report.corollary_required_m = c.required_m;
      rho = c.rho;
    }
  }
  if (const auto rho_star = cfg.get_optional_real("rho_star")) rho = *rho_star;
  const BoundReport with_rho = stability_bounds(metrics, G0, rho, eta, n);
  report.bound_eq9 = with_rho.bound_eq9;
  if (!report.separated || !*report.separated) report.corollary_rho = rho;

  const std::optional<std::size_t> n_opt =
      tc.stop_rule == StopRule::sqrt_n ? std::optional<std::size_t>(n) : std::nullopt;
  const WidthVerdict width = width_condition_check(net.depth, net.width, rho, beta_hat, n_opt);
  report.width_eq3_required_m = width.required_m;
  report.width_eq3_ok = width.satisfied;
  report.width_sqrt_n_required_m = width.required_m_sqrt_n;
  report.width_sqrt_n_ok = width.satisfied_sqrt_n;

  write_text_file(out_dir / "bounds.json", to_json(report));
  out.bounds = report;
  return out;
}

XorRun run_xor(const Config& cfg, const std::filesystem::path& out_dir) {
  cfg.require_known(kXorKeys);
  const XorConfig xc = xor_config_from(cfg);
  ensure_dir(out_dir);
  XorRun run = run_theorem4(xc);
  write_xor_csv(run.rows, out_dir / "xor.csv");
  return run;
}

SweepOutcome run_sweep(const Config& cfg, const std::filesystem::path& out_dir,
                       std::size_t jobs) {
  cfg.require_known(kSweepKeys);
  const std::vector<std::uint64_t> dims = cfg.get_count_list("dims", {16, 64, 256, 1024});
  const std::size_t seeds = cfg.get_count("seeds", 5);
  const std::uint64_t base_seed = cfg.get_count("seed", 1);
  const double threshold = cfg.get_real("threshold", 0.01);
  const std::size_t extra = cfg.get_count("extra_steps", 6);
  if (seeds == 0) throw ConfigError("seeds must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");

  struct Job {
    XorConfig cfg;
    std::size_t max_steps = 0;
  };
  std::vector<Job> plan;
  std::vector<std::uint64_t> sorted_dims = dims;
  std::sort(sorted_dims.begin(), sorted_dims.end());
  sorted_dims.erase(std::unique(sorted_dims.begin(), sorted_dims.end()), sorted_dims.end());
  for (const std::uint64_t d : sorted_dims) {
    for (std::size_t s = 0; s < seeds; ++s) {
      Job job;
      job.cfg.dim = d;
      job.cfg.width = cfg.get_count("width", 20);
      job.cfg.batch_factor = cfg.get_count("batch_factor", 3);
      job.cfg.step_size = cfg.get_optional_real("step_size");
      job.cfg.log_base = cfg.get_real("log_base", 2.0);
      job.cfg.mc_samples = cfg.get_count("mc_samples", 10000);
      job.cfg.seed = base_seed + s;
      job.max_steps = ceil_log2(d) + extra;
      job.cfg.steps = job.max_steps;
      job.cfg.validate();
      plan.push_back(job);
    }
  }
  ensure_dir(out_dir);

  std::vector<XorRun> runs(plan.size());
  std::vector<std::exception_ptr> errors(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < plan.size(); k = next++) {
      try {
        runs[k] = run_theorem4(plan[k].cfg);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, plan.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SweepOutcome out;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    out.rows.insert(out.rows.end(), runs[k].rows.begin(), runs[k].rows.end());
  }
  for (std::size_t k = 0; k < plan.size(); k += seeds) {
    SweepAggregate agg;
    agg.d = plan[k].cfg.dim;
    agg.seeds = seeds;
    agg.log2_ceiling = ceil_log2(agg.d);
    double total = 0.0;
    double reached_total = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      std::size_t steps = plan[k + s].max_steps + 1;
      for (const XorStepRow& row : runs[k + s].rows) {
        if (1.0 - row.mc_accuracy < threshold) {
          steps = row.step;
          ++agg.reached;
          reached_total += double(steps);
          break;
        }
      }
      total += double(steps);
    }
    agg.mean_steps = total / double(seeds);
    agg.mean_steps_reached = agg.reached > 0 ? reached_total / double(agg.reached)
                                             : std::numeric_limits<double>::quiet_NaN();
    out.summary.push_back(agg);
  }
  write_xor_csv(out.rows, out_dir / "sweep.csv");
  write_sweep_aggregate_csv(out.summary, out_dir / "sweep_summary.csv");
  return out;
}

BoundReport run_bounds(const Config& cfg) {
  cfg.require_known({"metrics", "n", "G0", "rho", "eta"});
  if (!cfg.has("metrics")) throw ConfigError("bounds needs metrics=<csv path>");
  if (!cfg.has("n")) throw ConfigError("bounds needs n");
  if (!cfg.has("G0")) throw ConfigError("bounds needs G0");
  const RunMetrics metrics = read_metrics_csv(cfg.get_string("metrics", ""));
  if (metrics.empty()) throw ConfigError("metrics CSV has no rows");
  const std::size_t n = cfg.get_count("n", 0);
  const double G0 = cfg.get_real("G0", 0.0);
  const double rho = cfg.get_optional_real("rho").value_or(metrics.back().dist_from_init);
  const double eta = cfg.get_optional_real("eta").value_or(metrics.back().eta);
  return stability_bounds(metrics, G0, rho, eta, n);
}

}  // namespace gbl

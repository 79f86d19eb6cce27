#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "gbl/experiments.hpp"

namespace gbl {

namespace {

using Check = std::function<std::string()>;  // empty string on success

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

std::string activation_contracts(bool corrupt) {
  const double d2_scale = corrupt ? 8.0 : 1.0;
  for (const Activation a : {Activation::softplus, Activation::shifted_softplus, Activation::tanh}) {
    for (int k = 0; k <= 40000; ++k) {
      const double t = -20.0 + 1e-3 * k;
      const double d1 = activation_d1(a, t);
      const double d2 = d2_scale * activation_d2(a, t);
      if (!(std::abs(d1) <= 1.0) || !(std::abs(d2) <= 1.0)) {
        return std::string(to_string(a)) + fmt(" breaks |s'|,|s''| <= 1 at t = %g (s'' = %g)", t, d2);
      }
    }
  }
  if (activation_value(Activation::shifted_softplus, 0.0) != 0.0) {
    return "shifted-softplus(0) != 0";
  }
  return {};
}

std::string gradient_finite_differences() {
  std::uint64_t seed = 100;
  for (const Activation a : {Activation::softplus, Activation::shifted_softplus, Activation::tanh,
                             Activation::linear, Activation::quadratic}) {
    for (int rep = 0; rep < 3; ++rep) {
      NetConfig cfg;
      cfg.activation = a;
      cfg.depth = a == Activation::quadratic ? 1 : 2;
      cfg.width = 6;
      cfg.input_dim = 5;
      const Model model(cfg);
      const NetworkParams w = init_params(cfg, ++seed);
      RngStream rng(seed, stream_id("check/x"));
      std::vector<double> x(cfg.input_dim);
      for (double& v : x) v = rng.normal() / std::sqrt(double(cfg.input_dim));
      const std::vector<double> g = model.grad(w, x);
      std::vector<double> fd(w.size());
      const double h = 1e-5;
      for (std::size_t j = 0; j < w.size(); ++j) {
        NetworkParams wp = w;
        NetworkParams wm = w;
        wp.flat()[j] += h;
        wm.flat()[j] -= h;
        fd[j] = (model.forward(wp, x) - model.forward(wm, x)) / (2.0 * h);
      }
      const double err = flat_distance(g, fd) / std::max(flat_norm(g), 1e-12);
      if (!(err <= 1e-6)) return std::string(to_string(a)) + fmt(" relative error %g", err);
    }
  }
  return {};
}

std::string hvp_symmetry() {
  NetConfig cfg;
  cfg.width = 16;
  cfg.input_dim = 8;
  const Model model(cfg);
  const NetworkParams w = init_params(cfg, 7);
  RngStream rng(7, stream_id("check/hvp"));
  std::vector<double> x(cfg.input_dim), u(w.size()), v(w.size());
  for (double& e : x) e = rng.normal() / std::sqrt(double(cfg.input_dim));
  for (double& e : u) e = rng.normal();
  for (double& e : v) e = rng.normal();
  const double uhv = flat_dot(u, hessian_vector_product(model, w, x, v));
  const double vhu = flat_dot(v, hessian_vector_product(model, w, x, u));
  const double rel = std::abs(uhv - vhu) / std::max(std::abs(uhv), std::abs(vhu));
  if (!(rel <= 1e-7)) return fmt("<u,Hv> = %.10g vs <v,Hu> = %.10g", uhv, vhu);
  return {};
}

std::string xor_oracle_closed_form() {
  const QuadNetParams state = init_quad_net(4, 20, 3);
  OracleState oracle = oracle_init(state, 20.0);
  const OracleState start = oracle;
  for (std::size_t t = 1; t <= 30; ++t) {
    oracle = population_step(oracle);
    for (std::size_t i = 0; i < oracle.alpha.size(); ++i) {
      const OraclePair c = oracle_closed_form(start.alpha[i], start.beta[i], start.gamma[i], t);
      const double ref = std::ldexp(1.0, int(t) - 1) *
                         (start.alpha[i] + start.gamma[i] * start.beta[i]);
      const double scale = std::max(std::abs(ref), 1e-300);
      if (std::abs(oracle.alpha[i] - ref) > 1e-12 * scale ||
          std::abs(c.alpha - ref) > 1e-12 * scale) {
        return fmt("neuron mismatch at t = %g: recursion %.17g", double(t), oracle.alpha[i]);
      }
    }
  }
  return {};
}

std::string xor_exact_population() {
  QuadNetParams state = init_quad_net(4, 20, 5);
  OracleState oracle = oracle_init(state, 20.0);
  const Dataset all = xor_enumeration(4);
  for (std::size_t t = 1; t <= 10; ++t) {
    state = sgd_step(state, all, 20.0);
    oracle = population_step(oracle);
    const RowMatrix expected = oracle_weights(oracle);
    const double err = (RowMatrix(state.rows()) - expected).cwiseAbs().maxCoeff();
    if (!(err <= 1e-12 * std::max(1.0, expected.cwiseAbs().maxCoeff()))) {
      return fmt("step %g deviates by %g", double(t), err);
    }
  }
  if (exact_test_accuracy(state) != 1.0) return "d = 4 exact run does not reach accuracy 1";
  return {};
}

std::string descent_lemma() {
  Config cfg;
  cfg.set("data", "synthetic");
  cfg.set("synth_dim", 8);
  cfg.set("n_train", 64);
  const TrainData data = load_train_data(cfg);
  NetConfig net;
  net.width = 32;
  net.input_dim = data.train.dim();
  const Model model(net);
  TrainConfig tc;
  tc.max_iters = 100;
  tc.beta_probes = 8;
  const TrainResult r =
      train_gd(model, init_params(net, 11), data.train, nullptr, LossKind::logistic, tc);
  const std::size_t violations = descent_check(r.metrics);
  if (violations != 0) return fmt("%g descent violations under auto step size", double(violations));
  if (!(r.metrics.back().train_loss < r.metrics.records.front().train_loss)) {
    return "training loss did not decrease";
  }
  return {};
}

std::string bound_arithmetic() {
  RunMetrics m;
  RunRecord last;
  last.iter = 10;
  last.cum_train_loss = 50.0;
  last.dist_from_init = 2.0;
  m.records.push_back(last);
  const BoundReport r = stability_bounds(m, 1.0, 2.0, 0.1, 1000);
  if (r.bound_eq12 != 0.11 || r.bound_eq9 != 0.05625 || r.bound_eq8 != 0.0171875) {
    return fmt("eq12 = %.17g, eq9 = %.17g", r.bound_eq12, r.bound_eq9) +
           fmt(", eq8 = %.17g", r.bound_eq8);
  }
  return {};
}

std::string metrics_roundtrip() {
  RunMetrics m;
  double acc = 0.0;
  for (std::size_t t = 0; t < 5; ++t) {
    RunRecord r;
    r.iter = t;
    r.train_loss = 1.0 / (3.0 + double(t));
    r.test_loss = t % 2 == 0 ? std::sqrt(2.0) / double(t + 1) : std::nan("");
    r.gen_gap = r.test_loss - r.train_loss;
    r.dist_from_init = std::exp(-double(t));
    r.grad_norm = std::acos(-1.0) * double(t);
    r.cum_train_loss = acc;
    r.eta = 0.1;
    r.descent_violation = t == 3;
    acc += r.train_loss;
    m.records.push_back(r);
  }
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "gbl_self_check_metrics.csv";
  write_metrics_csv(m, path);
  const RunMetrics back = read_metrics_csv(path);
  std::filesystem::remove(path);
  if (back.records.size() != m.records.size()) return "row count changed";
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    RunRecord a = m.records[i];
    RunRecord b = back.records[i];
    if (std::isnan(a.test_loss) != std::isnan(b.test_loss)) return "NaN cell not preserved";
    if (std::isnan(a.test_loss)) a.test_loss = b.test_loss = a.gen_gap = b.gen_gap = 0.0;
    if (!(a == b)) return fmt("row %g differs after reload", double(i));
  }
  return {};
}

std::string stream_determinism() {
  RngStream a(42, stream_id("check/rng", 3));
  RngStream b(42, stream_id("check/rng", 3));
  RngStream c(42, stream_id("check/rng", 4));
  bool differs = false;
  for (int k = 0; k < 1000; ++k) {
    const double x = a.normal();
    if (x != b.normal()) return "identical streams diverged";
    differs = differs || x != c.normal();
  }
  if (!differs) return "distinct stream ids produced identical draws";
  return {};
}

}  // namespace

std::vector<CheckResult> run_self_check(const SelfCheckOptions& opts) {
  const std::vector<std::pair<std::string, Check>> suite = {
      {"activation-contracts", [&] { return activation_contracts(opts.corrupt_activation); }},
      {"gradient-finite-differences", gradient_finite_differences},
      {"hvp-symmetry", hvp_symmetry},
      {"xor-oracle-closed-form", xor_oracle_closed_form},
      {"xor-exact-population", xor_exact_population},
      {"descent-lemma", descent_lemma},
      {"bound-arithmetic", bound_arithmetic},
      {"metrics-roundtrip", metrics_roundtrip},
      {"stream-determinism", stream_determinism},
  };
  std::vector<CheckResult> results;
  for (const auto& [name, check] : suite) {
    CheckResult r;
    r.name = name;
    try {
      r.detail = check();
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("threw: ") + e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_check_report(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  std::size_t failed = 0;
  for (const CheckResult& r : results) {
    out << (r.passed ? "ok    " : "FAIL  ") << r.name;
    if (!r.passed) {
      out << ": " << r.detail;
      ++failed;
    }
    out << '\n';
  }
  out << (results.size() - failed) << '/' << results.size() << " checks passed\n";
  return out.str();
}

}  // namespace gbl

#include "gbl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gbl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDescentSlack = 1e-10;

bool violates_descent(const RunRecord& before, const RunRecord& after) {
  return after.train_loss >
         before.train_loss - 0.5 * before.eta * before.grad_norm * before.grad_norm + kDescentSlack;
}

NetworkParams segment_point(const NetworkParams& w1, const NetworkParams& w2, double s) {
  NetworkParams p = w1;
  std::span<double> out = p.flat();
  const std::span<const double> b = w2.flat();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * (b[i] - out[i]);
  return p;
}

void check_same_shape(const NetworkParams& w1, const NetworkParams& w2) {
  if (w1.size() != w2.size()) throw ConfigError("segment endpoints differ in length");
}

}  // namespace

std::string_view to_string(StopRule r) noexcept {
  switch (r) {
    case StopRule::fixed_iters: return "fixed";
    case StopRule::sqrt_n: return "sqrt-n";
    case StopRule::loss_below: return "loss-below";
  }
  return "unknown";
}

StopRule parse_stop_rule(std::string_view name) {
  for (const StopRule r : {StopRule::fixed_iters, StopRule::sqrt_n, StopRule::loss_below}) {
    if (name == to_string(r)) return r;
  }
  throw ConfigError("unknown stop rule '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (step_size && !(*step_size > 0.0 && std::isfinite(*step_size))) {
    throw ConfigError("step_size must be a finite positive number or \"auto\"");
  }
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("safety must lie in (0, 1]");
  if (stop_rule == StopRule::loss_below && !(loss_threshold > 0.0)) {
    throw ConfigError("loss-below stop rule needs loss_threshold > 0");
  }
  if (!step_size && beta_probes == 0) throw ConfigError("beta_probes must be >= 1");
}

std::size_t TrainConfig::iterations(std::size_t n) const {
  if (stop_rule == StopRule::sqrt_n) {
    return std::size_t(std::ceil(std::sqrt(double(n))));
  }
  return max_iters;
}

std::size_t TrainConfig::eval_stride(std::size_t T) const {
  if (eval_every > 0) return eval_every;
  return T <= 5000 ? 1 : (T + 4999) / 5000;
}

RowMatrix probe_inputs(const Dataset& data, std::size_t count) {
  if (data.empty()) throw ConfigError("probe set needs a nonempty dataset");
  count = std::min(std::max<std::size_t>(count, 1), data.size());
  RowMatrix probes{Eigen::Index(count), Eigen::Index(data.dim())};
  for (std::size_t k = 0; k < count; ++k) {
    probes.row(Eigen::Index(k)) = data.inputs().row(Eigen::Index(k * data.size() / count));
  }
  return probes;
}

AutoStep auto_step_size(const Model& model, const NetworkParams& w0, const Dataset& train,
                        const TrainConfig& cfg) {
  AutoStep out;
  const double G0 = lipschitz_at_init(model, w0, train.inputs()).g0;
  const double beta = estimate_beta_hat(model, w0, std::span<const NetworkParams>(&w0, 1),
                                        probe_inputs(train, cfg.beta_probes));
  out.constants = assemble_constants(G0, beta, 0.0, model.config().depth, model.config().width);
  out.eta = descent_step_size(out.constants, cfg.safety, cfg.auto_rule);
  return out;
}

TrainResult train_gd(const Model& model, const NetworkParams& w0, const Dataset& train,
                     const Dataset* test, LossKind kind, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw ConfigError("training set is empty");
  TrainResult result;
  double eta = 0.0;
  if (cfg.step_size) {
    eta = *cfg.step_size;
  } else {
    result.auto_step = auto_step_size(model, w0, train, cfg);
    eta = result.auto_step->eta;
  }
  const std::size_t T = cfg.iterations(train.size());
  const std::size_t stride = cfg.eval_stride(T);

  NetworkParams w = w0;
  double cum = 0.0;
  for (std::size_t t = 0;; ++t) {
    const LossAndGrad lg = empirical_loss_and_grad(model, w, train, kind);
    RunRecord rec;
    rec.iter = t;
    rec.train_loss = lg.loss;
    rec.grad_norm = flat_norm(lg.grad);
    rec.dist_from_init = flat_distance(w.flat(), w0.flat());
    rec.cum_train_loss = cum;
    rec.eta = eta;
    rec.test_loss = kNaN;
    rec.gen_gap = kNaN;
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.grad_norm) ||
        !std::isfinite(rec.dist_from_init)) {
      result.metrics.records.push_back(rec);
      throw TrainingDiverged("non-finite loss or weights at iteration " + std::to_string(t), t,
                             std::move(result.metrics));
    }
    if (test != nullptr && !test->empty() && (t % stride == 0 || t == T)) {
      rec.test_loss = empirical_loss(model, w, *test, kind);
      rec.gen_gap = rec.test_loss - rec.train_loss;
    }
    if (t > 0) rec.descent_violation = violates_descent(result.metrics.records.back(), rec);
    result.metrics.records.push_back(rec);
    cum += rec.train_loss;

    const bool reached = cfg.stop_rule == StopRule::loss_below && rec.train_loss < cfg.loss_threshold;
    if (t == T || reached) break;
    flat_axpy(w.flat(), -eta, lg.grad);
  }
  result.params = std::move(w);
  return result;
}

std::size_t descent_check(const RunMetrics& metrics) {
  std::size_t count = 0;
  for (std::size_t t = 1; t < metrics.records.size(); ++t) {
    if (violates_descent(metrics.records[t - 1], metrics.records[t])) ++count;
  }
  return count;
}

double train_rate_bound(double rho_star, double eta, std::size_t T) {
  if (!(eta > 0.0) || T == 0 || !(rho_star >= 0.0)) {
    throw ConfigError("train_rate_bound needs rho* >= 0, eta > 0 and T >= 1");
  }
  return 4.0 * rho_star * rho_star / (eta * double(T));
}

GlqcResult glqc_probe(const Model& model, const Dataset& data, LossKind kind,
                      const NetworkParams& w1, const NetworkParams& w2, std::size_t samples) {
  if (samples < 3) throw ConfigError("glqc_probe needs at least 3 samples");
  check_same_shape(w1, w2);
  GlqcResult r;
  r.endpoint_max = std::max(empirical_loss(model, w1, data, kind),
                            empirical_loss(model, w2, data, kind));
  r.segment_max = r.endpoint_max;
  for (std::size_t k = 1; k + 1 < samples; ++k) {
    const double s = double(k) / double(samples - 1);
    r.segment_max = std::max(r.segment_max,
                             empirical_loss(model, segment_point(w1, w2, s), data, kind));
  }
  r.ratio = r.endpoint_max > 0.0 ? r.segment_max / r.endpoint_max : 1.0;
  return r;
}

Eigen::MatrixXd dense_objective_hessian(const Model& model, const NetworkParams& w,
                                        const Dataset& data, LossKind kind) {
  const std::size_t p = w.size();
  const auto dim = Eigen::Index(p);
  Eigen::MatrixXd h(dim, dim);
  std::vector<double> e(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    e[j] = 1.0;
    const std::vector<double> col = objective_hvp(model, w, data, kind, e);
    e[j] = 0.0;
    h.col(Eigen::Index(j)) = ConstVectorMap(col.data(), dim);
  }
  return 0.5 * (h + h.transpose());
}

double segment_weak_convexity(const Model& model, const Dataset& data, LossKind kind,
                              const NetworkParams& w1, const NetworkParams& w2,
                              std::size_t samples) {
  if (samples < 2) throw ConfigError("segment_weak_convexity needs at least 2 samples");
  check_same_shape(w1, w2);
  double kappa = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const NetworkParams w = segment_point(w1, w2, double(k) / double(samples - 1));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        dense_objective_hessian(model, w, data, kind), Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues()[0];
    const double loss = empirical_loss(model, w, data, kind);
    if (lambda_min < 0.0) kappa = std::max(kappa, -lambda_min / loss);
  }
  return kappa;
}

double glqc_tau(double kappa, double diameter) {
  const double q = kappa * diameter * diameter;
  if (!(q >= 0.0 && q < 2.0)) throw ConfigError("GLQC needs 0 <= kappa D^2 < 2");
  return 1.0 / (1.0 - 0.5 * q);
}

WidthVerdict width_condition_check(std::size_t depth, std::size_t width, double rho_star,
                                   double beta_hat, std::optional<std::size_t> n) {
  if (depth == 0 || width == 0 || !(rho_star >= 0.0) || !(beta_hat >= 0.0)) {
    throw ConfigError("width_condition_check needs L, m >= 1 and rho*, beta_hat >= 0");
  }
  WidthVerdict v;
  const double L = double(depth);
  const double rho_bar = std::max(rho_star, 1.0);
  v.required_m = 4.0 * beta_hat * beta_hat * std::pow(6.0 * rho_bar, 6.0 * L + 4.0);
  v.satisfied = double(width) >= v.required_m;
  if (n) {
    v.required_m_sqrt_n = beta_hat * beta_hat * std::pow(double(*n), 3.0 * L + 3.0);
    v.satisfied_sqrt_n = double(width) >= *v.required_m_sqrt_n;
  }
  return v;
}

}  // namespace gbl

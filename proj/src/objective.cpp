#include "gbl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbl/errors.hpp"

namespace gbl {

namespace {

void require_nonempty(const Dataset& data) {
  if (data.empty()) throw ConfigError("empirical objective needs a nonempty dataset");
}

// Per-sample margins y_i Phi(w, x_i) from a recorded tape.
Eigen::VectorXd margins(const Model::Tape& tape, const Dataset& data) {
  return tape.output.cwiseProduct(ConstVectorMap(data.labels().data(), Eigen::Index(data.size())));
}

double mean_loss(LossKind kind, const Eigen::VectorXd& t) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) total += loss_value(kind, t[i]);
  return total / double(t.size());
}

}  // namespace

std::string_view to_string(LossKind k) noexcept {
  return k == LossKind::logistic ? "logistic" : "linear";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "logistic") return LossKind::logistic;
  if (name == "linear") return LossKind::linear;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

double loss_value(LossKind kind, double t) {
  if (kind == LossKind::linear) return -t;
  return t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

double loss_d1(LossKind kind, double t) {
  if (kind == LossKind::linear) return -1.0;
  // -1 / (1 + e^t)
  if (t > 0.0) {
    const double e = std::exp(-t);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(t));
}

double loss_d2(LossKind kind, double t) {
  if (kind == LossKind::linear) return 0.0;
  const double e = std::exp(-std::abs(t));
  return e / ((1.0 + e) * (1.0 + e));
}

double empirical_loss(const Model& model, const NetworkParams& w, const Dataset& data,
                      LossKind kind) {
  require_nonempty(data);
  return mean_loss(kind, margins(model.record(w, data.inputs()), data));
}

std::vector<double> empirical_grad(const Model& model, const NetworkParams& w,
                                   const Dataset& data, LossKind kind) {
  return empirical_loss_and_grad(model, w, data, kind).grad;
}

LossAndGrad empirical_loss_and_grad(const Model& model, const NetworkParams& w,
                                    const Dataset& data, LossKind kind) {
  require_nonempty(data);
  const Model::Tape tape = model.record(w, data.inputs());
  const Eigen::VectorXd t = margins(tape, data);
  const double inv_n = 1.0 / double(data.size());
  std::vector<double> coef(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    coef[i] = loss_d1(kind, t[Eigen::Index(i)]) * data.label(i) * inv_n;
  }
  LossAndGrad out;
  out.loss = mean_loss(kind, t);
  out.grad.assign(w.size(), 0.0);
  model.pullback(tape, w, data.inputs(), coef, out.grad);
  return out;
}

std::vector<double> objective_hvp(const Model& model, const NetworkParams& w, const Dataset& data,
                                  LossKind kind, std::span<const double> v) {
  const double v_norm = flat_norm(v);
  if (!(v_norm > 0.0)) throw std::invalid_argument("objective_hvp needs ||v|| > 0");
  const double eps = hvp_step_size(w.flat());
  NetworkParams plus = w;
  NetworkParams minus = w;
  flat_axpy(plus.flat(), eps / v_norm, v);
  flat_axpy(minus.flat(), -eps / v_norm, v);
  std::vector<double> hv = empirical_grad(model, plus, data, kind);
  const std::vector<double> g_minus = empirical_grad(model, minus, data, kind);
  const double factor = v_norm / (2.0 * eps);
  for (std::size_t i = 0; i < hv.size(); ++i) hv[i] = (hv[i] - g_minus[i]) * factor;
  return hv;
}

SpectralEstimate objective_hessian_norm(const Model& model, const NetworkParams& w,
                                        const Dataset& data, LossKind kind, std::size_t iters,
                                        double tol) {
  return symmetric_operator_norm(
      w.size(),
      [&](std::span<const double> v, std::span<double> out) {
        const std::vector<double> hv = objective_hvp(model, w, data, kind, v);
        std::copy(hv.begin(), hv.end(), out.begin());
      },
      iters, tol);
}

ObjectiveConstants assemble_constants(double G0, double beta_hat, double rho, std::size_t depth,
                                      std::size_t width) {
  ObjectiveConstants c;
  c.G0 = G0;
  c.beta_hat = beta_hat;
  c.rho = rho;
  const double rho_bar = std::max(rho, 1.0);
  const double sqrt_m = std::sqrt(double(width));
  const double power = std::pow(rho_bar, 3.0 * double(depth));
  c.C2 = beta_hat * power / sqrt_m;
  c.C1 = G0 + beta_hat * power * rho_bar / sqrt_m;
  return c;
}

double estimate_beta_hat(const Model& model, const NetworkParams& w0,
                         std::span<const NetworkParams> points, const RowMatrix& probes) {
  if (probes.rows() == 0) throw std::invalid_argument("estimate_beta_hat needs probes");
  const double sqrt_m = std::sqrt(double(model.config().width));
  const double depth = double(model.config().depth);
  double best = 0.0;
  for (const NetworkParams& w : points) {
    const double rho_bar = std::max(flat_distance(w.flat(), w0.flat()), 1.0);
    const double denom = std::pow(rho_bar, 3.0 * depth);
    for (Eigen::Index i = 0; i < probes.rows(); ++i) {
      const std::span<const double> x(probes.row(i).data(), std::size_t(probes.cols()));
      const double h = model_hessian_norm(model, w, x).value;
      best = std::max(best, h * sqrt_m / denom);
    }
  }
  return best;
}

ObjectiveConstants estimate_constants(const Model& model, const NetworkParams& w0,
                                      const NetworkParams& w, const RowMatrix& probes) {
  const double G0 = lipschitz_at_init(model, w0, probes).g0;
  const double beta_hat = estimate_beta_hat(model, w0, std::span<const NetworkParams>(&w, 1), probes);
  return assemble_constants(G0, beta_hat, flat_distance(w.flat(), w0.flat()), model.config().depth,
                            model.config().width);
}

double descent_step_size(const ObjectiveConstants& c, double safety, StepRule rule) {
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("safety must lie in (0, 1]");
  const double denom = rule == StepRule::lemma ? c.C1 * c.C1 + c.C2 : c.G0 * c.G0 + 0.25;
  if (!std::isfinite(denom) || !(denom > 0.0)) {
    throw ConfigError("step-size constants must be finite and positive");
  }
  return safety / denom;
}

}  // namespace gbl

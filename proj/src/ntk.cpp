#include "gbl/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <json.hpp>

#include "gbl/errors.hpp"
#include "gbl/objective.hpp"

namespace gbl {

namespace {

using Apply = std::function<Eigen::VectorXd(std::span<const double>)>;
using Adjoint = std::function<void(const std::vector<double>&, std::span<double>)>;

// Coefficients c_i = f'(t_i) / (n L(t)) of grad L / L. Once every margin is
// large the logistic loss is e^{-t} to double precision, so the ratio is taken
// in shifted exponential form to avoid 0/0.
std::vector<double> normalized_coefficients(const Eigen::VectorXd& t) {
  const std::size_t n = std::size_t(t.size());
  std::vector<double> c(n);
  const double t_min = t.minCoeff();
  if (t_min > 40.0) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::exp(t_min - t[Eigen::Index(i)]);
    for (std::size_t i = 0; i < n; ++i) c[i] = -std::exp(t_min - t[Eigen::Index(i)]) / total;
    return c;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += loss_value(LossKind::logistic, t[Eigen::Index(i)]);
  for (std::size_t i = 0; i < n; ++i) c[i] = loss_d1(LossKind::logistic, t[Eigen::Index(i)]) / total;
  return c;
}

MarginEstimate run_margin_gd(std::size_t p, double max_norm_sq, const Apply& apply,
                             const Adjoint& adjoint, std::size_t iters) {
  if (iters == 0) throw ConfigError("margin estimation needs iters >= 1");
  MarginEstimate est;
  est.direction.assign(p, 0.0);
  est.gamma_hat = -std::numeric_limits<double>::infinity();
  if (!(max_norm_sq > 0.0)) {
    est.gamma_hat = 0.0;
    return est;
  }
  const double eta = 1.0 / max_norm_sq;
  std::vector<double> w(p, 0.0);
  std::vector<double> g(p);
  for (std::size_t k = 0;; ++k) {
    const Eigen::VectorXd t = apply(w);
    if (k > 0) {
      const double norm = flat_norm(w);
      if (norm > 0.0) {
        const double margin = t.minCoeff() / norm;
        if (margin > est.gamma_hat) {
          est.gamma_hat = margin;
          for (std::size_t j = 0; j < p; ++j) est.direction[j] = w[j] / norm;
        }
      }
    }
    if (k == iters) break;
    std::fill(g.begin(), g.end(), 0.0);
    adjoint(normalized_coefficients(t), g);
    flat_axpy(w, -eta, g);
    est.iterations = k + 1;
  }
  est.separated = est.gamma_hat > 0.0;
  return est;
}

}  // namespace

NtkFeatures ntk_features(const Model& model, const NetworkParams& w0, const Dataset& data) {
  NtkFeatures f;
  f.rows.resize(Eigen::Index(data.size()), Eigen::Index(w0.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::vector<double> g = model.grad(w0, data.input(i));
    f.rows.row(Eigen::Index(i)) = data.label(i) * ConstVectorMap(g.data(), Eigen::Index(g.size())).transpose();
  }
  return f;
}

MarginEstimate estimate_margin(const NtkFeatures& feats, std::size_t iters) {
  if (feats.size() == 0) throw ConfigError("margin estimation needs at least one feature row");
  const RowMatrix& phi = feats.rows;
  const double max_norm_sq = phi.rowwise().squaredNorm().maxCoeff();
  return run_margin_gd(
      feats.dim(), max_norm_sq,
      [&](std::span<const double> w) -> Eigen::VectorXd {
        return phi * ConstVectorMap(w.data(), Eigen::Index(w.size()));
      },
      [&](const std::vector<double>& c, std::span<double> out) {
        VectorMap(out.data(), Eigen::Index(out.size())).noalias() =
            phi.transpose() * ConstVectorMap(c.data(), Eigen::Index(c.size()));
      },
      iters);
}

MarginEstimate estimate_margin_streaming(const Model& model, const NetworkParams& w0,
                                         const Dataset& data, std::size_t iters) {
  if (data.empty()) throw ConfigError("margin estimation needs a nonempty dataset");
  const Model::Tape tape = model.record(w0, data.inputs());
  const ConstVectorMap y(data.labels().data(), Eigen::Index(data.size()));
  double max_norm_sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double norm = flat_norm(model.grad(w0, data.input(i)));
    max_norm_sq = std::max(max_norm_sq, norm * norm);
  }
  return run_margin_gd(
      w0.size(), max_norm_sq,
      [&](std::span<const double> w) -> Eigen::VectorXd {
        return model.jvp(tape, w0, data.inputs(), w).cwiseProduct(y);
      },
      [&](const std::vector<double>& c, std::span<double> out) {
        std::vector<double> signed_c(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) signed_c[i] = c[i] * data.label(i);
        model.pullback(tape, w0, data.inputs(), signed_c, out);
      },
      iters);
}

MarginEstimate estimate_ntk_margin(const Model& model, const NetworkParams& w0,
                                   const Dataset& data, std::size_t iters,
                                   std::size_t budget_bytes) {
  const double bytes = double(data.size()) * double(w0.size()) * double(sizeof(double));
  if (bytes <= double(budget_bytes)) return estimate_margin(ntk_features(model, w0, data), iters);
  return estimate_margin_streaming(model, w0, data, iters);
}

double output_bound(const Model& model, const NetworkParams& w0, const Dataset& data) {
  if (data.empty()) throw ConfigError("output bound needs a nonempty dataset");
  return model.forward_batch(w0, data.inputs()).cwiseAbs().maxCoeff();
}

Corollary1 corollary1_construct(const NetConfig& cfg, const NetworkParams& w0, double gamma_hat,
                                double B_hat, double epsilon, std::span<const double> direction,
                                double beta_hat) {
  if (!(gamma_hat > 0.0)) {
    throw ConfigError("corollary construction needs a positive margin (data not separated)");
  }
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (!(B_hat >= 0.0)) throw ConfigError("output bound must be >= 0");
  if (direction.size() != w0.size()) throw ConfigError("margin direction has the wrong length");
  Corollary1 c;
  const double log_term = std::log(1.0 / epsilon);
  c.B_floored = std::max(B_hat, 1.0);
  c.rho = (2.0 * c.B_floored + log_term) / gamma_hat;
  c.rho_raw = (2.0 * B_hat + log_term) / gamma_hat;
  c.w_star = w0;
  flat_axpy(c.w_star.flat(), c.rho, direction);
  c.required_m = beta_hat * beta_hat * std::pow(c.rho, 6.0 * double(cfg.depth) + 4.0);
  c.width_ok = double(cfg.width) >= c.required_m;
  return c;
}

BoundReport stability_bounds(const RunMetrics& metrics, double G0, double rho, double eta,
                             std::size_t n) {
  if (n == 0) throw ConfigError("stability bounds need n >= 1");
  BoundReport r;
  r.G0 = G0;
  r.eta = eta;
  r.n = n;
  r.cumulative_loss = metrics.cumulative_loss();
  r.T = metrics.empty() ? 0 : metrics.back().iter;
  r.rho_final = metrics.empty() ? 0.0 : metrics.back().dist_from_init;
  const double nd = double(n);
  const double lip = (G0 + 0.25) * (G0 + 0.25);
  // 2.2 = 11/5 with a single final division keeps decimal inputs exact.
  r.bound_eq12 = 11.0 * r.cumulative_loss / (5.0 * nd);
  r.bound_eq8 = 11.0 * r.cumulative_loss * lip * eta / (5.0 * nd);
  r.bound_eq9 = 9.0 * rho * rho * lip / nd;
  r.bound_eq9_rho_final = 9.0 * r.rho_final * r.rho_final * lip / nd;
  r.corollary_rho = rho;
  return r;
}

std::string to_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["gamma_hat"] = r.gamma_hat;
  j["B_hat"] = r.B_hat;
  j["G0"] = r.G0;
  j["bound_eq12"] = r.bound_eq12;
  j["bound_eq9"] = r.bound_eq9;
  j["bound_eq8"] = r.bound_eq8;
  j["corollary_rho"] = r.corollary_rho;
  j["corollary_required_m"] = r.corollary_required_m;
  j["cumulative_loss"] = r.cumulative_loss;
  j["eta"] = r.eta;
  j["n"] = r.n;
  j["T"] = r.T;
  j["rho_final"] = r.rho_final;
  j["bound_eq9_rho_final"] = r.bound_eq9_rho_final;
  if (r.separated) j["separated"] = *r.separated;
  if (r.B_hat_floored) j["B_hat_floored"] = *r.B_hat_floored;
  if (r.corollary_rho_raw) j["corollary_rho_raw"] = *r.corollary_rho_raw;
  if (r.width_eq3_required_m) j["width_eq3_required_m"] = *r.width_eq3_required_m;
  if (r.width_eq3_ok) j["width_eq3_ok"] = *r.width_eq3_ok;
  if (r.width_sqrt_n_required_m) j["width_sqrt_n_required_m"] = *r.width_sqrt_n_required_m;
  if (r.width_sqrt_n_ok) j["width_sqrt_n_ok"] = *r.width_sqrt_n_ok;
  return j.dump(2) + "\n";
}

}  // namespace gbl

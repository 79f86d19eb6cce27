#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gbl/dataset.hpp"
#include "gbl/smooth_net.hpp"
#include "gbl/trainer.hpp"

namespace gbl {

// Rows phi_i = y_i grad_w Phi(w0, x_i), one per sample.
struct NtkFeatures {
  RowMatrix rows;

  std::size_t size() const noexcept { return std::size_t(rows.rows()); }
  std::size_t dim() const noexcept { return std::size_t(rows.cols()); }
};

NtkFeatures ntk_features(const Model& model, const NetworkParams& w0, const Dataset& data);

struct MarginEstimate {
  double gamma_hat = 0.0;          // best min_i <phi_i, w> over iterates, ||w|| = 1
  std::vector<double> direction;   // unit vector attaining gamma_hat
  bool separated = false;          // gamma_hat > 0
  std::size_t iterations = 0;
};

// Loss-normalized gradient descent w <- w - eta grad L(w) / L(w) on the
// logistic loss L(w) = (1/n) sum_i f(<phi_i, w>), eta = 1 / max_i ||phi_i||^2.
MarginEstimate estimate_margin(const NtkFeatures& feats, std::size_t iters);

// Same iteration with <phi_i, u> and sum_i c_i phi_i evaluated through forward-
// and reverse-mode products at w0, so the n x p feature matrix never exists.
MarginEstimate estimate_margin_streaming(const Model& model, const NetworkParams& w0,
                                         const Dataset& data, std::size_t iters);

// Materializes the features when n * p doubles fit in `budget_bytes`.
MarginEstimate estimate_ntk_margin(const Model& model, const NetworkParams& w0,
                                   const Dataset& data, std::size_t iters,
                                   std::size_t budget_bytes = std::size_t(512) << 20);

// max_i |Phi(w0, x_i)|
double output_bound(const Model& model, const NetworkParams& w0, const Dataset& data);

struct Corollary1 {
  NetworkParams w_star;   // w0 + rho * direction
  double B_floored = 0.0; // max(B, 1)
  double rho = 0.0;       // (2 max(B, 1) + log(1/eps)) / gamma
  double rho_raw = 0.0;   // (2 B + log(1/eps)) / gamma
  double required_m = 0.0;  // beta^2 rho^{6L+4}
  bool width_ok = false;
};

// Throws ConfigError when gamma_hat <= 0 or epsilon is outside (0, 1].
Corollary1 corollary1_construct(const NetConfig& cfg, const NetworkParams& w0, double gamma_hat,
                                double B_hat, double epsilon, std::span<const double> direction,
                                double beta_hat);

struct BoundReport {
  double gamma_hat = 0.0;
  double B_hat = 0.0;
  double G0 = 0.0;
  double bound_eq12 = 0.0;  // 2.2 S / n
  double bound_eq9 = 0.0;   // 9 rho^2 (G0 + 1/4)^2 / n, rho as supplied
  double bound_eq8 = 0.0;   // 2.2 eta (G0 + 1/4)^2 S / n
  double corollary_rho = 0.0;
  double corollary_required_m = 0.0;

  // S = sum_{t<T} F(w_t) from the metrics; rho_final = ||w_T - w0||.
  double cumulative_loss = 0.0;
  double eta = 0.0;
  std::size_t n = 0;
  std::size_t T = 0;
  double rho_final = 0.0;
  double bound_eq9_rho_final = 0.0;
  std::optional<bool> separated;
  std::optional<double> B_hat_floored;
  std::optional<double> corollary_rho_raw;
  std::optional<double> width_eq3_required_m;
  std::optional<bool> width_eq3_ok;
  std::optional<double> width_sqrt_n_required_m;
  std::optional<bool> width_sqrt_n_ok;
};

// Pure arithmetic over logged rows; rho feeds bound_eq9, the final logged
// distance feeds bound_eq9_rho_final.
BoundReport stability_bounds(const RunMetrics& metrics, double G0, double rho, double eta,
                             std::size_t n);

// Flat JSON object, fields in declaration order, unset optionals omitted.
std::string to_json(const BoundReport& report);

}  // namespace gbl

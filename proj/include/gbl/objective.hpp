#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "gbl/dataset.hpp"
#include "gbl/smooth_net.hpp"

namespace gbl {

// logistic: f(t) = log(1 + e^{-t});  linear: f(t) = -t.
enum class LossKind { logistic, linear };

std::string_view to_string(LossKind k) noexcept;
LossKind parse_loss_kind(std::string_view name);

double loss_value(LossKind kind, double t);
double loss_d1(LossKind kind, double t);
double loss_d2(LossKind kind, double t);

// F(w) = (1/n) sum_i f(y_i Phi(w, x_i)). All three throw ConfigError on an
// empty dataset.
double empirical_loss(const Model& model, const NetworkParams& w, const Dataset& data,
                      LossKind kind);
std::vector<double> empirical_grad(const Model& model, const NetworkParams& w,
                                   const Dataset& data, LossKind kind);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};
// One batched forward pass and one pullback.
LossAndGrad empirical_loss_and_grad(const Model& model, const NetworkParams& w,
                                    const Dataset& data, LossKind kind);

// grad^2 F(w) v by central differences of empirical_grad, same step rule as
// the model-level product.
std::vector<double> objective_hvp(const Model& model, const NetworkParams& w, const Dataset& data,
                                  LossKind kind, std::span<const double> v);
SpectralEstimate objective_hessian_norm(const Model& model, const NetworkParams& w,
                                        const Dataset& data, LossKind kind,
                                        std::size_t iters = 200, double tol = 1e-6);

// Loss-level constants on the ball of radius rho around w0, with
// rho_bar = max(rho, 1):
//   C2 = beta_hat rho_bar^{3L} / sqrt(m),   C1 = G0 + beta_hat rho_bar^{3L+1} / sqrt(m).
struct ObjectiveConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double G0 = 0.0;
  double beta_hat = 0.0;
  double rho = 0.0;
};

ObjectiveConstants assemble_constants(double G0, double beta_hat, double rho, std::size_t depth,
                                      std::size_t width);

// Largest probe value of ||grad^2 Phi(w, x)|| sqrt(m) / rho_bar^{3L} over every
// (point, probe) pair, rho measured from w0 for each point.
double estimate_beta_hat(const Model& model, const NetworkParams& w0,
                         std::span<const NetworkParams> points, const RowMatrix& probes);

// G0 from lipschitz_at_init(w0, probes), beta_hat from the Hessian at w.
ObjectiveConstants estimate_constants(const Model& model, const NetworkParams& w0,
                                      const NetworkParams& w, const RowMatrix& probes);

enum class StepRule {
  lemma,     // safety / (C1^2 + C2)
  fallback,  // safety / (G0^2 + 1/4)
};
double descent_step_size(const ObjectiveConstants& c, double safety,
                         StepRule rule = StepRule::lemma);

}  // namespace gbl

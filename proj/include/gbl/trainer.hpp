#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "gbl/dataset.hpp"
#include "gbl/errors.hpp"
#include "gbl/objective.hpp"
#include "gbl/smooth_net.hpp"

namespace gbl {

enum class StopRule { fixed_iters, sqrt_n, loss_below };

std::string_view to_string(StopRule r) noexcept;
StopRule parse_stop_rule(std::string_view name);

struct TrainConfig {
  std::optional<double> step_size;  // empty selects the descent-lemma rule
  std::size_t max_iters = 1000;
  StopRule stop_rule = StopRule::fixed_iters;
  double loss_threshold = 0.0;  // loss_below only
  std::size_t eval_every = 0;   // 0 selects the default cadence
  double safety = 0.9;
  StepRule auto_rule = StepRule::lemma;
  std::size_t beta_probes = 32;  // training inputs probed for beta_hat

  void validate() const;
  // T for a training set of size n: ceil(sqrt(n)) under sqrt_n, else max_iters.
  std::size_t iterations(std::size_t n) const;
  // Test-loss stride: eval_every, or 1 for T <= 5000 and ceil(T / 5000) beyond.
  std::size_t eval_stride(std::size_t T) const;
};

// One logged iterate. test_loss and gen_gap are NaN on rows without a test
// evaluation. cum_train_loss is sum_{tau < iter} F(w_tau).
struct RunRecord {
  std::size_t iter = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double gen_gap = 0.0;
  double dist_from_init = 0.0;
  double grad_norm = 0.0;
  double cum_train_loss = 0.0;
  double eta = 0.0;
  bool descent_violation = false;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunMetrics {
  std::vector<RunRecord> records;

  bool empty() const noexcept { return records.empty(); }
  const RunRecord& back() const { return records.back(); }
  // sum_{t < T} F(w_t) for the final row T.
  double cumulative_loss() const { return records.empty() ? 0.0 : records.back().cum_train_loss; }
};

// Non-finite loss or weights. partial() holds every row logged so far plus the
// failing iterate.
class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const std::string& what, std::size_t iteration, RunMetrics partial)
      : DivergenceError(what, iteration), partial_(std::move(partial)) {}
  const RunMetrics& partial() const noexcept { return partial_; }

 private:
  RunMetrics partial_;
};

struct AutoStep {
  double eta = 0.0;
  ObjectiveConstants constants;  // at w0 with rho_bar = 1
};

// Evenly strided subset of the training inputs used as Hessian probes.
RowMatrix probe_inputs(const Dataset& data, std::size_t count);

AutoStep auto_step_size(const Model& model, const NetworkParams& w0, const Dataset& train,
                        const TrainConfig& cfg);

struct TrainResult {
  NetworkParams params;
  RunMetrics metrics;
  std::optional<AutoStep> auto_step;
};

// Full-batch GD w_{t+1} = w_t - eta grad F(w_t). Rows 0..T are logged; train
// loss every row, test loss at the eval stride and at T. Throws
// TrainingDiverged on non-finite values.
TrainResult train_gd(const Model& model, const NetworkParams& w0, const Dataset& train,
                     const Dataset* test, LossKind kind, const TrainConfig& cfg);

// Rows t+1 with F(w_{t+1}) > F(w_t) - (eta/2) ||grad F(w_t)||^2 + 1e-10.
std::size_t descent_check(const RunMetrics& metrics);

// 4 rho*^2 / (eta T)
double train_rate_bound(double rho_star, double eta, std::size_t T);

struct GlqcResult {
  double segment_max = 0.0;
  double endpoint_max = 0.0;
  double ratio = 1.0;  // segment_max / endpoint_max
};

// F at `samples` evenly spaced points of [w1, w2], endpoints included.
GlqcResult glqc_probe(const Model& model, const Dataset& data, LossKind kind,
                      const NetworkParams& w1, const NetworkParams& w2, std::size_t samples);

// Dense grad^2 F(w) from central differences of exact gradients along each
// coordinate, symmetrized. Intended for p up to a few thousand.
Eigen::MatrixXd dense_objective_hessian(const Model& model, const NetworkParams& w,
                                        const Dataset& data, LossKind kind);

// kappa_hat = max over `samples` segment points of max(0, -lambda_min(grad^2 F)) / F.
double segment_weak_convexity(const Model& model, const Dataset& data, LossKind kind,
                              const NetworkParams& w1, const NetworkParams& w2,
                              std::size_t samples);

// tau = 1 / (1 - kappa D^2 / 2) for kappa D^2 < 2.
double glqc_tau(double kappa, double diameter);

struct WidthVerdict {
  double required_m = 0.0;  // 4 beta^2 (6 rho_bar)^{6L+4}
  bool satisfied = false;
  std::optional<double> required_m_sqrt_n;  // beta^2 n^{3L+3}
  std::optional<bool> satisfied_sqrt_n;
};

// Required widths are doubles: they overflow 64-bit integers at modest L.
WidthVerdict width_condition_check(std::size_t depth, std::size_t width, double rho_star,
                                   double beta_hat, std::optional<std::size_t> n = std::nullopt);

}  // namespace gbl

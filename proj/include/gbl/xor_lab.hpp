#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gbl/dataset.hpp"
#include "gbl/rng.hpp"
#include "gbl/smooth_net.hpp"

namespace gbl {

// Uniform x on {+1,-1}^d with y = x(1) x(2), quadratic net with fixed signs,
// one-pass mini-batch SGD on the linear loss.
struct XorConfig {
  std::size_t dim = 64;
  std::size_t width = 20;
  std::size_t batch_factor = 6;           // n = batch_factor * d unless batch_size is set
  std::optional<std::size_t> batch_size;
  std::optional<double> step_size;        // default eta = m
  std::optional<std::size_t> steps;       // default ceil(log_base(d))
  double log_base = 2.0;
  std::size_t mc_samples = 10000;
  bool exact_batches = false;             // every batch is the full 2^d enumeration
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t resolved_batch() const;
  double resolved_eta() const;
  std::size_t resolved_steps() const;
};

// Coordinates are drawn 64 per generator word from stream `rng`.
Dataset sample_xor(RngStream& rng, std::size_t d, std::size_t count);
// All 2^d points, d <= 20; bit k of the index set means x(k+1) = -1.
Dataset xor_enumeration(std::size_t d);

// First-layer rows w_i and the fixed signs a_i (first m/2 are +1).
struct QuadNetParams {
  NetConfig config;
  NetworkParams weights;
  std::vector<double> signs;

  std::size_t width() const noexcept { return config.width; }
  std::size_t dim() const noexcept { return config.input_dim; }
  ConstMatrixMap rows() const { return weights.layer(0); }
  Model model() const { return Model(config, signs); }
};

// w_{0,ij} ~ N(0, 1/d) from stream ("init/layer", 0).
QuadNetParams init_quad_net(std::size_t d, std::size_t m, std::uint64_t seed);

// w_i += (eta a_i / (n m)) sum_j (x_j^T w_i) x_j y_j
QuadNetParams sgd_step(const QuadNetParams& state, const Dataset& batch, double eta);

// Expected first-layer weights under population dynamics: per neuron
// alpha(t+1) = alpha + gamma beta, beta(t+1) = beta + gamma alpha with
// gamma_i = eta a_i / m; coordinates 3..d stay at their initial values.
struct OracleState {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  RowMatrix tail;  // m x (d - 2)
  std::size_t t = 0;
};

OracleState oracle_init(const QuadNetParams& state, double eta);
OracleState population_step(const OracleState& oracle);

struct OraclePair {
  double alpha = 0.0;
  double beta = 0.0;
};
// ((1+g)^t + (1-g)^t)/2 and ((1+g)^t - (1-g)^t)/2 applied to (alpha0, beta0).
OraclePair oracle_closed_form(double alpha0, double beta0, double gamma, std::size_t t);

// m x d expected weights.
RowMatrix oracle_weights(const OracleState& oracle);

struct Deviation {
  double z = 0.0;          // max_{i,k} |E[w_i](k) - w_i(k)|
  double tail_norm = 0.0;  // max_i || (E[w_i] - w_i)(3..d) ||
};
Deviation deviation_profile(const QuadNetParams& sgd, const OracleState& oracle);

// Fraction of points with y Phi > 0 (ties are errors).
double accuracy_on(const QuadNetParams& state, const Dataset& data);
double test_accuracy(const QuadNetParams& state, RngStream& rng, std::size_t mc_samples);
// Exhaustive over {+1,-1}^d; ConfigError for d > 20.
double exact_test_accuracy(const QuadNetParams& state);

struct XorStepRow {
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  double eta = 0.0;
  std::size_t T = 0;
  std::size_t step = 0;
  double mc_accuracy = 0.0;
  std::optional<double> exact_accuracy;
  double z_t = 0.0;
  double tail_norm = 0.0;
  double signal_coord1 = 0.0;  // mean_i |w_i(1)|
  double signal_coord2 = 0.0;
};

struct XorRun {
  std::vector<XorStepRow> rows;  // steps 0..T
  QuadNetParams final_state;
  double final_accuracy = 0.0;
};

// Fresh batch per step from stream ("xor/batch", step); Monte-Carlo test
// points from ("xor/test", step).
XorRun run_theorem4(const XorConfig& cfg);

// First step whose Monte-Carlo error falls below `error`; empty when
// max_steps passes without reaching it.
std::optional<std::size_t> steps_to_threshold(const XorConfig& cfg, double error,
                                              std::size_t max_steps);

}  // namespace gbl

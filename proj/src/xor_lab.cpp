#include "gbl/xor_lab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbl/errors.hpp"

namespace gbl {

namespace {

constexpr std::size_t kMaxExactDim = 20;

// Writes point `index` of the enumeration into row r.
void enumeration_point(std::size_t d, std::uint64_t index, RowMatrix& x, Eigen::Index r) {
  for (std::size_t k = 0; k < d; ++k) {
    x(r, Eigen::Index(k)) = (index >> k) & 1u ? -1.0 : 1.0;
  }
}

// Count of points with y Phi > 0 among rows of x, labels y = x(1) x(2).
std::size_t correct_count(const QuadNetParams& state, const RowMatrix& x) {
  RowMatrix s;
  s.noalias() = x * state.rows().transpose();
  const ConstVectorMap a(state.signs.data(), Eigen::Index(state.signs.size()));
  const Eigen::VectorXd phi = s.array().square().matrix() * a / (2.0 * double(state.width()));
  std::size_t correct = 0;
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    if (x(j, 0) * x(j, 1) * phi[j] > 0.0) ++correct;
  }
  return correct;
}

}  // namespace

void XorConfig::validate() const {
  if (dim < 2) throw ConfigError("XOR needs d >= 2");
  if (width < 2 || width % 2 != 0) throw ConfigError("XOR width must be even and >= 2");
  if (batch_size && *batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!batch_size && batch_factor == 0) throw ConfigError("batch_factor must be >= 1");
  if (step_size && !(*step_size > 0.0 && std::isfinite(*step_size))) {
    throw ConfigError("XOR step_size must be a finite positive number");
  }
  if (!(log_base > 1.0)) throw ConfigError("log_base must exceed 1");
  if (mc_samples == 0) throw ConfigError("mc_samples must be >= 1");
  if (exact_batches && dim > kMaxExactDim) {
    throw ConfigError("exact batches need d <= " + std::to_string(kMaxExactDim));
  }
}

std::size_t XorConfig::resolved_batch() const {
  if (exact_batches) return std::size_t(1) << dim;
  return batch_size ? *batch_size : batch_factor * dim;
}

double XorConfig::resolved_eta() const { return step_size ? *step_size : double(width); }

std::size_t XorConfig::resolved_steps() const {
  if (steps) return *steps;
  // Smallest T with base^T >= d.
  std::size_t T = 0;
  double reach = 1.0;
  while (reach < double(dim)) {
    reach *= log_base;
    ++T;
  }
  return T;
}

Dataset sample_xor(RngStream& rng, std::size_t d, std::size_t count) {
  if (d < 2) throw ConfigError("XOR needs d >= 2");
  if (count == 0) throw ConfigError("XOR sample count must be >= 1");
  RowMatrix x{Eigen::Index(count), Eigen::Index(d)};
  std::vector<double> y(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < d; ++k) {
      if (k % 64 == 0) bits = rng.next_u64();
      x(Eigen::Index(i), Eigen::Index(k)) = (bits >> (k % 64)) & 1u ? 1.0 : -1.0;
    }
    y[i] = x(Eigen::Index(i), 0) * x(Eigen::Index(i), 1);
  }
  return Dataset(std::move(x), std::move(y), Provenance::xor_cube);
}

Dataset xor_enumeration(std::size_t d) {
  if (d < 2 || d > kMaxExactDim) {
    throw ConfigError("enumeration needs 2 <= d <= " + std::to_string(kMaxExactDim));
  }
  const std::size_t count = std::size_t(1) << d;
  RowMatrix x{Eigen::Index(count), Eigen::Index(d)};
  std::vector<double> y(count);
  for (std::size_t i = 0; i < count; ++i) {
    enumeration_point(d, i, x, Eigen::Index(i));
    y[i] = x(Eigen::Index(i), 0) * x(Eigen::Index(i), 1);
  }
  return Dataset(std::move(x), std::move(y), Provenance::xor_cube);
}

QuadNetParams init_quad_net(std::size_t d, std::size_t m, std::uint64_t seed) {
  QuadNetParams s;
  s.config.depth = 1;
  s.config.width = m;
  s.config.input_dim = d;
  s.config.activation = Activation::quadratic;
  s.config.init_stddev = 1.0 / std::sqrt(double(d));
  s.weights = init_params(s.config, seed);
  s.signs = balanced_signs(m);
  return s;
}

QuadNetParams sgd_step(const QuadNetParams& state, const Dataset& batch, double eta) {
  if (batch.empty()) throw ConfigError("SGD step needs a nonempty batch");
  if (batch.dim() != state.dim()) throw ConfigError("batch dimension does not match the net");
  QuadNetParams next = state;
  const RowMatrix& x = batch.inputs();
  RowMatrix s;
  s.noalias() = x * state.rows().transpose();  // n x m, entries x_j^T w_i
  const ConstVectorMap y(batch.labels().data(), Eigen::Index(batch.size()));
  s.array().colwise() *= y.array();
  const double scale = eta / (double(batch.size()) * double(state.width()));
  RowMatrix delta;
  delta.noalias() = s.transpose() * x;  // m x d
  for (std::size_t i = 0; i < state.width(); ++i) {
    delta.row(Eigen::Index(i)) *= scale * state.signs[i];
  }
  next.weights.layer(0) += delta;
  return next;
}

OracleState oracle_init(const QuadNetParams& state, double eta) {
  OracleState o;
  const std::size_t m = state.width();
  const std::size_t d = state.dim();
  const ConstMatrixMap w = state.rows();
  o.alpha.resize(m);
  o.beta.resize(m);
  o.gamma.resize(m);
  o.tail = w.rightCols(Eigen::Index(d - 2));
  for (std::size_t i = 0; i < m; ++i) {
    o.alpha[i] = w(Eigen::Index(i), 0);
    o.beta[i] = w(Eigen::Index(i), 1);
    o.gamma[i] = eta * state.signs[i] / double(m);
  }
  return o;
}

OracleState population_step(const OracleState& oracle) {
  OracleState next = oracle;
  for (std::size_t i = 0; i < oracle.alpha.size(); ++i) {
    next.alpha[i] = oracle.alpha[i] + oracle.gamma[i] * oracle.beta[i];
    next.beta[i] = oracle.beta[i] + oracle.gamma[i] * oracle.alpha[i];
  }
  next.t = oracle.t + 1;
  return next;
}

OraclePair oracle_closed_form(double alpha0, double beta0, double gamma, std::size_t t) {
  const double up = std::pow(1.0 + gamma, double(t));
  const double down = std::pow(1.0 - gamma, double(t));
  const double even = 0.5 * (up + down);
  const double odd = 0.5 * (up - down);
  return {even * alpha0 + odd * beta0, odd * alpha0 + even * beta0};
}

RowMatrix oracle_weights(const OracleState& oracle) {
  const Eigen::Index m = Eigen::Index(oracle.alpha.size());
  RowMatrix w{m, oracle.tail.cols() + 2};
  for (Eigen::Index i = 0; i < m; ++i) {
    w(i, 0) = oracle.alpha[std::size_t(i)];
    w(i, 1) = oracle.beta[std::size_t(i)];
  }
  w.rightCols(oracle.tail.cols()) = oracle.tail;
  return w;
}

Deviation deviation_profile(const QuadNetParams& sgd, const OracleState& oracle) {
  const RowMatrix expected = oracle_weights(oracle);
  if (expected.rows() != Eigen::Index(sgd.width()) || expected.cols() != Eigen::Index(sgd.dim())) {
    throw ConfigError("oracle and SGD state differ in shape");
  }
  const RowMatrix v = expected - sgd.rows();
  Deviation dev;
  dev.z = v.cwiseAbs().maxCoeff();
  if (v.cols() > 2) dev.tail_norm = v.rightCols(v.cols() - 2).rowwise().norm().maxCoeff();
  return dev;
}

double accuracy_on(const QuadNetParams& state, const Dataset& data) {
  if (data.empty()) throw ConfigError("accuracy needs at least one point");
  if (data.dim() != state.dim()) throw ConfigError("data dimension does not match the net");
  const Eigen::VectorXd phi = state.model().forward_batch(state.weights, data.inputs());
  std::size_t correct = 0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (data.label(j) * phi[Eigen::Index(j)] > 0.0) ++correct;
  }
  return double(correct) / double(data.size());
}

double test_accuracy(const QuadNetParams& state, RngStream& rng, std::size_t mc_samples) {
  if (mc_samples == 0) throw ConfigError("mc_samples must be >= 1");
  return accuracy_on(state, sample_xor(rng, state.dim(), mc_samples));
}

double exact_test_accuracy(const QuadNetParams& state) {
  const std::size_t d = state.dim();
  if (d > kMaxExactDim) {
    throw ConfigError("exact accuracy enumerates 2^d points and is limited to d <= " +
                      std::to_string(kMaxExactDim));
  }
  const std::uint64_t total = std::uint64_t(1) << d;
  const std::uint64_t chunk = std::min<std::uint64_t>(total, 1u << 14);
  RowMatrix x{Eigen::Index(chunk), Eigen::Index(d)};
  std::size_t correct = 0;
  for (std::uint64_t start = 0; start < total; start += chunk) {
    for (std::uint64_t i = 0; i < chunk; ++i) enumeration_point(d, start + i, x, Eigen::Index(i));
    correct += correct_count(state, x);
  }
  return double(correct) / double(total);
}

namespace {

XorStepRow make_row(const XorConfig& cfg, const QuadNetParams& state, const OracleState& oracle,
                    std::size_t step) {
  XorStepRow row;
  row.d = cfg.dim;
  row.seed = cfg.seed;
  row.n = cfg.resolved_batch();
  row.m = cfg.width;
  row.eta = cfg.resolved_eta();
  row.T = cfg.resolved_steps();
  row.step = step;
  RngStream test_rng(cfg.seed, stream_id("xor/test", step));
  row.mc_accuracy = test_accuracy(state, test_rng, cfg.mc_samples);
  if (cfg.dim <= kMaxExactDim) row.exact_accuracy = exact_test_accuracy(state);
  const Deviation dev = deviation_profile(state, oracle);
  row.z_t = dev.z;
  row.tail_norm = dev.tail_norm;
  const ConstMatrixMap w = state.rows();
  row.signal_coord1 = w.col(0).cwiseAbs().mean();
  row.signal_coord2 = w.col(1).cwiseAbs().mean();
  return row;
}

Dataset step_batch(const XorConfig& cfg, std::size_t step) {
  if (cfg.exact_batches) return xor_enumeration(cfg.dim);
  RngStream rng(cfg.seed, stream_id("xor/batch", step));
  return sample_xor(rng, cfg.dim, cfg.resolved_batch());
}

}  // namespace

XorRun run_theorem4(const XorConfig& cfg) {
  cfg.validate();
  const double eta = cfg.resolved_eta();
  const std::size_t T = cfg.resolved_steps();
  XorRun run;
  QuadNetParams state = init_quad_net(cfg.dim, cfg.width, cfg.seed);
  OracleState oracle = oracle_init(state, eta);
  run.rows.push_back(make_row(cfg, state, oracle, 0));
  for (std::size_t t = 1; t <= T; ++t) {
    state = sgd_step(state, step_batch(cfg, t), eta);
    oracle = population_step(oracle);
    run.rows.push_back(make_row(cfg, state, oracle, t));
  }
  run.final_accuracy = run.rows.back().mc_accuracy;
  run.final_state = std::move(state);
  return run;
}

std::optional<std::size_t> steps_to_threshold(const XorConfig& cfg, double error,
                                              std::size_t max_steps) {
  cfg.validate();
  const double eta = cfg.resolved_eta();
  QuadNetParams state = init_quad_net(cfg.dim, cfg.width, cfg.seed);
  for (std::size_t t = 0; t <= max_steps; ++t) {
    if (t > 0) state = sgd_step(state, step_batch(cfg, t), eta);
    RngStream test_rng(cfg.seed, stream_id("xor/test", t));
    if (1.0 - test_accuracy(state, test_rng, cfg.mc_samples) < error) return t;
  }
  return std::nullopt;
}

}  // namespace gbl

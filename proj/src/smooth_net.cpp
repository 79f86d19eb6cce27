#include "gbl/smooth_net.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gbl/errors.hpp"

namespace gbl {

namespace {

constexpr double kLog2 = std::numbers::ln2;

// sigma and sigma' over a whole matrix.
using RowArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void apply_activation(Activation a, const RowMatrix& z, RowMatrix& value, RowMatrix& slope) {
  switch (a) {
    case Activation::softplus:
    case Activation::shifted_softplus: {
      // log1p(e) = log(u) - ((u - 1) - e) / u with u = fl(1 + e) corrects the
      // rounding of u and vectorizes; sigma' = 1 / (1 + exp(-z)) is exact in
      // relative terms over the whole range.
      const auto za = z.array();
      const RowArray e = (-za.abs()).exp();
      const RowArray u = 1.0 + e;
      value = (za.max(0.0) + u.log() - ((u - 1.0) - e) / u).matrix();
      if (a == Activation::shifted_softplus) value.array() -= kLog2;
      slope = (1.0 + (-za).exp()).inverse().matrix();
      return;
    }
    case Activation::tanh:
      value = z.array().tanh().matrix();
      slope = (1.0 - value.array().square()).matrix();
      return;
    case Activation::linear:
      value = z;
      slope = RowMatrix::Ones(z.rows(), z.cols());
      return;
    case Activation::quadratic:
      break;
  }
  GBL_ASSERT(false, "quadratic nets do not use the layered activation path");
}

RowMatrix as_row(std::span<const double> x) {
  RowMatrix r(1, Eigen::Index(x.size()));
  std::copy(x.begin(), x.end(), r.data());
  return r;
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::softplus: return "softplus";
    case Activation::shifted_softplus: return "shifted-softplus";
    case Activation::tanh: return "tanh";
    case Activation::quadratic: return "quadratic";
    case Activation::linear: return "linear";
  }
  return "unknown";
}

std::string_view to_string(FirstLayerScaling s) noexcept {
  return s == FirstLayerScaling::scaled ? "scaled" : "unscaled";
}

Activation parse_activation(std::string_view name) {
  for (const Activation a : {Activation::softplus, Activation::shifted_softplus,
                             Activation::tanh, Activation::quadratic, Activation::linear}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

FirstLayerScaling parse_first_layer_scaling(std::string_view name) {
  if (name == "scaled") return FirstLayerScaling::scaled;
  if (name == "unscaled") return FirstLayerScaling::unscaled;
  throw ConfigError("unknown first-layer scaling '" + std::string(name) + "'");
}

double activation_value(Activation a, double t) {
  switch (a) {
    case Activation::softplus: return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
    case Activation::shifted_softplus:
      return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))) - kLog2;
    case Activation::tanh: return std::tanh(t);
    case Activation::quadratic: return t * t;
    case Activation::linear: return t;
  }
  return 0.0;
}

double activation_d1(Activation a, double t) {
  switch (a) {
    case Activation::softplus:
    case Activation::shifted_softplus: {
      const double e = std::exp(-std::abs(t));
      return t >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    }
    case Activation::tanh: {
      const double th = std::tanh(t);
      return 1.0 - th * th;
    }
    case Activation::quadratic: return 2.0 * t;
    case Activation::linear: return 1.0;
  }
  return 0.0;
}

double activation_d2(Activation a, double t) {
  switch (a) {
    case Activation::softplus:
    case Activation::shifted_softplus: {
      const double s = activation_d1(a, t);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double th = std::tanh(t);
      return -2.0 * th * (1.0 - th * th);
    }
    case Activation::quadratic: return 2.0;
    case Activation::linear: return 0.0;
  }
  return 0.0;
}

std::size_t NetConfig::num_params() const noexcept {
  if (is_quadratic()) return width * input_dim;
  return width * input_dim + (depth - 1) * width * width + width;
}

void NetConfig::validate() const {
  if (width < 1) throw ConfigError("width must be >= 1");
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (!(init_stddev > 0.0) || !std::isfinite(init_stddev)) {
    throw ConfigError("init_stddev must be a finite positive number");
  }
  if (is_quadratic()) {
    if (depth != 1) throw ConfigError("quadratic activation requires depth 1");
    if (width % 2 != 0) throw ConfigError("quadratic activation requires even width");
  }
}

std::vector<LayerShape> layer_shapes(const NetConfig& cfg) {
  std::vector<LayerShape> shapes;
  std::size_t offset = 0;
  auto push = [&](std::size_t rows, std::size_t cols) {
    shapes.push_back({offset, rows, cols});
    offset += rows * cols;
  };
  push(cfg.width, cfg.input_dim);
  if (!cfg.is_quadratic()) {
    for (std::size_t l = 1; l < cfg.depth; ++l) push(cfg.width, cfg.width);
    push(cfg.width, 1);
  }
  return shapes;
}

NetworkParams::NetworkParams(const NetConfig& cfg)
    : shapes_(layer_shapes(cfg)), flat_(cfg.num_params(), 0.0) {}

NetworkParams::NetworkParams(const NetConfig& cfg, std::vector<double> flat)
    : shapes_(layer_shapes(cfg)), flat_(std::move(flat)) {
  if (flat_.size() != cfg.num_params()) {
    throw std::invalid_argument("flat parameter vector has length " +
                                std::to_string(flat_.size()) + ", expected " +
                                std::to_string(cfg.num_params()));
  }
}

NetworkParams NetworkParams::from_layers(const NetConfig& cfg, const std::vector<Matrix>& layers) {
  NetworkParams p(cfg);
  if (layers.size() != p.num_layers()) {
    throw std::invalid_argument("wrong number of layer matrices");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerShape& s = p.shapes_[l];
    if (layers[l].rows() != s.rows || layers[l].cols() != s.cols) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has the wrong shape");
    }
    std::copy(layers[l].data().begin(), layers[l].data().end(), p.flat_.begin() + long(s.offset));
  }
  return p;
}

std::vector<Matrix> NetworkParams::to_layers() const {
  std::vector<Matrix> out;
  for (const LayerShape& s : shapes_) {
    const auto first = flat_.begin() + long(s.offset);
    out.emplace_back(s.rows, s.cols, std::vector<double>(first, first + long(s.rows * s.cols)));
  }
  return out;
}

MatrixMap NetworkParams::layer(std::size_t l) {
  const LayerShape& s = shapes_.at(l);
  return {flat_.data() + s.offset, Eigen::Index(s.rows), Eigen::Index(s.cols)};
}

ConstMatrixMap NetworkParams::layer(std::size_t l) const {
  const LayerShape& s = shapes_.at(l);
  return {flat_.data() + s.offset, Eigen::Index(s.rows), Eigen::Index(s.cols)};
}

std::vector<double> balanced_signs(std::size_t width) {
  std::vector<double> a(width, -1.0);
  std::fill(a.begin(), a.begin() + long(width / 2), 1.0);
  return a;
}

NetworkParams init_params(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  NetworkParams p(cfg);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    RngStream rng(seed, stream_id("init/layer", l));
    const LayerShape& s = p.shape(l);
    const Matrix m = gaussian_matrix(rng, s.rows, s.cols, cfg.init_stddev);
    std::copy(m.data().begin(), m.data().end(), p.flat().begin() + long(s.offset));
  }
  return p;
}

Model::Model(NetConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.is_quadratic()) signs_ = balanced_signs(cfg_.width);
}

Model::Model(NetConfig cfg, std::vector<double> signs) : cfg_(cfg), signs_(std::move(signs)) {
  cfg_.validate();
  if (!cfg_.is_quadratic()) throw ConfigError("output signs apply to quadratic nets only");
  if (signs_.size() != cfg_.width) throw ConfigError("one output sign per neuron required");
  double total = 0.0;
  for (const double a : signs_) {
    if (a != 1.0 && a != -1.0) throw ConfigError("output signs must be +1/-1");
    total += a;
  }
  if (total != 0.0) throw ConfigError("output signs must sum to zero");
}

void Model::check_shapes(const NetworkParams& w, Eigen::Index input_cols) const {
  if (w.size() != cfg_.num_params()) {
    throw ConfigError("parameter vector length " + std::to_string(w.size()) +
                      " does not match the network (" + std::to_string(cfg_.num_params()) + ")");
  }
  if (std::size_t(input_cols) != cfg_.input_dim) {
    throw ConfigError("input has dimension " + std::to_string(input_cols) + ", network expects " +
                      std::to_string(cfg_.input_dim));
  }
}

Model::Tape Model::record(const NetworkParams& w, const RowMatrix& x) const {
  check_shapes(w, x.cols());
  Tape tape;
  const double inv_sqrt_m = 1.0 / std::sqrt(double(cfg_.width));
  if (cfg_.is_quadratic()) {
    RowMatrix s;
    s.noalias() = x * w.layer(0).transpose();
    const ConstVectorMap a(signs_.data(), Eigen::Index(signs_.size()));
    tape.output = s.array().square().matrix() * a / (2.0 * double(cfg_.width));
    tape.pre.push_back(std::move(s));
    return tape;
  }
  const std::size_t depth = cfg_.depth;
  tape.pre.resize(depth);
  tape.post.resize(depth);
  tape.slope.resize(depth);
  const double first_scale = cfg_.first_layer == FirstLayerScaling::scaled ? inv_sqrt_m : 1.0;
  for (std::size_t l = 0; l < depth; ++l) {
    const RowMatrix& input = l == 0 ? x : tape.post[l - 1];
    const double scale = l == 0 ? first_scale : inv_sqrt_m;
    tape.pre[l].noalias() = scale * (input * w.layer(l).transpose());
    apply_activation(cfg_.activation, tape.pre[l], tape.post[l], tape.slope[l]);
  }
  tape.output.noalias() = inv_sqrt_m * (tape.post[depth - 1] * w.layer(depth).col(0));
  return tape;
}

void Model::pullback(const Tape& tape, const NetworkParams& w, const RowMatrix& x,
                     std::span<const double> coef, std::span<double> out) const {
  GBL_ASSERT(coef.size() == std::size_t(x.rows()), "one coefficient per row required");
  GBL_ASSERT(out.size() == w.size(), "output gradient has the wrong length");
  const ConstVectorMap g(coef.data(), Eigen::Index(coef.size()));
  const double inv_sqrt_m = 1.0 / std::sqrt(double(cfg_.width));
  const std::vector<LayerShape> shapes = layer_shapes(cfg_);
  auto out_layer = [&](std::size_t l) {
    return MatrixMap(out.data() + shapes[l].offset, Eigen::Index(shapes[l].rows),
                     Eigen::Index(shapes[l].cols));
  };

  if (cfg_.is_quadratic()) {
    // d/dw_i = (a_i / m) sum_j g_j (x_j^T w_i) x_j
    const ConstVectorMap a(signs_.data(), Eigen::Index(signs_.size()));
    RowMatrix weighted = tape.pre[0].array().colwise() * g.array();
    weighted.array().rowwise() *= a.transpose().array() / double(cfg_.width);
    out_layer(0).noalias() = weighted.transpose() * x;
    return;
  }

  const std::size_t depth = cfg_.depth;
  const double first_scale = cfg_.first_layer == FirstLayerScaling::scaled ? inv_sqrt_m : 1.0;
  out_layer(depth).col(0).noalias() = inv_sqrt_m * (tape.post[depth - 1].transpose() * g);
  RowMatrix d_post = inv_sqrt_m * (g * w.layer(depth).col(0).transpose());
  for (std::size_t l = depth; l-- > 0;) {
    const double scale = l == 0 ? first_scale : inv_sqrt_m;
    RowMatrix d_pre = d_post.cwiseProduct(tape.slope[l]);
    const RowMatrix& input = l == 0 ? x : tape.post[l - 1];
    out_layer(l).noalias() = scale * (d_pre.transpose() * input);
    if (l > 0) {
      d_post.noalias() = scale * (d_pre * w.layer(l));
    }
  }
}

double Model::forward(const NetworkParams& w, std::span<const double> x) const {
  return record(w, as_row(x)).output[0];
}

Eigen::VectorXd Model::forward_batch(const NetworkParams& w, const RowMatrix& x) const {
  return record(w, x).output;
}

std::vector<double> Model::grad(const NetworkParams& w, std::span<const double> x) const {
  const RowMatrix row = as_row(x);
  const Tape tape = record(w, row);
  std::vector<double> out(w.size());
  const double one = 1.0;
  pullback(tape, w, row, std::span<const double>(&one, 1), out);
  return out;
}

Eigen::VectorXd Model::jvp_batch(const NetworkParams& w, const RowMatrix& x,
                                 std::span<const double> u) const {
  return jvp(record(w, x), w, x, u);
}

Eigen::VectorXd Model::jvp(const Tape& tape, const NetworkParams& w, const RowMatrix& x,
                           std::span<const double> u) const {
  GBL_ASSERT(u.size() == w.size(), "direction has the wrong length");
  const NetworkParams dir(cfg_, std::vector<double>(u.begin(), u.end()));
  const double inv_sqrt_m = 1.0 / std::sqrt(double(cfg_.width));

  if (cfg_.is_quadratic()) {
    const ConstVectorMap a(signs_.data(), Eigen::Index(signs_.size()));
    RowMatrix ds;
    ds.noalias() = x * dir.layer(0).transpose();
    return tape.pre[0].cwiseProduct(ds) * a / double(cfg_.width);
  }

  const std::size_t depth = cfg_.depth;
  const double first_scale = cfg_.first_layer == FirstLayerScaling::scaled ? inv_sqrt_m : 1.0;
  RowMatrix d_post;
  for (std::size_t l = 0; l < depth; ++l) {
    RowMatrix d_pre;
    if (l == 0) {
      d_pre.noalias() = first_scale * (x * dir.layer(0).transpose());
    } else {
      d_pre.noalias() = d_post * w.layer(l).transpose();
      d_pre.noalias() += tape.post[l - 1] * dir.layer(l).transpose();
      d_pre *= inv_sqrt_m;
    }
    d_post = d_pre.cwiseProduct(tape.slope[l]);
  }
  Eigen::VectorXd out = d_post * w.layer(depth).col(0);
  out.noalias() += tape.post[depth - 1] * dir.layer(depth).col(0);
  return inv_sqrt_m * out;
}

double hvp_step_size(std::span<const double> w) {
  GBL_ASSERT(!w.empty(), "hvp_step_size needs a nonempty weight vector");
  return 1e-5 * (1.0 + flat_norm(w) / std::sqrt(double(w.size())));
}

std::vector<double> hessian_vector_product(const Model& model, const NetworkParams& w,
                                           std::span<const double> x,
                                           std::span<const double> v) {
  const double v_norm = flat_norm(v);
  if (!(v_norm > 0.0)) throw std::invalid_argument("hessian_vector_product needs ||v|| > 0");
  GBL_ASSERT(v.size() == w.size(), "direction has the wrong length");
  const double eps = hvp_step_size(w.flat());
  NetworkParams plus = w;
  NetworkParams minus = w;
  flat_axpy(plus.flat(), eps / v_norm, v);
  flat_axpy(minus.flat(), -eps / v_norm, v);
  std::vector<double> hv = model.grad(plus, x);
  const std::vector<double> g_minus = model.grad(minus, x);
  const double factor = v_norm / (2.0 * eps);
  for (std::size_t i = 0; i < hv.size(); ++i) hv[i] = (hv[i] - g_minus[i]) * factor;
  return hv;
}

SpectralEstimate model_hessian_norm(const Model& model, const NetworkParams& w,
                                    std::span<const double> x, std::size_t iters, double tol) {
  return symmetric_operator_norm(
      w.size(),
      [&](std::span<const double> v, std::span<double> out) {
        const std::vector<double> hv = hessian_vector_product(model, w, x, v);
        std::copy(hv.begin(), hv.end(), out.begin());
      },
      iters, tol);
}

LipschitzEstimate lipschitz_at_init(const Model& model, const NetworkParams& w0,
                                    const RowMatrix& probes) {
  if (probes.rows() == 0) throw std::invalid_argument("lipschitz_at_init needs probes");
  LipschitzEstimate est;
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    const std::vector<double> g =
        model.grad(w0, std::span<const double>(probes.row(i).data(), std::size_t(probes.cols())));
    est.g0 = std::max(est.g0, flat_norm(g));
  }
  const double sqrt_m = std::sqrt(double(model.config().width));
  for (const Matrix& layer : w0.to_layers()) {
    est.c0_hat = std::max(est.c0_hat, spectral_norm(layer, 2000, 1e-10).value / sqrt_m);
  }
  const double depth = double(model.config().depth);
  est.ceiling = std::sqrt(depth + 1.0) * std::pow(est.c0_hat, depth);
  return est;
}

}  // namespace gbl

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "gbl/numerics.hpp"

namespace gbl {

enum class Activation { softplus, shifted_softplus, tanh, quadratic, linear };
enum class FirstLayerScaling { scaled, unscaled };

std::string_view to_string(Activation a) noexcept;
std::string_view to_string(FirstLayerScaling s) noexcept;
Activation parse_activation(std::string_view name);
FirstLayerScaling parse_first_layer_scaling(std::string_view name);

double activation_value(Activation a, double t);
double activation_d1(Activation a, double t);
double activation_d2(Activation a, double t);

// Architecture of an L-hidden-layer width-m network on d inputs:
//
//   h_1 = sigma(s * W_1 x),   s = 1/sqrt(m) (scaled) or 1 (unscaled)
//   h_l = sigma(W_l h_{l-1} / sqrt(m)),   l = 2..L
//   Phi = <v, h_L> / sqrt(m)
//
// activation == quadratic selects the two-layer net
//   Phi = (1/2m) sum_i a_i (x^T w_i)^2
// with fixed output signs a_i; it requires depth == 1 and even width.
struct NetConfig {
  std::size_t depth = 2;
  std::size_t width = 64;
  std::size_t input_dim = 1;
  Activation activation = Activation::softplus;
  FirstLayerScaling first_layer = FirstLayerScaling::unscaled;
  double init_stddev = 1.0;

  bool is_quadratic() const noexcept { return activation == Activation::quadratic; }
  std::size_t num_params() const noexcept;
  void validate() const;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct LayerShape {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Layer matrices W_1 (m x d), W_2..W_L (m x m), W_{L+1} (m x 1) stored back to
// back in one contiguous row-major buffer, so the flat view is free.
// A quadratic net has the single layer W (m x d).
class NetworkParams {
 public:
  NetworkParams() = default;
  explicit NetworkParams(const NetConfig& cfg);
  NetworkParams(const NetConfig& cfg, std::vector<double> flat);

  static NetworkParams from_layers(const NetConfig& cfg, const std::vector<Matrix>& layers);
  std::vector<Matrix> to_layers() const;

  std::size_t size() const noexcept { return flat_.size(); }
  std::span<double> flat() noexcept { return flat_; }
  std::span<const double> flat() const noexcept { return flat_; }

  std::size_t num_layers() const noexcept { return shapes_.size(); }
  const LayerShape& shape(std::size_t l) const { return shapes_.at(l); }
  MatrixMap layer(std::size_t l);
  ConstMatrixMap layer(std::size_t l) const;

  friend bool operator==(const NetworkParams& a, const NetworkParams& b) {
    return a.flat_ == b.flat_;
  }

 private:
  std::vector<LayerShape> shapes_;
  std::vector<double> flat_;
};

std::vector<LayerShape> layer_shapes(const NetConfig& cfg);

// +1 for the first m/2 neurons, -1 for the rest.
std::vector<double> balanced_signs(std::size_t width);

// I.i.d. N(0, init_stddev^2) weights; layer l draws from stream ("init/layer", l).
NetworkParams init_params(const NetConfig& cfg, std::uint64_t seed);

class Model {
 public:
  // Quadratic configs get balanced_signs(width).
  explicit Model(NetConfig cfg);
  Model(NetConfig cfg, std::vector<double> signs);

  const NetConfig& config() const noexcept { return cfg_; }
  std::span<const double> signs() const noexcept { return signs_; }
  std::size_t num_params() const noexcept { return cfg_.num_params(); }

  // Intermediate values of a batched forward pass, reused by pullback().
  struct Tape {
    std::vector<RowMatrix> pre;    // pre-activations per hidden layer (n x m)
    std::vector<RowMatrix> post;   // sigma(pre)
    std::vector<RowMatrix> slope;  // sigma'(pre)
    Eigen::VectorXd output;        // Phi per row
  };

  double forward(const NetworkParams& w, std::span<const double> x) const;
  Eigen::VectorXd forward_batch(const NetworkParams& w, const RowMatrix& x) const;
  Tape record(const NetworkParams& w, const RowMatrix& x) const;

  // out = sum_j coef_j * grad_w Phi(w, x_j), using a tape recorded on (w, x).
  void pullback(const Tape& tape, const NetworkParams& w, const RowMatrix& x,
                std::span<const double> coef, std::span<double> out) const;

  // Exact grad_w Phi(w, x).
  std::vector<double> grad(const NetworkParams& w, std::span<const double> x) const;

  // <grad_w Phi(w, x_j), u> for every row x_j (forward-mode).
  Eigen::VectorXd jvp_batch(const NetworkParams& w, const RowMatrix& x,
                            std::span<const double> u) const;
  // Same, reusing a tape recorded on (w, x).
  Eigen::VectorXd jvp(const Tape& tape, const NetworkParams& w, const RowMatrix& x,
                      std::span<const double> u) const;

 private:
  void check_shapes(const NetworkParams& w, Eigen::Index input_cols) const;

  NetConfig cfg_;
  std::vector<double> signs_;
};

// Central-difference step for Hessian-vector products at w:
// 1e-5 * (1 + ||w|| / sqrt(p)).
double hvp_step_size(std::span<const double> w);

// grad^2 Phi(w, x) v from a central difference of exact gradients along v/||v||.
// Throws std::invalid_argument when ||v|| == 0.
std::vector<double> hessian_vector_product(const Model& model, const NetworkParams& w,
                                           std::span<const double> x,
                                           std::span<const double> v);

// Power iteration over hessian_vector_product.
SpectralEstimate model_hessian_norm(const Model& model, const NetworkParams& w,
                                    std::span<const double> x, std::size_t iters = 300,
                                    double tol = 1e-6);

struct LipschitzEstimate {
  double g0 = 0.0;       // max over probes of ||grad Phi(w0, x)||
  double c0_hat = 0.0;   // max over layers of ||W_l||_2 / sqrt(m)
  double ceiling = 0.0;  // sqrt(L + 1) * c0_hat^L
};

LipschitzEstimate lipschitz_at_init(const Model& model, const NetworkParams& w0,
                                    const RowMatrix& probes);

// Little-endian checkpoint: "SNET1", u32 L, u32 m, u32 d, u8 activation,
// u8 first-layer scaling, then each layer row-major as f64.
struct Checkpoint {
  NetConfig config;
  NetworkParams params;
};
void save_checkpoint(const std::filesystem::path& path, const NetConfig& cfg,
                     const NetworkParams& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gbl

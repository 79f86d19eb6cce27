#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gbl/dataset.hpp"
#include "gbl/rng.hpp"
#include "gbl/smooth_net.hpp"

namespace gbl::test {

inline std::vector<double> random_vector(std::uint64_t seed, std::size_t n, double scale = 1.0) {
  RngStream rng(seed, stream_id("test/vector"));
  std::vector<double> v(n);
  for (double& e : v) e = scale * rng.normal();
  return v;
}

// Random input on the sphere of radius r.
inline std::vector<double> random_input(std::uint64_t seed, std::size_t d, double r = 1.0) {
  std::vector<double> x = random_vector(seed ^ 0x9e37u, d);
  double norm = 0.0;
  for (double e : x) norm += e * e;
  norm = std::sqrt(norm);
  for (double& e : x) e *= r / norm;
  return x;
}

inline Dataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t d) {
  RowMatrix x{Eigen::Index(n), Eigen::Index(d)};
  std::vector<double> y(n);
  RngStream rng(seed, stream_id("test/labels"));
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> xi = random_input(seed * 1000 + i, d, 0.9);
    for (std::size_t j = 0; j < d; ++j) x(Eigen::Index(i), Eigen::Index(j)) = xi[j];
    y[i] = rng.rademacher();
  }
  return Dataset(std::move(x), std::move(y), Provenance::synthetic);
}

// w + s * u as a new parameter set.
inline NetworkParams shifted(const NetworkParams& w, double s, const std::vector<double>& u) {
  NetworkParams out = w;
  for (std::size_t j = 0; j < out.size(); ++j) out.flat()[j] += s * u[j];
  return out;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    diff += (a[j] - b[j]) * (a[j] - b[j]);
    norm += b[j] * b[j];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-300);
}

}  // namespace gbl::test

#include "gbl/numerics.hpp"

#include <cmath>

#include "gbl/errors.hpp"

namespace gbl {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  GBL_ASSERT(data_.size() == rows_ * cols_, "matrix data length must equal rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

bool Matrix::all_finite() const noexcept {
  for (const double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols, double stddev) {
  GBL_ASSERT(rows >= 1 && cols >= 1, "gaussian_matrix needs a nonempty shape");
  GBL_ASSERT(stddev > 0.0, "gaussian_matrix needs stddev > 0");
  Matrix m(rows, cols);
  for (double& v : m.data()) v = stddev * rng.normal();
  return m;
}

std::vector<double> power_iteration_start(std::size_t dim) {
  RngStream rng(0, 0);
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  const double norm = flat_norm(v);
  for (double& x : v) x /= norm;
  return v;
}

SpectralEstimate spectral_norm(const Matrix& m, std::size_t iters, double tol) {
  GBL_ASSERT(iters >= 1 && tol > 0.0, "spectral_norm needs iters >= 1 and tol > 0");
  const ConstMatrixMap a = m.view();
  Eigen::VectorXd v = ConstVectorMap(power_iteration_start(m.cols()).data(), Eigen::Index(m.cols()));
  SpectralEstimate est;
  double previous = 0.0;
  for (std::size_t k = 1; k <= iters; ++k) {
    const Eigen::VectorXd mv = a * v;
    est.value = mv.norm();
    est.iterations = k;
    if (est.value == 0.0) {
      est.converged = true;
      break;
    }
    if (k > 1 && std::abs(est.value - previous) <= tol * est.value) {
      est.converged = true;
      break;
    }
    previous = est.value;
    Eigen::VectorXd next = a.transpose() * mv;
    const double norm = next.norm();
    if (norm == 0.0) {
      est.converged = true;
      break;
    }
    v = next / norm;
  }
  return est;
}

SpectralEstimate symmetric_operator_norm(std::size_t dim, const LinearOperator& apply,
                                         std::size_t iters, double tol) {
  GBL_ASSERT(iters >= 1 && tol > 0.0, "operator norm needs iters >= 1 and tol > 0");
  std::vector<double> v = power_iteration_start(dim);
  std::vector<double> av(dim);
  SpectralEstimate est;
  double previous = 0.0;
  for (std::size_t k = 1; k <= iters; ++k) {
    apply(v, av);
    est.value = flat_norm(av);
    est.iterations = k;
    if (est.value == 0.0) {
      est.converged = true;
      break;
    }
    if (k > 1 && std::abs(est.value - previous) <= tol * est.value) {
      est.converged = true;
      break;
    }
    previous = est.value;
    for (std::size_t i = 0; i < dim; ++i) v[i] = av[i] / est.value;
  }
  return est;
}

double flat_dot(std::span<const double> a, std::span<const double> b) {
  GBL_ASSERT(a.size() == b.size(), "flat_dot length mismatch");
  return ConstVectorMap(a.data(), Eigen::Index(a.size()))
      .dot(ConstVectorMap(b.data(), Eigen::Index(b.size())));
}

double flat_norm(std::span<const double> a) {
  return ConstVectorMap(a.data(), Eigen::Index(a.size())).norm();
}

void flat_axpy(std::span<double> a, double s, std::span<const double> b) {
  GBL_ASSERT(a.size() == b.size(), "flat_axpy length mismatch");
  VectorMap(a.data(), Eigen::Index(a.size())) +=
      s * ConstVectorMap(b.data(), Eigen::Index(b.size()));
}

double flat_distance(std::span<const double> a, std::span<const double> b) {
  GBL_ASSERT(a.size() == b.size(), "flat_distance length mismatch");
  return (ConstVectorMap(a.data(), Eigen::Index(a.size())) -
          ConstVectorMap(b.data(), Eigen::Index(b.size())))
      .norm();
}

}  // namespace gbl

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gbl/rng.hpp"

namespace gbl {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  MatrixMap view() { return {data_.data(), Eigen::Index(rows_), Eigen::Index(cols_)}; }
  ConstMatrixMap view() const {
    return {data_.data(), Eigen::Index(rows_), Eigen::Index(cols_)};
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// rows x cols matrix with i.i.d. N(0, stddev^2) entries, drawn row-major.
Matrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols, double stddev);

struct SpectralEstimate {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

// Power iteration on M^T M. The estimate ||M v|| for the final unit iterate v
// never exceeds the largest singular value.
SpectralEstimate spectral_norm(const Matrix& m, std::size_t iters, double tol);

// Largest |eigenvalue| of a symmetric linear operator of dimension `dim`,
// reported as ||A v|| for the final unit iterate v.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;
SpectralEstimate symmetric_operator_norm(std::size_t dim, const LinearOperator& apply,
                                         std::size_t iters, double tol);

// Deterministic start vector for the power iterations (seed 0, stream 0).
std::vector<double> power_iteration_start(std::size_t dim);

double flat_dot(std::span<const double> a, std::span<const double> b);
double flat_norm(std::span<const double> a);
// a <- a + s * b
void flat_axpy(std::span<double> a, double s, std::span<const double> b);
// ||a - b||
double flat_distance(std::span<const double> a, std::span<const double> b);

}  // namespace gbl

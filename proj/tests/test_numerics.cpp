#include <doctest.h>

#include <Eigen/SVD>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "gbl/numerics.hpp"
#include "gbl/rng.hpp"
#include "helpers.hpp"

using namespace gbl;

TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are pure functions of (seed, stream id)") {
  RngStream a(7, 3), b(7, 3), c(7, 4), e(8, 3);
  int same_c = 0, same_e = 0;
  for (int k = 0; k < 2000; ++k) {
    const std::uint64_t x = a.next_u64();
    CHECK(x == b.next_u64());
    same_c += x == c.next_u64();
    same_e += x == e.next_u64();
  }
  CHECK(same_c == 0);
  CHECK(same_e == 0);
  CHECK(stream_id("init/layer", 0) != stream_id("init/layer", 1));
  CHECK(stream_id("init/layer") == stream_id("init/layer"));
}

TEST_CASE("uniform, below and rademacher ranges") {
  RngStream rng(1, 1);
  double sum = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    const std::uint64_t b = rng.below(7);
    REQUIRE(b < 7);
    const double r = rng.rademacher();
    REQUIRE((r == 1.0 || r == -1.0));
  }
  // Mean of 1e5 uniforms has standard error ~9e-4.
  CHECK(std::abs(sum / 100000.0 - 0.5) < 0.005);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("gaussian_matrix") {
  SUBCASE("finite and deterministic") {
    RngStream r1(7, 3), r2(7, 3);
    const Matrix a = gaussian_matrix(r1, 2, 2, 1.0);
    const Matrix b = gaussian_matrix(r2, 2, 2, 1.0);
    CHECK(a.size() == 4);
    CHECK(a.all_finite());
    CHECK(a == b);
  }
  SUBCASE("variance 1/d for d = 1024 over 1e6 entries") {
    RngStream rng(11, 0);
    const Matrix m = gaussian_matrix(rng, 1000, 1000, 1.0 / std::sqrt(1024.0));
    const ConstMatrixMap v = m.view();
    const double mean = v.mean();
    const double var = (v.array() - mean).square().sum() / double(v.size() - 1);
    CHECK(var >= 0.00095);
    CHECK(var <= 0.00100);
    CHECK(std::abs(mean) < 1e-4);
  }
}

TEST_CASE("spectral_norm") {
  SUBCASE("identity and diagonal") {
    CHECK(spectral_norm(Matrix::identity(3), 100, 1e-12).value == doctest::Approx(1.0).epsilon(1e-10));
    const std::vector<double> diag = {3.0, 1.0, 0.5};
    const SpectralEstimate e = spectral_norm(Matrix::diagonal(diag), 1000, 1e-14);
    CHECK(std::abs(e.value - 3.0) <= 1e-8);
    CHECK(e.converged);
  }
  SUBCASE("50x50 Gaussian against SVD") {
    RngStream rng(5, 9);
    const Matrix m = gaussian_matrix(rng, 50, 50, 1.0);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(m.view()));
    const double sigma = svd.singularValues()(0);
    const SpectralEstimate e = spectral_norm(m, 20000, 1e-15);
    CHECK(std::abs(e.value - sigma) <= 1e-6 * sigma);
  }
  SUBCASE("0 <= estimate <= min(sigma_max, Frobenius)") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      RngStream rng(s, 1);
      const Matrix m = gaussian_matrix(rng, 5 + s % 7, 3 + s % 11, 0.5 + 0.1 * double(s));
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(m.view()));
      const SpectralEstimate e = spectral_norm(m, 50, 1e-6);
      CHECK(e.value >= 0.0);
      CHECK(e.value <= svd.singularValues()(0) * (1.0 + 1e-12));
      CHECK(e.value <= m.view().norm() * (1.0 + 1e-12));
    }
  }
  SUBCASE("iteration cap reports non-convergence") {
    RngStream rng(3, 3);
    const SpectralEstimate e = spectral_norm(gaussian_matrix(rng, 40, 40, 1.0), 1, 1e-15);
    CHECK_FALSE(e.converged);
    CHECK(e.value > 0.0);
  }
  SUBCASE("c0 of square Gaussian matrices near 2") {
    for (const std::size_t m : {64u, 256u, 1024u}) {
      RngStream rng(1, m);
      const double c0 = spectral_norm(gaussian_matrix(rng, m, m, 1.0), 500, 1e-8).value /
                        std::sqrt(double(m));
      CHECK(c0 >= 1.5);
      CHECK(c0 <= 2.5);
    }
  }
}

TEST_CASE("symmetric_operator_norm matches the eigen solver") {
  RngStream rng(2, 2);
  const Matrix g = gaussian_matrix(rng, 30, 30, 1.0);
  const Eigen::MatrixXd a = (Eigen::MatrixXd(g.view()) + Eigen::MatrixXd(g.view()).transpose()) / 2;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const double expected = es.eigenvalues().cwiseAbs().maxCoeff();
  const SpectralEstimate e = symmetric_operator_norm(
      30,
      [&](std::span<const double> v, std::span<double> out) {
        VectorMap(out.data(), 30) = a * ConstVectorMap(v.data(), 30);
      },
      50000, 1e-15);
  CHECK(std::abs(e.value - expected) <= 1e-6 * expected);
}

TEST_CASE("power iteration start is a fixed unit vector") {
  const std::vector<double> a = power_iteration_start(17);
  CHECK(a == power_iteration_start(17));
  CHECK(flat_norm(a) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("flat vector helpers") {
  const std::vector<double> a = {1, 2}, b = {3, 4};
  CHECK(flat_dot(a, b) == 11.0);
  CHECK(flat_norm(b) == 5.0);
  CHECK(flat_distance(a, b) == doctest::Approx(std::sqrt(8.0)));
  const std::vector<double> g = test::random_vector(4, 100);
  std::vector<double> w = test::random_vector(5, 100);
  std::vector<double> ref = w;
  for (std::size_t j = 0; j < ref.size(); ++j) ref[j] = ref[j] + (-0.03) * g[j];
  flat_axpy(w, -0.03, g);
  CHECK(w == ref);
}

TEST_CASE("matrix basics") {
  const Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(m(1, 2) == 6.0);
  CHECK(m.view()(0, 1) == 2.0);
  Matrix bad(1, 1);
  bad(0, 0) = std::nan("");
  CHECK_FALSE(bad.all_finite());
  CHECK(Matrix::identity(2) == Matrix(2, 2, std::vector<double>{1, 0, 0, 1}));
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <json.hpp>

#include "gbl/data_io.hpp"
#include "gbl/ntk.hpp"
#include "helpers.hpp"

using namespace gbl;
using test::random_dataset;

namespace {

NetConfig config(Activation a, std::size_t depth, std::size_t width, std::size_t d) {
  NetConfig cfg;
  cfg.activation = a;
  cfg.depth = depth;
  cfg.width = width;
  cfg.input_dim = d;
  return cfg;
}

NtkFeatures features(std::vector<std::vector<double>> rows) {
  NtkFeatures f;
  f.rows.resize(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) f.rows(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  }
  return f;
}

double min_row_norm(const NtkFeatures& f) { return f.rows.rowwise().norm().minCoeff(); }

double min_margin(const NtkFeatures& f, const std::vector<double>& w) {
  const Eigen::VectorXd m = f.rows * Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(w.size()));
  return m.minCoeff();
}

RunMetrics synthetic_metrics(double S, double rho_final, std::size_t T) {
  RunMetrics m;
  RunRecord r;
  r.iter = T;
  r.cum_train_loss = S;
  r.dist_from_init = rho_final;
  m.records.push_back(r);
  return m;
}

}  // namespace

TEST_CASE("NTK features") {
  const NetConfig cfg = config(Activation::softplus, 2, 8, 4);
  const Model model(cfg);
  const NetworkParams w0 = init_params(cfg, 3);
  const Dataset data = random_dataset(3, 6, 4);
  const NtkFeatures f = ntk_features(model, w0, data);
  REQUIRE(f.size() == 6);
  REQUIRE(f.dim() == w0.size());
  CHECK(f.rows.allFinite());
  for (std::size_t i = 0; i < 6; ++i) {
    const std::vector<double> g = model.grad(w0, data.input(i));
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(f.rows(Eigen::Index(i), Eigen::Index(j)) == data.label(i) * g[j]);
    }
  }
  SUBCASE("label flip negates the row") {
    const NtkFeatures flipped = ntk_features(model, w0, data.with_label_flipped(2));
    CHECK(flipped.rows.row(2) == -f.rows.row(2));
    CHECK(flipped.rows.row(1) == f.rows.row(1));
  }
  SUBCASE("duplicate sample gives identical rows") {
    const std::vector<std::size_t> idx = {4, 4};
    const NtkFeatures dup = ntk_features(model, w0, data.subset(idx));
    CHECK(dup.rows.row(0) == dup.rows.row(1));
    CHECK(dup.rows.row(0) == f.rows.row(4));
  }
  SUBCASE("quadratic closed form") {
    const NetConfig q = config(Activation::quadratic, 1, 4, 3);
    const NetworkParams wq = init_params(q, 5);
    const Dataset dq = random_dataset(5, 3, 3);
    const NtkFeatures fq = ntk_features(Model(q), wq, dq);
    const std::vector<double> a = balanced_signs(4);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t k = 0; k < 4; ++k) {
        double z = 0.0;
        for (std::size_t j = 0; j < 3; ++j) z += wq.layer(0)(Eigen::Index(k), Eigen::Index(j)) * dq.input(i)[j];
        for (std::size_t j = 0; j < 3; ++j) {
          const double expected = dq.label(i) * a[k] / 4.0 * z * dq.input(i)[j];
          CHECK(fq.rows(Eigen::Index(i), Eigen::Index(k * 3 + j)) == doctest::Approx(expected).epsilon(1e-14));
        }
      }
    }
  }
}

TEST_CASE("margin estimation") {
  SUBCASE("antipodal inputs with opposite labels") {
    // x and -x labeled +1 and -1 give the same signed feature row, margin 1.
    const NtkFeatures f = features({{0.6, 0.8}, {0.6, 0.8}});
    const MarginEstimate e = estimate_margin(f, 10000);
    CHECK(e.separated);
    CHECK(e.gamma_hat >= 0.99);
    CHECK(e.gamma_hat <= 1.0 + 1e-12);
    CHECK(flat_norm(e.direction) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("orthogonal unit rows have margin 1/sqrt 2") {
    const NtkFeatures f = features({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
    const MarginEstimate e = estimate_margin(f, 10000);
    CHECK(e.gamma_hat >= 0.99 / std::sqrt(2.0));
    CHECK(e.gamma_hat <= 1.0 / std::sqrt(2.0) + 1e-12);
    CHECK(min_margin(f, e.direction) == doctest::Approx(e.gamma_hat).epsilon(1e-12));
  }
  SUBCASE("single row") {
    const MarginEstimate e = estimate_margin(features({{0.0, -3.0, 4.0}}), 10000);
    CHECK(e.gamma_hat >= 0.99 * 5.0);
  }
  SUBCASE("inseparable rows") {
    const MarginEstimate e = estimate_margin(features({{0.3, -0.2}, {-0.3, 0.2}}), 1000);
    CHECK_FALSE(e.separated);
    CHECK(e.gamma_hat <= 0.0);
  }
  SUBCASE("never exceeds the shortest row") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const std::vector<double> v = test::random_vector(s, 24);
      std::vector<std::vector<double>> rows(6, std::vector<double>(4));
      for (std::size_t i = 0; i < 24; ++i) rows[i / 4][i % 4] = v[i] + (i % 4 == 0 ? 2.0 : 0.0);
      const NtkFeatures f = features(rows);
      CHECK(estimate_margin(f, 500).gamma_hat <= min_row_norm(f) * (1 + 1e-12));
    }
  }
  SUBCASE("streaming matches the materialized iteration") {
    const NetConfig cfg = config(Activation::softplus, 2, 16, 5);
    const Model model(cfg);
    const NetworkParams w0 = init_params(cfg, 8);
    const Dataset data = random_dataset(8, 20, 5);
    const MarginEstimate dense = estimate_margin(ntk_features(model, w0, data), 200);
    const MarginEstimate stream = estimate_margin_streaming(model, w0, data, 200);
    CHECK(stream.gamma_hat == doctest::Approx(dense.gamma_hat).epsilon(1e-9));
    CHECK(stream.separated == dense.separated);
    CHECK(test::rel_error(stream.direction, dense.direction) <= 1e-9);
    const MarginEstimate tiny_budget = estimate_ntk_margin(model, w0, data, 200, 64);
    CHECK(tiny_budget.gamma_hat == stream.gamma_hat);
  }
}

TEST_CASE("output bound") {
  const NetConfig zero = config(Activation::shifted_softplus, 2, 8, 4);
  const Dataset data = random_dataset(4, 30, 4);
  CHECK(output_bound(Model(zero), NetworkParams(zero), data) == 0.0);

  const NetConfig cfg = config(Activation::softplus, 2, 16, 4);
  const NetworkParams w0 = init_params(cfg, 4);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < 60; ++i) idx.push_back(i % 30);
  CHECK(output_bound(Model(cfg), w0, data.subset(idx)) == output_bound(Model(cfg), w0, data));

  std::vector<double> bounds;
  for (const std::size_t m : {100u, 400u, 1600u}) {
    const NetConfig wide = config(Activation::softplus, 2, m, 4);
    bounds.push_back(output_bound(Model(wide), init_params(wide, 9), data));
  }
  MESSAGE("B_hat over widths 100/400/1600: " << bounds[0] << " " << bounds[1] << " " << bounds[2]);
  CHECK(bounds[2] <= 2.0 * bounds[0]);
  CHECK(bounds[1] <= 2.0 * bounds[0]);
}

TEST_CASE("corollary construction") {
  const NetConfig cfg = config(Activation::softplus, 1, 4, 2);
  const NetworkParams w0 = init_params(cfg, 1);
  std::vector<double> dir(w0.size(), 0.0);
  dir[0] = 1.0;
  SUBCASE("substitution") {
    const Corollary1 c = corollary1_construct(cfg, w0, 0.5, 1.0, 0.01, dir, 1.0);
    CHECK(c.rho == doctest::Approx((2.0 + std::log(100.0)) / 0.5).epsilon(1e-15));
    CHECK(c.rho == doctest::Approx(13.2103).epsilon(1e-5));
    CHECK(c.w_star.flat()[0] == w0.flat()[0] + c.rho);
    CHECK(c.w_star.flat()[1] == w0.flat()[1]);
    CHECK(c.required_m == doctest::Approx(std::pow(c.rho, 10.0)).epsilon(1e-14));
    CHECK_FALSE(c.width_ok);
    CHECK(corollary1_construct(cfg, w0, 0.5, 3.0, 1.0, dir, 1.0).rho == 12.0);
  }
  SUBCASE("B below one is floored") {
    const Corollary1 c = corollary1_construct(cfg, w0, 2.0, 0.25, 1.0, dir, 1.0);
    CHECK(c.B_floored == 1.0);
    CHECK(c.rho == 1.0);
    CHECK(c.rho_raw == 0.25);
  }
  SUBCASE("monotonicity") {
    const double base = corollary1_construct(cfg, w0, 0.5, 2.0, 0.1, dir, 1.0).rho;
    CHECK(corollary1_construct(cfg, w0, 0.6, 2.0, 0.1, dir, 1.0).rho < base);
    CHECK(corollary1_construct(cfg, w0, 0.5, 2.5, 0.1, dir, 1.0).rho > base);
    CHECK(corollary1_construct(cfg, w0, 0.5, 2.0, 0.05, dir, 1.0).rho > base);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(corollary1_construct(cfg, w0, 0.0, 1.0, 0.1, dir, 1.0), ConfigError);
    CHECK_THROWS_AS(corollary1_construct(cfg, w0, -0.1, 1.0, 0.1, dir, 1.0), ConfigError);
    CHECK_THROWS_AS(corollary1_construct(cfg, w0, 0.5, 1.0, 0.0, dir, 1.0), ConfigError);
    CHECK_THROWS_AS(corollary1_construct(cfg, w0, 0.5, 1.0, 1.5, dir, 1.0), ConfigError);
    const std::vector<double> short_dir(3, 0.0);
    CHECK_THROWS_AS(corollary1_construct(cfg, w0, 0.5, 1.0, 0.1, short_dir, 1.0), ConfigError);
  }
  SUBCASE("loss at the constructed target") {
    const NetConfig net = config(Activation::softplus, 1, 64, 3);
    const Model model(net);
    const NetworkParams init = init_params(net, 2);
    const Dataset data = random_dataset(2, 12, 3);
    const MarginEstimate e = estimate_margin(ntk_features(model, init, data), 20000);
    REQUIRE(e.separated);
    const double beta = estimate_beta_hat(model, init, std::span<const NetworkParams>(&init, 1),
                                          data.inputs());
    const double eps = 0.05;
    const Corollary1 c =
        corollary1_construct(net, init, e.gamma_hat, output_bound(model, init, data), eps, e.direction, beta);
    const double loss = empirical_loss(model, c.w_star, data, LossKind::logistic);
    MESSAGE("F(w*) = " << loss << " vs eps " << eps << ", width verdict " << c.width_ok
                       << " (required m " << c.required_m << ")");
    if (c.width_ok) CHECK(loss <= eps);
  }
}

TEST_CASE("stability bounds") {
  SUBCASE("hand substitutions are exact") {
    const BoundReport r = stability_bounds(synthetic_metrics(50.0, 2.0, 10), 1.0, 2.0, 0.1, 1000);
    CHECK(r.bound_eq12 == 0.11);
    CHECK(r.bound_eq9 == 0.05625);
    CHECK(r.bound_eq8 == 0.0171875);
    CHECK(r.bound_eq9_rho_final == 0.05625);
    CHECK(r.T == 10);
    CHECK(r.cumulative_loss == 50.0);
    CHECK_THROWS_AS(stability_bounds(synthetic_metrics(1.0, 1.0, 1), 1.0, 1.0, 0.1, 0), ConfigError);
  }
  SUBCASE("eq8 below eq12 inside the step-size region") {
    RngStream rng(3, stream_id("test/bounds"));
    for (int k = 0; k < 1000; ++k) {
      const double G0 = 5.0 * rng.uniform();
      const double eta = rng.uniform() / ((G0 + 0.25) * (G0 + 0.25));
      const BoundReport r =
          stability_bounds(synthetic_metrics(100.0 * rng.uniform(), 1.0, 5), G0, 1.0, eta, 100);
      REQUIRE(r.bound_eq8 <= r.bound_eq12);
      REQUIRE(r.bound_eq8 >= 0.0);
      REQUIRE(r.bound_eq9 >= 0.0);
    }
  }
  SUBCASE("recomputation from the CSV is bit-exact and eq12 is nondecreasing") {
    const NetConfig cfg = config(Activation::softplus, 2, 16, 4);
    const Dataset train = random_dataset(6, 40, 4);
    TrainConfig tc;
    tc.step_size = 0.3;
    tc.max_iters = 30;
    const TrainResult run = train_gd(Model(cfg), init_params(cfg, 6), train, nullptr, LossKind::logistic, tc);
    const std::filesystem::path path = std::filesystem::temp_directory_path() / "gbl_ntk_bounds.csv";
    write_metrics_csv(run.metrics, path);
    const RunMetrics back = read_metrics_csv(path);
    std::filesystem::remove(path);
    const BoundReport a = stability_bounds(run.metrics, 1.3, 2.0, 0.3, 40);
    const BoundReport b = stability_bounds(back, 1.3, 2.0, 0.3, 40);
    CHECK(to_json(a) == to_json(b));
    CHECK(a.bound_eq12 == b.bound_eq12);
    CHECK(a.bound_eq8 == b.bound_eq8);
    CHECK(a.bound_eq9_rho_final == b.bound_eq9_rho_final);
    double prev = -1.0;
    for (std::size_t t = 0; t < run.metrics.records.size(); ++t) {
      RunMetrics prefix;
      prefix.records.assign(run.metrics.records.begin(), run.metrics.records.begin() + long(t) + 1);
      const double eq12 = stability_bounds(prefix, 1.3, 2.0, 0.3, 40).bound_eq12;
      CHECK(eq12 >= prev);
      prev = eq12;
    }
  }
}

TEST_CASE("bound report JSON") {
  BoundReport r = stability_bounds(synthetic_metrics(50.0, 2.0, 10), 1.0, 2.0, 0.1, 1000);
  const nlohmann::ordered_json plain = nlohmann::ordered_json::parse(to_json(r));
  const std::vector<std::string> head = {"gamma_hat",     "B_hat",     "G0",
                                         "bound_eq12",    "bound_eq9", "bound_eq8",
                                         "corollary_rho", "corollary_required_m",
                                         "cumulative_loss", "eta",     "n",
                                         "T",             "rho_final", "bound_eq9_rho_final"};
  std::vector<std::string> keys;
  for (const auto& [k, v] : plain.items()) keys.push_back(k);
  CHECK(keys == head);
  CHECK(plain["bound_eq12"].get<double>() == 0.11);
  CHECK(plain["n"].get<std::size_t>() == 1000);

  r.separated = true;
  r.width_sqrt_n_ok = false;
  const nlohmann::ordered_json extra = nlohmann::ordered_json::parse(to_json(r));
  CHECK(extra.size() == head.size() + 2);
  CHECK(extra["separated"] == true);
  CHECK(extra["width_sqrt_n_ok"] == false);
  CHECK_FALSE(extra.contains("B_hat_floored"));
}

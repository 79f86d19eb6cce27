#include <doctest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gbl/gbl.h"

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "gbl_capi_cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Exit status of `gbl-lab args`, stdout captured in `out_file`.
int lab(const std::string& args, const fs::path& out_file = kScratch / "stdout.txt") {
  const std::string cmd = std::string("\"") + GBL_LAB_PATH + "\" " + args + " > \"" +
                          out_file.string() + "\" 2> \"" + (kScratch / "stderr.txt").string() + "\"";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

const std::string kSmallTrain =
    "--set data=synthetic --set n_train=40 --set n_test=20 --set synth_dim=4 --set width=8 "
    "--set step_size=0.1 ";

struct Scratch {
  Scratch() {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);
  }
  ~Scratch() { fs::remove_all(kScratch); }
};

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(gbl_version()) == "0.1.0");
  CHECK(std::string(gbl_status_name(GBL_OK)) == "ok");
  CHECK(std::string(gbl_status_name(GBL_DIVERGED)) == "numerical divergence");
  CHECK(GBL_CONFIG_ERROR == 1);
  CHECK(GBL_DIVERGED == 2);
  CHECK(GBL_IO_ERROR == 3);
  gbl_string_free(nullptr);
  gbl_config_free(nullptr);
  gbl_model_free(nullptr);
  gbl_dataset_free(nullptr);
  gbl_metrics_free(nullptr);
}

TEST_CASE("NULL arguments") {
  gbl_config* cfg = nullptr;
  CHECK(gbl_config_new(nullptr) == GBL_INVALID_ARGUMENT);
  CHECK(std::string(gbl_last_error()).find("NULL") != std::string::npos);
  CHECK(gbl_config_from_json(nullptr, &cfg) == GBL_INVALID_ARGUMENT);
  CHECK(gbl_config_set(nullptr, "a=1") == GBL_INVALID_ARGUMENT);
  CHECK(gbl_run_train(nullptr, "x") == GBL_INVALID_ARGUMENT);
  CHECK(gbl_run_check(0, nullptr) == GBL_INVALID_ARGUMENT);
  CHECK(gbl_dataset_size(nullptr) == 0);
  CHECK(gbl_model_num_params(nullptr) == 0);
  CHECK(gbl_metrics_rows(nullptr) == 0);
}

TEST_CASE("config, dataset and model handles") {
  Scratch scratch;
  gbl_config* cfg = nullptr;
  REQUIRE(gbl_config_from_json(R"({"data": "synthetic", "n_train": 30, "n_test": 10, "synth_dim": 5,
                                    "depth": 2, "width": 6, "seed": 3})",
                               &cfg) == GBL_OK);
  CHECK(gbl_config_from_json("[1]", &cfg) == GBL_CONFIG_ERROR);
  CHECK(gbl_config_set(cfg, "novalue") == GBL_CONFIG_ERROR);

  gbl_dataset* train = nullptr;
  gbl_dataset* test = nullptr;
  REQUIRE(gbl_dataset_load(cfg, 0, &train) == GBL_OK);
  REQUIRE(gbl_dataset_load(cfg, 1, &test) == GBL_OK);
  CHECK(gbl_dataset_size(train) == 30);
  CHECK(gbl_dataset_size(test) == 10);
  CHECK(gbl_dataset_dim(train) == 5);

  gbl_model* model = nullptr;
  REQUIRE(gbl_model_init(cfg, 5, &model) == GBL_OK);
  CHECK(gbl_model_num_params(model) == 6 * 5 + 36 + 6);
  CHECK(gbl_model_input_dim(model) == 5);

  const double x[5] = {0.1, -0.2, 0.3, 0.0, 0.4};
  double phi = 0.0;
  CHECK(gbl_model_forward(model, x, 5, &phi) == GBL_OK);
  CHECK(std::isfinite(phi));
  CHECK(gbl_model_forward(model, x, 4, &phi) == GBL_INVALID_ARGUMENT);

  std::vector<double> g(gbl_model_num_params(model));
  CHECK(gbl_model_grad(model, x, 5, g.data(), g.size()) == GBL_OK);
  CHECK(gbl_model_grad(model, x, 5, g.data(), g.size() - 1) == GBL_INVALID_ARGUMENT);
  // Phi is linear in the output layer: the last-layer gradient dotted with v gives Phi.
  double loss = 0.0;
  CHECK(gbl_model_loss(model, train, &loss) == GBL_OK);
  CHECK(loss > 0.0);

  const std::string ckpt = (kScratch / "m.snet").string();
  REQUIRE(gbl_model_save(model, ckpt.c_str()) == GBL_OK);
  gbl_model* back = nullptr;
  REQUIRE(gbl_model_load(ckpt.c_str(), &back) == GBL_OK);
  double phi_back = 0.0;
  CHECK(gbl_model_forward(back, x, 5, &phi_back) == GBL_OK);
  CHECK(phi_back == phi);
  CHECK(gbl_model_load((kScratch / "absent.snet").string().c_str(), &back) == GBL_IO_ERROR);

  gbl_config* bad = nullptr;
  REQUIRE(gbl_config_from_json(R"({"width": 6})", &bad) == GBL_OK);
  CHECK(gbl_config_set(bad, "activation=relu") == GBL_OK);
  gbl_model* none = nullptr;
  CHECK(gbl_model_init(bad, 5, &none) == GBL_CONFIG_ERROR);
  CHECK(none == nullptr);

  gbl_model_free(back);
  gbl_model_free(model);
  gbl_dataset_free(train);
  gbl_dataset_free(test);
  gbl_config_free(bad);
  gbl_config_free(cfg);
}

TEST_CASE("run commands through the C API") {
  Scratch scratch;
  gbl_config* cfg = nullptr;
  REQUIRE(gbl_config_new(&cfg) == GBL_OK);
  for (const char* kv : {"data=synthetic", "n_train=40", "n_test=20", "synth_dim=4", "width=8",
                         "step_size=0.2", "max_iters=15"}) {
    REQUIRE(gbl_config_set(cfg, kv) == GBL_OK);
  }
  const std::string out = (kScratch / "train").string();
  REQUIRE(gbl_run_train(cfg, out.c_str()) == GBL_OK);
  CHECK(fs::exists(kScratch / "train" / "bounds.json"));
  CHECK(fs::exists(kScratch / "train" / "final.snet"));

  gbl_metrics* m = nullptr;
  REQUIRE(gbl_metrics_read((kScratch / "train" / "metrics.csv").string().c_str(), &m) == GBL_OK);
  REQUIRE(gbl_metrics_rows(m) == 16);
  gbl_record r{};
  REQUIRE(gbl_metrics_get(m, 0, &r) == GBL_OK);
  CHECK(r.iter == 0);
  CHECK(r.dist_from_init == 0.0);
  CHECK(r.eta == 0.2);
  CHECK(std::isfinite(r.test_loss));
  REQUIRE(gbl_metrics_get(m, 15, &r) == GBL_OK);
  CHECK(r.iter == 15);
  CHECK(gbl_metrics_get(m, 16, &r) == GBL_INVALID_ARGUMENT);
  gbl_metrics_free(m);

  gbl_config* b = nullptr;
  REQUIRE(gbl_config_new(&b) == GBL_OK);
  const std::string metrics_kv = "metrics=" + (kScratch / "train" / "metrics.csv").string();
  REQUIRE(gbl_config_set(b, metrics_kv.c_str()) == GBL_OK);
  char* json = nullptr;
  CHECK(gbl_run_bounds(b, &json) == GBL_CONFIG_ERROR);
  CHECK(std::string(gbl_last_error()).find("n") != std::string::npos);
  REQUIRE(gbl_config_set(b, "n=40") == GBL_OK);
  REQUIRE(gbl_config_set(b, "G0=1") == GBL_OK);
  REQUIRE(gbl_run_bounds(b, &json) == GBL_OK);
  CHECK(std::string(json).find("\"bound_eq12\"") != std::string::npos);
  gbl_string_free(json);

  REQUIRE(gbl_config_set(cfg, "step_size=1e-300") == GBL_OK);
  REQUIRE(gbl_config_set(cfg, "flavor=vanilla") == GBL_OK);
  CHECK(gbl_run_train(cfg, out.c_str()) == GBL_CONFIG_ERROR);
  CHECK(std::string(gbl_last_error()).find("flavor") != std::string::npos);
  gbl_config_free(b);
  gbl_config_free(cfg);
}

TEST_CASE("error messages are per thread") {
  gbl_config* cfg = nullptr;
  REQUIRE(gbl_config_new(&cfg) == GBL_OK);
  CHECK(gbl_config_set(cfg, "main-thread-error") == GBL_CONFIG_ERROR);
  const std::string mine = gbl_last_error();
  std::string a_msg, b_msg;
  gbl_status a_st = GBL_OK, b_st = GBL_OK;
  std::thread a([&] {
    gbl_config* c = nullptr;
    a_st = gbl_config_from_json("{", &c);
    a_msg = gbl_last_error();
  });
  std::thread b([&] {
    gbl_model* m = nullptr;
    b_st = gbl_model_load("/nonexistent/model.snet", &m);
    b_msg = gbl_last_error();
  });
  a.join();
  b.join();
  CHECK(a_st == GBL_CONFIG_ERROR);
  CHECK(b_st == GBL_IO_ERROR);
  CHECK(a_msg.find("JSON") != std::string::npos);
  CHECK(b_msg.find("model.snet") != std::string::npos);
  CHECK(std::string(gbl_last_error()) == mine);
  gbl_config_free(cfg);
}

TEST_CASE("self-check through the C API") {
  char* report = nullptr;
  CHECK(gbl_run_check(0, &report) == GBL_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("9/9 checks passed") != std::string::npos);
  gbl_string_free(report);
  report = nullptr;
  CHECK(gbl_run_check(1, &report) == GBL_CHECK_FAILED);
  CHECK(std::string(gbl_last_error()) == "failed checks: activation-contracts");
  CHECK(std::string(report).find("FAIL  activation-contracts") != std::string::npos);
  gbl_string_free(report);
}

TEST_CASE("CLI exit codes") {
  Scratch scratch;
  CHECK(lab("check") == 0);
  CHECK(slurp(kScratch / "stdout.txt").find("9/9 checks passed") != std::string::npos);
  CHECK(lab("check --corrupt-activation") == 4);

  CHECK(lab("xor --set dim=1 --out \"" + (kScratch / "x").string() + "\"") == 1);
  CHECK(slurp(kScratch / "stderr.txt").find("d >= 2") != std::string::npos);
  CHECK(lab("frobnicate") == 1);
  CHECK(lab("train --set width") == 1);
  CHECK(lab("train --set bogus_key=1 --out \"" + (kScratch / "t").string() + "\"") == 1);

  std::ofstream(kScratch / "partial.csv") << "iter,train_loss\n0,0.5\n";
  CHECK(lab("bounds \"" + (kScratch / "partial.csv").string() + "\" --set n=10 --set G0=1") == 1);
  CHECK(slurp(kScratch / "stderr.txt").find("lacks column") != std::string::npos);
  CHECK(lab("bounds \"" + (kScratch / "none.csv").string() + "\" --set n=10 --set G0=1") == 3);

  CHECK(lab("train --set data=idx --set data_dir=/nonexistent/mnist --out \"" +
            (kScratch / "t").string() + "\"") == 3);
  CHECK(lab("train --config /nonexistent/cfg.json") == 3);

  const fs::path div = kScratch / "div";
  CHECK(lab("train " + kSmallTrain +
            "--set activation=linear --set loss=linear --set step_size=1e150 --set max_iters=50 "
            "--out \"" + div.string() + "\"") == 2);
  CHECK(slurp(kScratch / "stderr.txt").find("numerical divergence") != std::string::npos);
  CHECK(fs::exists(div / "metrics.csv"));
}

TEST_CASE("CLI outputs") {
  Scratch scratch;
  const fs::path zero = kScratch / "zero";
  REQUIRE(lab("train " + kSmallTrain + "--set max_iters=0 --out \"" + zero.string() + "\"") == 0);
  std::istringstream csv(slurp(zero / "metrics.csv"));
  std::string header, row, extra;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(header.rfind("iter,train_loss,", 0) == 0);
  CHECK(row.rfind("0,", 0) == 0);
  CHECK_FALSE(std::getline(csv, extra));

  const fs::path run = kScratch / "run";
  REQUIRE(lab("train " + kSmallTrain + "--set max_iters=20 --seed 4 --out \"" + run.string() + "\"") == 0);
  const std::string bounds_args =
      "bounds \"" + (run / "metrics.csv").string() + "\" --set n=40 --set G0=1.5";
  REQUIRE(lab(bounds_args, kScratch / "b1.json") == 0);
  REQUIRE(lab(bounds_args, kScratch / "b2.json") == 0);
  CHECK(slurp(kScratch / "b1.json") == slurp(kScratch / "b2.json"));
  CHECK(slurp(kScratch / "b1.json").find("\"bound_eq12\"") != std::string::npos);

  const fs::path again = kScratch / "again";
  REQUIRE(lab("train " + kSmallTrain + "--set max_iters=20 --seed 4 --out \"" + again.string() + "\"") == 0);
  CHECK(slurp(run / "metrics.csv") == slurp(again / "metrics.csv"));
  CHECK(slurp(run / "final.snet") == slurp(again / "final.snet"));

  const fs::path xr = kScratch / "xor";
  REQUIRE(lab("xor --set dim=16 --set mc_samples=500 --out \"" + xr.string() + "\"") == 0);
  CHECK(slurp(xr / "xor.csv").rfind("d,seed,n,m,eta,T,step,", 0) == 0);

  const fs::path sw = kScratch / "sweep";
  REQUIRE(lab("sweep --set dims=4,8 --set seeds=2 --set mc_samples=200 --jobs 2 --out \"" +
              sw.string() + "\"") == 0);
  CHECK(slurp(sw / "sweep_summary.csv").rfind("d,seeds,reached,mean_steps,", 0) == 0);
  CHECK(fs::exists(sw / "sweep.csv"));
}

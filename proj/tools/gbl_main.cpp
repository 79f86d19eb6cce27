// gbl-lab: command-line front end over the C API.
//
//   gbl-lab train  --config cfg.json --out runs/a [--set k=v]... [--seed N]
//   gbl-lab xor    --config cfg.json --out runs/x
//   gbl-lab sweep  --out runs/s --jobs 4 [--set dims=16,64]
//   gbl-lab bounds runs/a/metrics.csv --set n=2000 --set G0=1.7
//   gbl-lab check
//
// Exit codes: 0 ok, 1 config, 2 divergence, 3 I/O, 4 failed self-check.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gbl/gbl.h"

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::optional<unsigned long long> seed;
  unsigned jobs = 1;
};

int report(gbl_status status) {
  if (status != GBL_OK) {
    std::fprintf(stderr, "gbl-lab: %s: %s\n", gbl_status_name(status), gbl_last_error());
  }
  return int(status);
}

// Config file (if any), then --seed, then --set overrides in order.
gbl_status build_config(const Common& c, gbl_config** out) {
  gbl_status st = c.config_path.empty() ? gbl_config_new(out)
                                        : gbl_config_from_file(c.config_path.c_str(), out);
  if (st != GBL_OK) return st;
  if (c.seed) {
    const std::string kv = "seed=" + std::to_string(*c.seed);
    if ((st = gbl_config_set(*out, kv.c_str())) != GBL_OK) return st;
  }
  for (const std::string& kv : c.overrides) {
    if ((st = gbl_config_set(*out, kv.c_str())) != GBL_OK) return st;
  }
  return GBL_OK;
}

// `bounds` is pure arithmetic over a metrics file: no output directory, no seed.
void add_common(CLI::App* sub, Common& c, bool run_options) {
  sub->add_option("--config", c.config_path, "flat JSON config file");
  sub->add_option("--set", c.overrides, "override a config key (k=v), repeatable");
  if (!run_options) return;
  sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "top-level seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smooth-network generalization lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gbl_version()));

  Common common;
  std::string metrics_path;
  bool corrupt = false;

  CLI::App* train = app.add_subcommand("train", "full-batch GD on a deep smooth net");
  add_common(train, common, true);
  CLI::App* xr = app.add_subcommand("xor", "one-pass SGD on the XOR distribution");
  add_common(xr, common, true);
  CLI::App* sweep = app.add_subcommand("sweep", "steps-to-threshold over dims and seeds");
  add_common(sweep, common, true);
  sweep->add_option("--jobs", common.jobs, "parallel runs")->check(CLI::PositiveNumber);
  CLI::App* bounds = app.add_subcommand("bounds", "stability bounds from a metrics CSV");
  bounds->add_option("metrics", metrics_path, "metrics CSV")->required();
  add_common(bounds, common, false);
  CLI::App* check = app.add_subcommand("check", "run the property self-check suite");
  check->add_flag("--corrupt-activation", corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return int(GBL_CONFIG_ERROR);
  }

  if (check->parsed()) {
    char* text = nullptr;
    const gbl_status st = gbl_run_check(corrupt ? 1 : 0, &text);
    if (text != nullptr) std::fputs(text, stdout);
    gbl_string_free(text);
    return report(st);
  }

  gbl_config* cfg = nullptr;
  gbl_status st = build_config(common, &cfg);
  if (st == GBL_OK && bounds->parsed()) {
    const std::string kv = "metrics=" + metrics_path;
    st = gbl_config_set(cfg, kv.c_str());
    char* json = nullptr;
    if (st == GBL_OK) st = gbl_run_bounds(cfg, &json);
    if (json != nullptr) std::fputs(json, stdout);
    gbl_string_free(json);
  } else if (st == GBL_OK && train->parsed()) {
    st = gbl_run_train(cfg, common.out_dir.c_str());
  } else if (st == GBL_OK && xr->parsed()) {
    st = gbl_run_xor(cfg, common.out_dir.c_str());
  } else if (st == GBL_OK && sweep->parsed()) {
    st = gbl_run_sweep(cfg, common.out_dir.c_str(), common.jobs);
  }
  gbl_config_free(cfg);
  return report(st);
}

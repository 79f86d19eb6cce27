#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gbl/config.hpp"
#include "gbl/data_io.hpp"
#include "gbl/ntk.hpp"
#include "gbl/trainer.hpp"
#include "gbl/xor_lab.hpp"

namespace gbl {

// Every runner throws ConfigError / IoError / DivergenceError; the C API maps
// them to exit codes 1 / 3 / 2.

struct TrainData {
  Dataset train;
  Dataset test;
};

// data = "idx" reads {train,t10k}-{images-idx3,labels-idx1}-ubyte from
// data_dir (fallback $GBL_DATA_DIR), data = "synthetic" draws two clusters.
TrainData load_train_data(const Config& cfg);

NetConfig net_config_from(const Config& cfg, std::size_t input_dim);
TrainConfig train_config_from(const Config& cfg);
XorConfig xor_config_from(const Config& cfg);

struct TrainOutcome {
  NetConfig net;
  TrainResult result;
  BoundReport bounds;
};

// Writes metrics.csv, final.snet and bounds.json under out_dir. On divergence
// the partial metrics.csv is written before the error propagates.
TrainOutcome run_train(const Config& cfg, const std::filesystem::path& out_dir);

// Writes xor.csv.
XorRun run_xor(const Config& cfg, const std::filesystem::path& out_dir);

struct SweepOutcome {
  std::vector<XorStepRow> rows;         // sorted by (d, seed, step)
  std::vector<SweepAggregate> summary;  // sorted by d
};

// Runs every (d, seed) pair on up to `jobs` threads; writes sweep.csv and
// sweep_summary.csv.
SweepOutcome run_sweep(const Config& cfg, const std::filesystem::path& out_dir,
                       std::size_t jobs);

// Recomputes the stability bounds from a metrics CSV. Keys: metrics (path),
// n, G0, optional rho (defaults to the final dist_from_init) and eta
// (defaults to the eta column of the last row).
BoundReport run_bounds(const Config& cfg);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfCheckOptions {
  // Feeds the contract check 8 sigma'' so activation-contracts fails.
  bool corrupt_activation = false;
};

std::vector<CheckResult> run_self_check(const SelfCheckOptions& opts);
std::string format_check_report(const std::vector<CheckResult>& results);

}  // namespace gbl

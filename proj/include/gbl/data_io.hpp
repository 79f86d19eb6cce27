#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gbl/dataset.hpp"
#include "gbl/errors.hpp"
#include "gbl/rng.hpp"
#include "gbl/trainer.hpp"
#include "gbl/xor_lab.hpp"

namespace gbl {

// IDX image/label pair: big-endian magic 0x00000803 (images, dims n x rows x
// cols) and 0x00000801 (labels, dim n), then raw bytes.
struct RawImages {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count x rows x cols
  std::vector<std::uint8_t> labels;

  std::size_t count() const noexcept { return labels.size(); }
  std::size_t pixels_per_image() const noexcept { return rows * cols; }
};

class IdxError : public IoError {
 public:
  enum class Kind { open_failed, bad_magic, truncated, count_mismatch };
  IdxError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

RawImages load_idx(const std::filesystem::path& image_path,
                   const std::filesystem::path& label_path);
void write_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path,
               const RawImages& raw);

// even_odd maps even digits to +1 and odd to -1. class_pair keeps only the
// classes `positive` (+1) and `negative` (-1).
struct LabelRule {
  enum class Kind { even_odd, class_pair };
  Kind kind = Kind::even_odd;
  int positive = -1;
  int negative = -1;

  // "even-odd" or "pair:I,J".
  static LabelRule parse(const std::string& text);
  std::string to_string() const;
};

// Pixels scaled to [0, 1], then each vector by 1 / max(1, ||x||).
Dataset binarize_normalize(const RawImages& raw, const LabelRule& rule);

// The first n entries of a Fisher-Yates permutation of the samples drawn from
// stream ("data/subsample", salt). n >= size returns the dataset unchanged.
Dataset subsample(const Dataset& data, std::size_t n, std::uint64_t seed, std::uint64_t salt = 0);

// Two Gaussian clusters at +mu / -mu with ||mu|| = margin, per-coordinate
// noise stddev 0.5 margin / sqrt(d), labels by cluster (alternating), every
// point projected onto the unit ball.
Dataset synth_ntk_separable(RngStream& rng, std::size_t d, std::size_t n, double margin);

// Metrics CSV: iter, train_loss, test_loss, gen_gap, dist_from_init,
// grad_norm, cum_train_loss, eta, descent_violation. Reals use 17 significant
// digits; NaN is an empty cell.
void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path);
std::string metrics_csv_string(const RunMetrics& metrics);
// Columns are located by header name; a missing column is a ConfigError.
RunMetrics read_metrics_csv(const std::filesystem::path& path);

// %.17g, with NaN as the empty string.
std::string format_real(double v);

// XOR per-step CSV: d, seed, n, m, eta, T, step, mc_accuracy, exact_accuracy
// (empty for d > 20), z_t, tail_norm, signal_coord1, signal_coord2.
std::string xor_csv_string(const std::vector<XorStepRow>& rows);
void write_xor_csv(const std::vector<XorStepRow>& rows, const std::filesystem::path& path);

// Steps-to-threshold summary for one d over all seeds. mean_steps counts an
// unreached run as max_steps + 1, so it is a lower bound on the true mean;
// mean_steps_reached averages the reached runs only (NaN when none).
struct SweepAggregate {
  std::size_t d = 0;
  std::size_t seeds = 0;
  std::size_t reached = 0;
  double mean_steps = 0.0;
  double mean_steps_reached = 0.0;
  std::size_t log2_ceiling = 0;  // ceil(log2 d)
};
std::string sweep_aggregate_csv_string(const std::vector<SweepAggregate>& rows);
void write_sweep_aggregate_csv(const std::vector<SweepAggregate>& rows,
                               const std::filesystem::path& path);

// Whole-file write with the path in any IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gbl

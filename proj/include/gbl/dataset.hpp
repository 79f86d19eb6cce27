#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gbl/numerics.hpp"

namespace gbl {

enum class Provenance { idx_file, synthetic, xor_cube };

std::string_view to_string(Provenance p) noexcept;

// Labeled binary-classification samples, one input per row.
//
// Every constructor funnels through validate(): labels are exactly +1/-1 and
// the label count matches the row count. idx_file and synthetic inputs satisfy
// ||x|| <= 1 + 1e-12. xor_cube inputs are instead required to lie on the
// hypercube {+1,-1}^d with y = x(1) x(2).
class Dataset {
 public:
  Dataset() = default;
  Dataset(RowMatrix inputs, std::vector<double> labels, Provenance provenance);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return std::size_t(inputs_.cols()); }
  bool empty() const noexcept { return labels_.empty(); }

  const RowMatrix& inputs() const noexcept { return inputs_; }
  std::span<const double> labels() const noexcept { return labels_; }
  Provenance provenance() const noexcept { return provenance_; }

  std::span<const double> input(std::size_t i) const {
    return {inputs_.data() + i * dim(), dim()};
  }
  double label(std::size_t i) const { return labels_[i]; }

  Dataset subset(std::span<const std::size_t> indices) const;
  // The same samples with one label flipped (used by sign-linearity tests).
  Dataset with_label_flipped(std::size_t i) const;

 private:
  void validate() const;

  RowMatrix inputs_;
  std::vector<double> labels_;
  Provenance provenance_ = Provenance::synthetic;
};

}  // namespace gbl

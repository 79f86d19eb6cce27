#include "gbl/dataset.hpp"

#include <cmath>
#include <string>

#include "gbl/errors.hpp"

namespace gbl {

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::idx_file: return "idx-file";
    case Provenance::synthetic: return "synthetic";
    case Provenance::xor_cube: return "xor";
  }
  return "unknown";
}

Dataset::Dataset(RowMatrix inputs, std::vector<double> labels, Provenance provenance)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), provenance_(provenance) {
  validate();
}

void Dataset::validate() const {
  if (std::size_t(inputs_.rows()) != labels_.size()) {
    throw ConfigError("dataset has " + std::to_string(inputs_.rows()) + " inputs but " +
                      std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0) {
      throw ConfigError("dataset label " + std::to_string(i) + " is not +1/-1");
    }
    const auto row = inputs_.row(Eigen::Index(i));
    if (!row.allFinite()) {
      throw ConfigError("dataset input " + std::to_string(i) + " is not finite");
    }
    if (provenance_ == Provenance::xor_cube) {
      for (Eigen::Index k = 0; k < row.size(); ++k) {
        if (row[k] != 1.0 && row[k] != -1.0) {
          throw ConfigError("xor input " + std::to_string(i) + " is off the hypercube");
        }
      }
      if (row.size() < 2 || labels_[i] != row[0] * row[1]) {
        throw ConfigError("xor label " + std::to_string(i) + " differs from x(1)x(2)");
      }
    } else if (row.norm() > 1.0 + 1e-12) {
      throw ConfigError("dataset input " + std::to_string(i) + " has norm " +
                        std::to_string(row.norm()) + " > 1");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  RowMatrix x{Eigen::Index(indices.size()), inputs_.cols()};
  std::vector<double> y(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    GBL_ASSERT(indices[k] < size(), "subset index out of range");
    x.row(Eigen::Index(k)) = inputs_.row(Eigen::Index(indices[k]));
    y[k] = labels_[indices[k]];
  }
  return Dataset(std::move(x), std::move(y), provenance_);
}

Dataset Dataset::with_label_flipped(std::size_t i) const {
  GBL_ASSERT(provenance_ != Provenance::xor_cube, "xor labels are determined by inputs");
  std::vector<double> y = labels_;
  y.at(i) = -y.at(i);
  return Dataset(inputs_, std::move(y), provenance_);
}

}  // namespace gbl

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>

#include "gbl/data_io.hpp"

namespace gbl {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::open_failed, "cannot open IDX file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    const std::uint32_t v = std::uint32_t(bytes_[pos_]) << 24 | std::uint32_t(bytes_[pos_ + 1]) << 16 |
                            std::uint32_t(bytes_[pos_ + 2]) << 8 | std::uint32_t(bytes_[pos_ + 3]);
    pos_ += 4;
    return v;
  }

  std::vector<std::uint8_t> bytes(std::size_t count) {
    need(count);
    std::vector<std::uint8_t> out(bytes_.begin() + long(pos_), bytes_.begin() + long(pos_ + count));
    pos_ += count;
    return out;
  }

 private:
  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) {
      throw IdxError(IdxError::Kind::truncated, "truncated IDX file: " + path_.string());
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "bad IDX magic 0x%08x (expected 0x%08x): ", got, want);
    throw IdxError(IdxError::Kind::bad_magic, buf + path.string());
  }
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
  out.write(b.data(), 4);
}

}  // namespace

RawImages load_idx(const std::filesystem::path& image_path,
                   const std::filesystem::path& label_path) {
  const std::vector<std::uint8_t> image_bytes = read_all(image_path);
  const std::vector<std::uint8_t> label_bytes = read_all(label_path);

  Reader images(image_bytes, image_path);
  check_magic(images.u32(), kImageMagic, image_path);
  const std::size_t count = images.u32();
  RawImages raw;
  raw.rows = images.u32();
  raw.cols = images.u32();
  raw.pixels = images.bytes(count * raw.rows * raw.cols);

  Reader labels(label_bytes, label_path);
  check_magic(labels.u32(), kLabelMagic, label_path);
  const std::size_t label_count = labels.u32();
  if (label_count != count) {
    throw IdxError(IdxError::Kind::count_mismatch,
                   "label count " + std::to_string(label_count) + " in " + label_path.string() +
                       " does not match image count " + std::to_string(count) + " in " +
                       image_path.string());
  }
  raw.labels = labels.bytes(label_count);
  return raw;
}

void write_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path,
               const RawImages& raw) {
  if (raw.pixels.size() != raw.count() * raw.pixels_per_image()) {
    throw ConfigError("pixel buffer does not match count x rows x cols");
  }
  std::ofstream images(image_path, std::ios::binary | std::ios::trunc);
  if (!images) throw IoError("cannot open for writing: " + image_path.string());
  put_u32(images, kImageMagic);
  put_u32(images, std::uint32_t(raw.count()));
  put_u32(images, std::uint32_t(raw.rows));
  put_u32(images, std::uint32_t(raw.cols));
  images.write(reinterpret_cast<const char*>(raw.pixels.data()), long(raw.pixels.size()));
  if (!images) throw IoError("failed writing " + image_path.string());

  std::ofstream labels(label_path, std::ios::binary | std::ios::trunc);
  if (!labels) throw IoError("cannot open for writing: " + label_path.string());
  put_u32(labels, kLabelMagic);
  put_u32(labels, std::uint32_t(raw.count()));
  labels.write(reinterpret_cast<const char*>(raw.labels.data()), long(raw.labels.size()));
  if (!labels) throw IoError("failed writing " + label_path.string());
}

LabelRule LabelRule::parse(const std::string& text) {
  if (text == "even-odd") return {};
  int pos = -1;
  int neg = -1;
  char tail = 0;
  if (std::sscanf(text.c_str(), "pair:%d,%d%c", &pos, &neg, &tail) == 2 && pos >= 0 &&
      pos <= 255 && neg >= 0 && neg <= 255 && pos != neg) {
    return {Kind::class_pair, pos, neg};
  }
  throw ConfigError("label rule must be \"even-odd\" or \"pair:I,J\", got '" + text + "'");
}

std::string LabelRule::to_string() const {
  if (kind == Kind::even_odd) return "even-odd";
  return "pair:" + std::to_string(positive) + "," + std::to_string(negative);
}

Dataset binarize_normalize(const RawImages& raw, const LabelRule& rule) {
  const std::size_t d = raw.pixels_per_image();
  if (d == 0) throw ConfigError("IDX images have zero pixels");
  std::vector<std::size_t> keep;
  std::vector<double> labels;
  for (std::size_t i = 0; i < raw.count(); ++i) {
    const int c = raw.labels[i];
    if (rule.kind == LabelRule::Kind::even_odd) {
      keep.push_back(i);
      labels.push_back(c % 2 == 0 ? 1.0 : -1.0);
    } else if (c == rule.positive || c == rule.negative) {
      keep.push_back(i);
      labels.push_back(c == rule.positive ? 1.0 : -1.0);
    }
  }
  if (rule.kind == LabelRule::Kind::class_pair &&
      (std::find(labels.begin(), labels.end(), 1.0) == labels.end() ||
       std::find(labels.begin(), labels.end(), -1.0) == labels.end())) {
    throw ConfigError("class pair " + rule.to_string() + " is absent from the data");
  }
  RowMatrix x{Eigen::Index(keep.size()), Eigen::Index(d)};
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::uint8_t* src = raw.pixels.data() + keep[r] * d;
    for (std::size_t k = 0; k < d; ++k) x(Eigen::Index(r), Eigen::Index(k)) = src[k] / 255.0;
    const double norm = x.row(Eigen::Index(r)).norm();
    if (norm > 1.0) x.row(Eigen::Index(r)) /= norm;
  }
  return Dataset(std::move(x), std::move(labels), Provenance::idx_file);
}

Dataset subsample(const Dataset& data, std::size_t n, std::uint64_t seed, std::uint64_t salt) {
  if (n >= data.size()) return data;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RngStream rng(seed, stream_id("data/subsample", salt));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + std::size_t(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  order.resize(n);
  return data.subset(order);
}

Dataset synth_ntk_separable(RngStream& rng, std::size_t d, std::size_t n, double margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("margin target must lie in (0, 1)");
  if (d == 0 || n == 0) throw ConfigError("synthetic data needs d >= 1 and n >= 1");
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(Eigen::Index(d));
  for (Eigen::Index k = 0; k < mu.size(); ++k) mu[k] = rng.normal();
  mu *= margin / mu.norm();
  const double noise = 0.5 * margin / std::sqrt(double(d));
  RowMatrix x{Eigen::Index(n), Eigen::Index(d)};
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < d; ++k) {
      x(Eigen::Index(i), Eigen::Index(k)) = y[i] * mu[Eigen::Index(k)] + noise * rng.normal();
    }
    const double norm = x.row(Eigen::Index(i)).norm();
    if (norm > 1.0) x.row(Eigen::Index(i)) /= norm;
  }
  return Dataset(std::move(x), std::move(y), Provenance::synthetic);
}

}  // namespace gbl

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "gbl/errors.hpp"
#include "gbl/smooth_net.hpp"

namespace gbl {

namespace {

constexpr std::array<char, 5> kMagic = {'S', 'N', 'E', 'T', '1'};

template <class T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw IoError("truncated checkpoint: " + path.string());
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::uint8_t activation_tag(Activation a) { return static_cast<std::uint8_t>(a); }

Activation activation_from_tag(std::uint8_t tag, const std::filesystem::path& path) {
  if (tag > static_cast<std::uint8_t>(Activation::linear)) {
    throw IoError("unknown activation tag " + std::to_string(tag) + " in " + path.string());
  }
  return static_cast<Activation>(tag);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetConfig& cfg,
                     const NetworkParams& params) {
  if (params.size() != cfg.num_params()) {
    throw ConfigError("checkpoint parameters do not match the network config");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, std::uint32_t(cfg.depth));
  put_le<std::uint32_t>(out, std::uint32_t(cfg.width));
  put_le<std::uint32_t>(out, std::uint32_t(cfg.input_dim));
  put_le<std::uint8_t>(out, activation_tag(cfg.activation));
  put_le<std::uint8_t>(out, cfg.first_layer == FirstLayerScaling::scaled ? 1 : 0);
  for (const double v : params.flat()) put_le<double>(out, v);
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::array<char, 5> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("bad checkpoint magic: " + path.string());
  }
  Checkpoint ck;
  ck.config.depth = get_le<std::uint32_t>(in, path);
  ck.config.width = get_le<std::uint32_t>(in, path);
  ck.config.input_dim = get_le<std::uint32_t>(in, path);
  ck.config.activation = activation_from_tag(get_le<std::uint8_t>(in, path), path);
  const std::uint8_t scaling = get_le<std::uint8_t>(in, path);
  if (scaling > 1) throw IoError("bad first-layer scaling tag in " + path.string());
  ck.config.first_layer = scaling == 1 ? FirstLayerScaling::scaled : FirstLayerScaling::unscaled;
  try {
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("invalid checkpoint header in ") + path.string() + ": " + e.what());
  }
  std::vector<double> flat(ck.config.num_params());
  for (double& v : flat) v = get_le<double>(in, path);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError("trailing bytes after checkpoint payload: " + path.string());
  }
  ck.params = NetworkParams(ck.config, std::move(flat));
  return ck;
}

}  // namespace gbl

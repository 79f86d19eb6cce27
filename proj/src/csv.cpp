#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "gbl/data_io.hpp"

namespace gbl {

namespace {

constexpr std::array<const char*, 9> kColumns = {
    "iter",      "train_loss",     "test_loss", "gen_gap",          "dist_from_init",
    "grad_norm", "cum_train_loss", "eta",       "descent_violation"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_real(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size()) {
    throw ConfigError("bad number '" + cell + "' at " + path.string() + ":" + std::to_string(line));
  }
  return v;
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string metrics_csv_string(const RunMetrics& metrics) {
  std::string out;
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    out += kColumns[c];
    out += c + 1 < kColumns.size() ? ',' : '\n';
  }
  for (const RunRecord& r : metrics.records) {
    out += std::to_string(r.iter);
    for (const double v : {r.train_loss, r.test_loss, r.gen_gap, r.dist_from_init, r.grad_norm,
                           r.cum_train_loss, r.eta}) {
      out += ',';
      out += format_real(v);
    }
    out += r.descent_violation ? ",1\n" : ",0\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(text.data(), long(text.size()));
  if (!out) throw IoError("failed writing: " + path.string());
}

void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path) {
  write_text_file(path, metrics_csv_string(metrics));
}

std::string xor_csv_string(const std::vector<XorStepRow>& rows) {
  std::string out =
      "d,seed,n,m,eta,T,step,mc_accuracy,exact_accuracy,z_t,tail_norm,signal_coord1,"
      "signal_coord2\n";
  for (const XorStepRow& r : rows) {
    out += std::to_string(r.d) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.n) + ',' +
           std::to_string(r.m) + ',' + format_real(r.eta) + ',' + std::to_string(r.T) + ',' +
           std::to_string(r.step) + ',' + format_real(r.mc_accuracy) + ',' +
           (r.exact_accuracy ? format_real(*r.exact_accuracy) : std::string()) + ',' +
           format_real(r.z_t) + ',' + format_real(r.tail_norm) + ',' +
           format_real(r.signal_coord1) + ',' + format_real(r.signal_coord2) + '\n';
  }
  return out;
}

void write_xor_csv(const std::vector<XorStepRow>& rows, const std::filesystem::path& path) {
  write_text_file(path, xor_csv_string(rows));
}

std::string sweep_aggregate_csv_string(const std::vector<SweepAggregate>& rows) {
  std::string out = "d,seeds,reached,mean_steps,mean_steps_reached,log2_ceiling\n";
  for (const SweepAggregate& r : rows) {
    out += std::to_string(r.d) + ',' + std::to_string(r.seeds) + ',' + std::to_string(r.reached) +
           ',' + format_real(r.mean_steps) + ',' + format_real(r.mean_steps_reached) + ',' +
           std::to_string(r.log2_ceiling) + '\n';
  }
  return out;
}

void write_sweep_aggregate_csv(const std::vector<SweepAggregate>& rows,
                               const std::filesystem::path& path) {
  write_text_file(path, sweep_aggregate_csv_string(rows));
}

RunMetrics read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metrics CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("metrics CSV has no header: " + path.string());
  const std::vector<std::string> header = split(line);
  std::array<std::size_t, kColumns.size()> index{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    std::size_t k = 0;
    while (k < header.size() && header[k] != kColumns[c]) ++k;
    if (k == header.size()) {
      throw ConfigError(std::string("metrics CSV lacks column '") + kColumns[c] + "': " +
                        path.string());
    }
    index[c] = k;
  }

  RunMetrics metrics;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw ConfigError("wrong cell count at " + path.string() + ":" + std::to_string(line_no));
    }
    auto real = [&](std::size_t c) { return parse_real(cells[index[c]], path, line_no); };
    RunRecord r;
    const double iter = real(0);
    if (!(iter >= 0.0) || iter != std::floor(iter)) {
      throw ConfigError("bad iter at " + path.string() + ":" + std::to_string(line_no));
    }
    r.iter = std::size_t(iter);
    r.train_loss = real(1);
    r.test_loss = real(2);
    r.gen_gap = real(3);
    r.dist_from_init = real(4);
    r.grad_norm = real(5);
    r.cum_train_loss = real(6);
    r.eta = real(7);
    const std::string& flag = cells[index[8]];
    if (flag != "0" && flag != "1") {
      throw ConfigError("descent_violation must be 0 or 1 at " + path.string() + ":" +
                        std::to_string(line_no));
    }
    r.descent_violation = flag == "1";
    metrics.records.push_back(r);
  }
  return metrics;
}

}  // namespace gbl

// CSV emission, JSON metadata, stable config hashing.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hwflow/common.hpp"

namespace hwflow {

using json = nlohmann::json;

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    require(out_.good(), "CsvWriter: cannot open output file");
  }

  // Optional single metadata line, written before the header as "# <json>".
  void meta(const json& j) { out_ << "# " << j.dump() << "\n"; }

  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  void row_values(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << format_double(vals[i]);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

// FNV-1a over the canonical (sorted-key, compact) JSON dump.
inline std::uint64_t config_hash(const json& j) {
  const std::string dump = j.dump();  // nlohmann objects iterate in sorted key order
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  require(out.good(), "cannot open output file");
  out << j.dump(2) << "\n";
}

}  // namespace hwflow

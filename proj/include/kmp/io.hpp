#pragma once

// CSV tables with round-trip number formatting, SHA-256 content hashes and the
// JSON sidecar written next to every output table.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

namespace kmp {

inline constexpr const char* kVersion = "1.0.0";

/// 17 significant digits, shortest of fixed/scientific; nan and inf spelled out.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf;
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), r.ptr);
}

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return cells_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return cells_.at(i); }

  /// Appends a row; numbers are formatted with format_number.
  template <class... T>
  void add(const T&... values) {
    std::vector<std::string> r;
    (r.push_back(cell(values)), ...);
    if (r.size() != columns_.size())
      throw std::invalid_argument("row has " + std::to_string(r.size()) + " cells, table has " +
                                  std::to_string(columns_.size()) + " columns");
    cells_.push_back(std::move(r));
  }

  std::string to_csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ',';
        out += r[i];
      }
      out += '\n';
    };
    line(columns_);
    for (const auto& r : cells_) line(r);
    return out;
  }

 private:
  static std::string cell(const std::string& s) {
    if (s.find_first_of(",\"\n") != std::string::npos) throw std::invalid_argument("CSV cell needs quoting: " + s);
    return s;
  }
  static std::string cell(const char* s) { return cell(std::string(s)); }
  static std::string cell(double v) { return format_number(v); }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> cells_;
};

/// Lowercase hex SHA-256 digest.
inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct OutputPaths {
  std::string csv;
  std::string meta;
};

inline OutputPaths output_paths(const std::string& stem) { return {stem + ".csv", stem + ".meta.json"}; }

/// Writes {stem}.csv and {stem}.meta.json; the sidecar carries `meta` plus
/// the file name, digest and column list of the CSV.
inline OutputPaths write_table(const std::string& stem, const Table& table, nlohmann::json meta) {
  const auto paths = output_paths(stem);
  const std::string csv = table.to_csv();
  write_file(paths.csv, csv);
  const auto slash = paths.csv.find_last_of('/');
  meta["csv"] = {{"file", slash == std::string::npos ? paths.csv : paths.csv.substr(slash + 1)},
                 {"sha256", sha256_hex(csv)},
                 {"rows", table.rows()},
                 {"columns", table.columns()}};
  write_file(paths.meta, meta.dump(2) + "\n");
  return paths;
}

}  // namespace kmp

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace refnet {

// Minimal CSV support for the pipeline's flat, unquoted schemas.

inline std::vector<std::string> split_csv_line(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number of each row in the source file (header + comments skipped).
  std::vector<std::size_t> line_numbers;
};

// Reads a header-first CSV. Lines starting with '#' are provenance comments
// and are skipped. Rows keep ragged widths; validation is the caller's job.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    if (!have_header) {
      t.header = split_csv_line(line);
      have_header = true;
      continue;
    }
    t.rows.push_back(split_csv_line(line));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw std::runtime_error("empty csv (no header): " + path);
  return t;
}

// Shortest decimal form that round-trips the double. Deterministic for a
// given value, and prints integers without a trailing ".0".
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  return buf;
}

// Stamp carried into every artifact: config digest + root seed.
struct Provenance {
  std::uint64_t digest = 0;
  std::uint64_t seed = 0;
  bool present = false;

  Provenance() = default;
  Provenance(std::uint64_t d, std::uint64_t s) : digest(d), seed(s), present(true) {}

  std::string comment_line() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "# digest=%016llx seed=%llu",
                  static_cast<unsigned long long>(digest), static_cast<unsigned long long>(seed));
    return buf;
  }
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header,
            const Provenance& prov = {})
      : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write file: " + path);
    if (prov.present) out_ << prov.comment_line() << "\n";
    write_fields(header);
  }

  void row(const std::vector<std::string>& fields) { write_fields(fields); }

  static std::string num(double v) { return format_double(v); }
  template <typename T>
    requires std::is_integral_v<T>
  static std::string num(T v) {
    return std::to_string(v);
  }

 private:
  void write_fields(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
};

}  // namespace refnet

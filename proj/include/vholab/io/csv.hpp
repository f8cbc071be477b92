#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vholab/errors.hpp"

namespace vholab {

/// Shortest round-trip decimal form of a double (locale independent, stable
/// across runs, parses back to the identical bit pattern).
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

/// Row-oriented CSV writer with a fixed header.  All numeric output goes
/// through format_double / integer to_chars so that identical inputs produce
/// byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw DataError("cannot open for writing: " + path);
    std::string line;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) line += ',';
      line += header[i];
    }
    line += '\n';
    out_ << line;
  }

  CsvWriter& field(double v) { return raw(format_double(v)); }
  CsvWriter& field(int v) { return raw(std::to_string(v)); }
  CsvWriter& field(std::int64_t v) { return raw(std::to_string(v)); }
  CsvWriter& field(std::size_t v) { return raw(std::to_string(v)); }
  CsvWriter& field(const std::string& v) { return raw(v); }

  void end_row() {
    require(count_ == columns_, "csv row has wrong number of fields");
    out_ << row_ << '\n';
    row_.clear();
    count_ = 0;
  }

  void flush() { out_.flush(); }

 private:
  CsvWriter& raw(const std::string& s) {
    if (count_) row_ += ',';
    row_ += s;
    ++count_;
    return *this;
  }

  std::ofstream out_;
  std::size_t columns_;
  std::string row_;
  std::size_t count_ = 0;
};

}  // namespace vholab

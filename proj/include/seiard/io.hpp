#ifndef SEIARD_IO_HPP
#define SEIARD_IO_HPP

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace seiard::io {

/// Round-trip decimal form of a double ("%.17g"); non-finite values as inf/-inf/nan.
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Non-finite doubles are not valid JSON numbers; they become strings.
inline nlohmann::json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header)
      : CsvWriter(path, std::vector<std::string>(header)) {}

  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row_strings(header);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out_ << ',';
      out_ << cells[k];
    }
    out_ << '\n';
  }

  /// Leading text cells followed by numeric cells.
  void row(const std::vector<std::string>& text, const std::vector<double>& values) {
    std::vector<std::string> cells = text;
    for (double v : values) cells.push_back(num(v));
    row_strings(cells);
  }

  void row(const std::vector<double>& values) { row({}, values); }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace seiard::io

#endif  // SEIARD_IO_HPP

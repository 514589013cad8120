#pragma once

#include <concepts>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace nslab {

/// Shortest round-trip text is not needed; every real is written with 17
/// significant digits so files compare byte-for-byte across runs.
std::string format_real(double x);

/// Writes a fixed header once, then rows of matching width.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> r;
    r.reserve(sizeof...(cells));
    (r.push_back(cell(cells)), ...);
    write(r);
  }

  void write(const std::vector<std::string>& cells);

 private:
  static std::string cell(double x) { return format_real(x); }
  static std::string cell(float x) { return format_real(x); }
  static std::string cell(bool x) { return x ? "1" : "0"; }
  static std::string cell(std::string_view s) { return quote(s); }
  static std::string cell(const std::string& s) { return quote(s); }
  static std::string cell(const char* s) { return quote(s); }
  template <std::integral I>
    requires(!std::same_as<I, bool>)
  static std::string cell(I x) {
    return std::to_string(x);
  }
  static std::string quote(std::string_view s);

  std::ostream& out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws InvalidArgument if absent.
  std::size_t column(std::string_view name) const;
};

/// Minimal reader for files written by CsvWriter (quoted cells supported).
CsvTable read_csv(std::istream& in);

}  // namespace nslab

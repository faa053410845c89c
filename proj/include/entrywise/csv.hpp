#pragma once

#include <cstdint>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

namespace entrywise {

/// Builds CSV text row by row. Doubles are written with 17 significant digits
/// so that parsing them back gives the same bits.
class CsvWriter {
 public:
  explicit CsvWriter(std::string_view header) {
    out_.imbue(std::locale::classic());
    out_ << std::setprecision(std::numeric_limits<double>::max_digits10);
    out_ << header << '\n';
  }

  template <typename... Fields>
  CsvWriter& row(const Fields&... fields) {
    bool first = true;
    (put(fields, first), ...);
    out_ << '\n';
    return *this;
  }

  std::string str() const { return out_.str(); }

 private:
  template <typename T>
  void put(const T& value, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::is_same_v<T, bool>) {
      out_ << (value ? 1 : 0);
    } else {
      out_ << value;
    }
  }

  std::ostringstream out_;
};

/// 17-significant-digit rendering of a double.
inline std::string format_double(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

}  // namespace entrywise

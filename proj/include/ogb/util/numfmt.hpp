#pragma once

#include <cfenv>
#include <cmath>
#include <cstdio>
#include <string>

// Rounding and number formatting used by the report renderer and the
// line-delimited result files.
namespace ogb::numfmt {

// Round to `places` decimal places, ties to even (the default FP rounding
// mode, which std::nearbyint honors).
inline double round_decimals(double x, int places) {
  if (!std::isfinite(x)) return x;
  const double scale = std::pow(10.0, places);
  return std::nearbyint(x * scale) / scale;
}

// Round to `digits` significant digits, ties to even.
inline double round_significant(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const int exp = static_cast<int>(std::floor(std::log10(std::fabs(x))));
  return round_decimals(x, digits - 1 - exp);
}

// Fixed-point text with exactly `places` decimals (value pre-rounded).
inline std::string fixed(double x, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, round_decimals(x, places));
  return buf;
}

// Up-to-`digits` significant digits, trailing zeros trimmed (%g style).
inline std::string significant(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, round_significant(x, digits));
  return buf;
}

// Exact decimal text for a double: 17 significant digits, scientific form.
// Round-trips bit-exactly through strtod.
inline std::string exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.16e", x);
  return buf;
}

}  // namespace ogb::numfmt

#pragma once

// Directional valley detectors built on a Sobel-like comparison of each pixel
// with its neighbours at distance d.
//
//   shadow, rows : P(i-d,j) - P(i,j) > t  and  P(i+d,j) - P(i,j) > t
//   shadow, cols : P(i,j-d) - P(i,j) > t  and  P(i,j+d) - P(i,j) > t
//   light        : same with the subtraction reversed
//   both         : rows and cols must hold together
//
// Pixels closer than d to any border are always 0.

#include <stdexcept>
#include <string>
#include <string_view>

#include "thermo/core.hpp"

namespace thermo {

enum class FilterAxis { rows, cols, both };
enum class Polarity { shadow, light };

inline FilterAxis parse_axis(std::string_view s) {
  if (s == "rows") return FilterAxis::rows;
  if (s == "cols") return FilterAxis::cols;
  if (s == "both") return FilterAxis::both;
  throw Error(ErrorCode::InvalidArgument, "axis must be rows|cols|both");
}
inline Polarity parse_polarity(std::string_view s) {
  if (s == "shadow") return Polarity::shadow;
  if (s == "light") return Polarity::light;
  throw Error(ErrorCode::InvalidArgument, "polarity must be shadow|light");
}
inline const char* to_string(FilterAxis a) {
  switch (a) {
    case FilterAxis::rows: return "rows";
    case FilterAxis::cols: return "cols";
    case FilterAxis::both: return "both";
  }
  return "?";
}
inline const char* to_string(Polarity p) { return p == Polarity::shadow ? "shadow" : "light"; }

struct FilterParams {
  int d = 4;
  int t = 40;
  FilterAxis axis = FilterAxis::cols;
  Polarity polarity = Polarity::shadow;

  void validate() const {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "filter distance d must be >= 1");
    if (t < -255 || t > 255) throw Error(ErrorCode::InvalidArgument, "filter threshold t must lie in [-255,255]");
  }
};

inline BinaryMask directional_valley(const ThermalImage& img, const FilterParams& params) {
  params.validate();
  const int d = params.d, t = params.t;
  const int h = img.height(), w = img.width();
  BinaryMask out(w, h);
  if (h <= 2 * d || w <= 2 * d) return out;

  const int sign = params.polarity == Polarity::shadow ? 1 : -1;
  const bool use_rows = params.axis != FilterAxis::cols;
  const bool use_cols = params.axis != FilterAxis::rows;
  const auto& px = img.pixels();

  for (int i = d; i < h - d; ++i) {
    const std::uint8_t* up = px.row(i - d);
    const std::uint8_t* mid = px.row(i);
    const std::uint8_t* down = px.row(i + d);
    for (int j = d; j < w - d; ++j) {
      const int c = mid[j];
      bool hit = true;
      if (use_rows) hit = sign * (up[j] - c) > t && sign * (down[j] - c) > t;
      if (hit && use_cols) hit = sign * (mid[j - d] - c) > t && sign * (mid[j + d] - c) > t;
      if (hit) out.set(i, j, true);
    }
  }
  return out;
}

inline BinaryMask shadow_sobel(const ThermalImage& img, int d, int t) {
  return directional_valley(img, {d, t, FilterAxis::both, Polarity::shadow});
}

inline BinaryMask light_sobel(const ThermalImage& img, int d, int t) {
  return directional_valley(img, {d, t, FilterAxis::both, Polarity::light});
}

}  // namespace thermo

#pragma once

// Hot-region segmentation and the four-feature descriptor of a neck ROI.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "thermo/core.hpp"

namespace thermo {

inline constexpr int kDefaultCutoff = 209;

struct FeatureVector {
  double mean_norm = 0.0;  // mean intensity of the hot region / 255
  double std_raw = 0.0;    // population std of the hot region, 0..255 scale
  double max_norm = 0.0;   // max intensity of the hot region / 255
  double asymmetry = 0.0;  // mirror dissimilarity of the whole ROI, [0,1]

  static constexpr int size = 4;

  double operator[](int k) const {
    switch (k) {
      case 0: return mean_norm;
      case 1: return std_raw;
      case 2: return max_norm;
      default: return asymmetry;
    }
  }
  double& operator[](int k) {
    switch (k) {
      case 0: return mean_norm;
      case 1: return std_raw;
      case 2: return max_norm;
      default: return asymmetry;
    }
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline constexpr const char* kFeatureNames[FeatureVector::size] = {"mean_norm", "std_raw", "max_norm", "asymmetry"};

/// White where intensity >= cutoff.
inline BinaryMask threshold(const ThermalImage& img, int cutoff = kDefaultCutoff) {
  if (cutoff < 0 || cutoff > 255) throw Error(ErrorCode::InvalidArgument, "cutoff must lie in [0,255]");
  BinaryMask out(img.width(), img.height());
  for (int i = 0; i < img.height(); ++i)
    for (int j = 0; j < img.width(); ++j) out.set(i, j, img(i, j) >= cutoff);
  return out;
}

struct SegmentStats {
  double mean_norm = 0.0;
  double std_raw = 0.0;
  double max_norm = 0.0;
};

inline SegmentStats segment_stats(const ThermalImage& img, const BinaryMask& mask) {
  if (img.width() != mask.width() || img.height() != mask.height())
    throw Error(ErrorCode::DimensionMismatch, "mask and image differ in size");
  std::int64_t n = 0, sum = 0, sum_sq = 0;
  int peak = 0;
  for (int i = 0; i < img.height(); ++i)
    for (int j = 0; j < img.width(); ++j) {
      if (!mask(i, j)) continue;
      const int v = img(i, j);
      ++n;
      sum += v;
      sum_sq += static_cast<std::int64_t>(v) * v;
      peak = std::max(peak, v);
    }
  if (n == 0) throw Error(ErrorCode::EmptySegment, "no pixel reaches the cutoff");
  // exact integer variance: (n*sum_sq - sum^2) / n^2
  const double var = static_cast<double>(n * sum_sq - sum * sum) / (static_cast<double>(n) * static_cast<double>(n));
  return {static_cast<double>(sum) / static_cast<double>(n) / 255.0, std::sqrt(std::max(0.0, var)), peak / 255.0};
}

/// Mean over all pixels of the smallest normalised difference between a pixel
/// and the 3x3 neighbourhood of its mirror about the vertical axis (mirror
/// column n-1-j). Neighbour indices are clamped into the ROI.
inline double asymmetry(const ThermalImage& roi) {
  const int m = roi.height(), n = roi.width();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "asymmetry needs an ROI at least 2 pixels wide");
  const auto& px = roi.pixels();
  // Integer per-row sums keep the result independent of summation order.
  std::int64_t total = 0;
  for (int i = 0; i < m; ++i) {
    const int r0 = std::max(i - 1, 0), r2 = std::min(i + 1, m - 1);
    for (int j = 0; j < n; ++j) {
      const int mj = n - 1 - j;
      const int c0 = std::max(mj - 1, 0), c2 = std::min(mj + 1, n - 1);
      const int v = px(i, j);
      int best = 255;
      for (int r : {r0, i, r2})
        for (int c : {c0, mj, c2}) best = std::min(best, std::abs(v - int{px(r, c)}));
      total += best;
    }
  }
  return static_cast<double>(total) / 255.0 / (static_cast<double>(m) * static_cast<double>(n));
}

/// Crop to `roi`, threshold at `cutoff`, take segment statistics on the hot
/// region and asymmetry on the whole cropped ROI.
inline FeatureVector extract_features(const ThermalImage& img, const Rect& roi, int cutoff = kDefaultCutoff) {
  const ThermalImage cropped = crop(img, roi);
  const auto stats = segment_stats(cropped, threshold(cropped, cutoff));
  return {stats.mean_norm, stats.std_raw, stats.max_norm, asymmetry(cropped)};
}

}  // namespace thermo

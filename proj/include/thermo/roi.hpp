#pragma once

// Sliding-rectangle ROI search over an edge mask.
//
// The ROI is the window holding the most white pixels. Small dense clusters
// (e.g. a chin marker) are first located with a reduced window and erased,
// then the full-size window is scanned from the bottom row upwards so that
// ties favour the lowest position.

#include <cstdint>
#include <string_view>
#include <vector>

#include "thermo/core.hpp"
#include "thermo/edge_filter.hpp"

namespace thermo {

enum class ScanOrder { top_down, bottom_up };

inline ScanOrder parse_scan_order(std::string_view s) {
  if (s == "top_down" || s == "top-down") return ScanOrder::top_down;
  if (s == "bottom_up" || s == "bottom-up") return ScanOrder::bottom_up;
  throw Error(ErrorCode::InvalidArgument, "scan must be top_down|bottom_up");
}

struct RoiParams {
  int roi_w = 330;
  int roi_h = 310;
  int residual_w = 110;
  int residual_h = 110;
  int residual_passes = 1;
  ScanOrder scan = ScanOrder::bottom_up;
  int stride = 1;

  void validate() const {
    if (roi_w < 1 || roi_h < 1 || residual_w < 1 || residual_h < 1)
      throw Error(ErrorCode::InvalidArgument, "ROI and residual dimensions must be >= 1");
    if (residual_passes < 0) throw Error(ErrorCode::InvalidArgument, "residual_passes must be >= 0");
    if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  }
};

// Inclusive prefix sums with a zero guard row/column.
class SummedAreaTable {
 public:
  explicit SummedAreaTable(const BinaryMask& mask)
      : width_(mask.width()), height_(mask.height()),
        sums_(static_cast<std::size_t>(width_ + 1) * static_cast<std::size_t>(height_ + 1), 0) {
    for (int i = 0; i < height_; ++i) {
      const std::uint8_t* src = mask.row(i);
      std::int64_t running = 0;
      for (int j = 0; j < width_; ++j) {
        running += src[j];
        at(i + 1, j + 1) = at(i, j + 1) + running;
      }
    }
  }

  std::int64_t sum(const Rect& r) const {
    if (!r.fits(width_, height_)) throw Error(ErrorCode::OutOfBounds, "rect outside mask");
    return at(r.bottom(), r.right()) - at(r.y, r.right()) - at(r.bottom(), r.x) + at(r.y, r.x);
  }

 private:
  std::int64_t& at(int i, int j) { return sums_[static_cast<std::size_t>(i) * (width_ + 1) + j]; }
  std::int64_t at(int i, int j) const { return sums_[static_cast<std::size_t>(i) * (width_ + 1) + j]; }

  int width_;
  int height_;
  std::vector<std::int64_t> sums_;
};

inline std::int64_t count_white(const BinaryMask& mask, const Rect& rect) {
  if (!rect.fits(mask.width(), mask.height())) throw Error(ErrorCode::OutOfBounds, "rect outside mask");
  std::int64_t n = 0;
  for (int i = rect.y; i < rect.bottom(); ++i) {
    const std::uint8_t* r = mask.row(i);
    for (int j = rect.x; j < rect.right(); ++j) n += r[j];
  }
  return n;
}

/// Candidate top-left rows in scan order. Top-down starts at row 0;
/// bottom-up starts at the lowest in-bounds row and walks up by `stride`.
inline std::vector<int> candidate_rows(int mask_h, int h, ScanOrder scan, int stride) {
  std::vector<int> ys;
  const int last = mask_h - h;
  if (scan == ScanOrder::top_down)
    for (int y = 0; y <= last; y += stride) ys.push_back(y);
  else
    for (int y = last; y >= 0; y -= stride) ys.push_back(y);
  return ys;
}

/// Window with the highest white count; ties go to the first candidate in
/// scan order (rows per `scan`, columns left to right).
inline Rect find_roi(const BinaryMask& mask, int w, int h, ScanOrder scan = ScanOrder::top_down, int stride = 1) {
  if (w < 1 || h < 1 || stride < 1) throw Error(ErrorCode::InvalidArgument, "window and stride must be >= 1");
  if (w > mask.width() || h > mask.height())
    throw Error(ErrorCode::RectLargerThanImage, "search window larger than mask");
  const SummedAreaTable sat(mask);
  Rect best{0, 0, w, h};
  std::int64_t best_count = -1;
  for (int y : candidate_rows(mask.height(), h, scan, stride)) {
    for (int x = 0; x + w <= mask.width(); x += stride) {
      const Rect r{x, y, w, h};
      const auto n = sat.sum(r);
      if (n > best_count) {
        best_count = n;
        best = r;
      }
    }
  }
  return best;
}

inline BinaryMask remove_residuals(const BinaryMask& mask, int residual_w, int residual_h, int passes) {
  if (passes < 0) throw Error(ErrorCode::InvalidArgument, "passes must be >= 0");
  BinaryMask out = mask;
  for (int p = 0; p < passes; ++p) {
    const Rect r = find_roi(out, residual_w, residual_h, ScanOrder::top_down, 1);
    for (int i = r.y; i < r.bottom(); ++i)
      for (int j = r.x; j < r.right(); ++j) out.set(i, j, false);
  }
  return out;
}

struct RoiDetection {
  Rect roi;
  BinaryMask edges;    // raw filter output
  BinaryMask cleaned;  // after residual removal
};

inline RoiDetection detect_thyroid_roi_detailed(const ThermalImage& img, const FilterParams& fp,
                                                const RoiParams& rp) {
  fp.validate();
  rp.validate();
  if (img.width() < rp.roi_w || img.height() < rp.roi_h)
    throw Error(ErrorCode::RectLargerThanImage, "image smaller than the ROI window");
  RoiDetection det;
  det.edges = directional_valley(img, fp);
  det.cleaned = remove_residuals(det.edges, rp.residual_w, rp.residual_h, rp.residual_passes);
  det.roi = find_roi(det.cleaned, rp.roi_w, rp.roi_h, rp.scan, rp.stride);
  return det;
}

inline Rect detect_thyroid_roi(const ThermalImage& img, const FilterParams& fp, const RoiParams& rp) {
  return detect_thyroid_roi_detailed(img, fp, rp).roi;
}

/// Copy of `img` with the one-pixel border of `r` painted at `value`.
inline ThermalImage draw_rect(const ThermalImage& img, const Rect& r, std::uint8_t value = 255) {
  if (!r.fits(img.width(), img.height())) throw Error(ErrorCode::OutOfBounds, "overlay rect outside image");
  ThermalImage out = img;
  for (int j = r.x; j < r.right(); ++j) {
    out(r.y, j) = value;
    out(r.bottom() - 1, j) = value;
  }
  for (int i = r.y; i < r.bottom(); ++i) {
    out(i, r.x) = value;
    out(i, r.right() - 1) = value;
  }
  return out;
}

}  // namespace thermo

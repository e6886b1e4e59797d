#pragma once

// Image, mask and rectangle types shared by every stage.
//
// Coordinates: (i, j) = (row, column), 0-based, origin at the top-left
// pixel. Rect uses (x, y) = (column, row) of its top-left corner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thermo {

enum class ErrorCode {
  UnreadableFile,
  UnsupportedFormat,
  RaggedRows,
  NonNumericCell,
  NoCalibration,
  OutOfBounds,
  InvalidArgument,
  RectLargerThanImage,
  EmptySearchSpace,
  DegenerateConfiguration,
  DimensionMismatch,
  EmptySegment,
  EmptyGallery,
  GalleryTooSmall,
  SpecOutOfBounds,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::NoCalibration: return "NoCalibration";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RectLargerThanImage: return "RectLargerThanImage";
    case ErrorCode::EmptySearchSpace: return "EmptySearchSpace";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::EmptyGallery: return "EmptyGallery";
    case ErrorCode::GalleryTooSmall: return "GalleryTooSmall";
    case ErrorCode::SpecOutOfBounds: return "SpecOutOfBounds";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Dense row-major 2-D grid.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1)
      throw Error(ErrorCode::InvalidArgument, "grid dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Grid(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1)
      throw Error(ErrorCode::InvalidArgument, "grid dimensions must be >= 1");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw Error(ErrorCode::DimensionMismatch, "pixel count != width * height");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int i, int j) const noexcept { return i >= 0 && j >= 0 && i < height_ && j < width_; }

  T& operator()(int i, int j) noexcept { return data_[index(i, j)]; }
  const T& operator()(int i, int j) const noexcept { return data_[index(i, j)]; }

  T* row(int i) noexcept { return data_.data() + index(i, 0); }
  const T* row(int i) const noexcept { return data_.data() + index(i, 0); }

  const std::vector<T>& data() const noexcept { return data_; }
  std::vector<T>& data() noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(j);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rect {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  int right() const noexcept { return x + w; }
  int bottom() const noexcept { return y + h; }

  bool fits(int width, int height) const noexcept {
    return w >= 1 && h >= 1 && x >= 0 && y >= 0 && x + w <= width && y + h <= height;
  }
  bool contains(const Rect& inner) const noexcept {
    return inner.x >= x && inner.y >= y && inner.right() <= right() && inner.bottom() <= bottom();
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Calibration {
  double t_min = 0.0;
  double t_max = 1.0;

  friend bool operator==(const Calibration&, const Calibration&) = default;
};

struct AcquisitionMetadata {
  double room_temp = 0.0;           // °C
  double rel_humidity = 0.0;        // percent
  int frame_index = 0;
  double capture_interval = 15.0;   // seconds
  double distance_to_camera = 0.0;  // meters

  void validate() const {
    if (!(rel_humidity >= 0.0 && rel_humidity <= 100.0))
      throw Error(ErrorCode::InvalidArgument, "rel_humidity must lie in [0,100]");
    if (!(capture_interval > 0.0))
      throw Error(ErrorCode::InvalidArgument, "capture_interval must be > 0");
  }

  friend bool operator==(const AcquisitionMetadata&, const AcquisitionMetadata&) = default;
};

class ThermalImage {
 public:
  ThermalImage() = default;
  ThermalImage(int width, int height, std::uint8_t fill = 0) : pixels_(width, height, fill) {}
  explicit ThermalImage(Grid<std::uint8_t> pixels, std::optional<Calibration> calib = std::nullopt,
                        std::optional<AcquisitionMetadata> meta = std::nullopt)
      : pixels_(std::move(pixels)), calib_(calib), meta_(std::move(meta)) {
    set_calibration(calib_);
    if (meta_) meta_->validate();
  }

  int width() const noexcept { return pixels_.width(); }
  int height() const noexcept { return pixels_.height(); }
  Rect bounds() const noexcept { return {0, 0, width(), height()}; }

  std::uint8_t operator()(int i, int j) const noexcept { return pixels_(i, j); }
  std::uint8_t& operator()(int i, int j) noexcept { return pixels_(i, j); }

  const Grid<std::uint8_t>& pixels() const noexcept { return pixels_; }
  Grid<std::uint8_t>& pixels() noexcept { return pixels_; }

  const std::optional<Calibration>& calibration() const noexcept { return calib_; }
  void set_calibration(std::optional<Calibration> calib) {
    if (calib && !(calib->t_min < calib->t_max))
      throw Error(ErrorCode::InvalidArgument, "calibration requires t_min < t_max");
    calib_ = calib;
  }

  const std::optional<AcquisitionMetadata>& metadata() const noexcept { return meta_; }
  void set_metadata(std::optional<AcquisitionMetadata> meta) {
    if (meta) meta->validate();
    meta_ = std::move(meta);
  }

  friend bool operator==(const ThermalImage&, const ThermalImage&) = default;

 private:
  Grid<std::uint8_t> pixels_;
  std::optional<Calibration> calib_;
  std::optional<AcquisitionMetadata> meta_;
};

// Values are 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false) : bits_(width, height, fill ? 1 : 0) {}

  int width() const noexcept { return bits_.width(); }
  int height() const noexcept { return bits_.height(); }
  Rect bounds() const noexcept { return {0, 0, width(), height()}; }

  bool operator()(int i, int j) const noexcept { return bits_(i, j) != 0; }
  void set(int i, int j, bool v) noexcept { bits_(i, j) = v ? 1 : 0; }

  const std::uint8_t* row(int i) const noexcept { return bits_.row(i); }
  const Grid<std::uint8_t>& bits() const noexcept { return bits_; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.data().begin(), bits_.data().end(), std::uint8_t{1}));
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Grid<std::uint8_t> bits_;
};

inline std::uint8_t clamp_round_intensity(double v) {
  // round half up
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

inline double intensity_to_temperature(const ThermalImage& img, int i, int j) {
  if (!img.calibration()) throw Error(ErrorCode::NoCalibration, "image carries no temperature calibration");
  if (!img.pixels().contains(i, j)) throw Error(ErrorCode::OutOfBounds, "pixel index outside image");
  const auto& c = *img.calibration();
  return c.t_min + (static_cast<double>(img(i, j)) / 255.0) * (c.t_max - c.t_min);
}

inline std::uint8_t temperature_to_intensity(double t, const Calibration& c) {
  return clamp_round_intensity(255.0 * (t - c.t_min) / (c.t_max - c.t_min));
}

template <typename T>
Grid<T> crop(const Grid<T>& src, const Rect& r) {
  if (!r.fits(src.width(), src.height())) throw Error(ErrorCode::OutOfBounds, "crop rectangle exceeds image");
  Grid<T> out(r.w, r.h);
  for (int i = 0; i < r.h; ++i) std::copy_n(src.row(r.y + i) + r.x, r.w, out.row(i));
  return out;
}

inline ThermalImage crop(const ThermalImage& img, const Rect& r) {
  return ThermalImage(crop(img.pixels(), r), img.calibration(), img.metadata());
}

inline BinaryMask crop(const BinaryMask& mask, const Rect& r) {
  if (!r.fits(mask.width(), mask.height())) throw Error(ErrorCode::OutOfBounds, "crop rectangle exceeds mask");
  BinaryMask out(r.w, r.h);
  for (int i = 0; i < r.h; ++i)
    for (int j = 0; j < r.w; ++j) out.set(i, j, mask(r.y + i, r.x + j));
  return out;
}

inline ThermalImage invert(const ThermalImage& img) {
  ThermalImage out = img;
  for (auto& v : out.pixels().data()) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

inline ThermalImage mirror_horizontal(const ThermalImage& img) {
  ThermalImage out = img;
  const int n = img.width();
  for (int i = 0; i < img.height(); ++i)
    for (int j = 0; j < n; ++j) out(i, j) = img(i, n - 1 - j);
  return out;
}

// 1 -> 255, 0 -> 0
inline ThermalImage mask_to_image(const BinaryMask& mask) {
  ThermalImage out(mask.width(), mask.height());
  for (int i = 0; i < mask.height(); ++i)
    for (int j = 0; j < mask.width(); ++j) out(i, j) = mask(i, j) ? 255 : 0;
  return out;
}

// Nonzero -> 1.
inline BinaryMask image_to_mask(const ThermalImage& img) {
  BinaryMask out(img.width(), img.height());
  for (int i = 0; i < img.height(); ++i)
    for (int j = 0; j < img.width(); ++j) out.set(i, j, img(i, j) != 0);
  return out;
}

}  // namespace thermo

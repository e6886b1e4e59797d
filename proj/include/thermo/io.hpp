#pragma once

// Raster, temperature-matrix, sidecar and keypoint file I/O.
//
// Rasters: 8-bit single-channel PGM (P2 ASCII / P5 binary) and grayscale PNG.
// Sidecar: `<stem>.json` next to the raster, with any of the keys
//   room_temp, rel_humidity, frame_index, capture_interval,
//   distance_to_camera, t_min, t_max.
// Calibration is attached only when both t_min and t_max are present;
// metadata only when at least one acquisition key is present.

#include <png.h>

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermo/core.hpp"
#include "thermo/geometry.hpp"

namespace thermo::io {

namespace fs = std::filesystem;

namespace detail {

inline std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

// PNM header token reader; skips whitespace and '#' comments.
class PnmTokenizer {
 public:
  explicit PnmTokenizer(const std::string& bytes) : bytes_(bytes) {}

  std::string next() {
    skip_space_and_comments();
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) && bytes_[pos_] != '#')
      tok.push_back(bytes_[pos_++]);
    if (tok.empty()) throw Error(ErrorCode::UnsupportedFormat, "truncated PGM header");
    return tok;
  }

  long next_int() {
    const auto tok = next();
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw Error(ErrorCode::UnsupportedFormat, "non-integer PGM token '" + tok + "'");
    return v;
  }

  // Binary payload begins after exactly one whitespace byte following maxval.
  std::size_t payload_offset() const { return pos_ + 1; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

inline Grid<std::uint8_t> read_pgm(const std::string& bytes) {
  PnmTokenizer tok(bytes);
  const auto magic = tok.next();
  if (magic == "P3" || magic == "P6")
    throw Error(ErrorCode::UnsupportedFormat, "multi-channel PNM is not supported");
  if (magic != "P2" && magic != "P5") throw Error(ErrorCode::UnsupportedFormat, "not a graymap: " + magic);
  const long w = tok.next_int(), h = tok.next_int(), maxval = tok.next_int();
  if (w < 1 || h < 1) throw Error(ErrorCode::UnsupportedFormat, "invalid PGM dimensions");
  if (maxval < 1 || maxval > 255) throw Error(ErrorCode::UnsupportedFormat, "PGM depth above 8 bits");
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<std::uint8_t> px(n);
  if (magic == "P5") {
    const auto off = tok.payload_offset();
    if (bytes.size() < off + n) throw Error(ErrorCode::UnsupportedFormat, "truncated PGM payload");
    std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data()) + off, n, px.begin());
  } else {
    for (auto& v : px) {
      const long x = tok.next_int();
      if (x < 0 || x > maxval) throw Error(ErrorCode::UnsupportedFormat, "PGM sample exceeds maxval");
      v = static_cast<std::uint8_t>(x);
    }
  }
  return Grid<std::uint8_t>(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

inline Grid<std::uint8_t> read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw Error(ErrorCode::UnsupportedFormat, std::string("not a readable PNG: ") + image.message);
  const auto fmt = image.format;
  if (fmt & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_COLORMAP)) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, "PNG is not single-channel grayscale");
  }
  if (fmt & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, "PNG depth above 8 bits");
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr))
    throw Error(ErrorCode::UnsupportedFormat, std::string("PNG decode failed: ") + image.message);
  return Grid<std::uint8_t>(static_cast<int>(image.width), static_cast<int>(image.height), std::move(px));
}

inline bool is_png_path(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png";
}

}  // namespace detail

inline fs::path sidecar_path(const fs::path& image_path) {
  auto p = image_path;
  p.replace_extension(".json");
  return p;
}

inline void read_sidecar(const fs::path& path, ThermalImage& img) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::UnsupportedFormat, "malformed sidecar " + path.string() + ": " + e.what());
  }
  if (j.contains("t_min") && j.contains("t_max"))
    img.set_calibration(Calibration{j.at("t_min").get<double>(), j.at("t_max").get<double>()});
  static constexpr const char* keys[] = {"room_temp", "rel_humidity", "frame_index", "capture_interval",
                                         "distance_to_camera"};
  if (std::any_of(std::begin(keys), std::end(keys), [&](const char* k) { return j.contains(k); })) {
    AcquisitionMetadata m;
    m.room_temp = j.value("room_temp", m.room_temp);
    m.rel_humidity = j.value("rel_humidity", m.rel_humidity);
    m.frame_index = j.value("frame_index", m.frame_index);
    m.capture_interval = j.value("capture_interval", m.capture_interval);
    m.distance_to_camera = j.value("distance_to_camera", m.distance_to_camera);
    img.set_metadata(m);
  }
}

inline void write_sidecar(const fs::path& path, const ThermalImage& img) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (const auto& m = img.metadata()) {
    j["room_temp"] = m->room_temp;
    j["rel_humidity"] = m->rel_humidity;
    j["frame_index"] = m->frame_index;
    j["capture_interval"] = m->capture_interval;
    j["distance_to_camera"] = m->distance_to_camera;
  }
  if (const auto& c = img.calibration()) {
    j["t_min"] = c->t_min;
    j["t_max"] = c->t_max;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline ThermalImage load_image(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::UnreadableFile, "no such file " + path.string());
  Grid<std::uint8_t> px;
  const auto bytes = detail::read_file_bytes(path);
  static constexpr unsigned char png_sig[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(std::begin(png_sig), std::end(png_sig), bytes.begin(),
                                      [](unsigned char a, char b) { return a == static_cast<unsigned char>(b); })) {
    px = detail::read_png(path);
  } else {
    px = detail::read_pgm(bytes);
  }
  ThermalImage img(std::move(px));
  if (const auto side = sidecar_path(path); fs::is_regular_file(side)) read_sidecar(side, img);
  return img;
}

/// Writes PNG when the extension is .png, binary PGM otherwise. A sidecar is
/// written alongside when the image carries calibration or metadata.
inline void save_image(const ThermalImage& img, const fs::path& path) {
  if (detail::is_png_path(path)) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels().data().data(), 0, nullptr))
      throw Error(ErrorCode::UnreadableFile, std::string("PNG write failed: ") + image.message);
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels().data().data()),
              static_cast<std::streamsize>(img.pixels().size()));
  }
  if (img.calibration() || img.metadata()) write_sidecar(sidecar_path(path), img);
}

inline void save_mask(const BinaryMask& mask, const fs::path& path) { save_image(mask_to_image(mask), path); }

/// Comma-separated temperature matrix (°C), one row per line, no header.
/// intensity = round_half_up(255 (T - t_min) / (t_max - t_min)), clamped.
inline ThermalImage load_temperature_csv(const fs::path& path, double t_min, double t_max) {
  if (!(t_min < t_max)) throw Error(ErrorCode::InvalidArgument, "t_min must be < t_max");
  const auto text = detail::read_file_bytes(path);
  const Calibration calib{t_min, t_max};
  std::vector<std::uint8_t> px;
  int width = -1, height = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (detail::trim(line).empty()) continue;
    int cols = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const auto cell = rest.substr(0, comma);
      double t = 0.0;
      if (!detail::parse_double(cell, t))
        throw Error(ErrorCode::NonNumericCell,
                    "row " + std::to_string(height + 1) + ": '" + std::string(detail::trim(cell)) + "'");
      px.push_back(temperature_to_intensity(t, calib));
      ++cols;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (width < 0) width = cols;
    else if (cols != width)
      throw Error(ErrorCode::RaggedRows, "row " + std::to_string(height + 1) + " has " + std::to_string(cols) +
                                             " cells, expected " + std::to_string(width));
    ++height;
  }
  if (height == 0) throw Error(ErrorCode::UnsupportedFormat, "empty temperature matrix");
  return ThermalImage(Grid<std::uint8_t>(width, height, std::move(px)), calib);
}

/// One pair per line: "x_mov y_mov x_ref y_ref"; '#' starts a comment.
inline KeypointPairSet read_keypoints(const fs::path& path) {
  const auto text = detail::read_file_bytes(path);
  KeypointPairSet pairs;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string tok;
    double v[4];
    int n = 0;
    while (fields >> tok) {
      if (n == 4 || !detail::parse_double(tok, v[n]))
        throw Error(ErrorCode::UnsupportedFormat, path.string() + ":" + std::to_string(lineno) + ": bad keypoint line");
      ++n;
    }
    if (n != 4)
      throw Error(ErrorCode::UnsupportedFormat, path.string() + ":" + std::to_string(lineno) + ": expected 4 numbers");
    pairs.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  return pairs;
}

inline void write_keypoints(const KeypointPairSet& pairs, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  out << "# x_mov y_mov x_ref y_ref\n";
  out.precision(17);
  for (const auto& p : pairs)
    out << p.moving.x << ' ' << p.moving.y << ' ' << p.reference.x << ' ' << p.reference.y << '\n';
}

inline Rect parse_rect(std::string_view text) {
  std::istringstream in{std::string(text)};
  Rect r;
  if (!(in >> r.x >> r.y >> r.w >> r.h)) throw Error(ErrorCode::InvalidArgument, "rect must be 'x y w h'");
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::InvalidArgument, "trailing data after rect");
  if (r.w < 1 || r.h < 1) throw Error(ErrorCode::InvalidArgument, "rect width and height must be >= 1");
  return r;
}

inline std::string format_rect(const Rect& r) {
  return std::to_string(r.x) + ' ' + std::to_string(r.y) + ' ' + std::to_string(r.w) + ' ' + std::to_string(r.h);
}

}  // namespace thermo::io

#pragma once

// Phantom scenes shared by the unit, integration and acceptance suites.
//
// Neck scene (540x540): two 7-px dark bands mirrored about the vertical axis
// (columns [140,147) and [393,400), rows [150,420)) and a 30x30 outlined chin
// marker at rows [60,90). With the default valley filter (shadow, cols, d=4,
// t=40) each band yields a one-pixel line at columns 143 and 396 over rows
// [150,420), and the marker yields two 3-px lines. The scene leaves a wide
// margin around the detected ROI so that rigid jitter of a few degrees never
// pulls zero fill into it.

#include <cmath>
#include <filesystem>
#include <string>
#include <optional>
#include <random>
#include <vector>

#include "thermo/thermo.hpp"

namespace fixtures {

using namespace thermo;

inline constexpr int kLineColLeft = 143;
inline constexpr int kLineColRight = 396;
inline constexpr int kLineRowBegin = 150;
inline constexpr int kLineRowEnd = 420;  // exclusive

/// ROI expected from the default detector on the neck scene.
inline constexpr Rect kExpectedRoi{67, 150, 330, 310};

inline PhantomSpec neck_spec(bool with_marker = true) {
  PhantomSpec s;
  s.width = 540;
  s.height = 540;
  s.background = 200;
  s.band_intensity = 120;
  s.bands = {{140, 147, 150, 420}, {393, 400, 150, 420}};
  if (with_marker) s.marker = PhantomMarker{{255, 60, 30, 30}, 60, 3};
  return s;
}

inline PhantomSpec sick_spec(double col = 315.0, int peak = 255, double row = 320.0) {
  auto s = neck_spec();
  s.nodule = PhantomNodule{row, col, 45.0, 14.0, peak};
  return s;
}

inline PhantomSpec healthy_spec(int peak = 217) {
  auto s = neck_spec();
  s.nodule = PhantomNodule{320.0, 269.5, 45.0, 16.0, peak};
  return s;
}

/// Jitter list with frame 0 at identity and the rest uniform in
/// |theta| <= max_deg, |t| <= max_t.
inline std::vector<RigidTransform2D> random_jitter(std::size_t frames, double max_deg, double max_t,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> th(-deg_to_rad(max_deg), deg_to_rad(max_deg));
  std::uniform_real_distribution<double> tr(-max_t, max_t);
  std::vector<RigidTransform2D> out{RigidTransform2D::identity()};
  for (std::size_t k = 1; k < frames; ++k) {
    const double a = th(rng), x = tr(rng), y = tr(rng);
    out.emplace_back(a, x, y);
  }
  return out;
}

/// Feature record of frame 0 of `spec`, measured inside its detected ROI.
inline PatientRecord phantom_record(const PhantomSpec& spec, std::string id, Label label) {
  const auto img = generate_phantom(spec).front();
  const Rect roi = detect_thyroid_roi(img, FilterParams{}, RoiParams{});
  return {std::move(id), extract_features(img, roi), label};
}

/// Two sick records (off-centre nodules) and two healthy ones (faint,
/// centred nodules).
inline std::vector<PatientRecord> phantom_gallery() {
  return {phantom_record(sick_spec(315.0, 255), "S1", Label::sick),
          phantom_record(sick_spec(225.0, 245), "S2", Label::sick),
          phantom_record(healthy_spec(220), "H1", Label::healthy),
          phantom_record(healthy_spec(214), "H2", Label::healthy)};
}

/// `base` as a jittered, noisy multi-frame sequence.
inline PhantomSpec as_sequence(PhantomSpec base, std::size_t frames, double max_deg, double max_t,
                               std::uint64_t seed, double noise = 1.5) {
  base.jitter = random_jitter(frames, max_deg, max_t, seed);
  base.noise_sigma = noise;
  base.seed = seed;
  return base;
}

/// Writes `frames` as frame_NNN.pgm, the gallery as gallery.csv and a
/// pipeline config (small search window) into `dir`; returns the config path.
inline std::filesystem::path write_pipeline_case(const std::filesystem::path& dir,
                                                 const std::vector<ThermalImage>& frames,
                                                 const std::vector<PatientRecord>& gallery, const std::string& method,
                                                 const std::string& out_name = "out") {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json cfg;
  cfg["id"] = "case";
  cfg["frames"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto name = frame_name("frame", k);
    io::save_image(frames[k], dir / name);
    cfg["frames"].push_back(name);
  }
  write_records(gallery, dir / "gallery.csv", true);
  cfg["gallery"] = "gallery.csv";
  cfg["output_dir"] = out_name;
  cfg["registration"] = {{"mode", "roi-first"},  {"metric", "mad"},     {"theta_range_deg", 2.0},
                         {"theta_step_deg", 1.0}, {"trans_range", 5.0}, {"trans_step", 1.0},
                         {"refine_levels", 2}};
  cfg["classifier"] = {{"method", method}, {"k", 1}};
  const auto path = dir / ("config_" + method + ".json");
  write_json(cfg, path);
  return path;
}

}  // namespace fixtures

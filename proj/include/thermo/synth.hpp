#pragma once

// Deterministic synthetic neck phantoms.
//
// The base scene is defined on the whole integer lattice: a uniform
// background, dark vertical neck bands, an optional chin marker and an
// optional additive Gaussian nodule. Frame k samples that scene bilinearly
// at J_k^-1(p), where J_k = jitter[k], adds Gaussian noise and rounds half up.
//
// Fixture contract for noise: frame k draws from std::mt19937_64 seeded with
// splitmix64(seed + k); each pixel, in row-major order, consumes two 64-bit
// outputs u1, u2 (53-bit mantissas) and uses the Box-Muller cosine branch
//   z = sqrt(-2 ln(1 - u1)) cos(2 pi u2).

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermo/core.hpp"
#include "thermo/geometry.hpp"

namespace thermo {

struct PhantomBand {
  int col_begin = 0;  // [col_begin, col_end)
  int col_end = 1;
  int row_begin = 0;   // <= 0 extends past the top edge
  int row_end = 1 << 30;  // >= height extends past the bottom edge
};

struct PhantomMarker {
  Rect rect;
  int intensity = 40;
  int border = 0;  // outline thickness in pixels; 0 fills the rectangle
};

struct PhantomNodule {
  double row = 0.0;
  double col = 0.0;
  double radius = 30.0;  // no contribution beyond this distance
  double sigma = 12.0;   // Gaussian falloff
  int peak = 255;        // intensity reached at the centre over the background
};

struct PhantomSpec {
  int width = 480;
  int height = 420;
  int background = 200;
  std::vector<PhantomBand> bands;
  int band_intensity = 120;
  std::optional<PhantomMarker> marker;
  std::optional<PhantomNodule> nodule;
  std::vector<RigidTransform2D> jitter;  // one per frame; jitter[0] must be identity
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  std::size_t frame_count() const { return jitter.empty() ? 1 : jitter.size(); }

  void validate() const {
    const auto fail = [](const std::string& why) { throw Error(ErrorCode::SpecOutOfBounds, why); };
    const auto is_intensity = [](int v) { return v >= 0 && v <= 255; };
    if (width < 1 || height < 1) fail("phantom dimensions must be >= 1");
    if (!is_intensity(background) || !is_intensity(band_intensity)) fail("intensities must lie in [0,255]");
    for (const auto& b : bands) {
      if (b.col_begin < 0 || b.col_end > width || b.col_begin >= b.col_end) fail("band columns outside image");
      if (b.row_begin >= b.row_end || b.row_begin >= height || b.row_end <= 0) fail("band rows outside image");
    }
    if (marker) {
      if (!marker->rect.fits(width, height)) fail("marker rect outside image");
      if (!is_intensity(marker->intensity) || marker->border < 0) fail("invalid marker intensity or border");
    }
    if (nodule) {
      if (nodule->row < 0 || nodule->col < 0 || nodule->row > height - 1 || nodule->col > width - 1)
        fail("nodule centre outside image");
      if (!(nodule->radius > 0) || !(nodule->sigma > 0)) fail("nodule radius and sigma must be > 0");
      if (!is_intensity(nodule->peak)) fail("nodule peak must lie in [0,255]");
    }
    if (!jitter.empty() && !(jitter[0] == RigidTransform2D::identity())) fail("jitter[0] must be the identity");
    if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

class SceneModel {
 public:
  explicit SceneModel(const PhantomSpec& spec) : spec_(spec) {}

  // Unclamped scene value at integer lattice point (row i, column j).
  double at(int i, int j) const {
    double v = spec_.background;
    for (const auto& b : spec_.bands) {
      const bool rows_ok = (b.row_begin <= 0 || i >= b.row_begin) && (b.row_end >= spec_.height || i < b.row_end);
      if (rows_ok && j >= b.col_begin && j < b.col_end) v = spec_.band_intensity;
    }
    if (const auto& m = spec_.marker) {
      const Rect& r = m->rect;
      if (i >= r.y && i < r.bottom() && j >= r.x && j < r.right()) {
        const bool inner = m->border > 0 && i >= r.y + m->border && i < r.bottom() - m->border &&
                           j >= r.x + m->border && j < r.right() - m->border;
        if (!inner) v = m->intensity;
      }
    }
    if (const auto& n = spec_.nodule) {
      const double dr = i - n->row, dc = j - n->col;
      const double r2 = dr * dr + dc * dc;
      if (r2 <= n->radius * n->radius)
        v += (n->peak - spec_.background) * std::exp(-r2 / (2.0 * n->sigma * n->sigma));
    }
    return v;
  }

  double bilinear(double x, double y) const {
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
    const double fx = x - fx0, fy = y - fy0;
    const double top = at(y0, x0) * (1.0 - fx) + at(y0, x0 + 1) * fx;
    const double bot = at(y0 + 1, x0) * (1.0 - fx) + at(y0 + 1, x0 + 1) * fx;
    return top * (1.0 - fy) + bot * fy;
  }

 private:
  const PhantomSpec& spec_;
};

}  // namespace detail

inline std::vector<ThermalImage> generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const detail::SceneModel scene(spec);
  std::vector<ThermalImage> frames;
  for (std::size_t k = 0; k < spec.frame_count(); ++k) {
    const RigidTransform2D jit = spec.jitter.empty() ? RigidTransform2D::identity() : spec.jitter[k];
    const auto inv = jit.inverse();
    const double c = std::cos(inv.theta), s = std::sin(inv.theta);
    std::mt19937_64 gen(detail::splitmix64(spec.seed + k));
    ThermalImage img(spec.width, spec.height);
    for (int i = 0; i < spec.height; ++i) {
      for (int j = 0; j < spec.width; ++j) {
        double v = (jit == RigidTransform2D::identity())
                       ? scene.at(i, j)
                       : scene.bilinear(j * c - i * s + inv.t_x, j * s + i * c + inv.t_y);
        if (spec.noise_sigma > 0.0) {
          const double u1 = detail::unit_from_bits(gen());
          const double u2 = detail::unit_from_bits(gen());
          v += spec.noise_sigma * std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
        img(i, j) = clamp_round_intensity(v);
      }
    }
    AcquisitionMetadata meta;
    meta.frame_index = static_cast<int>(k);
    img.set_metadata(meta);
    frames.push_back(std::move(img));
  }
  return frames;
}

struct PhantomTruth {
  std::vector<Rect> bands;  // clipped to the image
  std::optional<Rect> marker;
  BinaryMask nodule_mask;   // noiseless frame-0 intensity >= cutoff; empty without a nodule
  std::vector<RigidTransform2D> jitter;
};

inline PhantomTruth ground_truth(const PhantomSpec& spec, int cutoff = 209) {
  spec.validate();
  PhantomTruth t;
  for (const auto& b : spec.bands) {
    const int y0 = std::max(b.row_begin, 0), y1 = std::min(b.row_end, spec.height);
    t.bands.push_back({b.col_begin, y0, b.col_end - b.col_begin, y1 - y0});
  }
  if (spec.marker) t.marker = spec.marker->rect;
  t.nodule_mask = BinaryMask(spec.width, spec.height);
  if (spec.nodule) {
    const detail::SceneModel scene(spec);
    for (int i = 0; i < spec.height; ++i)
      for (int j = 0; j < spec.width; ++j) t.nodule_mask.set(i, j, clamp_round_intensity(scene.at(i, j)) >= cutoff);
  }
  t.jitter = spec.jitter;
  return t;
}

// ---------------------------------------------------------------------------
// JSON form of the spec (the `synth --spec` file).

inline PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  PhantomSpec s;
  try {
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.background = j.value("background", s.background);
    s.band_intensity = j.value("band_intensity", s.band_intensity);
    for (const auto& b : j.value("neck_band_cols", nlohmann::json::array())) {
      PhantomBand band;
      band.col_begin = b.at("col_begin").get<int>();
      band.col_end = b.at("col_end").get<int>();
      band.row_begin = b.value("row_begin", band.row_begin);
      band.row_end = b.value("row_end", band.row_end);
      s.bands.push_back(band);
    }
    if (j.contains("marker") && !j["marker"].is_null()) {
      const auto& m = j["marker"];
      s.marker = PhantomMarker{{m.at("x").get<int>(), m.at("y").get<int>(), m.at("w").get<int>(), m.at("h").get<int>()},
                               m.value("intensity", 40), m.value("border", 0)};
    }
    if (j.contains("nodule") && !j["nodule"].is_null()) {
      const auto& n = j["nodule"];
      s.nodule = PhantomNodule{n.at("row").get<double>(), n.at("col").get<double>(), n.value("radius", 30.0),
                               n.value("sigma", 12.0), n.value("peak", 255)};
    }
    for (const auto& t : j.value("jitter", nlohmann::json::array()))
      s.jitter.emplace_back(t.at("theta").get<double>(), t.at("t_x").get<double>(), t.at("t_y").get<double>());
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SpecOutOfBounds, std::string("malformed phantom spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline nlohmann::ordered_json to_json(const PhantomSpec& s) {
  nlohmann::ordered_json j;
  j["width"] = s.width;
  j["height"] = s.height;
  j["background"] = s.background;
  j["band_intensity"] = s.band_intensity;
  j["neck_band_cols"] = nlohmann::ordered_json::array();
  for (const auto& b : s.bands)
    j["neck_band_cols"].push_back(
        {{"col_begin", b.col_begin}, {"col_end", b.col_end}, {"row_begin", b.row_begin}, {"row_end", b.row_end}});
  if (s.marker)
    j["marker"] = {{"x", s.marker->rect.x}, {"y", s.marker->rect.y}, {"w", s.marker->rect.w},
                   {"h", s.marker->rect.h}, {"intensity", s.marker->intensity}, {"border", s.marker->border}};
  if (s.nodule)
    j["nodule"] = {{"row", s.nodule->row},       {"col", s.nodule->col},     {"radius", s.nodule->radius},
                   {"sigma", s.nodule->sigma}, {"peak", s.nodule->peak}};
  j["jitter"] = nlohmann::ordered_json::array();
  for (const auto& t : s.jitter) j["jitter"].push_back({{"theta", t.theta}, {"t_x", t.t_x}, {"t_y", t.t_y}});
  j["noise_sigma"] = s.noise_sigma;
  j["seed"] = s.seed;
  return j;
}

}  // namespace thermo

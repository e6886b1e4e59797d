#pragma once

// Rigid registration of thermogram frames.
//
// A transform T returned by the registration routines maps the moving frame
// onto the reference: warp_image(mov, T) ~ ref. Warping uses inverse mapping,
// output(i, j) = mov sampled at T^-1(j, i), with 0 outside the source.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string_view>
#include <thread>
#include <vector>

#include "thermo/core.hpp"
#include "thermo/edge_filter.hpp"
#include "thermo/geometry.hpp"
#include "thermo/roi.hpp"

namespace thermo {

enum class Interpolation { nearest, bilinear };
enum class Metric { mean_abs_diff, chamfer };
enum class RegistrationMode { roi_first, register_first };

inline Metric parse_metric(std::string_view s) {
  if (s == "mad" || s == "mean_abs_diff") return Metric::mean_abs_diff;
  if (s == "chamfer") return Metric::chamfer;
  throw Error(ErrorCode::InvalidArgument, "metric must be mad|chamfer");
}
inline RegistrationMode parse_mode(std::string_view s) {
  if (s == "roi-first" || s == "roi_first") return RegistrationMode::roi_first;
  if (s == "register-first" || s == "register_first") return RegistrationMode::register_first;
  throw Error(ErrorCode::InvalidArgument, "mode must be roi-first|register-first");
}
inline const char* to_string(Metric m) { return m == Metric::mean_abs_diff ? "mad" : "chamfer"; }
inline const char* to_string(RegistrationMode m) {
  return m == RegistrationMode::roi_first ? "roi-first" : "register-first";
}

// ---------------------------------------------------------------------------
// Resampling

namespace detail {

/// Bilinear sample at (x = column, y = row); `fill` outside [0,w-1]x[0,h-1].
template <typename T>
double sample_bilinear(const Grid<T>& g, double x, double y, double fill = 0.0) {
  const int w = g.width(), h = g.height();
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) return fill;
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = static_cast<double>(g(y0, x0)) * (1.0 - fx) + static_cast<double>(g(y0, x1)) * fx;
  const double bot = static_cast<double>(g(y1, x0)) * (1.0 - fx) + static_cast<double>(g(y1, x1)) * fx;
  return top * (1.0 - fy) + bot * fy;
}

/// Nearest-neighbour sample (round half up); `fill` when the rounded index
/// falls outside the grid.
template <typename T>
double sample_nearest(const Grid<T>& g, double x, double y, double fill = 0.0) {
  if (!(x >= -0.5 && y >= -0.5 && x < g.width() - 0.5 && y < g.height() - 0.5)) return fill;
  return static_cast<double>(g(static_cast<int>(y + 0.5), static_cast<int>(x + 0.5)));
}

/// Evaluates `visit(i, j, src_x, src_y)` for every output pixel of `region`,
/// where (src_x, src_y) = T^-1(j, i).
template <typename Visit>
void for_each_inverse_mapped(const Rect& region, const RigidTransform2D& t, Visit&& visit) {
  const auto inv = t.inverse();
  const double c = std::cos(inv.theta), s = std::sin(inv.theta);
  for (int i = region.y; i < region.bottom(); ++i) {
    for (int j = region.x; j < region.right(); ++j) {
      const double x = j * c - i * s + inv.t_x;
      const double y = j * s + i * c + inv.t_y;
      visit(i, j, x, y);
    }
  }
}

}  // namespace detail

/// Resamples `src` into a `region`-sized grid (region in output coordinates).
inline Grid<std::uint8_t> warp_region(const Grid<std::uint8_t>& src, const RigidTransform2D& t, const Rect& region,
                                      Interpolation interp) {
  Grid<std::uint8_t> out(region.w, region.h);
  detail::for_each_inverse_mapped(region, t, [&](int i, int j, double x, double y) {
    const double v = interp == Interpolation::nearest ? detail::sample_nearest(src, x, y)
                                                      : detail::sample_bilinear(src, x, y);
    out(i - region.y, j - region.x) = clamp_round_intensity(v);
  });
  return out;
}

inline ThermalImage warp_image(const ThermalImage& img, const RigidTransform2D& t,
                               Interpolation interp = Interpolation::bilinear) {
  return ThermalImage(warp_region(img.pixels(), t, img.bounds(), interp), img.calibration(), img.metadata());
}

// ---------------------------------------------------------------------------
// Closed-form keypoint fit

/// Least-squares rigid fit (no scaling) of moving -> reference points.
inline RigidTransform2D fit_rigid_from_keypoints(const KeypointPairSet& pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::DegenerateConfiguration, "a rigid fit needs at least 2 pairs");
  const double n = static_cast<double>(pairs.size());
  Point2 cm{}, cr{};
  for (const auto& p : pairs) {
    cm.x += p.moving.x;
    cm.y += p.moving.y;
    cr.x += p.reference.x;
    cr.y += p.reference.y;
  }
  cm = {cm.x / n, cm.y / n};
  cr = {cr.x / n, cr.y / n};

  double dot = 0.0, cross = 0.0, spread = 0.0;
  for (const auto& p : pairs) {
    const double mx = p.moving.x - cm.x, my = p.moving.y - cm.y;
    const double rx = p.reference.x - cr.x, ry = p.reference.y - cr.y;
    dot += mx * rx + my * ry;
    cross += mx * ry - my * rx;
    spread += mx * mx + my * my;
  }
  if (!(spread > 0.0)) throw Error(ErrorCode::DegenerateConfiguration, "moving keypoints are all coincident");

  const double theta = std::atan2(cross, dot);
  const double c = std::cos(theta), s = std::sin(theta);
  return {theta, cr.x - (c * cm.x - s * cm.y), cr.y - (s * cm.x + c * cm.y)};
}

// ---------------------------------------------------------------------------
// Similarity measures

inline double mean_abs_difference(const ThermalImage& ref, const ThermalImage& mov, const Rect& region) {
  if (!region.fits(ref.width(), ref.height()) || !region.fits(mov.width(), mov.height()))
    throw Error(ErrorCode::OutOfBounds, "region outside one of the images");
  std::int64_t total = 0;
  for (int i = region.y; i < region.bottom(); ++i) {
    const std::uint8_t* a = ref.pixels().row(i);
    const std::uint8_t* b = mov.pixels().row(i);
    for (int j = region.x; j < region.right(); ++j) total += std::abs(int{a[j]} - int{b[j]});
  }
  return static_cast<double>(total) / (255.0 * static_cast<double>(region.w) * static_cast<double>(region.h));
}

/// Returned by chamfer_distance when exactly one mask is empty.
inline constexpr double kChamferMaxScore = std::numeric_limits<double>::max();

namespace detail {

// Exact 1-D squared distance transform (lower envelope of parabolas).
inline void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto intersect = [&](int q, int p) {
    return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
  };
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace detail

/// Euclidean distance from every pixel to the nearest 1-pixel of `mask`.
/// All entries are +inf when the mask is empty.
inline Grid<double> distance_transform(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  constexpr double big = 1e20;
  Grid<double> g(w, h, big);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      if (mask(i, j)) g(i, j) = 0.0;

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int j = 0; j < w; ++j) {
    for (int i = 0; i < h; ++i) f[i] = g(i, j);
    detail::edt_1d(f.data(), d.data(), h, v, z);
    for (int i = 0; i < h; ++i) g(i, j) = d[i];
  }
  for (int i = 0; i < h; ++i) {
    std::copy_n(g.row(i), w, f.begin());
    detail::edt_1d(f.data(), d.data(), w, v, z);
    for (int j = 0; j < w; ++j)
      g(i, j) = d[j] >= big ? std::numeric_limits<double>::infinity() : std::sqrt(d[j]);
  }
  return g;
}

namespace detail {

inline double mean_distance_over(const BinaryMask& from, const Grid<double>& dt_of_other) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < from.height(); ++i)
    for (int j = 0; j < from.width(); ++j)
      if (from(i, j)) {
        sum += dt_of_other(i, j);
        ++n;
      }
  return sum / static_cast<double>(n);
}

inline double chamfer_with_dt(const BinaryMask& a, const Grid<double>& dt_a, std::size_t count_a,
                              const BinaryMask& b, const Grid<double>& dt_b, std::size_t count_b) {
  if (count_a == 0 && count_b == 0) return 0.0;
  if (count_a == 0 || count_b == 0) return kChamferMaxScore;
  return 0.5 * (mean_distance_over(a, dt_b) + mean_distance_over(b, dt_a));
}

}  // namespace detail

/// Symmetric mean chamfer distance between two edge masks.
inline double chamfer_distance(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::DimensionMismatch, "chamfer masks differ in size");
  return detail::chamfer_with_dt(a, distance_transform(a), a.count(), b, distance_transform(b), b.count());
}

// ---------------------------------------------------------------------------
// Search-based registration

struct SearchParams {
  double theta_range = deg_to_rad(10.0);
  double trans_range = 15.0;
  double theta_step = deg_to_rad(0.5);
  double trans_step = 1.0;
  int refine_levels = 3;
  Metric metric = Metric::mean_abs_diff;
  // Edge filter used to build the masks compared by the chamfer metric.
  FilterParams edge_filter{};
  // Worker threads for candidate scoring; results do not depend on it.
  int threads = 1;

  void validate() const {
    if (!(theta_step > 0.0) || !(trans_step > 0.0) || !(theta_range >= 0.0) || !(trans_range >= 0.0) ||
        refine_levels < 0 || threads < 1)
      throw Error(ErrorCode::EmptySearchSpace, "search steps must be > 0, ranges >= 0, refine_levels >= 0");
    if (metric == Metric::chamfer) edge_filter.validate();
  }
};

struct RegistrationResult {
  RigidTransform2D transform;
  double score = 0.0;
  double identity_score = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

struct Candidate {
  double theta, tx, ty;
};

// Strict "a is preferred over b": lower score, then smaller |theta|, |t_x|, |t_y|.
inline bool preferred(double sa, const Candidate& a, double sb, const Candidate& b) {
  if (sa != sb) return sa < sb;
  if (std::abs(a.theta) != std::abs(b.theta)) return std::abs(a.theta) < std::abs(b.theta);
  if (std::abs(a.tx) != std::abs(b.tx)) return std::abs(a.tx) < std::abs(b.tx);
  return std::abs(a.ty) < std::abs(b.ty);
}

class RoiScorer {
 public:
  RoiScorer(const ThermalImage& ref, const ThermalImage& mov, const Rect& roi, const SearchParams& sp)
      : ref_(ref), mov_(mov), roi_(roi), sp_(sp) {
    if (sp_.metric == Metric::chamfer) {
      ref_edges_ = crop(directional_valley(ref, sp_.edge_filter), roi);
      ref_count_ = ref_edges_.count();
      ref_dt_ = distance_transform(ref_edges_);
      const int d = sp_.edge_filter.d;
      padded_ = Rect{std::max(0, roi.x - d), std::max(0, roi.y - d), 0, 0};
      padded_.w = std::min(ref.width(), roi.right() + d) - padded_.x;
      padded_.h = std::min(ref.height(), roi.bottom() + d) - padded_.y;
    }
  }

  double operator()(const Candidate& c) const {
    const RigidTransform2D t{c.theta, c.tx, c.ty};
    return sp_.metric == Metric::mean_abs_diff ? mad(t) : chamfer(t);
  }

 private:
  double mad(const RigidTransform2D& t) const {
    const auto& src = mov_.pixels();
    const auto& ref = ref_.pixels();
    const double hi_x = src.width() - 0.5, hi_y = src.height() - 0.5;
    std::int64_t total = 0;
    for_each_inverse_mapped(roi_, t, [&](int i, int j, double x, double y) {
      int v = 0;
      if (x >= -0.5 && y >= -0.5 && x < hi_x && y < hi_y) v = src(static_cast<int>(y + 0.5), static_cast<int>(x + 0.5));
      total += std::abs(int{ref(i, j)} - v);
    });
    return static_cast<double>(total) / (255.0 * static_cast<double>(roi_.w) * static_cast<double>(roi_.h));
  }

  double chamfer(const RigidTransform2D& t) const {
    const ThermalImage warped(warp_region(mov_.pixels(), t, padded_, Interpolation::nearest));
    const BinaryMask edges = directional_valley(warped, sp_.edge_filter);
    const BinaryMask mov_edges = crop(edges, Rect{roi_.x - padded_.x, roi_.y - padded_.y, roi_.w, roi_.h});
    return chamfer_with_dt(ref_edges_, ref_dt_, ref_count_, mov_edges, distance_transform(mov_edges),
                           mov_edges.count());
  }

  const ThermalImage& ref_;
  const ThermalImage& mov_;
  Rect roi_;
  const SearchParams& sp_;
  BinaryMask ref_edges_;
  Grid<double> ref_dt_;
  std::size_t ref_count_ = 0;
  Rect padded_{};
};

inline std::vector<double> axis_values(double range, double step) {
  const int k = static_cast<int>(std::floor(range / step + 1e-9));
  std::vector<double> out;
  for (int i = -k; i <= k; ++i) out.push_back(i * step);
  return out;
}

template <typename Scorer>
std::vector<double> score_all(const std::vector<Candidate>& cands, const Scorer& scorer, int threads) {
  std::vector<double> scores(cands.size());
  const auto n = cands.size();
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) scores[k] = scorer(cands[k]);
    return scores;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < n; k += workers) scores[k] = scorer(cands[k]);
    });
  for (auto& th : pool) th.join();
  return scores;
}

}  // namespace detail

/// Grid search over (theta, t_x, t_y), then `refine_levels` rounds of local
/// hill climbing with halved steps, all confined to the search ranges. Hill
/// climbing rotates about the ROI centre (the returned transform is still
/// about the origin).
inline RegistrationResult register_by_roi(const ThermalImage& ref, const ThermalImage& mov, const Rect& roi,
                                          const SearchParams& sp) {
  sp.validate();
  if (ref.width() != mov.width() || ref.height() != mov.height())
    throw Error(ErrorCode::DimensionMismatch, "reference and moving frames differ in size");
  if (!roi.fits(ref.width(), ref.height())) throw Error(ErrorCode::OutOfBounds, "registration ROI outside image");

  using detail::Candidate;
  const detail::RoiScorer scorer(ref, mov, roi, sp);

  std::vector<Candidate> grid;
  for (double th : detail::axis_values(sp.theta_range, sp.theta_step))
    for (double tx : detail::axis_values(sp.trans_range, sp.trans_step))
      for (double ty : detail::axis_values(sp.trans_range, sp.trans_step)) grid.push_back({th, tx, ty});
  if (grid.empty()) throw Error(ErrorCode::EmptySearchSpace, "no candidates in search grid");

  const auto scores = detail::score_all(grid, scorer, sp.threads);
  RegistrationResult res;
  res.evaluations = grid.size();
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (detail::preferred(scores[k], grid[k], scores[best], grid[best])) best = k;
  Candidate inc = grid[best];
  double inc_score = scores[best];
  // the grid is symmetric about zero, so identity is always a candidate
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid[k].theta == 0.0 && grid[k].tx == 0.0 && grid[k].ty == 0.0) res.identity_score = scores[k];

  const double tol = 1e-12;
  const double cx = roi.x + (roi.w - 1) / 2.0, cy = roi.y + (roi.h - 1) / 2.0;
  double th_step = sp.theta_step, tr_step = sp.trans_step;
  for (int level = 0; level < sp.refine_levels; ++level) {
    th_step *= 0.5;
    tr_step *= 0.5;
    for (int iter = 0; iter < 1000; ++iter) {
      std::vector<Candidate> nb;
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
          for (int c = -1; c <= 1; ++c) {
            if (a == 0 && b == 0 && c == 0) continue;
            // Rotate about the ROI centre so an angle step keeps the ROI
            // content in place instead of swinging it about the origin.
            const double d = a * th_step, cd = std::cos(d), sd = std::sin(d);
            const double ux = inc.tx - cx, uy = inc.ty - cy;
            const Candidate cand{inc.theta + d, cx + cd * ux - sd * uy + b * tr_step,
                                 cy + sd * ux + cd * uy + c * tr_step};
            if (std::abs(cand.theta) > sp.theta_range + tol || std::abs(cand.tx) > sp.trans_range + tol ||
                std::abs(cand.ty) > sp.trans_range + tol)
              continue;
            nb.push_back(cand);
          }
      const auto nb_scores = detail::score_all(nb, scorer, sp.threads);
      res.evaluations += nb.size();
      bool moved = false;
      for (std::size_t k = 0; k < nb.size(); ++k)
        if (detail::preferred(nb_scores[k], nb[k], inc_score, inc)) {
          inc = nb[k];
          inc_score = nb_scores[k];
          moved = true;
        }
      if (!moved) break;
    }
  }

  res.transform = RigidTransform2D{inc.theta, inc.tx, inc.ty};
  res.score = inc_score;
  return res;
}

struct RegisteredFrame {
  RigidTransform2D transform;
  ThermalImage image;
  double score = 0.0;
};

struct SequenceRegistration {
  Rect roi;
  std::vector<RegisteredFrame> frames;
};

/// Reference frame minus a border wide enough that no candidate within the
/// search ranges can pull zero fill into it (falls back to the whole frame
/// when the inset would be empty).
inline Rect full_frame_region(const ThermalImage& ref, const SearchParams& sp) {
  const double diag = std::hypot(double(ref.width()), double(ref.height()));
  const double rot = 2.0 * std::sin(std::min(sp.theta_range, std::numbers::pi) / 2.0) * diag;
  const int m = static_cast<int>(std::ceil(sp.trans_range + rot)) + 1;
  if (2 * m >= ref.width() || 2 * m >= ref.height()) return ref.bounds();
  return Rect{m, m, ref.width() - 2 * m, ref.height() - 2 * m};
}

/// Registers frames[1..] to frames[0]. roi_first restricts the comparison to
/// the ROI detected on the reference; register_first compares the full frames
/// (inset by full_frame_region) and detects the ROI on the reference afterwards.
inline SequenceRegistration register_sequence(const std::vector<ThermalImage>& frames, RegistrationMode mode,
                                              const SearchParams& sp, const FilterParams& fp, const RoiParams& rp) {
  if (frames.size() < 2) throw Error(ErrorCode::InvalidArgument, "sequence registration needs at least 2 frames");
  const ThermalImage& ref = frames.front();
  SequenceRegistration out;
  Rect region = full_frame_region(ref, sp);
  if (mode == RegistrationMode::roi_first) {
    out.roi = detect_thyroid_roi(ref, fp, rp);
    region = out.roi;
  }
  out.frames.push_back({RigidTransform2D::identity(), ref, 0.0});
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const auto res = register_by_roi(ref, frames[k], region, sp);
    out.frames.push_back({res.transform, warp_image(frames[k], res.transform, Interpolation::bilinear), res.score});
  }
  if (mode == RegistrationMode::register_first) out.roi = detect_thyroid_roi(ref, fp, rp);
  return out;
}

}  // namespace thermo

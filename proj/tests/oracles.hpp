#pragma once

// Brute-force reference implementations used only by the tests. Each one is
// a direct transcription of the operation's definition, deliberately free of
// the optimisations (summed-area tables, distance transforms, integer
// accumulation, row pointers) used by the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "thermo/thermo.hpp"

namespace oracle {

using namespace thermo;

inline ThermalImage random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> dist(0, 255);
  ThermalImage img(w, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) img(i, j) = static_cast<std::uint8_t>(dist(rng));
  return img;
}

inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double p = 0.3) {
  std::bernoulli_distribution bit(p);
  BinaryMask m(w, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) m.set(i, j, bit(rng));
  return m;
}

// Valley filter, one pixel at a time. P(r, c) outside the image makes the
// pixel unevaluable; the border band of width d is never marked.
inline BinaryMask valley(const ThermalImage& img, int d, int t, FilterAxis axis, Polarity pol) {
  const int h = img.height(), w = img.width();
  BinaryMask out(w, h);
  const auto P = [&](int r, int c) { return static_cast<int>(img(r, c)); };
  const auto cmp = [&](int nb, int centre) { return pol == Polarity::shadow ? nb - centre > t : centre - nb > t; };
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (i - d < 0 || i + d >= h || j - d < 0 || j + d >= w) continue;
      const bool s1 = cmp(P(i - d, j), P(i, j)) && cmp(P(i + d, j), P(i, j));
      const bool s2 = cmp(P(i, j - d), P(i, j)) && cmp(P(i, j + d), P(i, j));
      bool v = false;
      switch (axis) {
        case FilterAxis::rows: v = s1; break;
        case FilterAxis::cols: v = s2; break;
        case FilterAxis::both: v = s1 && s2; break;
      }
      out.set(i, j, v);
    }
  }
  return out;
}

inline long long count(const BinaryMask& m, const Rect& r) {
  long long n = 0;
  for (int i = r.y; i < r.y + r.h; ++i)
    for (int j = r.x; j < r.x + r.w; ++j) n += m(i, j) ? 1 : 0;
  return n;
}

// Every candidate, in scan order, with a strict ">" so the first maximum wins.
inline Rect exhaustive_roi(const BinaryMask& m, int w, int h, ScanOrder scan, int stride) {
  std::vector<Rect> cands;
  std::vector<int> ys;
  if (scan == ScanOrder::top_down) {
    for (int y = 0; y + h <= m.height(); y += stride) ys.push_back(y);
  } else {
    for (int y = m.height() - h; y >= 0; y -= stride) ys.push_back(y);
  }
  for (int y : ys)
    for (int x = 0; x + w <= m.width(); x += stride) cands.push_back({x, y, w, h});
  Rect best = cands.front();
  long long best_n = count(m, best);
  for (const auto& c : cands) {
    const long long n = count(m, c);
    if (n > best_n) {
      best_n = n;
      best = c;
    }
  }
  return best;
}

inline double asymmetry(const ThermalImage& I) {
  const int m = I.height(), n = I.width();
  const auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const int mirror = n - 1 - j;
      double best = std::numeric_limits<double>::infinity();
      for (int p = -1; p <= 1; ++p)
        for (int q = -1; q <= 1; ++q) {
          const int r = clampi(i + p, 0, m - 1), c = clampi(mirror + q, 0, n - 1);
          best = std::min(best, std::fabs(double(I(i, j)) - double(I(r, c))) / 255.0);
        }
      sum += best;
    }
  }
  return sum / (double(m) * double(n));
}

inline double chamfer(const BinaryMask& a, const BinaryMask& b) {
  std::vector<std::pair<int, int>> pa, pb;
  for (int i = 0; i < a.height(); ++i)
    for (int j = 0; j < a.width(); ++j) {
      if (a(i, j)) pa.emplace_back(i, j);
      if (b(i, j)) pb.emplace_back(i, j);
    }
  if (pa.empty() && pb.empty()) return 0.0;
  if (pa.empty() || pb.empty()) return kChamferMaxScore;
  const auto mean_nearest = [](const auto& from, const auto& to) {
    double s = 0.0;
    for (auto [i, j] : from) {
      double best = std::numeric_limits<double>::infinity();
      for (auto [k, l] : to) best = std::min(best, std::hypot(double(i - k), double(j - l)));
      s += best;
    }
    return s / double(from.size());
  };
  return 0.5 * (mean_nearest(pa, pb) + mean_nearest(pb, pa));
}

inline double mad(const ThermalImage& a, const ThermalImage& b, const Rect& r) {
  double s = 0.0;
  for (int i = r.y; i < r.y + r.h; ++i)
    for (int j = r.x; j < r.x + r.w; ++j) s += std::fabs(double(a(i, j)) - double(b(i, j))) / 255.0;
  return s / (double(r.w) * double(r.h));
}

}  // namespace oracle

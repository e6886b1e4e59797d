#pragma once

// Nearest-neighbour diagnosis over four-feature patient records.
//
// Two methods are provided:
//  * per-feature voting: each feature votes for the gallery patient with the
//    smallest absolute difference; the label held by most of the four voted
//    patients wins.
//  * Euclidean k-NN on the raw (optionally min-max scaled) feature vectors.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermo/core.hpp"
#include "thermo/features.hpp"
#include "thermo/io.hpp"

namespace thermo {

enum class Label { healthy, sick };

inline const char* to_string(Label l) { return l == Label::sick ? "sick" : "healthy"; }
inline Label parse_label(std::string_view s) {
  if (s == "sick") return Label::sick;
  if (s == "healthy") return Label::healthy;
  throw Error(ErrorCode::InvalidArgument, "label must be healthy|sick, got '" + std::string(s) + "'");
}

struct PatientRecord {
  std::string id;
  FeatureVector features;
  std::optional<Label> label;
};

// Final tie-break when two gallery patients are equally close.
enum class TieBreak { gallery_order, id };

struct DistanceRow {
  std::string id;
  std::array<double, FeatureVector::size> diff{};
};

struct DistanceTable {
  std::vector<DistanceRow> rows;
};

inline DistanceTable feature_distances(const PatientRecord& query, std::span<const PatientRecord> gallery) {
  if (gallery.empty()) throw Error(ErrorCode::EmptyGallery, "gallery is empty");
  DistanceTable table;
  for (const auto& g : gallery) {
    if (!query.id.empty() && g.id == query.id)
      throw Error(ErrorCode::InvalidArgument, "query '" + query.id + "' is part of the gallery");
    DistanceRow row{g.id, {}};
    for (int f = 0; f < FeatureVector::size; ++f) row.diff[f] = std::abs(query.features[f] - g.features[f]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

struct VoteResult {
  Label label = Label::healthy;
  std::array<std::size_t, FeatureVector::size> winner{};  // row index voted by each feature
  int sick_votes = 0;
  int healthy_votes = 0;
  bool tie_resolved = false;  // 2-2 split settled by summed normalised distances

  int votes_for_label() const { return label == Label::sick ? sick_votes : healthy_votes; }
};

namespace detail {

inline bool earlier(const DistanceTable& t, std::size_t a, std::size_t b, TieBreak tb) {
  return tb == TieBreak::gallery_order ? a < b : t.rows[a].id < t.rows[b].id;
}

}  // namespace detail

inline VoteResult per_feature_vote(const DistanceTable& table, std::span<const Label> labels,
                                   TieBreak tb = TieBreak::gallery_order) {
  if (table.rows.empty()) throw Error(ErrorCode::EmptyGallery, "distance table is empty");
  if (labels.size() != table.rows.size())
    throw Error(ErrorCode::DimensionMismatch, "one label per distance row required");
  const auto n = table.rows.size();
  VoteResult res;
  for (int f = 0; f < FeatureVector::size; ++f) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < n; ++r) {
      const double a = table.rows[r].diff[f], b = table.rows[best].diff[f];
      if (a < b || (a == b && detail::earlier(table, r, best, tb))) best = r;
    }
    res.winner[f] = best;
    (labels[best] == Label::sick ? res.sick_votes : res.healthy_votes)++;
  }
  if (res.sick_votes != res.healthy_votes) {
    res.label = res.sick_votes > res.healthy_votes ? Label::sick : Label::healthy;
    return res;
  }

  std::array<double, FeatureVector::size> col_max{};
  for (const auto& row : table.rows)
    for (int f = 0; f < FeatureVector::size; ++f) col_max[f] = std::max(col_max[f], row.diff[f]);
  std::size_t best = 0;
  double best_sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (int f = 0; f < FeatureVector::size; ++f)
      if (col_max[f] > 0.0) s += table.rows[r].diff[f] / col_max[f];
    if (r == 0 || s < best_sum || (s == best_sum && detail::earlier(table, r, best, tb))) {
      best = r;
      best_sum = s;
    }
  }
  res.label = labels[best];
  res.tie_resolved = true;
  return res;
}

struct Neighbor {
  std::size_t index = 0;
  std::string id;
  double distance = 0.0;
};

struct KnnResult {
  Label label = Label::healthy;
  std::vector<Neighbor> neighbors;  // the k nearest, closest first
};

inline KnnResult knn_euclidean(const PatientRecord& query, std::span<const PatientRecord> gallery, int k = 1,
                               bool normalize = false, TieBreak tb = TieBreak::gallery_order) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (gallery.size() < static_cast<std::size_t>(k))
    throw Error(ErrorCode::GalleryTooSmall, "gallery has fewer than k records");
  for (const auto& g : gallery)
    if (!g.label) throw Error(ErrorCode::InvalidArgument, "gallery record '" + g.id + "' has no label");

  std::array<double, FeatureVector::size> lo{}, scale{};
  for (int f = 0; f < FeatureVector::size; ++f) {
    lo[f] = 0.0;
    scale[f] = 1.0;
    if (!normalize) continue;
    double mn = query.features[f], mx = query.features[f];
    for (const auto& g : gallery) {
      mn = std::min(mn, g.features[f]);
      mx = std::max(mx, g.features[f]);
    }
    lo[f] = mn;
    scale[f] = mx > mn ? 1.0 / (mx - mn) : 0.0;
  }
  const auto scaled = [&](const FeatureVector& v, int f) { return (v[f] - lo[f]) * scale[f]; };

  std::vector<Neighbor> all;
  for (std::size_t r = 0; r < gallery.size(); ++r) {
    double sq = 0.0;
    for (int f = 0; f < FeatureVector::size; ++f) {
      const double d = scaled(query.features, f) - scaled(gallery[r].features, f);
      sq += d * d;
    }
    all.push_back({r, gallery[r].id, std::sqrt(sq)});
  }
  std::stable_sort(all.begin(), all.end(), [&](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return tb == TieBreak::gallery_order ? a.index < b.index : a.id < b.id;
  });
  all.resize(static_cast<std::size_t>(k));

  int sick = 0;
  for (const auto& nb : all) sick += *gallery[nb.index].label == Label::sick ? 1 : 0;
  const int healthy = k - sick;
  KnnResult res;
  res.label = sick == healthy ? *gallery[all.front().index].label : (sick > healthy ? Label::sick : Label::healthy);
  res.neighbors = std::move(all);
  return res;
}

// ---------------------------------------------------------------------------
// Batch classification

enum class Method { vote, knn };

inline Method parse_method(std::string_view s) {
  if (s == "vote") return Method::vote;
  if (s == "knn") return Method::knn;
  throw Error(ErrorCode::InvalidArgument, "method must be vote|knn");
}
inline const char* to_string(Method m) { return m == Method::vote ? "vote" : "knn"; }

struct ClassifyOptions {
  Method method = Method::vote;
  int k = 1;
  bool normalize = false;
  TieBreak tie_break = TieBreak::gallery_order;
};

struct ReportEntry {
  std::string id;
  std::optional<Label> predicted;
  std::string error;  // empty on success
  ErrorCode error_code = ErrorCode::InvalidArgument;  // meaningful only when `error` is set
  DistanceTable distances;
  std::optional<VoteResult> vote;
  std::optional<KnnResult> knn;
};

struct BatchReport {
  Method method = Method::vote;
  std::vector<ReportEntry> entries;
  std::vector<std::string> duplicate_ids;
};

/// Classifies every record against the gallery, skipping gallery entries
/// that share the record's id (leave-one-out). Per-record failures are
/// collected in the report instead of aborting the batch.
inline BatchReport classify_batch(std::span<const PatientRecord> records, std::span<const PatientRecord> gallery,
                                  const ClassifyOptions& opt = {}) {
  BatchReport report;
  report.method = opt.method;
  std::map<std::string, int> seen;
  for (const auto& r : records) seen[r.id]++;
  for (const auto& [id, n] : seen)
    if (n > 1) report.duplicate_ids.push_back(id);

  for (const auto& rec : records) {
    ReportEntry e;
    e.id = rec.id;
    try {
      std::vector<PatientRecord> pool;
      for (const auto& g : gallery)
        if (g.id != rec.id) pool.push_back(g);
      for (const auto& g : pool)
        if (!g.label) throw Error(ErrorCode::InvalidArgument, "gallery record '" + g.id + "' has no label");
      e.distances = feature_distances(rec, pool);
      if (opt.method == Method::vote) {
        std::vector<Label> labels;
        for (const auto& g : pool) labels.push_back(*g.label);
        e.vote = per_feature_vote(e.distances, labels, opt.tie_break);
        e.predicted = e.vote->label;
      } else {
        e.knn = knn_euclidean(rec, pool, opt.k, opt.normalize, opt.tie_break);
        e.predicted = e.knn->label;
      }
    } catch (const Error& err) {
      e.error = err.what();
      e.error_code = err.code();
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

inline nlohmann::ordered_json to_json(const BatchReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["method"] = to_string(report.method);
  j["duplicate_ids"] = report.duplicate_ids;
  ordered_json recs = ordered_json::array();
  for (const auto& e : report.entries) {
    ordered_json r;
    r["id"] = e.id;
    r["label"] = e.predicted ? ordered_json(to_string(*e.predicted)) : ordered_json(nullptr);
    if (!e.error.empty()) r["error"] = e.error;
    ordered_json dist = ordered_json::array();
    for (const auto& row : e.distances.rows) {
      ordered_json d;
      d["id"] = row.id;
      for (int f = 0; f < FeatureVector::size; ++f) d[kFeatureNames[f]] = row.diff[f];
      dist.push_back(d);
    }
    r["distances"] = dist;
    if (e.vote) {
      ordered_json v;
      for (int f = 0; f < FeatureVector::size; ++f) v[kFeatureNames[f]] = e.distances.rows[e.vote->winner[f]].id;
      r["votes"] = v;
      r["sick_votes"] = e.vote->sick_votes;
      r["healthy_votes"] = e.vote->healthy_votes;
      r["tie_resolved"] = e.vote->tie_resolved;
    }
    if (e.knn) {
      ordered_json nbs = ordered_json::array();
      for (const auto& nb : e.knn->neighbors) nbs.push_back({{"id", nb.id}, {"distance", nb.distance}});
      r["neighbors"] = nbs;
    }
    recs.push_back(r);
  }
  j["records"] = recs;
  return j;
}

// ---------------------------------------------------------------------------
// Record files: header `id,mean_norm,std_raw,max_norm,asymmetry[,label]`.

inline std::vector<PatientRecord> read_records(const io::fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<PatientRecord> out;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::detail::trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.emplace_back(io::detail::trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (!header_seen) {
      header_seen = true;
      if (cells.size() < 5 || cells[0] != "id" || cells[1] != "mean_norm" || cells[2] != "std_raw" ||
          cells[3] != "max_norm" || cells[4] != "asymmetry")
        throw Error(ErrorCode::UnsupportedFormat, path.string() + ": bad header");
      continue;
    }
    if (cells.size() < 5 || cells.size() > 6)
      throw Error(ErrorCode::RaggedRows, path.string() + ":" + std::to_string(lineno) + ": expected 5 or 6 cells");
    PatientRecord r;
    r.id = cells[0];
    for (int f = 0; f < FeatureVector::size; ++f)
      if (!io::detail::parse_double(cells[f + 1], r.features[f]))
        throw Error(ErrorCode::NonNumericCell, path.string() + ":" + std::to_string(lineno));
    if (cells.size() == 6 && !cells[5].empty()) r.label = parse_label(cells[5]);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string format_record(const PatientRecord& r, bool with_label) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f", r.features.mean_norm, r.features.std_raw,
                r.features.max_norm, r.features.asymmetry);
  std::string s = r.id + "," + buf;
  if (with_label) s += std::string(",") + (r.label ? to_string(*r.label) : "");
  return s;
}

inline void write_records(const std::vector<PatientRecord>& records, const io::fs::path& path,
                          bool with_label = false) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  out << "id,mean_norm,std_raw,max_norm,asymmetry" << (with_label ? ",label" : "") << '\n';
  for (const auto& r : records) out << format_record(r, with_label) << '\n';
}

}  // namespace thermo

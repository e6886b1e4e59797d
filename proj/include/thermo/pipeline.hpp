#pragma once

// End-to-end processing of one acquisition sequence, driven by a JSON config.
//
// Artifacts written to the output directory:
//   transforms.txt        "frame theta t_x t_y" per frame (frame 0 = identity)
//   roi.txt               "x y w h"
//   registered_NNN.pgm    registered frames (frame 0 is the reference)
//   mask_NNN.pgm          ROI thresholded at the cutoff, 0/255
//   features.csv          one row per registered frame, id "registered_NNN"
//   report.json           classification report for features.csv
//   summary.json          sequence label (majority of frame labels)
//
// Exit status: 0 success, 1 validation error, 2 processing error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermo/classifier.hpp"
#include "thermo/core.hpp"
#include "thermo/edge_filter.hpp"
#include "thermo/features.hpp"
#include "thermo/io.hpp"
#include "thermo/registration.hpp"
#include "thermo/roi.hpp"

namespace thermo {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitProcessing = 2;

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableFile:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::RaggedRows:
    case ErrorCode::NonNumericCell:
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptySearchSpace:
    case ErrorCode::SpecOutOfBounds:
    case ErrorCode::EmptyGallery:
    case ErrorCode::GalleryTooSmall:
      return kExitValidation;
    default:
      return kExitProcessing;
  }
}

inline std::string frame_name(const std::string& prefix, std::size_t k, const std::string& ext = ".pgm") {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%03zu", k);
  return prefix + "_" + buf + ext;
}

inline void write_transforms(const std::vector<RigidTransform2D>& ts, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu %.9f %.6f %.6f\n", k, ts[k].theta, ts[k].t_x, ts[k].t_y);
    out << buf;
  }
}

inline void write_rect(const Rect& r, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  out << io::format_rect(r) << '\n';
}

inline void write_json(const nlohmann::ordered_json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct PipelineConfig {
  std::string id = "sequence";
  std::vector<fs::path> frames;
  fs::path gallery;
  fs::path output_dir = "out";
  FilterParams filter{};
  RoiParams roi{};
  RegistrationMode mode = RegistrationMode::roi_first;
  SearchParams search{};
  int cutoff = kDefaultCutoff;
  ClassifyOptions classifier{};

  void validate() const {
    if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "config lists no frames");
    for (const auto& f : frames)
      if (!fs::is_regular_file(f)) throw Error(ErrorCode::UnreadableFile, "frame not found: " + f.string());
    if (!fs::is_regular_file(gallery)) throw Error(ErrorCode::UnreadableFile, "gallery not found: " + gallery.string());
    filter.validate();
    roi.validate();
    search.validate();
    if (cutoff < 0 || cutoff > 255) throw Error(ErrorCode::InvalidArgument, "cutoff must lie in [0,255]");
    if (classifier.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  }
};

/// Parses a config; relative paths are resolved against `base_dir`.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  PipelineConfig c;
  const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  try {
    c.id = j.value("id", c.id);
    for (const auto& f : j.at("frames")) c.frames.push_back(resolve(f.get<std::string>()));
    c.gallery = resolve(j.at("gallery").get<std::string>());
    c.output_dir = resolve(j.value("output_dir", std::string("out")));
    c.cutoff = j.value("cutoff", c.cutoff);
    if (j.contains("filter")) {
      const auto& f = j["filter"];
      c.filter.d = f.value("d", c.filter.d);
      c.filter.t = f.value("t", c.filter.t);
      c.filter.axis = parse_axis(f.value("axis", std::string(to_string(c.filter.axis))));
      c.filter.polarity = parse_polarity(f.value("polarity", std::string(to_string(c.filter.polarity))));
    }
    if (j.contains("roi")) {
      const auto& r = j["roi"];
      c.roi.roi_w = r.value("roi_w", c.roi.roi_w);
      c.roi.roi_h = r.value("roi_h", c.roi.roi_h);
      c.roi.residual_w = r.value("residual_w", c.roi.residual_w);
      c.roi.residual_h = r.value("residual_h", c.roi.residual_h);
      c.roi.residual_passes = r.value("residual_passes", c.roi.residual_passes);
      c.roi.stride = r.value("stride", c.roi.stride);
      if (r.contains("scan")) c.roi.scan = parse_scan_order(r["scan"].get<std::string>());
    }
    if (j.contains("registration")) {
      const auto& r = j["registration"];
      if (r.contains("mode")) c.mode = parse_mode(r["mode"].get<std::string>());
      if (r.contains("metric")) c.search.metric = parse_metric(r["metric"].get<std::string>());
      c.search.theta_range = deg_to_rad(r.value("theta_range_deg", rad_to_deg(c.search.theta_range)));
      c.search.theta_step = deg_to_rad(r.value("theta_step_deg", rad_to_deg(c.search.theta_step)));
      c.search.trans_range = r.value("trans_range", c.search.trans_range);
      c.search.trans_step = r.value("trans_step", c.search.trans_step);
      c.search.refine_levels = r.value("refine_levels", c.search.refine_levels);
      c.search.threads = r.value("threads", c.search.threads);
    }
    c.search.edge_filter = c.filter;
    if (j.contains("classifier")) {
      const auto& k = j["classifier"];
      if (k.contains("method")) c.classifier.method = parse_method(k["method"].get<std::string>());
      c.classifier.k = k.value("k", c.classifier.k);
      c.classifier.normalize = k.value("normalize", c.classifier.normalize);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed pipeline config: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_pipeline_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::detail::read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  return pipeline_config_from_json(j, path.parent_path());
}

/// Features of one frame inside `roi`, plus the thresholded ROI mask.
inline std::pair<FeatureVector, BinaryMask> frame_features(const ThermalImage& frame, const Rect& roi, int cutoff) {
  const ThermalImage cropped = crop(frame, roi);
  BinaryMask mask = threshold(cropped, cutoff);
  const auto st = segment_stats(cropped, mask);
  return {FeatureVector{st.mean_norm, st.std_raw, st.max_norm, asymmetry(cropped)}, std::move(mask)};
}

inline int run_pipeline(const PipelineConfig& cfg, std::ostream& diag) {
  try {
    cfg.validate();
    std::vector<ThermalImage> frames;
    for (const auto& f : cfg.frames) frames.push_back(io::load_image(f));
    const auto gallery = read_records(cfg.gallery);

    SequenceRegistration seq;
    if (frames.size() == 1) {
      seq.roi = detect_thyroid_roi(frames[0], cfg.filter, cfg.roi);
      seq.frames.push_back({RigidTransform2D::identity(), frames[0], 0.0});
    } else {
      seq = register_sequence(frames, cfg.mode, cfg.search, cfg.filter, cfg.roi);
    }

    fs::create_directories(cfg.output_dir);
    std::vector<RigidTransform2D> ts;
    std::vector<PatientRecord> rows;
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      const auto& rf = seq.frames[k];
      ts.push_back(rf.transform);
      io::save_image(rf.image, cfg.output_dir / frame_name("registered", k));
      auto [fv, mask] = frame_features(rf.image, seq.roi, cfg.cutoff);
      io::save_mask(mask, cfg.output_dir / frame_name("mask", k));
      rows.push_back({frame_name("registered", k, ""), fv, std::nullopt});
    }
    write_transforms(ts, cfg.output_dir / "transforms.txt");
    write_rect(seq.roi, cfg.output_dir / "roi.txt");
    write_records(rows, cfg.output_dir / "features.csv");

    // Classify the rows as written (6 decimals), exactly as `classify` would.
    const auto report = classify_batch(read_records(cfg.output_dir / "features.csv"), gallery, cfg.classifier);
    write_json(to_json(report), cfg.output_dir / "report.json");
    int sick = 0, healthy = 0;
    for (const auto& e : report.entries) {
      if (!e.error.empty()) {
        diag << "error: " << e.id << ": " << e.error << '\n';
        return exit_code_for(e.error_code);
      }
      (*e.predicted == Label::sick ? sick : healthy)++;
    }
    const Label label = sick == healthy ? *report.entries.front().predicted
                                        : (sick > healthy ? Label::sick : Label::healthy);
    nlohmann::ordered_json summary;
    summary["id"] = cfg.id;
    summary["label"] = to_string(label);
    summary["method"] = to_string(cfg.classifier.method);
    summary["frames"] = seq.frames.size();
    summary["sick_frames"] = sick;
    summary["healthy_frames"] = healthy;
    summary["roi"] = io::format_rect(seq.roi);
    write_json(summary, cfg.output_dir / "summary.json");
    return kExitOk;
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    diag << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace thermo

// thermo: command-line front end for the thermogram toolkit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "thermo/thermo.hpp"

namespace fs = std::filesystem;
using namespace thermo;

namespace {

struct FilterOpts {
  int d = 4;
  int t = 40;
  std::string axis = "cols";
  std::string polarity = "shadow";

  void add(CLI::App* app) {
    app->add_option("--d", d, "kernel distance in pixels")->capture_default_str();
    app->add_option("--t", t, "intensity-difference threshold")->capture_default_str();
    app->add_option("--axis", axis, "rows|cols|both")->capture_default_str();
    app->add_option("--polarity", polarity, "shadow|light")->capture_default_str();
  }
  FilterParams params() const { return {d, t, parse_axis(axis), parse_polarity(polarity)}; }
};

struct RoiOpts {
  RoiParams p;
  std::string scan = "bottom_up";

  void add(CLI::App* app) {
    app->add_option("--roi-w", p.roi_w)->capture_default_str();
    app->add_option("--roi-h", p.roi_h)->capture_default_str();
    app->add_option("--residual-w", p.residual_w)->capture_default_str();
    app->add_option("--residual-h", p.residual_h)->capture_default_str();
    app->add_option("--passes", p.residual_passes, "residual removal passes")->capture_default_str();
    app->add_option("--scan", scan, "bottom_up|top_down")->capture_default_str();
    app->add_option("--stride", p.stride)->capture_default_str();
  }
  RoiParams params() const {
    RoiParams out = p;
    out.scan = parse_scan_order(scan);
    return out;
  }
};

struct SearchOpts {
  double theta_range_deg = 10.0;
  double theta_step_deg = 0.5;
  double trans_range = 15.0;
  double trans_step = 1.0;
  int refine_levels = 3;
  int threads = 1;
  std::string metric = "mad";

  void add(CLI::App* app) {
    app->add_option("--metric", metric, "mad|chamfer")->capture_default_str();
    app->add_option("--theta-range", theta_range_deg, "degrees")->capture_default_str();
    app->add_option("--theta-step", theta_step_deg, "degrees")->capture_default_str();
    app->add_option("--trans-range", trans_range, "pixels")->capture_default_str();
    app->add_option("--trans-step", trans_step, "pixels")->capture_default_str();
    app->add_option("--refine", refine_levels, "refinement levels")->capture_default_str();
    app->add_option("--threads", threads)->capture_default_str();
  }
  SearchParams params(const FilterParams& fp) const {
    SearchParams sp;
    sp.theta_range = deg_to_rad(theta_range_deg);
    sp.theta_step = deg_to_rad(theta_step_deg);
    sp.trans_range = trans_range;
    sp.trans_step = trans_step;
    sp.refine_levels = refine_levels;
    sp.threads = threads;
    sp.metric = parse_metric(metric);
    sp.edge_filter = fp;
    return sp;
  }
};

int cmd_filter(const FilterOpts& f, const std::string& in, const std::string& out) {
  io::save_mask(directional_valley(io::load_image(in), f.params()), out);
  return kExitOk;
}

int cmd_roi(const FilterOpts& f, const RoiOpts& r, const std::string& in, const std::string& out_rect,
            const std::string& overlay) {
  const auto img = io::load_image(in);
  const Rect roi = detect_thyroid_roi(img, f.params(), r.params());
  if (out_rect.empty()) std::cout << io::format_rect(roi) << '\n';
  else write_rect(roi, out_rect);
  if (!overlay.empty()) io::save_image(draw_rect(img, roi), overlay);
  return kExitOk;
}

int cmd_register(const std::string& mode, const FilterOpts& f, const RoiOpts& r, const SearchOpts& s,
                 const std::string& ref_path, const std::vector<std::string>& movs,
                 const std::vector<std::string>& keypoints, const std::string& out_dir,
                 const std::string& transforms_path) {
  std::vector<ThermalImage> frames{io::load_image(ref_path)};
  for (const auto& m : movs) frames.push_back(io::load_image(m));
  if (!keypoints.empty() && keypoints.size() != movs.size())
    throw Error(ErrorCode::InvalidArgument, "need one --keypoints file per --mov");

  std::vector<RegisteredFrame> out;
  if (keypoints.empty()) {
    const auto fp = f.params();
    out = register_sequence(frames, parse_mode(mode), s.params(fp), fp, r.params()).frames;
  } else {
    out.push_back({RigidTransform2D::identity(), frames[0], 0.0});
    for (std::size_t k = 0; k < movs.size(); ++k) {
      const auto t = fit_rigid_from_keypoints(io::read_keypoints(keypoints[k]));
      out.push_back({t, warp_image(frames[k + 1], t, Interpolation::bilinear), 0.0});
    }
  }
  fs::create_directories(out_dir);
  std::vector<RigidTransform2D> ts;
  for (std::size_t k = 0; k < out.size(); ++k) {
    ts.push_back(out[k].transform);
    io::save_image(out[k].image, fs::path(out_dir) / frame_name("registered", k));
  }
  write_transforms(ts, transforms_path.empty() ? fs::path(out_dir) / "transforms.txt" : fs::path(transforms_path));
  return kExitOk;
}

int cmd_features(int cutoff, const std::string& roi_text, const std::string& in, const std::string& out,
                 std::string id) {
  const auto img = io::load_image(in);
  const Rect roi = roi_text.empty() ? img.bounds() : io::parse_rect(roi_text);
  if (id.empty()) id = fs::path(in).stem().string();
  const auto [fv, mask] = frame_features(img, roi, cutoff);
  write_records({PatientRecord{id, fv, std::nullopt}}, out);
  return kExitOk;
}

int cmd_classify(const std::string& method, int k, bool normalize, const std::string& gallery_path,
                 const std::string& in, const std::string& report_path) {
  ClassifyOptions opt;
  opt.method = parse_method(method);
  opt.k = k;
  opt.normalize = normalize;
  const auto gallery = read_records(gallery_path);
  const auto records = read_records(in);
  const auto report = classify_batch(records, gallery, opt);
  const auto j = to_json(report);
  if (report_path.empty()) std::cout << j.dump(2) << '\n';
  else write_json(j, report_path);
  for (const auto& e : report.entries)
    if (!e.error.empty()) {
      std::cerr << "error: " << e.id << ": " << e.error << '\n';
      return exit_code_for(e.error_code);
    }
  return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::detail::read_file_bytes(spec_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SpecOutOfBounds, std::string("spec is not valid JSON: ") + e.what());
  }
  const auto spec = phantom_spec_from_json(j);
  const auto frames = generate_phantom(spec);
  fs::create_directories(out_dir);
  for (std::size_t k = 0; k < frames.size(); ++k) io::save_image(frames[k], fs::path(out_dir) / frame_name("frame", k));
  const auto truth = ground_truth(spec);
  nlohmann::ordered_json t;
  t["bands"] = nlohmann::ordered_json::array();
  for (const auto& b : truth.bands) t["bands"].push_back(io::format_rect(b));
  t["marker"] = truth.marker ? nlohmann::ordered_json(io::format_rect(*truth.marker)) : nlohmann::ordered_json(nullptr);
  t["nodule_pixels"] = truth.nodule_mask.count();
  write_json(t, fs::path(out_dir) / "truth.json");
  io::save_mask(truth.nodule_mask, fs::path(out_dir) / "nodule_truth.pgm");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermogram analysis toolkit: edge filtering, ROI detection, registration, features, classification"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  FilterOpts filter_f;
  std::string filter_in, filter_out;
  auto* filter = app.add_subcommand("filter", "directional valley edge filter");
  filter_f.add(filter);
  filter->add_option("--in", filter_in)->required();
  filter->add_option("--out", filter_out)->required();

  FilterOpts roi_f;
  RoiOpts roi_r;
  std::string roi_in, roi_out, roi_overlay;
  auto* roi = app.add_subcommand("roi", "detect the neck ROI");
  roi_f.add(roi);
  roi_r.add(roi);
  roi->add_option("--in", roi_in)->required();
  roi->add_option("--out-rect", roi_out, "file receiving 'x y w h' (stdout if omitted)");
  roi->add_option("--overlay", roi_overlay, "image with the ROI border drawn");

  FilterOpts reg_f;
  RoiOpts reg_r;
  SearchOpts reg_s;
  std::string reg_mode = "roi-first", reg_ref, reg_out, reg_transforms;
  std::vector<std::string> reg_movs, reg_kps;
  auto* reg = app.add_subcommand("register", "rigidly register frames to a reference");
  reg->add_option("--mode", reg_mode, "roi-first|register-first")->capture_default_str();
  reg_s.add(reg);
  reg_f.add(reg);
  reg_r.add(reg);
  reg->add_option("--ref", reg_ref)->required();
  reg->add_option("--mov", reg_movs)->required();
  reg->add_option("--keypoints", reg_kps, "keypoint files, one per --mov (skips the search)");
  reg->add_option("--out-dir", reg_out)->required();
  reg->add_option("--transforms", reg_transforms);

  int feat_cutoff = kDefaultCutoff;
  std::string feat_roi, feat_in, feat_out, feat_id;
  auto* feat = app.add_subcommand("features", "extract the four ROI features");
  feat->add_option("--cutoff", feat_cutoff)->capture_default_str();
  feat->add_option("--roi", feat_roi, "\"x y w h\" (whole image if omitted)");
  feat->add_option("--in", feat_in)->required();
  feat->add_option("--out", feat_out)->required();
  feat->add_option("--id", feat_id, "record id (input stem if omitted)");

  std::string cls_method = "vote", cls_gallery, cls_in, cls_report;
  int cls_k = 1;
  bool cls_norm = false;
  auto* cls = app.add_subcommand("classify", "classify feature records against a labelled gallery");
  cls->add_option("--method", cls_method, "vote|knn")->capture_default_str();
  cls->add_option("--k", cls_k)->capture_default_str();
  cls->add_flag("--normalize", cls_norm, "min-max scale features (knn)");
  cls->add_option("--gallery", cls_gallery)->required();
  cls->add_option("--in", cls_in)->required();
  cls->add_option("--report", cls_report);

  std::string syn_spec, syn_out;
  auto* syn = app.add_subcommand("synth", "render a synthetic neck phantom sequence");
  syn->add_option("--spec", syn_spec)->required();
  syn->add_option("--out-dir", syn_out)->required();

  std::string pipe_cfg;
  auto* pipe = app.add_subcommand("pipeline", "run the whole chain from a JSON config");
  pipe->add_option("--config", pipe_cfg)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*filter) return cmd_filter(filter_f, filter_in, filter_out);
    if (*roi) return cmd_roi(roi_f, roi_r, roi_in, roi_out, roi_overlay);
    if (*reg) return cmd_register(reg_mode, reg_f, reg_r, reg_s, reg_ref, reg_movs, reg_kps, reg_out, reg_transforms);
    if (*feat) return cmd_features(feat_cutoff, feat_roi, feat_in, feat_out, feat_id);
    if (*cls) return cmd_classify(cls_method, cls_k, cls_norm, cls_gallery, cls_in, cls_report);
    if (*syn) return cmd_synth(syn_spec, syn_out);
    if (*pipe) return run_pipeline(load_pipeline_config(pipe_cfg), std::cerr);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitProcessing;
  }
  return kExitValidation;
}

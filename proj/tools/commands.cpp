#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "monostereo/dataset.hpp"
#include "monostereo/error.hpp"
#include "monostereo/gradcheck.hpp"
#include "monostereo/image_io.hpp"
#include "monostereo/image_ops.hpp"
#include "monostereo/metrics.hpp"
#include "monostereo/pipeline.hpp"
#include "monostereo/scene.hpp"

namespace fs = std::filesystem;

namespace monostereo::cli {

namespace {

DatasetIndex load_index(const DataSource& s) {
  if (!s.data.empty() && !s.kitti_root.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "use either --data or --kitti-root, not both");
  }
  if (!s.data.empty()) return load_synthetic_index(s.data);
  if (!s.kitti_root.empty()) {
    if (s.split.empty()) throw Error(ErrorCode::kInvalidArgument, "--kitti-root requires --split");
    return load_kitti_index(s.kitti_root, s.split);
  }
  throw Error(ErrorCode::kInvalidArgument, "no dataset given (--data or --kitti-root/--split)");
}

SignConvention parse_convention(const std::string& s) {
  if (s == "rectified") return SignConvention::kRectified;
  if (s == "uniform-minus") return SignConvention::kUniformMinus;
  throw Error(ErrorCode::kInvalidArgument, "unknown sign convention '" + s + "'");
}

std::ofstream open_output(const std::string& path) {
  if (path.empty()) return {};
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kWriteFailed, "cannot write " + path);
  return out;
}

TrainConfig finish_config(const TrainOptions& o) {
  TrainConfig c = o.config;
  c.preset = parse_preset(o.preset);
  c.sign_convention = parse_convention(o.sign_convention);
  c.init_scheme = parse_init_scheme(o.init_scheme);
  c.validate();
  return c;
}

int finish_training(const TrainResult& r, const TrainOptions& o) {
  save_checkpoint(r.checkpoint, o.out);
  if (r.aborted) {
    std::cerr << "training aborted: " << r.abort_reason << "; last good checkpoint saved to " << o.out << '\n';
    return 2;
  }
  if (!r.history.empty()) {
    std::printf("iterations %zu  initial loss %.6g  final loss %.6g  checkpoint %s\n", r.history.size(),
                r.history.front().total, r.history.back().total, o.out.c_str());
  }
  return 0;
}

std::string default_csv(const TrainOptions& o) { return o.loss_csv.empty() ? o.out + ".loss.csv" : o.loss_csv; }

DepthMap load_depth_any(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".png" || ext == ".PNG") return load_depth_png16(path);
  return DepthMap(read_pfm(path));
}

/// Predicted depth resampled to the ground-truth extent; disparity is scaled
/// with the width so the rig of the full-size view applies.
DepthMap depth_at_extent(const DisparityMap& disp, int height, int width, const CameraRig& rig) {
  if (disp.height() == height && disp.width() == width) return disparity_to_depth(disp, rig);
  DisparityMap up(resize_bilinear(disp, height, width));
  const double s = static_cast<double>(width) / disp.width();
  for (double& v : up.values()) v *= s;
  return disparity_to_depth(up, rig);
}

Image network_view(const Image& img, const DataSource& s) {
  if (s.height > 0 && s.width > 0 && (img.height() != s.height || img.width() != s.width)) {
    return Image(resize_bilinear(img, s.height, s.width));
  }
  return img;
}

}  // namespace

int run_synth_data(const SynthDataOptions& o) {
  if (o.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
  if (o.count < 1) throw Error(ErrorCode::kInvalidArgument, "--count must be >= 1");
  SceneSpec spec;
  spec.width = o.width;
  spec.height = o.height;
  spec.object_count = o.objects;
  spec.disparity_min = o.disp_min;
  spec.disparity_max = o.disp_max;
  spec.texture = parse_texture(o.texture);
  spec.haze = o.haze;
  spec.seed = o.seed;
  spec.validate();
  const CameraRig rig{o.baseline, o.focal};
  rig.validate();
  std::vector<StereoPair> pairs;
  std::vector<DisparityMap> gt;
  for (Scene& s : gen_scene_set(spec, o.count)) {
    pairs.push_back({std::move(s.left), std::move(s.right), rig});
    gt.push_back(std::move(s.gt_disparity));
  }
  write_synthetic_dataset(o.out, pairs, gt, rig);
  std::printf("wrote %d pairs to %s\n", o.count, o.out.c_str());
  return 0;
}

int run_train_syn(const TrainOptions& o) {
  if (o.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
  const TrainConfig config = finish_config(o);
  const auto dataset = load_pairs(load_index(o.source), o.source.height, o.source.width);
  std::unique_ptr<Checkpoint> resume;
  if (!o.resume.empty()) resume = std::make_unique<Checkpoint>(load_checkpoint(o.resume));
  std::ofstream csv = open_output(default_csv(o));
  const TrainResult r = train_view_synthesis(config, dataset, &csv, {}, resume.get());
  return finish_training(r, o);
}

int run_train_stereo(const TrainOptions& o) {
  if (o.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
  const TrainConfig config = finish_config(o);
  const StereoInputMode mode = parse_stereo_mode(o.mode);
  std::unique_ptr<Checkpoint> syn;
  if (mode != StereoInputMode::kOOD) {
    if (o.syn_ckpt.empty()) throw Error(ErrorCode::kInvalidArgument, "--syn-ckpt is required for mode " + o.mode);
    syn = std::make_unique<Checkpoint>(load_checkpoint(o.syn_ckpt));
  }
  const auto dataset = load_pairs(load_index(o.source), o.source.height, o.source.width);
  std::ofstream csv = open_output(default_csv(o));
  const TrainResult r = train_stereo_matching(config, dataset, mode, syn.get(), &csv);
  return finish_training(r, o);
}

int run_infer(const InferOptions& o) {
  if (o.syn_ckpt.empty() || o.stereo_ckpt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--syn-ckpt and --stereo-ckpt are required");
  }
  const Checkpoint syn = load_checkpoint(o.syn_ckpt);
  const Checkpoint stereo = load_checkpoint(o.stereo_ckpt);
  std::vector<std::pair<fs::path, CameraRig>> inputs;
  if (!o.image.empty()) {
    inputs.emplace_back(o.image, CameraRig{});
  } else {
    for (const DatasetEntry& e : load_index(o.source).entries) inputs.emplace_back(e.left, e.rig);
  }
  fs::create_directories(o.out_dir);
  for (auto& [path, rig] : inputs) {
    if (o.baseline > 0) rig.baseline_m = o.baseline;
    if (o.focal > 0) rig.focal_px = o.focal;
    const Image full = load_image(path);
    const Image left = network_view(full, o.source);
    CameraRig net_rig = rig;
    net_rig.focal_px *= static_cast<double>(left.width()) / full.width();
    const InferenceResult r = infer(left, syn, stereo, net_rig);
    const std::string stem = (fs::path(o.out_dir) / path.stem()).string();
    write_pfm(r.depth, stem + "_depth.pfm");
    write_pfm(r.disparity, stem + "_disp.pfm");
    save_image(r.synthesized_right, stem + "_right.png");
    save_depth_visualization(r.depth, stem + "_depth.png");
    std::printf("%s -> %s_depth.pfm\n", path.string().c_str(), stem.c_str());
  }
  return 0;
}

int run_eval(const EvalOptions& o) {
  MetricsOptions mo;
  mo.cap = parse_cap(o.cap);
  if (o.log_base == "e") {
    mo.log_base = LogBase::kNatural;
  } else if (o.log_base == "10") {
    mo.log_base = LogBase::kTen;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--log-base must be e or 10");
  }

  std::vector<std::pair<std::string, MetricsReport>> rows;
  if (!o.pred.empty() || !o.gt.empty()) {
    if (o.pred.empty() || o.gt.empty()) throw Error(ErrorCode::kInvalidArgument, "--pred and --gt go together");
    rows.emplace_back(fs::path(o.pred).filename().string(),
                      compute_metrics(load_depth_any(o.pred), load_depth_any(o.gt), mo));
  } else {
    if (o.syn_ckpt.empty() || o.stereo_ckpt.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "give --pred/--gt or --syn-ckpt/--stereo-ckpt with a dataset");
    }
    const Checkpoint syn = load_checkpoint(o.syn_ckpt);
    const Checkpoint stereo = load_checkpoint(o.stereo_ckpt);
    const DatasetIndex index = load_index(o.source);
    for (const DatasetEntry& e : index.entries) {
      const Image full = load_image(e.left);
      DepthMap gt;
      if (e.gt_disparity) {
        gt = disparity_to_depth(DisparityMap(read_pfm(*e.gt_disparity)), e.rig);
      } else {
        // KITTI: <drive>/image_02/data/<frame>.png -> <drive>/velodyne_points/data/<frame>.bin
        const fs::path drive = e.left.parent_path().parent_path().parent_path();
        const fs::path bin = drive / "velodyne_points" / "data" / (e.left.stem().string() + ".bin");
        const fs::path date_dir = drive.parent_path();
        gt = gt_depth_from_velodyne(load_velodyne_points(bin), load_kitti_calibration(date_dir), full.height(),
                                    full.width());
      }
      const Image left = network_view(full, o.source);
      CameraRig net_rig = e.rig;
      net_rig.focal_px *= static_cast<double>(left.width()) / full.width();
      const InferenceResult r = infer(left, syn, stereo, net_rig);
      const DepthMap pred = depth_at_extent(r.disparity, full.height(), full.width(), e.rig);
      rows.emplace_back(e.left.filename().string(), compute_metrics(pred, gt, mo));
    }
  }

  std::vector<MetricsReport> reports;
  for (const auto& r : rows) reports.push_back(r.second);
  const MetricsReport mean = average_reports(reports);
  if (!o.csv.empty()) {
    std::ofstream csv = open_output(o.csv);
    csv << metrics_csv_header() << '\n';
    for (const auto& [label, r] : rows) csv << metrics_csv_row(label, r) << '\n';
    csv << metrics_csv_row(o.label + ":mean", mean) << '\n';
  }
  std::cout << metrics_table({{o.label, mean}});
  return 0;
}

int run_gradcheck(const GradcheckOptions& o) {
  if (o.instances < 1) throw Error(ErrorCode::kInvalidArgument, "--instances must be >= 1");
  bool ok = true;
  for (const GradcheckResult& r : monostereo::run_gradcheck(o.seed, o.instances, o.network)) {
    std::printf("%-26s max_rel_err %.3e  tol %.0e  checked %zu  skipped %zu  %s\n", r.name.c_str(), r.max_rel_error,
                r.tolerance, r.checked, r.skipped, r.pass() ? "ok" : "FAIL");
    ok = ok && r.pass();
  }
  return ok ? 0 : 2;
}

}  // namespace monostereo::cli

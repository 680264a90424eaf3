#include "monostereo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "monostereo/error.hpp"
#include "monostereo/image_io.hpp"
#include "monostereo/image_ops.hpp"

namespace fs = std::filesystem;

namespace monostereo {

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

namespace {

using KeyValues = std::map<std::string, std::vector<double>>;

KeyValues read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingCalibration, "cannot open " + path.string());
  KeyValues out;
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> nums;
    double v = 0;
    while (values >> v) nums.push_back(v);
    // Non-numeric entries such as calib_time leave nums empty.
    if (!nums.empty()) out[key] = std::move(nums);
  }
  return out;
}

template <std::size_t N>
std::array<double, N> require(const KeyValues& kv, const std::string& key, const fs::path& file) {
  const auto it = kv.find(key);
  if (it == kv.end() || it->second.size() != N) {
    throw Error(ErrorCode::kMissingCalibration,
                file.string() + ": missing or malformed " + key);
  }
  std::array<double, N> out{};
  std::copy(it->second.begin(), it->second.end(), out.begin());
  return out;
}

}  // namespace

KittiCalibration load_kitti_calibration(const fs::path& date_dir) {
  const fs::path cam = date_dir / "calib_cam_to_cam.txt";
  if (!fs::exists(cam)) throw Error(ErrorCode::kMissingCalibration, "missing " + cam.string());
  const KeyValues kv = read_key_values(cam);
  KittiCalibration calib;
  calib.p_rect_02 = require<12>(kv, "P_rect_02", cam);
  calib.p_rect_03 = require<12>(kv, "P_rect_03", cam);
  if (kv.count("R_rect_00")) calib.r_rect_00 = require<9>(kv, "R_rect_00", cam);
  if (!(calib.focal() > 0.0)) throw Error(ErrorCode::kMissingCalibration, cam.string() + ": non-positive focal");

  const fs::path velo = date_dir / "calib_velo_to_cam.txt";
  if (fs::exists(velo)) {
    const KeyValues vk = read_key_values(velo);
    const auto r = require<9>(vk, "R", velo);
    const auto t = require<3>(vk, "T", velo);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) calib.velo_to_cam[i * 4 + j] = r[i * 3 + j];
      calib.velo_to_cam[i * 4 + 3] = t[i];
    }
  }
  return calib;
}

DatasetIndex load_kitti_index(const fs::path& root, const fs::path& split_file, Split split) {
  std::ifstream in(split_file);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open split file " + split_file.string());
  DatasetIndex index;
  index.split = split;
  std::map<std::string, CameraRig> rigs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string rel;
    if (!(ss >> rel)) continue;
    const std::string where = split_file.string() + " line " + std::to_string(line_no) + ": ";

    const fs::path left_rel(rel);
    const auto pos = rel.find("image_02");
    if (pos == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, where + "path does not contain image_02: " + rel);
    }
    std::string right_rel = rel;
    right_rel.replace(pos, 8, "image_03");
    const fs::path left = root / left_rel;
    const fs::path right = root / right_rel;
    if (!fs::exists(left)) throw Error(ErrorCode::kMissingFile, where + "missing " + left.string());
    if (!fs::exists(right)) throw Error(ErrorCode::kMissingFile, where + "missing " + right.string());

    const std::string date = left_rel.begin()->string();
    auto it = rigs.find(date);
    if (it == rigs.end()) {
      try {
        it = rigs.emplace(date, load_kitti_calibration(root / date).rig()).first;
      } catch (const Error& e) {
        throw Error(e.code(), where + e.what());
      }
    }
    index.entries.push_back({left, right, it->second, std::nullopt});
  }
  return index;
}

std::vector<Point3> load_velodyne_points(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": size is not a multiple of 16 bytes");
  }
  std::vector<Point3> pts(bytes.size() / 16);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    float rec[4];
    std::memcpy(rec, bytes.data() + 16 * i, 16);
    pts[i] = {rec[0], rec[1], rec[2]};
  }
  return pts;
}

DepthMap gt_depth_from_velodyne(const std::vector<Point3>& points, const KittiCalibration& calib,
                                int height, int width) {
  if (height <= 0 || width <= 0) throw Error(ErrorCode::kInvalidArgument, "empty depth extent");
  if (points.empty()) throw Error(ErrorCode::kEmptyInput, "no LIDAR points");
  DepthMap depth(height, width);
  const auto& v = calib.velo_to_cam;
  const auto& r = calib.r_rect_00;
  const auto& p = calib.p_rect_02;
  for (const Point3& pt : points) {
    double cam[3];
    for (int i = 0; i < 3; ++i) cam[i] = v[i * 4] * pt.x + v[i * 4 + 1] * pt.y + v[i * 4 + 2] * pt.z + v[i * 4 + 3];
    double rect[3];
    for (int i = 0; i < 3; ++i) rect[i] = r[i * 3] * cam[0] + r[i * 3 + 1] * cam[1] + r[i * 3 + 2] * cam[2];
    double img[3];
    for (int i = 0; i < 3; ++i) img[i] = p[i * 4] * rect[0] + p[i * 4 + 1] * rect[1] + p[i * 4 + 2] * rect[2] + p[i * 4 + 3];
    if (!(img[2] > 0.0)) continue;
    const double u = img[0] / img[2];
    const double w = img[1] / img[2];
    if (!std::isfinite(u) || !std::isfinite(w)) continue;
    const long x = std::lround(u);
    const long y = std::lround(w);
    if (x < 0 || y < 0 || x >= width || y >= height) continue;
    double& d = depth.at(static_cast<int>(y), static_cast<int>(x));
    if (d == DepthMap::kInvalid || img[2] < d) d = img[2];
  }
  return depth;
}

namespace {

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu%s", stem, i, ext);
  return buf;
}

}  // namespace

void write_synthetic_dataset(const fs::path& dir, const std::vector<StereoPair>& pairs,
                             const std::vector<DisparityMap>& gt, const CameraRig& rig) {
  if (!gt.empty() && gt.size() != pairs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "ground truth count does not match pair count");
  }
  rig.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kWriteFailed, "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw Error(ErrorCode::kWriteFailed, "cannot write manifest in " + dir.string());
  manifest.precision(17);
  manifest << "rig " << rig.baseline_m << ' ' << rig.focal_px << '\n';
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string l = numbered("left", i, ".png");
    const std::string r = numbered("right", i, ".png");
    save_image(pairs[i].left, dir / l);
    save_image(pairs[i].right, dir / r);
    manifest << l << ' ' << r;
    if (!gt.empty()) {
      const std::string d = numbered("disp", i, ".pfm");
      write_pfm(gt[i], dir / d);
      manifest << ' ' << d;
    }
    manifest << '\n';
  }
  if (!manifest) throw Error(ErrorCode::kWriteFailed, "failed writing manifest in " + dir.string());
}

DatasetIndex load_synthetic_index(const fs::path& dir, Split split) {
  const fs::path path = dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  DatasetIndex index;
  index.split = split;
  CameraRig rig;
  bool have_rig = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    const std::string where = path.string() + " line " + std::to_string(line_no) + ": ";
    if (first == "rig") {
      if (!(ss >> rig.baseline_m >> rig.focal_px)) throw Error(ErrorCode::kCorruptFile, where + "bad rig line");
      have_rig = true;
      continue;
    }
    std::string right, disp;
    if (!(ss >> right)) throw Error(ErrorCode::kCorruptFile, where + "expected '<left> <right> [disp]'");
    DatasetEntry e{dir / first, dir / right, rig, std::nullopt};
    if (ss >> disp) e.gt_disparity = dir / disp;
    if (!fs::exists(e.left)) throw Error(ErrorCode::kMissingFile, where + "missing " + e.left.string());
    if (!fs::exists(e.right)) throw Error(ErrorCode::kMissingFile, where + "missing " + e.right.string());
    index.entries.push_back(std::move(e));
  }
  if (!have_rig) throw Error(ErrorCode::kMissingCalibration, path.string() + ": no rig line");
  for (auto& e : index.entries) e.rig = rig;
  return index;
}

std::vector<StereoPair> load_pairs(const DatasetIndex& index, int height, int width) {
  std::vector<StereoPair> out;
  out.reserve(index.size());
  for (const DatasetEntry& e : index.entries) {
    Image left = load_image(e.left);
    Image right = load_image(e.right);
    if (!left.same_shape(right)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "left/right shape mismatch: " + e.left.string() + " vs " + e.right.string());
    }
    CameraRig rig = e.rig;
    if (height > 0 && width > 0 && (left.height() != height || left.width() != width)) {
      rig.focal_px *= static_cast<double>(width) / left.width();
      left = Image(resize_bilinear(left, height, width));
      right = Image(resize_bilinear(right, height, width));
    }
    out.push_back({std::move(left), std::move(right), rig});
  }
  return out;
}

std::vector<std::size_t> iteration_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(epoch) + 1)));
  // Explicit Fisher-Yates so the order does not depend on the standard library.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace monostereo

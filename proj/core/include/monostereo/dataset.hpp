#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "monostereo/raster.hpp"

namespace monostereo {

enum class Split { kTrain, kVal, kTest };
std::string to_string(Split s);

struct DatasetEntry {
  std::filesystem::path left;
  std::filesystem::path right;
  CameraRig rig;
  std::optional<std::filesystem::path> gt_disparity;  // PFM, synthetic sets only
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;
  Split split = Split::kTrain;

  std::size_t size() const noexcept { return entries.size(); }
};

using Mat3 = std::array<double, 9>;   // row-major
using Mat34 = std::array<double, 12>; // row-major

struct KittiCalibration {
  Mat34 p_rect_02{};
  Mat34 p_rect_03{};
  Mat3 r_rect_00{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Mat34 velo_to_cam{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};

  /// Focal length of the rectified left color camera.
  double focal() const { return p_rect_02[0]; }
  /// Baseline from the projection offsets: (P02[0,3] - P03[0,3]) / f.
  double baseline() const { return (p_rect_02[3] - p_rect_03[3]) / p_rect_02[0]; }
  CameraRig rig() const { return {baseline(), focal()}; }
};

/// Reads calib_cam_to_cam.txt and, when present, calib_velo_to_cam.txt from a
/// KITTI date directory.
KittiCalibration load_kitti_calibration(const std::filesystem::path& date_dir);

/// Split file: one relative path per line to an image_02 frame, e.g.
/// 2011_09_26/2011_09_26_drive_0001_sync/image_02/data/0000000000.png.
/// Blank lines and '#' comments are skipped. The image_03 counterpart is the
/// right view; the rig comes from the date directory's calibration.
DatasetIndex load_kitti_index(const std::filesystem::path& root,
                              const std::filesystem::path& split_file,
                              Split split = Split::kTrain);

struct Point3 {
  double x = 0, y = 0, z = 0;
};

/// KITTI velodyne .bin: float32 x, y, z, reflectance records.
std::vector<Point3> load_velodyne_points(const std::filesystem::path& path);

/// Projects LIDAR points into the rectified left color camera; the nearest
/// point wins each pixel and unhit pixels hold the 0 sentinel.
DepthMap gt_depth_from_velodyne(const std::vector<Point3>& points, const KittiCalibration& calib,
                                int height, int width);

/// Synthetic set layout: left_NNNNN.png, right_NNNNN.png, disp_NNNNN.pfm and
/// manifest.txt with a `rig <baseline_m> <focal_px>` line followed by
/// `<left> <right> <disp>` lines.
void write_synthetic_dataset(const std::filesystem::path& dir, const std::vector<StereoPair>& pairs,
                             const std::vector<DisparityMap>& gt, const CameraRig& rig);
DatasetIndex load_synthetic_index(const std::filesystem::path& dir, Split split = Split::kTrain);

/// Reads every pair of an index, optionally resizing to height x width.
std::vector<StereoPair> load_pairs(const DatasetIndex& index, int height = 0, int width = 0);

/// Seeded permutation of [0, n) for one epoch; pure in (n, seed, epoch).
std::vector<std::size_t> iteration_order(std::size_t n, std::uint64_t seed, int epoch);

}  // namespace monostereo

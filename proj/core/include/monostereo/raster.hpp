#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace monostereo {

/// Dense H x W x C grid of doubles, row-major with interleaved channels.
class Raster {
 public:
  Raster() = default;
  Raster(int height, int width, int channels, double fill = 0.0);
  Raster(int height, int width, int channels, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int y, int x, int c = 0) noexcept { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const noexcept { return data_[index(y, x, c)]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool same_extent(const Raster& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  double min_value() const;
  double max_value() const;
  bool all_finite() const;

  /// Extracts channel `c` as a single-channel raster.
  Raster channel(int c) const;

  bool operator==(const Raster& other) const = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Photometric image with values in [0, 1] and 1 or 3 channels.
class Image : public Raster {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);
  explicit Image(Raster raster);

  /// Throws if any value is non-finite or outside [0, 1].
  void validate() const;
};

/// Per-pixel horizontal correspondence offset, in pixels of its own scale.
class DisparityMap : public Raster {
 public:
  DisparityMap() = default;
  DisparityMap(int height, int width, double fill = 0.0);
  explicit DisparityMap(Raster raster);

  /// Upper clamp for a map of the given width.
  static double max_for_width(int width) noexcept { return 0.3 * width; }
  double max_disparity() const noexcept { return max_for_width(width()); }
};

/// Metric depth; 0 marks invalid or missing pixels.
class DepthMap : public Raster {
 public:
  DepthMap() = default;
  DepthMap(int height, int width, double fill = 0.0);
  explicit DepthMap(Raster raster);

  static constexpr double kInvalid = 0.0;
  bool valid(int y, int x) const noexcept { return at(y, x) > 0.0; }
};

struct CameraRig {
  double baseline_m = 0.54;
  double focal_px = 720.0;

  void validate() const;
};

struct StereoPair {
  Image left;
  Image right;
  CameraRig rig;

  void validate() const;
};

/// Concatenates two rasters of equal extent along the channel axis.
Raster concat_channels(const Raster& a, const Raster& b);

}  // namespace monostereo

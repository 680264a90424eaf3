#include "monostereo/raster.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "monostereo/error.hpp"

namespace monostereo {

namespace {

std::size_t checked_size(int h, int w, int c) {
  if (h < 0 || w < 0 || c < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative raster dimension");
  }
  return static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c);
}

}  // namespace

Raster::Raster(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels),
      data_(checked_size(height, width, channels), fill) {}

Raster::Raster(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != checked_size(height, width, channels)) {
    throw Error(ErrorCode::kDimensionMismatch, "raster data length does not match H*W*C");
  }
}

double Raster::min_value() const {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double Raster::max_value() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

bool Raster::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Raster Raster::channel(int c) const {
  if (c < 0 || c >= channels_) {
    throw Error(ErrorCode::kInvalidArgument, "channel index out of range");
  }
  Raster out(height_, width_, 1);
  for (std::size_t p = 0; p < pixel_count(); ++p) {
    out.data_[p] = data_[p * channels_ + c];
  }
  return out;
}

Image::Image(int height, int width, int channels, double fill)
    : Raster(height, width, channels, fill) {
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "images have 1 or 3 channels");
  }
}

Image::Image(Raster raster) : Raster(std::move(raster)) {
  if (channels() != 1 && channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "images have 1 or 3 channels");
  }
}

void Image::validate() const {
  for (double v : values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      std::ostringstream os;
      os << "image value " << v << " outside [0, 1]";
      throw Error(ErrorCode::kInvalidArgument, os.str());
    }
  }
}

DisparityMap::DisparityMap(int height, int width, double fill) : Raster(height, width, 1, fill) {}

DisparityMap::DisparityMap(Raster raster) : Raster(std::move(raster)) {
  if (channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "disparity maps have one channel");
  }
}

DepthMap::DepthMap(int height, int width, double fill) : Raster(height, width, 1, fill) {}

DepthMap::DepthMap(Raster raster) : Raster(std::move(raster)) {
  if (channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "depth maps have one channel");
  }
}

void CameraRig::validate() const {
  if (!(baseline_m > 0.0) || !(focal_px > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "camera rig needs positive baseline and focal length");
  }
}

void StereoPair::validate() const {
  if (!left.same_shape(right)) {
    throw Error(ErrorCode::kDimensionMismatch, "left and right views differ in shape");
  }
  rig.validate();
}

Raster concat_channels(const Raster& a, const Raster& b) {
  if (!a.same_extent(b)) {
    throw Error(ErrorCode::kDimensionMismatch, "cannot concatenate rasters of different extent");
  }
  const int ca = a.channels();
  const int cb = b.channels();
  Raster out(a.height(), a.width(), ca + cb);
  auto dst = out.values();
  auto sa = a.values();
  auto sb = b.values();
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    std::copy_n(sa.begin() + p * ca, ca, dst.begin() + p * (ca + cb));
    std::copy_n(sb.begin() + p * cb, cb, dst.begin() + p * (ca + cb) + ca);
  }
  return out;
}

}  // namespace monostereo

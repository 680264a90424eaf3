#include "monostereo/sampler.hpp"

#include <cmath>

#include "monostereo/error.hpp"

namespace monostereo {

namespace {

struct Tap {
  int x0;
  int x1;
  double frac;   // weight of x1
  bool clamped;  // column derivative is zero
};

Tap locate(double col, int width) {
  if (!(col > 0.0)) return {0, 0, 0.0, true};
  const double last = width - 1;
  if (col >= last) return {width - 1, width - 1, 0.0, true};
  const int x0 = static_cast<int>(col);
  return {x0, x0 + 1, col - x0, false};
}

void check_shapes(const Raster& source, const Raster& disp) {
  if (!source.same_extent(disp) || disp.channels() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "warp source and disparity must share extent");
  }
}

}  // namespace

double column_sign(WarpDirection dir, SignConvention convention) {
  if (convention == SignConvention::kUniformMinus) return -1.0;
  return dir == WarpDirection::kReconstructLeft ? -1.0 : 1.0;
}

Raster warp(const Raster& source, const Raster& disp, WarpDirection dir, SignConvention convention) {
  check_shapes(source, disp);
  const double sign = column_sign(dir, convention);
  const int h = source.height();
  const int w = source.width();
  const int c = source.channels();
  Raster out(h, w, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Tap t = locate(x + sign * disp.at(y, x), w);
      for (int ch = 0; ch < c; ++ch) {
        out.at(y, x, ch) = (1.0 - t.frac) * source.at(y, t.x0, ch) + t.frac * source.at(y, t.x1, ch);
      }
    }
  }
  return out;
}

Image warp(const Image& source, const DisparityMap& disp, WarpDirection dir, SignConvention convention) {
  return Image(warp(static_cast<const Raster&>(source), static_cast<const Raster&>(disp), dir, convention));
}

WarpGradients warp_backward(const Raster& source, const Raster& disp, WarpDirection dir,
                            const Raster& upstream, SignConvention convention) {
  check_shapes(source, disp);
  if (!upstream.same_shape(source)) {
    throw Error(ErrorCode::kDimensionMismatch, "upstream gradient must match the warp output");
  }
  const double sign = column_sign(dir, convention);
  const int h = source.height();
  const int w = source.width();
  const int c = source.channels();
  WarpGradients g{Raster(h, w, c), Raster(h, w, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Tap t = locate(x + sign * disp.at(y, x), w);
      double dcol = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const double up = upstream.at(y, x, ch);
        g.source.at(y, t.x0, ch) += (1.0 - t.frac) * up;
        g.source.at(y, t.x1, ch) += t.frac * up;
        if (!t.clamped) dcol += up * (source.at(y, t.x1, ch) - source.at(y, t.x0, ch));
      }
      g.disp.at(y, x) = sign * dcol;
    }
  }
  return g;
}

DepthMap disparity_to_depth(const DisparityMap& disp, const CameraRig& rig) {
  rig.validate();
  const double bf = rig.baseline_m * rig.focal_px;
  DepthMap depth(disp.height(), disp.width());
  auto src = disp.values();
  auto dst = depth.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] > kMinValidDisparity ? bf / src[i] : DepthMap::kInvalid;
  }
  return depth;
}

DisparityMap depth_to_disparity(const DepthMap& depth, const CameraRig& rig) {
  rig.validate();
  const double bf = rig.baseline_m * rig.focal_px;
  DisparityMap disp(depth.height(), depth.width());
  auto src = depth.values();
  auto dst = disp.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] > 0.0 ? bf / src[i] : 0.0;
  }
  return disp;
}

}  // namespace monostereo

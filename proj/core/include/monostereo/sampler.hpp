#pragma once

#include "monostereo/raster.hpp"

namespace monostereo {

enum class WarpDirection {
  kReconstructLeft,   // sample the right view at column j - d
  kReconstructRight,  // sample the left view at column j + d
};

/// kRectified shifts the two reconstructions in opposite directions, which is
/// what row-aligned stereo geometry requires. kUniformMinus samples at j - d
/// for both directions; it exists only to compare against that formulation.
enum class SignConvention { kRectified, kUniformMinus };

/// +1 or -1: the coefficient of the disparity in the sampling column.
double column_sign(WarpDirection dir, SignConvention convention = SignConvention::kRectified);

/// Horizontal linear resampling of every channel of `source` at column
/// j + sign * disp(i, j), clamped to [0, W - 1].
Raster warp(const Raster& source, const Raster& disp, WarpDirection dir,
            SignConvention convention = SignConvention::kRectified);

Image warp(const Image& source, const DisparityMap& disp, WarpDirection dir,
           SignConvention convention = SignConvention::kRectified);

struct WarpGradients {
  Raster source;  // same shape as the source
  Raster disp;    // single channel
};

/// Adjoint of warp() for an upstream gradient shaped like its output. Where
/// the sampling column is clamped, the derivative with respect to the column
/// is zero.
WarpGradients warp_backward(const Raster& source, const Raster& disp, WarpDirection dir,
                            const Raster& upstream,
                            SignConvention convention = SignConvention::kRectified);

/// Disparities at or below this many pixels map to the invalid depth sentinel.
inline constexpr double kMinValidDisparity = 1e-6;

DepthMap disparity_to_depth(const DisparityMap& disp, const CameraRig& rig);
DisparityMap depth_to_disparity(const DepthMap& depth, const CameraRig& rig);

}  // namespace monostereo

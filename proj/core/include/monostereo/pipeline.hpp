#pragma once

#include "monostereo/network.hpp"
#include "monostereo/raster.hpp"
#include "monostereo/sampler.hpp"

namespace monostereo {

struct InferenceResult {
  Image synthesized_right;
  DisparityMap disparity;
  DepthMap depth;
};

/// Monocular inference: synthesize the right view, run the stereo net on
/// concat(left, synthesized right), convert its scale-0 d^l to depth.
InferenceResult infer(const Image& left, const Checkpoint& syn_ckpt,
                      const Checkpoint& stereo_ckpt, const CameraRig& rig,
                      SignConvention convention = SignConvention::kRectified);

DepthMap infer_depth(const Image& left, const Checkpoint& syn_ckpt, const Checkpoint& stereo_ckpt,
                     const CameraRig& rig);

}  // namespace monostereo

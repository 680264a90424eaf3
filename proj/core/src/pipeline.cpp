#include "monostereo/pipeline.hpp"

#include "monostereo/error.hpp"
#include "monostereo/train.hpp"

namespace monostereo {

InferenceResult infer(const Image& left, const Checkpoint& syn_ckpt, const Checkpoint& stereo_ckpt,
                      const CameraRig& rig, SignConvention convention) {
  rig.validate();
  if (stereo_ckpt.spec.role != NetworkRole::kStereoMatching) {
    throw Error(ErrorCode::kWrongCheckpointKind, "expected a stereo-matching checkpoint, got " +
                                                     to_string(stereo_ckpt.spec.role));
  }
  InferenceResult r;
  r.synthesized_right = synthesize_right(syn_ckpt, left, convention);
  const MultiScaleOutput out = predict(stereo_ckpt, concat_channels(left, r.synthesized_right));
  r.disparity = out.scales.front().left;
  r.depth = disparity_to_depth(r.disparity, rig);
  return r;
}

DepthMap infer_depth(const Image& left, const Checkpoint& syn_ckpt, const Checkpoint& stereo_ckpt,
                     const CameraRig& rig) {
  return infer(left, syn_ckpt, stereo_ckpt, rig).depth;
}

}  // namespace monostereo

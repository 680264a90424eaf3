#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monostereo/raster.hpp"

namespace monostereo {

enum class Texture { kNoise, kGradient, kChecker };

std::string to_string(Texture t);
Texture parse_texture(const std::string& s);

struct SceneSpec {
  int width = 128;
  int height = 64;
  int object_count = 3;
  int disparity_min = 8;  // background layer, pixels
  int disparity_max = 30;
  Texture texture = Texture::kNoise;
  std::uint64_t seed = 0;
  /// Airlight strength: a layer's mean color moves toward a fixed haze color
  /// by haze * (disparity_max - d) / (disparity_max - disparity_min), giving a
  /// monocular depth cue. 0 disables.
  double haze = 0.5;

  void validate() const;
};

struct Scene {
  Image left;
  Image right;
  DisparityMap gt_disparity;  // left-view disparity of the visible layer
  Raster visible;             // 1 where the left pixel is also seen in the right view
};

/// Fronto-parallel textured rectangles over a textured background, each layer
/// at a constant integer disparity. The right view is rendered by shifting
/// every layer left by its disparity with nearer layers on top.
Scene gen_scene(const SceneSpec& spec);

/// `count` scenes sharing every field of `base` except the seed, which is
/// derived from (base.seed, first_index + i).
std::vector<Scene> gen_scene_set(const SceneSpec& base, int count, int first_index = 0);

/// Default rig for synthetic sets: b * f = 100, so disparities of 2-50 px map
/// to 50-2 m.
inline CameraRig synthetic_rig() { return {0.5, 200.0}; }

}  // namespace monostereo

#pragma once

#include <array>
#include <vector>

#include "monostereo/raster.hpp"

namespace monostereo {

inline constexpr int kDisparityScales = 4;

struct ScaleDisparities {
  DisparityMap left;   // d^l: left-view disparity, reconstructs the left view
  DisparityMap right;  // d^r: right-view disparity, reconstructs the right view
};

/// Head output: scale s has the input extent divided by 2^s.
struct MultiScaleOutput {
  std::vector<ScaleDisparities> scales;
};

/// Same-layout gradient container for MultiScaleOutput.
struct MultiScaleGradient {
  std::vector<ScaleDisparities> scales;
};

/// Left/right image pyramids of a stereo pair, level s matching disparity
/// scale s.
struct StereoPyramid {
  std::vector<Image> left;
  std::vector<Image> right;

  static StereoPyramid build(const Image& left, const Image& right, int levels = kDisparityScales);
  int levels() const noexcept { return static_cast<int>(left.size()); }
};

}  // namespace monostereo

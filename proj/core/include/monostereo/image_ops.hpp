#pragma once

#include <vector>

#include "monostereo/raster.hpp"

namespace monostereo {

/// Dyadic pyramid by 2x2 box averaging. Level k has ceil(prev/2) rows and
/// columns; odd trailing rows/columns are edge-replicated before averaging.
std::vector<Raster> pyramid(const Raster& img, int levels);
std::vector<Image> pyramid(const Image& img, int levels);

/// Halves one level with the same rule as pyramid().
Raster downsample2(const Raster& img);

struct ImageGradients {
  Raster dx;  // single channel
  Raster dy;  // single channel
};

/// Forward differences, zero at the trailing column/row, averaged over
/// channels.
ImageGradients image_gradients(const Raster& img);

/// Bilinear resize with pixel-center alignment.
Raster resize_bilinear(const Raster& img, int height, int width);

/// Horizontal mirror.
Raster flip_horizontal(const Raster& img);

}  // namespace monostereo

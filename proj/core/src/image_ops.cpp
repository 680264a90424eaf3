#include "monostereo/image_ops.hpp"

#include <algorithm>
#include <cmath>

#include "monostereo/error.hpp"

namespace monostereo {

Raster downsample2(const Raster& img) {
  const int h = img.height();
  const int w = img.width();
  const int c = img.channels();
  const int oh = (h + 1) / 2;
  const int ow = (w + 1) / 2;
  Raster out(oh, ow, c);
  for (int y = 0; y < oh; ++y) {
    const int y0 = 2 * y;
    const int y1 = std::min(y0 + 1, h - 1);
    for (int x = 0; x < ow; ++x) {
      const int x0 = 2 * x;
      const int x1 = std::min(x0 + 1, w - 1);
      for (int ch = 0; ch < c; ++ch) {
        out.at(y, x, ch) =
            0.25 * (img.at(y0, x0, ch) + img.at(y0, x1, ch) + img.at(y1, x0, ch) + img.at(y1, x1, ch));
      }
    }
  }
  return out;
}

std::vector<Raster> pyramid(const Raster& img, int levels) {
  if (levels < 1) {
    throw Error(ErrorCode::kInvalidArgument, "pyramid needs at least one level");
  }
  const long need = 1L << (levels - 1);
  if (img.height() < need || img.width() < need) {
    throw Error(ErrorCode::kImageTooSmall, "image too small for " + std::to_string(levels) + " levels");
  }
  std::vector<Raster> out;
  out.reserve(levels);
  out.push_back(img);
  for (int k = 1; k < levels; ++k) {
    out.push_back(downsample2(out.back()));
  }
  return out;
}

std::vector<Image> pyramid(const Image& img, int levels) {
  std::vector<Image> out;
  for (auto& level : pyramid(static_cast<const Raster&>(img), levels)) {
    out.emplace_back(std::move(level));
  }
  return out;
}

ImageGradients image_gradients(const Raster& img) {
  const int h = img.height();
  const int w = img.width();
  const int c = img.channels();
  if (h < 2 || w < 2) {
    throw Error(ErrorCode::kImageTooSmall, "image gradients need at least 2x2 pixels");
  }
  ImageGradients g{Raster(h, w, 1), Raster(h, w, 1)};
  const double inv_c = 1.0 / c;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dx = 0.0;
      double dy = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        if (x + 1 < w) dx += img.at(y, x + 1, ch) - img.at(y, x, ch);
        if (y + 1 < h) dy += img.at(y + 1, x, ch) - img.at(y, x, ch);
      }
      g.dx.at(y, x) = dx * inv_c;
      g.dy.at(y, x) = dy * inv_c;
    }
  }
  return g;
}

Raster resize_bilinear(const Raster& img, int height, int width) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kInvalidArgument, "resize target must be positive");
  }
  if (height == img.height() && width == img.width()) return img;
  Raster out(height, width, img.channels());
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels(); ++c) {
        const double top = (1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        out.at(y, x, c) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Raster flip_horizontal(const Raster& img) {
  Raster out(img.height(), img.width(), img.channels());
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(y, x, c) = img.at(y, w - 1 - x, c);
      }
    }
  }
  return out;
}

}  // namespace monostereo

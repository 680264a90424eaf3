#pragma once

#include <cstddef>
#include <vector>

#include "monostereo/raster.hpp"

namespace monostereo {

/// Planar C x H x W activation buffer used inside the network.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height) * width; }
  double* plane(int c) noexcept { return data.data() + c * plane_size(); }
  const double* plane(int c) const noexcept { return data.data() + c * plane_size(); }
  double& at(int c, int y, int x) noexcept { return data[(c * plane_size()) + y * width + x]; }
  double at(int c, int y, int x) const noexcept { return data[(c * plane_size()) + y * width + x]; }

  static Tensor from_raster(const Raster& r);
  Raster to_raster() const;
};

namespace nn {

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int pad = 1;

  int out_extent(int in) const noexcept { return (in + 2 * pad - kernel) / stride + 1; }
};

/// weight layout [out][in][k][k]; zero padding.
Tensor conv2d(const Tensor& in, const std::vector<double>& weight, const std::vector<double>& bias,
              int out_channels, const ConvGeometry& g);

/// Accumulates into grad_in (may be empty to skip), grad_weight and grad_bias.
void conv2d_backward(const Tensor& in, const std::vector<double>& weight, const Tensor& grad_out,
                     const ConvGeometry& g, Tensor* grad_in, std::vector<double>& grad_weight,
                     std::vector<double>& grad_bias);

/// Exponential-linear unit with alpha = 1.
Tensor elu(const Tensor& x);
void elu_backward(const Tensor& y, const Tensor& grad_out, Tensor& grad_in);

struct MaxPoolResult {
  Tensor out;
  std::vector<int> argmax;  // flat input index per output element
};
MaxPoolResult max_pool(const Tensor& in, int kernel, int stride, int pad);
void max_pool_backward(const MaxPoolResult& fwd, const Tensor& grad_out, Tensor& grad_in);

Tensor upsample_nearest2(const Tensor& in);
void upsample_nearest2_backward(const Tensor& grad_out, Tensor& grad_in);

Tensor concat(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);

}  // namespace nn
}  // namespace monostereo

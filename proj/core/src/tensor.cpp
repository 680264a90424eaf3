#include "monostereo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "monostereo/error.hpp"

namespace monostereo {

Tensor Tensor::from_raster(const Raster& r) {
  Tensor t(r.channels(), r.height(), r.width());
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      for (int c = 0; c < r.channels(); ++c) t.at(c, y, x) = r.at(y, x, c);
    }
  }
  return t;
}

Raster Tensor::to_raster() const {
  Raster r(height, width, channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) r.at(y, x, c) = at(c, y, x);
    }
  }
  return r;
}

namespace nn {

namespace {

// Output columns whose input tap ox*stride + kx - pad lies inside [0, in_w).
struct ColumnRange {
  int begin;
  int end;
};

ColumnRange valid_columns(int kx, int in_w, int out_w, const ConvGeometry& g) {
  const int off = kx - g.pad;
  int begin = 0;
  if (off < 0) begin = (-off + g.stride - 1) / g.stride;
  int end = out_w;
  // need ox*stride + off <= in_w - 1
  const int last = in_w - 1 - off;
  if (last < 0) return {0, 0};
  end = std::min(out_w, last / g.stride + 1);
  return {begin, std::max(begin, end)};
}

}  // namespace

Tensor conv2d(const Tensor& in, const std::vector<double>& weight, const std::vector<double>& bias,
              int out_channels, const ConvGeometry& g) {
  const int cin = in.channels;
  const int k = g.kernel;
  if (weight.size() != static_cast<std::size_t>(out_channels) * cin * k * k ||
      bias.size() != static_cast<std::size_t>(out_channels)) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d: parameter size does not match geometry");
  }
  const int oh = g.out_extent(in.height);
  const int ow = g.out_extent(in.width);
  Tensor out(out_channels, oh, ow);
  std::vector<ColumnRange> cols(k);
  for (int kx = 0; kx < k; ++kx) cols[kx] = valid_columns(kx, in.width, ow, g);

  for (int oc = 0; oc < out_channels; ++oc) {
    double* op = out.plane(oc);
    std::fill(op, op + out.plane_size(), bias[oc]);
    for (int ic = 0; ic < cin; ++ic) {
      const double* ip = in.plane(ic);
      const double* wp = weight.data() + (static_cast<std::size_t>(oc) * cin + ic) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= in.height) continue;
          const double* irow = ip + static_cast<std::size_t>(iy) * in.width;
          double* orow = op + static_cast<std::size_t>(oy) * ow;
          for (int kx = 0; kx < k; ++kx) {
            const double wv = wp[ky * k + kx];
            const int off = kx - g.pad;
            const auto [b, e] = cols[kx];
            if (g.stride == 1) {
              for (int ox = b; ox < e; ++ox) orow[ox] += wv * irow[ox + off];
            } else {
              for (int ox = b; ox < e; ++ox) orow[ox] += wv * irow[ox * g.stride + off];
            }
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& in, const std::vector<double>& weight, const Tensor& grad_out,
                     const ConvGeometry& g, Tensor* grad_in, std::vector<double>& grad_weight,
                     std::vector<double>& grad_bias) {
  const int cin = in.channels;
  const int k = g.kernel;
  const int oc_count = grad_out.channels;
  const int oh = grad_out.height;
  const int ow = grad_out.width;
  std::vector<ColumnRange> cols(k);
  for (int kx = 0; kx < k; ++kx) cols[kx] = valid_columns(kx, in.width, ow, g);

  for (int oc = 0; oc < oc_count; ++oc) {
    const double* gp = grad_out.plane(oc);
    double bsum = 0.0;
    for (std::size_t i = 0; i < grad_out.plane_size(); ++i) bsum += gp[i];
    grad_bias[oc] += bsum;
    for (int ic = 0; ic < cin; ++ic) {
      const double* ip = in.plane(ic);
      double* gip = grad_in ? grad_in->plane(ic) : nullptr;
      const std::size_t wbase = (static_cast<std::size_t>(oc) * cin + ic) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = weight[wbase + ky * k + kx];
          const int off = kx - g.pad;
          const auto [b, e] = cols[kx];
          double wacc = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * g.stride + ky - g.pad;
            if (iy < 0 || iy >= in.height) continue;
            const double* irow = ip + static_cast<std::size_t>(iy) * in.width;
            const double* grow = gp + static_cast<std::size_t>(oy) * ow;
            if (g.stride == 1) {
              for (int ox = b; ox < e; ++ox) wacc += grow[ox] * irow[ox + off];
              if (gip) {
                double* dst = gip + static_cast<std::size_t>(iy) * in.width;
                for (int ox = b; ox < e; ++ox) dst[ox + off] += wv * grow[ox];
              }
            } else {
              for (int ox = b; ox < e; ++ox) wacc += grow[ox] * irow[ox * g.stride + off];
              if (gip) {
                double* dst = gip + static_cast<std::size_t>(iy) * in.width;
                for (int ox = b; ox < e; ++ox) dst[ox * g.stride + off] += wv * grow[ox];
              }
            }
          }
          grad_weight[wbase + ky * k + kx] += wacc;
        }
      }
    }
  }
}

Tensor elu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : std::expm1(v);
  return y;
}

void elu_backward(const Tensor& y, const Tensor& grad_out, Tensor& grad_in) {
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double d = y.data[i] > 0.0 ? 1.0 : y.data[i] + 1.0;
    grad_in.data[i] += grad_out.data[i] * d;
  }
}

MaxPoolResult max_pool(const Tensor& in, int kernel, int stride, int pad) {
  const int oh = (in.height + 2 * pad - kernel) / stride + 1;
  const int ow = (in.width + 2 * pad - kernel) / stride + 1;
  MaxPoolResult r{Tensor(in.channels, oh, ow), {}};
  r.argmax.resize(r.out.data.size());
  for (int c = 0; c < in.channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = -1;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= in.height) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= in.width) continue;
            const double v = in.at(c, iy, ix);
            if (v > best) {
              best = v;
              arg = static_cast<int>(c * in.plane_size() + iy * in.width + ix);
            }
          }
        }
        const std::size_t o = c * r.out.plane_size() + oy * ow + ox;
        r.out.data[o] = best;
        r.argmax[o] = arg;
      }
    }
  }
  return r;
}

void max_pool_backward(const MaxPoolResult& fwd, const Tensor& grad_out, Tensor& grad_in) {
  for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
    grad_in.data[fwd.argmax[i]] += grad_out.data[i];
  }
}

Tensor upsample_nearest2(const Tensor& in) {
  Tensor out(in.channels, in.height * 2, in.width * 2);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      const double* src = in.plane(c) + static_cast<std::size_t>(y / 2) * in.width;
      double* dst = out.plane(c) + static_cast<std::size_t>(y) * out.width;
      for (int x = 0; x < out.width; ++x) dst[x] = src[x / 2];
    }
  }
  return out;
}

void upsample_nearest2_backward(const Tensor& grad_out, Tensor& grad_in) {
  for (int c = 0; c < grad_in.channels; ++c) {
    for (int y = 0; y < grad_out.height; ++y) {
      const double* src = grad_out.plane(c) + static_cast<std::size_t>(y) * grad_out.width;
      double* dst = grad_in.plane(c) + static_cast<std::size_t>(y / 2) * grad_in.width;
      for (int x = 0; x < grad_out.width; ++x) dst[x / 2] += src[x];
    }
  }
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::kDimensionMismatch, "concat: spatial extents differ");
  }
  Tensor out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.data.size() != b.data.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "add: tensor sizes differ");
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

}  // namespace nn
}  // namespace monostereo

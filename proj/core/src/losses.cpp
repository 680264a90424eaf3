#include "monostereo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "monostereo/error.hpp"
#include "monostereo/image_ops.hpp"

namespace monostereo {

namespace {

void require_same_shape(const Raster& a, const Raster& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": inputs differ in shape");
  }
}

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Column (or row) weights of the adjoint of a clamped 1-D convolution
// applied to a ones vector: how often each sample is read, kernel-weighted.
std::vector<double> clamped_tap_mass(const std::vector<double>& kernel, int n) {
  const int r = static_cast<int>(kernel.size() / 2);
  std::vector<double> mass(n, 0.0);
  for (int p = 0; p < n; ++p) {
    for (int k = -r; k <= r; ++k) mass[clampi(p + k, 0, n - 1)] += kernel[k + r];
  }
  return mass;
}

}  // namespace

void LossWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma_w < 0 || gamma_mix < 0 || gamma_mix > 1 || sigma_g < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "loss weights must be non-negative with gamma_mix in [0, 1]");
  }
  for (double s : scale_weights) {
    if (s < 0) throw Error(ErrorCode::kInvalidArgument, "scale weights must be non-negative");
  }
}

LossValue ssim_loss(const Raster& a, const Raster& b) {
  require_same_shape(a, b, "ssim_loss");
  const int h = a.height();
  const int w = a.width();
  const int nc = a.channels();
  const double count = static_cast<double>(a.size());
  constexpr double kWin = 1.0 / 9.0;

  LossValue out{0.0, Raster(h, w, nc)};
  double sum = 0.0;
  for (int c = 0; c < nc; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double mu_a = 0, mu_b = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = clampi(y + dy, 0, h - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = clampi(x + dx, 0, w - 1);
            const double va = a.at(yy, xx, c);
            const double vb = b.at(yy, xx, c);
            mu_a += va;
            mu_b += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        mu_a *= kWin;
        mu_b *= kWin;
        const double var_a = saa * kWin - mu_a * mu_a;
        const double var_b = sbb * kWin - mu_b * mu_b;
        const double cov = sab * kWin - mu_a * mu_b;
        const double a1 = 2 * mu_a * mu_b + kSsimC1;
        const double a2 = 2 * cov + kSsimC2;
        const double b1 = mu_a * mu_a + mu_b * mu_b + kSsimC1;
        const double b2 = var_a + var_b + kSsimC2;
        const double s = (a1 * a2) / (b1 * b2);
        const double raw = 0.5 * (1.0 - s);
        const double term = std::clamp(raw, 0.0, 1.0);
        sum += term;
        if (raw != term) continue;

        // d term / d a_q = -(1/2) * (1/9) * (k1 + k2 b_q + k3 a_q) per window tap q.
        const double g = -0.5 / count * kWin;
        const double k1 = s * (2 * mu_b / a1 - 2 * mu_a / b1 - 2 * mu_b / a2 + 2 * mu_a / b2);
        const double k2 = 2 * s / a2;
        const double k3 = -2 * s / b2;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = clampi(y + dy, 0, h - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = clampi(x + dx, 0, w - 1);
            out.grad.at(yy, xx, c) += g * (k1 + k2 * b.at(yy, xx, c) + k3 * a.at(yy, xx, c));
          }
        }
      }
    }
  }
  out.value = sum / count;
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 0) throw Error(ErrorCode::kInvalidArgument, "negative Gaussian sigma");
  if (sigma == 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += k[i + r];
  }
  for (double& v : k) v /= total;
  return k;
}

LossValue smoothed_l1_loss(const Raster& a, const Raster& b, double sigma_g) {
  require_same_shape(a, b, "smoothed_l1_loss");
  const int h = a.height();
  const int w = a.width();
  const int nc = a.channels();
  const auto kernel = gaussian_kernel(sigma_g);
  const int r = static_cast<int>(kernel.size() / 2);
  const double count = static_cast<double>(a.size());

  // Separable blur of |a - b|: rows, then columns.
  Raster tmp(h, w, nc);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          const int xx = clampi(x + k, 0, w - 1);
          acc += kernel[k + r] * std::abs(a.at(y, xx, c) - b.at(y, xx, c));
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) acc += kernel[k + r] * tmp.at(clampi(y + k, 0, h - 1), x, c);
        sum += acc;
      }
    }
  }

  const auto mass_x = clamped_tap_mass(kernel, w);
  const auto mass_y = clamped_tap_mass(kernel, h);
  LossValue out{sum / count, Raster(h, w, nc)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = mass_y[y] * mass_x[x] / count;
      for (int c = 0; c < nc; ++c) out.grad.at(y, x, c) = m * sgn(a.at(y, x, c) - b.at(y, x, c));
    }
  }
  return out;
}

AlignmentLoss image_alignment_loss(const Raster& left, const Raster& right, const Raster& recon_left,
                                   const Raster& recon_right, const LossWeights& w) {
  require_same_shape(left, recon_left, "image_alignment_loss");
  require_same_shape(right, recon_right, "image_alignment_loss");
  require_same_shape(left, right, "image_alignment_loss");

  AlignmentLoss out{0.0, Raster(left.height(), left.width(), left.channels()),
                    Raster(left.height(), left.width(), left.channels())};
  auto view = [&](const Raster& recon, const Raster& orig, Raster& grad) {
    double value = 0.0;
    if (w.gamma_mix > 0.0) {
      const LossValue s = ssim_loss(recon, orig);
      value += w.gamma_mix * s.value;
      auto g = grad.values();
      auto sg = s.grad.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 0.5 * w.gamma_mix * sg[i];
    }
    if (w.gamma_mix < 1.0) {
      const LossValue l = smoothed_l1_loss(recon, orig, w.sigma_g);
      value += (1.0 - w.gamma_mix) * l.value;
      auto g = grad.values();
      auto lg = l.grad.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 0.5 * (1.0 - w.gamma_mix) * lg[i];
    }
    return value;
  };
  const double vl = view(recon_left, left, out.grad_recon_left);
  const double vr = view(recon_right, right, out.grad_recon_right);
  out.value = 0.5 * (vl + vr);
  return out;
}

AlignmentLoss image_alignment_loss(const StereoPair& orig, const Image& recon_left,
                                   const Image& recon_right, const LossWeights& w) {
  return image_alignment_loss(orig.left, orig.right, recon_left, recon_right, w);
}

DisparityPairLoss smoothness_loss(const Raster& disp_l, const Raster& disp_r, const Raster& left,
                                  const Raster& right) {
  if (!disp_l.same_extent(left) || !disp_r.same_extent(right) || !disp_l.same_extent(disp_r) ||
      disp_l.channels() != 1 || disp_r.channels() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "smoothness_loss: disparity/image extents differ");
  }
  const int h = disp_l.height();
  const int w = disp_l.width();
  const double n = static_cast<double>(disp_l.pixel_count());
  DisparityPairLoss out{0.0, Raster(h, w, 1), Raster(h, w, 1)};

  auto view = [&](const Raster& d, const Raster& img, Raster& grad) {
    const ImageGradients gi = image_gradients(img);
    double sum = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) {
          const double dd = d.at(y, x + 1) - d.at(y, x);
          const double wt = std::exp(-std::abs(gi.dx.at(y, x)));
          sum += std::abs(dd) * wt;
          const double g = sgn(dd) * wt / n;
          grad.at(y, x + 1) += g;
          grad.at(y, x) -= g;
        }
        if (y + 1 < h) {
          const double dd = d.at(y + 1, x) - d.at(y, x);
          const double wt = std::exp(-std::abs(gi.dy.at(y, x)));
          sum += std::abs(dd) * wt;
          const double g = sgn(dd) * wt / n;
          grad.at(y + 1, x) += g;
          grad.at(y, x) -= g;
        }
      }
    }
    return sum;
  };
  const double sl = view(disp_l, left, out.grad_left);
  const double sr = view(disp_r, right, out.grad_right);
  out.value = (sl + sr) / n;
  return out;
}

DisparityPairLoss lr_consistency_loss(const Raster& disp_l, const Raster& disp_r,
                                      SignConvention convention) {
  require_same_shape(disp_l, disp_r, "lr_consistency_loss");
  if (disp_l.channels() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "lr_consistency_loss: single-channel maps expected");
  }
  const int h = disp_l.height();
  const int w = disp_l.width();
  const double n = static_cast<double>(disp_l.pixel_count());
  DisparityPairLoss out{0.0, Raster(h, w, 1), Raster(h, w, 1)};

  // |d_self - d_other sampled through d_self|; gradients routed through the
  // warp adjoint for both the sampled values and the sampling position.
  auto term = [&](const Raster& self, const Raster& other, WarpDirection dir, Raster& grad_self,
                  Raster& grad_other) {
    const Raster sampled = warp(other, self, dir, convention);
    Raster upstream(h, w, 1);
    double sum = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double r = self.at(y, x) - sampled.at(y, x);
        sum += std::abs(r);
        upstream.at(y, x) = -sgn(r) / n;
      }
    }
    const WarpGradients wg = warp_backward(other, self, dir, upstream, convention);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        grad_self.at(y, x) += -upstream.at(y, x) + wg.disp.at(y, x);
        grad_other.at(y, x) += wg.source.at(y, x);
      }
    }
    return sum;
  };
  const double s1 = term(disp_l, disp_r, WarpDirection::kReconstructLeft, out.grad_left, out.grad_right);
  const double s2 = term(disp_r, disp_l, WarpDirection::kReconstructRight, out.grad_right, out.grad_left);
  out.value = (s1 + s2) / n;
  return out;
}

TotalLoss total_loss(const MultiScaleOutput& out, const StereoPyramid& targets, const LossWeights& w,
                     SignConvention convention) {
  w.validate();
  const int scales = static_cast<int>(out.scales.size());
  if (scales < 1 || targets.levels() != scales) {
    throw Error(ErrorCode::kDimensionMismatch,
                "total_loss: " + std::to_string(scales) + " disparity scales vs " +
                    std::to_string(targets.levels()) + " pyramid levels");
  }
  if (static_cast<int>(w.scale_weights.size()) != scales) {
    throw Error(ErrorCode::kDimensionMismatch, "total_loss: scale weight count differs from scale count");
  }

  TotalLoss result;
  result.report.per_scale.resize(scales);
  result.grad.scales.resize(scales);
  for (int s = 0; s < scales; ++s) {
    const auto& dl = out.scales[s].left;
    const auto& dr = out.scales[s].right;
    const Raster& left = targets.left[s];
    const Raster& right = targets.right[s];
    if (!dl.same_extent(left) || !dr.same_extent(right)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "total_loss: scale " + std::to_string(s) + " disparity does not match its pyramid level");
    }

    const Raster recon_left = warp(right, dl, WarpDirection::kReconstructLeft, convention);
    const Raster recon_right = warp(left, dr, WarpDirection::kReconstructRight, convention);
    const AlignmentLoss ia = image_alignment_loss(left, right, recon_left, recon_right, w);
    const WarpGradients gl =
        warp_backward(right, dl, WarpDirection::kReconstructLeft, ia.grad_recon_left, convention);
    const WarpGradients gr =
        warp_backward(left, dr, WarpDirection::kReconstructRight, ia.grad_recon_right, convention);
    const DisparityPairLoss ss = smoothness_loss(dl, dr, left, right);
    const DisparityPairLoss dc = lr_consistency_loss(dl, dr, convention);

    result.report.per_scale[s] = {ia.value, ss.value, dc.value};
    const double ws = w.scale_weights[s];
    result.report.ia += ws * ia.value;
    result.report.ss += ws * ss.value;
    result.report.dc += ws * dc.value;

    DisparityMap gdl(dl.height(), dl.width());
    DisparityMap gdr(dr.height(), dr.width());
    auto out_l = gdl.values();
    auto out_r = gdr.values();
    for (std::size_t i = 0; i < out_l.size(); ++i) {
      out_l[i] = ws * (w.alpha * gl.disp.values()[i] + w.beta * ss.grad_left.values()[i] +
                       w.gamma_w * dc.grad_left.values()[i]);
      out_r[i] = ws * (w.alpha * gr.disp.values()[i] + w.beta * ss.grad_right.values()[i] +
                       w.gamma_w * dc.grad_right.values()[i]);
    }
    result.grad.scales[s] = {std::move(gdl), std::move(gdr)};
  }
  result.report.total = w.alpha * result.report.ia + w.beta * result.report.ss + w.gamma_w * result.report.dc;
  return result;
}

std::string loss_csv_header(int scales) {
  std::string h = "iteration,total,ia,ss,dc";
  for (int s = 0; s < scales; ++s) {
    const auto k = std::to_string(s);
    h += ",ia_s" + k + ",ss_s" + k + ",dc_s" + k;
  }
  return h;
}

std::string loss_csv_row(long iteration, const LossReport& r) {
  std::string row = std::to_string(iteration);
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.10g", v);
    row += buf;
  };
  put(r.total);
  put(r.ia);
  put(r.ss);
  put(r.dc);
  for (const auto& t : r.per_scale) {
    put(t.ia);
    put(t.ss);
    put(t.dc);
  }
  return row;
}

StereoPyramid StereoPyramid::build(const Image& left, const Image& right, int levels) {
  return {pyramid(left, levels), pyramid(right, levels)};
}

}  // namespace monostereo

#pragma once

#include <array>
#include <string>
#include <vector>

#include "monostereo/multiscale.hpp"
#include "monostereo/raster.hpp"
#include "monostereo/sampler.hpp"

namespace monostereo {

struct LossWeights {
  double alpha = 1.0;      // image alignment
  double beta = 1.0;       // edge-aware smoothness
  double gamma_w = 0.1;    // left-right consistency
  double gamma_mix = 0.85; // SSIM share of the photometric term; 1 - gamma_mix goes to L1
  double sigma_g = 1.0;    // Gaussian std for the L1 residual blur, pixels
  std::vector<double> scale_weights = {1.0, 1.0, 1.0, 1.0};

  void validate() const;
};

struct LossValue {
  double value = 0.0;
  Raster grad;  // gradient with respect to the first argument
};

/// Mean over pixels and channels of clamp((1 - SSIM) / 2, 0, 1) where SSIM uses
/// 3x3 box statistics with edge replication and C1 = 0.01^2, C2 = 0.03^2.
LossValue ssim_loss(const Raster& a, const Raster& b);

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean of the Gaussian-blurred |a - b| map. The kernel is truncated at
/// ceil(3 sigma), normalized, and applied with edge replication.
LossValue smoothed_l1_loss(const Raster& a, const Raster& b, double sigma_g);

/// Normalized 1-D Gaussian taps for sigma, radius ceil(3 sigma). sigma == 0
/// yields the identity kernel.
std::vector<double> gaussian_kernel(double sigma);

struct AlignmentLoss {
  double value = 0.0;
  Raster grad_recon_left;
  Raster grad_recon_right;
};

/// Average over the two views of gamma_mix * SSIM + (1 - gamma_mix) * blurred L1.
AlignmentLoss image_alignment_loss(const Raster& left, const Raster& right,
                                   const Raster& recon_left, const Raster& recon_right,
                                   const LossWeights& w);
AlignmentLoss image_alignment_loss(const StereoPair& orig, const Image& recon_left,
                                   const Image& recon_right, const LossWeights& w);

struct DisparityPairLoss {
  double value = 0.0;
  Raster grad_left;
  Raster grad_right;
};

/// (1/N) sum over both views of |dx d| exp(-|dx I|) + |dy d| exp(-|dy I|).
DisparityPairLoss smoothness_loss(const Raster& disp_l, const Raster& disp_r, const Raster& left,
                                  const Raster& right);

/// (1/N) (sum |d^l - d^r sampled at the left-to-right position| + the mirrored
/// term). Gradients flow through the sampled value and the sampling position.
DisparityPairLoss lr_consistency_loss(const Raster& disp_l, const Raster& disp_r,
                                      SignConvention convention = SignConvention::kRectified);

struct ScaleTerms {
  double ia = 0.0;
  double ss = 0.0;
  double dc = 0.0;
};

struct LossReport {
  double total = 0.0;
  double ia = 0.0;  // scale-weighted sums
  double ss = 0.0;
  double dc = 0.0;
  std::vector<ScaleTerms> per_scale;
};

struct TotalLoss {
  LossReport report;
  MultiScaleGradient grad;
};

/// Reconstructs both views at every scale, evaluates the three terms against
/// the same-level targets and combines them:
///   total = sum_s w_s (alpha ia_s + beta ss_s + gamma_w dc_s).
TotalLoss total_loss(const MultiScaleOutput& out, const StereoPyramid& targets,
                     const LossWeights& w, SignConvention convention = SignConvention::kRectified);

/// Loss-curve CSV: iteration,total,ia,ss,dc,ia_s0,ss_s0,dc_s0,...
std::string loss_csv_header(int scales = kDisparityScales);
std::string loss_csv_row(long iteration, const LossReport& report);

}  // namespace monostereo

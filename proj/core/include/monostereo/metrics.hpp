#pragma once

#include <optional>
#include <string>
#include <vector>

#include "monostereo/raster.hpp"

namespace monostereo {

struct DepthCap {
  double lo = 0.0;
  double hi = 80.0;

  static DepthCap eigen() { return {0.0, 80.0}; }
  static DepthCap garg() { return {1.0, 50.0}; }
};

/// Parses "80" (0-80 m) or "50garg" (1-50 m).
DepthCap parse_cap(const std::string& s);
std::string cap_label(const DepthCap& cap);

enum class LogBase { kNatural, kTen };

struct CropRect {
  int y0 = 0;
  int x0 = 0;
  int height = 0;
  int width = 0;
};

struct MetricsOptions {
  DepthCap cap = DepthCap::eigen();
  LogBase log_base = LogBase::kNatural;
  std::optional<CropRect> crop;
};

struct MetricsReport {
  double rmse = 0.0;
  double rmse_log = 0.0;
  double ard = 0.0;
  double srd = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  std::size_t valid_pixel_count = 0;
  DepthCap cap;
};

/// Valid pixels are clamped into [lo, hi]; sentinel (<= 0) pixels untouched.
DepthMap apply_cap(const DepthMap& depth, double lo, double hi);

/// Evaluated where gt > 0, after clamping pred into [max(lo, 1e-3), hi].
MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt,
                              const MetricsOptions& options = {});

/// Fixed-order mean of per-image reports; the pixel count is summed.
MetricsReport average_reports(const std::vector<MetricsReport>& reports);

/// Channel-averaged mean absolute difference, in stored units.
double mae(const Image& synth, const Image& orig);
inline double mae_8bit(const Image& synth, const Image& orig) { return 255.0 * mae(synth, orig); }

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& label, const MetricsReport& r);
/// Columns: RMSE, RMSE(log), ARD, SRD, d<1.25, d<1.25^2, d<1.25^3.
std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace monostereo

#include "monostereo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "monostereo/error.hpp"

namespace monostereo {

DepthCap parse_cap(const std::string& s) {
  if (s == "80") return DepthCap::eigen();
  if (s == "50garg") return DepthCap::garg();
  throw Error(ErrorCode::kInvalidArgument, "unknown depth cap '" + s + "' (expected 80 or 50garg)");
}

std::string cap_label(const DepthCap& cap) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g-%gm", cap.lo, cap.hi);
  return buf;
}

DepthMap apply_cap(const DepthMap& depth, double lo, double hi) {
  if (!(lo >= 0.0 && hi > lo)) throw Error(ErrorCode::kInvalidArgument, "cap must satisfy 0 <= lo < hi");
  DepthMap out = depth;
  for (double& v : out.values()) {
    if (v > DepthMap::kInvalid) v = std::clamp(v, lo, hi);
  }
  return out;
}

MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, const MetricsOptions& options) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::kDimensionMismatch, "prediction and ground truth differ in shape");
  const DepthCap cap = options.cap;
  if (!(cap.lo >= 0.0 && cap.hi > cap.lo)) throw Error(ErrorCode::kInvalidArgument, "cap must satisfy 0 <= lo < hi");
  const double lo = std::max(cap.lo, 1e-3);

  int y0 = 0, x0 = 0, y1 = gt.height(), x1 = gt.width();
  if (options.crop) {
    const CropRect& c = *options.crop;
    if (c.y0 < 0 || c.x0 < 0 || c.height <= 0 || c.width <= 0 || c.y0 + c.height > gt.height() ||
        c.x0 + c.width > gt.width()) {
      throw Error(ErrorCode::kInvalidArgument, "crop rectangle outside the depth map");
    }
    y0 = c.y0;
    x0 = c.x0;
    y1 = c.y0 + c.height;
    x1 = c.x0 + c.width;
  }

  auto lg = [&](double v) { return options.log_base == LogBase::kTen ? std::log10(v) : std::log(v); };

  double se = 0, sle = 0, ard = 0, srd = 0;
  std::size_t n = 0, a1 = 0, a2 = 0, a3 = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double g = gt.at(y, x);
      if (!(g > 0.0)) continue;
      const double z = std::clamp(pred.at(y, x), lo, cap.hi);
      const double d = z - g;
      se += d * d;
      const double dl = lg(z) - lg(g);
      sle += dl * dl;
      ard += std::abs(d) / g;
      srd += d * d / g;
      const double ratio = std::max(z / g, g / z);
      a1 += ratio < 1.25;
      a2 += ratio < 1.25 * 1.25;
      a3 += ratio < 1.25 * 1.25 * 1.25;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "ground truth has no valid pixels");
  const double inv = 1.0 / static_cast<double>(n);
  MetricsReport r;
  r.rmse = std::sqrt(se * inv);
  r.rmse_log = std::sqrt(sle * inv);
  r.ard = ard * inv;
  r.srd = srd * inv;
  r.a1 = static_cast<double>(a1) * inv;
  r.a2 = static_cast<double>(a2) * inv;
  r.a3 = static_cast<double>(a3) * inv;
  r.valid_pixel_count = n;
  r.cap = cap;
  return r;
}

MetricsReport average_reports(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "no reports to average");
  MetricsReport m;
  m.cap = reports.front().cap;
  for (const MetricsReport& r : reports) {
    m.rmse += r.rmse;
    m.rmse_log += r.rmse_log;
    m.ard += r.ard;
    m.srd += r.srd;
    m.a1 += r.a1;
    m.a2 += r.a2;
    m.a3 += r.a3;
    m.valid_pixel_count += r.valid_pixel_count;
  }
  const double inv = 1.0 / static_cast<double>(reports.size());
  m.rmse *= inv;
  m.rmse_log *= inv;
  m.ard *= inv;
  m.srd *= inv;
  m.a1 *= inv;
  m.a2 *= inv;
  m.a3 *= inv;
  return m;
}

double mae(const Image& synth, const Image& orig) {
  if (!synth.same_shape(orig)) throw Error(ErrorCode::kDimensionMismatch, "MAE inputs differ in shape");
  if (synth.empty()) throw Error(ErrorCode::kEmptyInput, "MAE of empty images");
  double s = 0.0;
  const auto a = synth.values();
  const auto b = orig.values();
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

std::string metrics_csv_header() { return "label,cap,rmse,rmse_log,ard,srd,a1,a2,a3,valid_pixels"; }

std::string metrics_csv_row(const std::string& label, const MetricsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%zu", label.c_str(),
                cap_label(r.cap).c_str(), r.rmse, r.rmse_log, r.ard, r.srd, r.a1, r.a2, r.a3,
                r.valid_pixel_count);
  return buf;
}

std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t w = 5;
  for (const auto& [label, r] : rows) w = std::max(w, label.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %-9s %9s %9s %9s %9s %9s %9s %9s\n", static_cast<int>(w), "model", "cap", "RMSE",
                "RMSE(log)", "ARD", "SRD", "d<1.25", "d<1.25^2", "d<1.25^3");
  os << buf;
  for (const auto& [label, r] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %-9s %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f\n", static_cast<int>(w),
                  label.c_str(), cap_label(r.cap).c_str(), r.rmse, r.rmse_log, r.ard, r.srd, r.a1, r.a2, r.a3);
    os << buf;
  }
  return os.str();
}

}  // namespace monostereo

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "monostereo/gradcheck.hpp"
#include "monostereo/losses.hpp"
#include "monostereo/metrics.hpp"
#include "monostereo/pipeline.hpp"
#include "monostereo/sampler.hpp"
#include "monostereo/scene.hpp"
#include "monostereo/train.hpp"

using namespace monostereo;

namespace {

// Pinned tolerances and budgets.
constexpr double kWarpGradTol = 1e-6;
constexpr double kLossGradTol = 1e-5;
constexpr double kGradcheckSeconds = 60;
constexpr double kSceneWarpTol = 1e-6;
constexpr double kWarpSeconds = 10;
constexpr double kMetricTol = 1e-9;
constexpr double kMetricSeconds = 5;
constexpr double kAlgebraTol = 1e-12;
constexpr double kAlgebraSeconds = 5;
constexpr double kViewLossRatio = 0.5;
constexpr double kViewSeconds = 600;
constexpr double kPipelineSeconds = 900;
constexpr double kScheduleSeconds = 5;
constexpr int kTrials = 1000;

constexpr int kTrainScenes = 200;
constexpr int kHeldOutScenes = 20;
constexpr int kHeldOutFirstIndex = 100000;
constexpr long kViewIterations = 300;
constexpr long kStereoIterations = 100;
constexpr int kWindow = 10;  // iterations averaged at each end of a loss curve

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "FAILED ") + what);
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

void report(int id, const std::string& title, const Verdict& v) {
  std::printf("criterion %d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", title.c_str());
  for (const auto& n : v.notes) std::printf("    %s\n", n.c_str());
  std::fflush(stdout);
}

Raster random_raster(std::mt19937_64& rng, int h, int w, int c, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Raster r(h, w, c);
  for (double& v : r.values()) v = u(rng);
  return r;
}

// ---------------------------------------------------------------- 1

Verdict gradient_integrity() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto results = run_gradcheck(7, 20, false);
  const double secs = seconds_since(t0);
  for (const auto& r : results) {
    const bool warp = r.name.rfind("warp", 0) == 0;
    const double tol = warp ? kWarpGradTol : kLossGradTol;
    // The composite total_loss runs on fewer, larger 16x24 instances.
    const int min_instances = r.name == "total_loss" ? 1 : 20;
    v.check(r.instances >= min_instances && r.max_rel_error < tol,
            r.name + fmt2(": max rel err %.3g (tol %.0e)", r.max_rel_error, tol) + ", " +
                std::to_string(r.instances) + " instances, " + std::to_string(r.skipped) + " kink coords skipped");
  }
  v.check(secs < kGradcheckSeconds, fmt("%.2f s", secs));
  return v;
}

// ---------------------------------------------------------------- 2

Verdict warp_oracle() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);

  bool identity = true;
  for (int t = 0; t < 50; ++t) {
    const Raster src = random_raster(rng, 6, 13, 3);
    const Raster zero(6, 13, 1, 0.0);
    identity &= warp(src, zero, WarpDirection::kReconstructLeft) == src;
    identity &= warp(src, zero, WarpDirection::kReconstructRight) == src;
  }
  v.check(identity, "zero disparity returns the source bit-exactly (100 warps)");

  bool shift = true;
  for (int t = 0; t < 50; ++t) {
    const Raster src = random_raster(rng, 5, 20, 3);
    for (int k = 1; k <= 5; ++k) {
      const Raster d(5, 20, 1, static_cast<double>(k));
      const Raster l = warp(src, d, WarpDirection::kReconstructLeft);
      const Raster r = warp(src, d, WarpDirection::kReconstructRight);
      for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 20; ++x) {
          for (int c = 0; c < 3; ++c) {
            if (x - k >= 0) shift &= l.at(y, x, c) == src.at(y, x - k, c);
            if (x + k <= 19) shift &= r.at(y, x, c) == src.at(y, x + k, c);
          }
        }
      }
    }
  }
  v.check(shift, "integer shifts 1..5 exact on interior columns, both directions");

  double worst = 0.0;
  std::size_t visible = 0;
  SceneSpec base;
  base.seed = 5;
  for (int texture = 0; texture < 3; ++texture) {
    base.texture = static_cast<Texture>(texture);
    for (const Scene& s : gen_scene_set(base, 10)) {
      const Image recon = warp(s.right, s.gt_disparity, WarpDirection::kReconstructLeft);
      for (int y = 0; y < s.left.height(); ++y) {
        for (int x = 0; x < s.left.width(); ++x) {
          if (s.visible.at(y, x) <= 0.5) continue;
          ++visible;
          for (int c = 0; c < s.left.channels(); ++c) {
            worst = std::max(worst, std::abs(recon.at(y, x, c) - s.left.at(y, x, c)));
          }
        }
      }
    }
  }
  v.check(worst < kSceneWarpTol && visible > 0,
          fmt2("30 generated scenes: max abs err %.3g over %.0f visible pixels", worst, static_cast<double>(visible)));
  const double secs = seconds_since(t0);
  v.check(secs < kWarpSeconds, fmt("%.2f s", secs));
  return v;
}

// ---------------------------------------------------------------- 3

// Direct summation written independently of compute_metrics.
MetricsReport metrics_oracle(const DepthMap& pred, const DepthMap& gt, double lo, double hi) {
  std::vector<double> z, g;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.values()[i] <= 0.0) continue;
    double p = pred.values()[i];
    const double floor = lo > 1e-3 ? lo : 1e-3;
    if (p < floor) p = floor;
    if (p > hi) p = hi;
    z.push_back(p);
    g.push_back(gt.values()[i]);
  }
  const double n = static_cast<double>(z.size());
  MetricsReport r;
  double se = 0, sle = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    se += (z[i] - g[i]) * (z[i] - g[i]);
    sle += (std::log(z[i]) - std::log(g[i])) * (std::log(z[i]) - std::log(g[i]));
    r.ard += std::fabs(z[i] - g[i]) / g[i] / n;
    r.srd += (z[i] - g[i]) * (z[i] - g[i]) / g[i] / n;
    const double delta = z[i] / g[i] > g[i] / z[i] ? z[i] / g[i] : g[i] / z[i];
    if (delta < 1.25) r.a1 += 1.0 / n;
    if (delta < 1.5625) r.a2 += 1.0 / n;
    if (delta < 1.953125) r.a3 += 1.0 / n;
  }
  r.rmse = std::sqrt(se / n);
  r.rmse_log = std::sqrt(sle / n);
  r.valid_pixel_count = z.size();
  return r;
}

double field_gap(const MetricsReport& a, const MetricsReport& b) {
  const double f[] = {a.rmse - b.rmse, a.rmse_log - b.rmse_log, a.ard - b.ard, a.srd - b.srd,
                      a.a1 - b.a1,     a.a2 - b.a2,             a.a3 - b.a3};
  double m = 0;
  for (double x : f) m = std::max(m, std::abs(x));
  if (a.valid_pixel_count != b.valid_pixel_count) m = std::max(m, 1.0);
  return m;
}

Verdict metric_oracle() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> depth(0.2, 120.0), unit(0.0, 1.0);
  double worst = 0.0;
  int clamped = 0, sentinels = 0;
  for (int t = 0; t < 100; ++t) {
    DepthMap pred(8, 8), gt(8, 8);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gt.values()[i] = unit(rng) < 0.2 ? 0.0 : depth(rng);
      pred.values()[i] = unit(rng) < 0.05 ? 0.0 : depth(rng);
      sentinels += gt.values()[i] == 0.0;
      clamped += pred.values()[i] > 50.0 || pred.values()[i] < 1.0;
    }
    for (const DepthCap cap : {DepthCap::eigen(), DepthCap::garg()}) {
      MetricsOptions o;
      o.cap = cap;
      worst = std::max(worst, field_gap(compute_metrics(pred, gt, o), metrics_oracle(pred, gt, cap.lo, cap.hi)));
    }
  }
  v.check(worst < kMetricTol, fmt("100 random 8x8 pairs at both caps: max field gap %.3g", worst) + " (" +
                                  std::to_string(sentinels) + " sentinel gt, " + std::to_string(clamped) +
                                  " pred outside 1-50 m)");

  DepthMap z(2, 1), g(2, 1);
  z.at(0, 0) = 2;
  z.at(1, 0) = 4;
  g.at(0, 0) = 1;
  g.at(1, 0) = 4;
  const MetricsReport r = compute_metrics(z, g);
  const bool exact = r.rmse == std::sqrt(0.5) && r.ard == 0.5 && r.srd == 0.5 && r.a1 == 0.5 &&
                     r.valid_pixel_count == 2;
  v.check(exact, fmt2("2-pixel example: rmse %.17g ard %.17g", r.rmse, r.ard) + fmt2(" srd %.17g a1 %.17g", r.srd, r.a1));
  const double secs = seconds_since(t0);
  v.check(secs < kMetricSeconds, fmt("%.2f s", secs));
  return v;
}

// ---------------------------------------------------------------- 4

MultiScaleOutput random_output(std::mt19937_64& rng, int h, int w) {
  MultiScaleOutput out;
  for (int s = 0; s < kDisparityScales; ++s) {
    const int hs = h >> s, ws = w >> s;
    const double dmax = DisparityMap::max_for_width(ws);
    out.scales.push_back({DisparityMap(random_raster(rng, hs, ws, 1, 0.0, dmax)),
                          DisparityMap(random_raster(rng, hs, ws, 1, 0.0, dmax))});
  }
  return out;
}

double max_rel_gap(const MultiScaleGradient& a, const MultiScaleGradient& b, double scale) {
  double m = 0;
  for (std::size_t s = 0; s < a.scales.size(); ++s) {
    for (int side = 0; side < 2; ++side) {
      const auto& x = side ? a.scales[s].right : a.scales[s].left;
      const auto& y = side ? b.scales[s].right : b.scales[s].left;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double ref = scale * x.values()[i];
        m = std::max(m, std::abs(y.values()[i] - ref) / std::max(1e-300, std::abs(ref) + 1e-30));
      }
    }
  }
  return m;
}

Verdict loss_algebra() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> weight(0.05, 3.0);
  double recompose = 0, homog_value = 0, homog_grad = 0;
  for (int t = 0; t < 20; ++t) {
    const Image left(random_raster(rng, 16, 32, 3));
    const Image right(random_raster(rng, 16, 32, 3));
    const StereoPyramid pyr = StereoPyramid::build(left, right);
    const MultiScaleOutput out = random_output(rng, 16, 32);
    LossWeights w;
    w.alpha = weight(rng);
    w.beta = weight(rng);
    w.gamma_w = weight(rng);
    const TotalLoss tl = total_loss(out, pyr, w);
    const LossReport& r = tl.report;
    recompose = std::max(recompose, std::abs(r.total - (w.alpha * r.ia + w.beta * r.ss + w.gamma_w * r.dc)));

    const double c = weight(rng);
    LossWeights wc = w;
    wc.alpha *= c;
    wc.beta *= c;
    wc.gamma_w *= c;
    const TotalLoss tc = total_loss(out, pyr, wc);
    homog_value = std::max(homog_value, std::abs(tc.report.total - c * r.total) / (c * r.total));
    homog_grad = std::max(homog_grad, max_rel_gap(tl.grad, tc.grad, c));
  }
  v.check(recompose < kAlgebraTol, fmt("total vs alpha*ia + beta*ss + gamma_w*dc: max gap %.3g", recompose));
  v.check(homog_value < kAlgebraTol, fmt("weights scaled by c: total/c relative gap %.3g", homog_value));
  v.check(homog_grad < 1e-9, fmt("weights scaled by c: gradient relative gap %.3g", homog_grad));

  const Image img(random_raster(rng, 16, 32, 3));
  const Raster zero(16, 32, 1, 0.0);
  const Raster flat(16, 32, 1, 4.0);
  LossWeights w;
  const double exact[] = {
      ssim_loss(img, img).value,
      smoothed_l1_loss(img, img, 1.0).value,
      image_alignment_loss(img, img, img, img, w).value,
      smoothness_loss(flat, flat, img, img).value,
      lr_consistency_loss(zero, zero).value,
  };
  double worst = 0;
  for (double e : exact) worst = std::max(worst, std::abs(e));
  MultiScaleOutput z;
  for (int s = 0; s < kDisparityScales; ++s) z.scales.push_back({DisparityMap(16 >> s, 32 >> s), DisparityMap(16 >> s, 32 >> s)});
  const double total_zero = total_loss(z, StereoPyramid::build(img, img), w).report.total;
  worst = std::max(worst, std::abs(total_zero));
  v.check(worst == 0.0, fmt("exact-match inputs: largest loss %.3g", worst));
  const double secs = seconds_since(t0);
  v.check(secs < kAlgebraSeconds, fmt("%.2f s", secs));
  return v;
}

// ---------------------------------------------------------------- 5-7

TrainConfig desk_config(long iterations) {
  TrainConfig c;
  c.batch_size = 4;
  c.lr0 = 1e-4;
  c.epochs = static_cast<int>((iterations * c.batch_size + kTrainScenes - 1) / kTrainScenes);
  c.lr_hold_epochs = 40;
  c.max_iterations = iterations;
  c.augment = true;
  c.seed = 2024;
  c.init_scheme = InitScheme::kFanIn;
  c.init_std = 0.01;
  return c;
}

double window_mean(const std::vector<LossReport>& h, bool tail) {
  const std::size_t n = std::min<std::size_t>(kWindow, h.size());
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += tail ? h[h.size() - 1 - i].total : h[i].total;
  return s / static_cast<double>(n);
}

bool all_finite(const std::vector<LossReport>& h) {
  return std::all_of(h.begin(), h.end(), [](const LossReport& r) { return std::isfinite(r.total); });
}

struct DeskRun {
  std::string view_loss_csv;
  std::vector<std::string> stereo_loss_csv;
  std::string metrics_csv;
  Verdict view;
  Verdict pipeline;
};

DeskRun desk_run() {
  DeskRun run;
  SceneSpec base;
  base.seed = 1;
  std::vector<StereoPair> train;
  std::vector<double> train_depths;
  const CameraRig rig = synthetic_rig();
  for (const Scene& s : gen_scene_set(base, kTrainScenes)) {
    train.push_back({s.left, s.right, rig});
    for (double d : s.gt_disparity.values()) train_depths.push_back(rig.baseline_m * rig.focal_px / d);
  }
  const std::vector<Scene> held = gen_scene_set(base, kHeldOutScenes, kHeldOutFirstIndex);

  // View synthesis.
  auto t0 = Clock::now();
  std::ostringstream view_csv;
  const TrainResult syn = train_view_synthesis(desk_config(kViewIterations), train, &view_csv);
  const double view_secs = seconds_since(t0);
  run.view_loss_csv = view_csv.str();
  {
    Verdict& v = run.view;
    const double first = window_mean(syn.history, false), last = window_mean(syn.history, true);
    v.check(!syn.aborted && static_cast<long>(syn.history.size()) == kViewIterations && all_finite(syn.history),
            std::to_string(syn.history.size()) + " iterations, finite" + (syn.aborted ? ", aborted: " + syn.abort_reason : ""));
    v.check(last <= kViewLossRatio * first,
            fmt2("total loss (mean of first/last 10 iterations) %.4f -> %.4f", first, last) +
                fmt(", ratio %.3f", last / first) + fmt(" (limit %.2f)", kViewLossRatio));

    TrainConfig c0 = desk_config(1);
    c0.lr0 = 0.0;
    const Checkpoint untrained = train_view_synthesis(c0, train).checkpoint;
    double trained_mae = 0, copy_mae = 0, untrained_mae = 0;
    for (const Scene& s : held) {
      trained_mae += mae(synthesize_right(syn.checkpoint, s.left), s.right) / kHeldOutScenes;
      untrained_mae += mae(synthesize_right(untrained, s.left), s.right) / kHeldOutScenes;
      copy_mae += mae(s.left, s.right) / kHeldOutScenes;
    }
    v.check(trained_mae < copy_mae, fmt2("held-out synthesized-right MAE %.5f vs copy-left %.5f", trained_mae, copy_mae) +
                                        fmt(" (untrained net %.5f, reported only)", untrained_mae));
    v.check(view_secs < kViewSeconds, fmt("%.1f s", view_secs));
  }

  // Stereo matching in each input mode, then the monocular pipeline.
  std::nth_element(train_depths.begin(), train_depths.begin() + train_depths.size() / 2, train_depths.end());
  const double median_depth = train_depths[train_depths.size() / 2];
  std::ostringstream metrics;
  metrics << metrics_csv_header() << '\n';
  t0 = Clock::now();
  Verdict& v = run.pipeline;
  std::vector<std::pair<std::string, double>> cap50_rmse;
  for (StereoInputMode mode : {StereoInputMode::kSSD, StereoInputMode::kOOD, StereoInputMode::kSOD}) {
    const std::string name = to_string(mode);
    std::ostringstream csv;
    const TrainResult st = train_stereo_matching(desk_config(kStereoIterations), train, mode, &syn.checkpoint, &csv);
    run.stereo_loss_csv.push_back(csv.str());
    const double first = window_mean(st.history, false), last = window_mean(st.history, true);
    v.check(!st.aborted && all_finite(st.history) && last < first,
            name + fmt2(": stereo loss %.4f -> %.4f", first, last) + ", " + std::to_string(st.history.size()) +
                " iterations");

    for (const DepthCap cap : {DepthCap::eigen(), DepthCap::garg()}) {
      MetricsOptions o;
      o.cap = cap;
      std::vector<MetricsReport> model, baseline;
      for (const Scene& s : held) {
        const DepthMap gt = disparity_to_depth(s.gt_disparity, rig);
        const DepthMap pred = infer_depth(s.left, syn.checkpoint, st.checkpoint, rig);
        model.push_back(compute_metrics(pred, gt, o));
        baseline.push_back(compute_metrics(DepthMap(gt.height(), gt.width(), median_depth), gt, o));
      }
      const MetricsReport m = average_reports(model), b = average_reports(baseline);
      metrics << metrics_csv_row(name, m) << '\n' << metrics_csv_row("median-baseline", b) << '\n';
      v.check(m.rmse < b.rmse, name + " pipeline, cap " + cap_label(cap) +
                                   fmt2(": RMSE %.4f m vs constant-median %.4f m", m.rmse, b.rmse));
      if (cap.hi == 50.0) cap50_rmse.push_back({name, m.rmse});
    }
  }
  std::string order = "reported only, RMSE at cap 1-50m:";
  for (const auto& [n, r] : cap50_rmse) order += " " + n + fmt("=%.4f", r);
  v.notes.push_back(order);
  const double pipe_secs = seconds_since(t0);
  v.check(pipe_secs < kPipelineSeconds, fmt("%.1f s", pipe_secs));
  run.metrics_csv = metrics.str();
  return run;
}

// ---------------------------------------------------------------- 8

Verdict schedule_and_augmentation() {
  Verdict v;
  const auto t0 = Clock::now();
  const TrainConfig c = TrainConfig::view_synthesis_defaults();
  const double e0 = lr_at(c, 0), e40 = lr_at(c, 40), e55 = lr_at(c, 55);
  v.check(e0 == 1e-4 && e40 == 5e-5 && e55 == 2.5e-5,
          fmt2("lr_at epoch 0 = %.3g, 40 = %.3g", e0, e40) + fmt(", 55 = %.3g", e55));
  bool monotone = true;
  for (int e = 1; e < c.epochs; ++e) monotone &= lr_at(c, e) <= lr_at(c, e - 1);
  v.check(monotone, "lr_at non-increasing over every epoch");

  std::mt19937_64 rng(19);
  int involution = 0, identity = 0;
  for (int t = 0; t < kTrials; ++t) {
    const int h = 2 + static_cast<int>(rng() % 6), w = 2 + static_cast<int>(rng() % 9);
    const StereoPair p{Image(random_raster(rng, h, w, 3)), Image(random_raster(rng, h, w, 3)), {}};
    AugmentDraw flip;
    flip.flip_swap = true;
    const StereoPair twice = apply_augmentation(apply_augmentation(p, flip), flip);
    involution += twice.left == p.left && twice.right == p.right;
    const StereoPair same = apply_augmentation(p, AugmentDraw{});
    identity += same.left == p.left && same.right == p.right;
  }
  v.check(involution == kTrials, std::to_string(involution) + "/" + std::to_string(kTrials) + " flip-swap involutions exact");
  v.check(identity == kTrials, std::to_string(identity) + "/" + std::to_string(kTrials) + " unit photometric draws exact");
  const double secs = seconds_since(t0);
  v.check(secs < kScheduleSeconds, fmt("%.2f s", secs));
  return v;
}

}  // namespace

int main() {
  bool ok = true;
  auto run = [&](int id, const std::string& title, const std::function<Verdict()>& f) {
    const Verdict v = f();
    report(id, title, v);
    ok &= v.pass;
  };
  run(1, "gradient integrity", gradient_integrity);
  run(2, "warp oracle", warp_oracle);
  run(3, "metric oracle", metric_oracle);
  run(4, "loss algebra", loss_algebra);

  const DeskRun a = desk_run();
  report(5, "desk-scale view-synthesis training", a.view);
  report(6, "desk-scale pipeline", a.pipeline);
  ok &= a.view.pass && a.pipeline.pass;

  const DeskRun b = desk_run();
  Verdict det;
  det.check(a.view_loss_csv == b.view_loss_csv, "view-synthesis loss CSV identical (" +
                                                    std::to_string(a.view_loss_csv.size()) + " bytes)");
  for (std::size_t i = 0; i < a.stereo_loss_csv.size(); ++i) {
    det.check(a.stereo_loss_csv[i] == b.stereo_loss_csv[i], "stereo loss CSV " + std::to_string(i + 1) + " identical");
  }
  det.check(a.metrics_csv == b.metrics_csv, "metrics CSV identical (" + std::to_string(a.metrics_csv.size()) + " bytes)");
  report(7, "determinism", det);
  ok &= det.pass;

  run(8, "schedule and augmentation contracts", schedule_and_augmentation);
  std::printf("%s\n", ok ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL");
  return ok ? 0 : 1;
}

#include "monostereo/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "monostereo/losses.hpp"
#include "monostereo/network.hpp"
#include "monostereo/sampler.hpp"

namespace monostereo {

FiniteDifferenceStats compare_with_finite_differences(const std::function<double()>& f, std::vector<double>& x,
                                                      const std::vector<double>& analytic,
                                                      const std::vector<std::size_t>& coords,
                                                      const FiniteDifferenceOptions& options) {
  std::vector<std::size_t> idx = coords;
  if (idx.empty()) {
    idx.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) idx[i] = i;
  }
  const double h = options.step;
  const double f0 = f();
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  FiniteDifferenceStats stats;
  for (std::size_t i : idx) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f();
    x[i] = saved - h;
    const double fm = f();
    x[i] = saved;
    const double fwd = (fp - f0) / h;
    const double bwd = (f0 - fm) / h;
    if (std::abs(fwd - bwd) > options.kink_ratio * std::max(std::abs(fwd), std::abs(bwd)) + options.kink_floor) {
      ++stats.skipped;
      continue;
    }
    const double num = (fp - fm) / (2 * h);
    const double a = analytic[i];
    diff2 += (a - num) * (a - num);
    a2 += a * a;
    n2 += num * num;
    ++stats.checked;
  }
  const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-300});
  stats.rel_error = std::sqrt(diff2) / denom;
  if (a2 == 0.0 && n2 == 0.0) stats.rel_error = 0.0;
  return stats;
}

namespace {

constexpr int kH = 5;
constexpr int kW = 7;

Raster random_raster(std::mt19937_64& rng, int h, int w, int c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Raster r(h, w, c);
  for (double& v : r.values()) v = u(rng);
  return r;
}

/// Disparities whose fractional part stays away from integer sample columns.
Raster random_disparity(std::mt19937_64& rng, int h, int w, double max_int) {
  std::uniform_real_distribution<double> frac(0.1, 0.9);
  std::uniform_int_distribution<int> whole(0, static_cast<int>(max_int));
  Raster r(h, w, 1);
  for (double& v : r.values()) v = whole(rng) + frac(rng);
  return r;
}

double dot(const Raster& a, const Raster& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

struct Accumulator {
  GradcheckResult result;
  Accumulator(std::string name, double tol) { result.name = std::move(name), result.tolerance = tol; }
  void add(const FiniteDifferenceStats& s) {
    result.max_rel_error = std::max(result.max_rel_error, s.rel_error);
    result.checked += s.checked;
    result.skipped += s.skipped;
  }
};

std::vector<double> flat(const Raster& r) { return {r.values().begin(), r.values().end()}; }

}  // namespace

std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed, int instances, bool include_network) {
  std::mt19937_64 rng(seed);
  constexpr double kLossTol = 1e-5;
  constexpr double kWarpTol = 1e-6;
  constexpr double kNetTol = 1e-4;

  Accumulator warp_src("warp_backward/source", kWarpTol);
  Accumulator warp_disp("warp_backward/disparity", kWarpTol);
  Accumulator ssim("ssim_loss", kLossTol);
  Accumulator l1("smoothed_l1_loss", kLossTol);
  Accumulator align("image_alignment_loss", kLossTol);
  Accumulator smooth("smoothness_loss", kLossTol);
  Accumulator lr("lr_consistency_loss", kLossTol);
  Accumulator total("total_loss", kLossTol);

  const LossWeights weights;
  for (int inst = 0; inst < instances; ++inst) {
    const WarpDirection dir = inst % 2 ? WarpDirection::kReconstructRight : WarpDirection::kReconstructLeft;
    const int channels = inst % 3 == 2 ? 1 : 3;

    {
      Raster src = random_raster(rng, kH, kW, channels, 0.0, 1.0);
      Raster disp = random_disparity(rng, kH, kW, 2);
      const Raster up = random_raster(rng, kH, kW, channels, -1.0, 1.0);
      const WarpGradients g = warp_backward(src, disp, dir, up);
      std::vector<double> xs = flat(src);
      warp_src.add(compare_with_finite_differences(
          [&] { return dot(warp(Raster(kH, kW, channels, xs), disp, dir), up); }, xs, flat(g.source)));
      std::vector<double> xd = flat(disp);
      warp_disp.add(compare_with_finite_differences(
          [&] { return dot(warp(src, Raster(kH, kW, 1, xd), dir), up); }, xd, flat(g.disp)));
    }
    {
      const Raster b = random_raster(rng, kH, kW, channels, 0.0, 1.0);
      Raster a = random_raster(rng, kH, kW, channels, 0.0, 1.0);
      std::vector<double> xa = flat(a);
      ssim.add(compare_with_finite_differences([&] { return ssim_loss(Raster(kH, kW, channels, xa), b).value; }, xa,
                                               flat(ssim_loss(a, b).grad)));
      const double sigma = 0.5 + 0.25 * (inst % 4);
      l1.add(compare_with_finite_differences(
          [&] { return smoothed_l1_loss(Raster(kH, kW, channels, xa), b, sigma).value; }, xa,
          flat(smoothed_l1_loss(a, b, sigma).grad)));
    }
    {
      const Raster left = random_raster(rng, kH, kW, channels, 0.0, 1.0);
      const Raster right = random_raster(rng, kH, kW, channels, 0.0, 1.0);
      const Raster rl = random_raster(rng, kH, kW, channels, 0.0, 1.0);
      const Raster rr = random_raster(rng, kH, kW, channels, 0.0, 1.0);
      const AlignmentLoss al = image_alignment_loss(left, right, rl, rr, weights);
      std::vector<double> xl = flat(rl);
      align.add(compare_with_finite_differences(
          [&] { return image_alignment_loss(left, right, Raster(kH, kW, channels, xl), rr, weights).value; }, xl,
          flat(al.grad_recon_left)));
      std::vector<double> xr = flat(rr);
      align.add(compare_with_finite_differences(
          [&] { return image_alignment_loss(left, right, rl, Raster(kH, kW, channels, xr), weights).value; }, xr,
          flat(al.grad_recon_right)));

      const Raster dl = random_disparity(rng, kH, kW, 2);
      const Raster dr = random_disparity(rng, kH, kW, 2);
      const DisparityPairLoss sm = smoothness_loss(dl, dr, left, right);
      std::vector<double> xdl = flat(dl);
      smooth.add(compare_with_finite_differences(
          [&] { return smoothness_loss(Raster(kH, kW, 1, xdl), dr, left, right).value; }, xdl, flat(sm.grad_left)));
      std::vector<double> xdr = flat(dr);
      smooth.add(compare_with_finite_differences(
          [&] { return smoothness_loss(dl, Raster(kH, kW, 1, xdr), left, right).value; }, xdr, flat(sm.grad_right)));

      const DisparityPairLoss c = lr_consistency_loss(dl, dr);
      lr.add(compare_with_finite_differences([&] { return lr_consistency_loss(Raster(kH, kW, 1, xdl), dr).value; },
                                             xdl, flat(c.grad_left)));
      lr.add(compare_with_finite_differences([&] { return lr_consistency_loss(dl, Raster(kH, kW, 1, xdr)).value; },
                                             xdr, flat(c.grad_right)));
    }
  }

  // total_loss needs every pyramid level to be at least 2x2.
  for (int inst = 0; inst < std::max(1, instances / 5); ++inst) {
    const int h = 16, w = 24;
    const Image left(random_raster(rng, h, w, 3, 0.0, 1.0));
    const Image right(random_raster(rng, h, w, 3, 0.0, 1.0));
    const StereoPyramid targets = StereoPyramid::build(left, right);
    MultiScaleOutput out;
    for (int s = 0; s < kDisparityScales; ++s) {
      const Raster& lv = targets.left[static_cast<std::size_t>(s)];
      const double mx = 0.3 * lv.width();
      out.scales.push_back({DisparityMap(random_disparity(rng, lv.height(), lv.width(), std::floor(mx))),
                            DisparityMap(random_disparity(rng, lv.height(), lv.width(), std::floor(mx)))});
    }
    const TotalLoss tl = total_loss(out, targets, weights);
    for (int s = 0; s < kDisparityScales; ++s) {
      for (int side = 0; side < 2; ++side) {
        auto& map = side ? out.scales[s].right : out.scales[s].left;
        const Raster& g = side ? tl.grad.scales[s].right : tl.grad.scales[s].left;
        std::vector<double> x = flat(map);
        const int mh = map.height(), mw = map.width();
        total.add(compare_with_finite_differences(
            [&] {
              MultiScaleOutput o = out;
              (side ? o.scales[s].right : o.scales[s].left) = DisparityMap(Raster(mh, mw, 1, x));
              return total_loss(o, targets, weights).report.total;
            },
            x, flat(g)));
      }
    }
    total.result.instances += 1;
  }

  std::vector<GradcheckResult> results;
  for (Accumulator* a : {&warp_src, &warp_disp, &ssim, &l1, &align, &smooth, &lr}) {
    a->result.instances = instances;
    results.push_back(a->result);
  }
  results.push_back(total.result);

  if (include_network) {
    Accumulator net("network_backward", kNetTol);
    NetworkSpec spec;
    spec.preset = Preset::kCustom;
    spec.input_channels = 3;
    spec.encoder_stages = {{1, 2, 2, 3}, {1, 2, 2, 3}, {1, 3, 2, 3}, {1, 3, 2, 3}};
    spec.decoder_channels = {3, 3, 2, 2};
    spec.init_std = 0.3;
    const int runs = std::max(1, instances / 10);
    for (int inst = 0; inst < runs; ++inst) {
      Checkpoint ckpt = init_network(spec, seed + 101 + inst);
      const Raster input = random_raster(rng, 16, 32, 3, 0.0, 1.0);
      MultiScaleGradient up;
      for (const auto& sc : predict(ckpt, input).scales) {
        up.scales.push_back({DisparityMap(random_raster(rng, sc.left.height(), sc.left.width(), 1, -1.0, 1.0)),
                             DisparityMap(random_raster(rng, sc.left.height(), sc.left.width(), 1, -1.0, 1.0))});
      }
      auto objective = [&] {
        const MultiScaleOutput o = predict(ckpt, input);
        double s = 0.0;
        for (std::size_t k = 0; k < o.scales.size(); ++k) {
          s += dot(o.scales[k].left, up.scales[k].left) + dot(o.scales[k].right, up.scales[k].right);
        }
        return s;
      };
      ForwardResult fwd = forward(ckpt, input);
      const ParameterGradients grads = backward(ckpt, fwd.tape, up);
      for (std::size_t t = 0; t < ckpt.params.size(); ++t) {
        std::vector<double>& values = ckpt.params[t].values;
        std::vector<std::size_t> coords;
        std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
        for (int k = 0; k < 6; ++k) coords.push_back(pick(rng));
        std::sort(coords.begin(), coords.end());
        coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        std::vector<double> analytic = grads[t];
        net.add(compare_with_finite_differences(objective, values, analytic, coords));
      }
    }
    net.result.instances = runs;
    results.push_back(net.result);
  }
  return results;
}

}  // namespace monostereo

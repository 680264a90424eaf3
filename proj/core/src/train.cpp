#include "monostereo/train.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "monostereo/error.hpp"
#include "monostereo/dataset.hpp"
#include "monostereo/image_ops.hpp"

namespace monostereo {

std::string to_string(StereoInputMode mode) {
  switch (mode) {
    case StereoInputMode::kSSD: return "ssd";
    case StereoInputMode::kOOD: return "ood";
    case StereoInputMode::kSOD: return "sod";
  }
  return "ood";
}

StereoInputMode parse_stereo_mode(const std::string& s) {
  if (s == "ssd" || s == "SSD") return StereoInputMode::kSSD;
  if (s == "ood" || s == "OOD") return StereoInputMode::kOOD;
  if (s == "sod" || s == "SOD") return StereoInputMode::kSOD;
  throw Error(ErrorCode::kInvalidArgument, "unknown stereo input mode '" + s + "' (expected ssd, ood or sod)");
}

TrainConfig TrainConfig::view_synthesis_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::stereo_defaults() {
  TrainConfig c;
  c.epochs = 80;
  c.lr0 = 1e-5;
  return c;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (lr_hold_epochs < 1) throw Error(ErrorCode::kInvalidArgument, "lr_hold_epochs must be >= 1");
  if (lr_halve_every < 1) throw Error(ErrorCode::kInvalidArgument, "lr_halve_every must be >= 1");
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw Error(ErrorCode::kInvalidArgument, "lr0 must be finite and >= 0");
  if (max_iterations < 0) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 0");
  if (!(init_std > 0.0) || !std::isfinite(init_std)) {
    throw Error(ErrorCode::kInvalidArgument, "init_std must be finite and > 0");
  }
  weights.validate();
}

double lr_at(const TrainConfig& config, int epoch) {
  if (epoch < 0 || epoch >= config.epochs) {
    throw Error(ErrorCode::kInvalidArgument,
                "epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(config.epochs) + ")");
  }
  if (epoch < config.lr_hold_epochs) return config.lr0;
  const int halvings = (epoch - config.lr_hold_epochs) / config.lr_halve_every + 1;
  return std::ldexp(config.lr0, -halvings);
}

AugmentDraw draw_augmentation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentDraw d;
  d.flip_swap = unit(rng) < 0.5;
  d.gamma = 0.8 + 0.4 * unit(rng);
  d.brightness = 0.5 + 1.5 * unit(rng);
  for (double& c : d.color) c = 0.8 + 0.4 * unit(rng);
  return d;
}

namespace {

Image photometric(const Image& img, const AugmentDraw& d) {
  Image out = img;
  const int ch = img.channels();
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double color = ch == 3 ? d.color[i % 3] : 1.0;
    double x = d.gamma == 1.0 ? v[i] : std::pow(v[i], d.gamma);
    x *= d.brightness;
    x *= color;
    v[i] = std::clamp(x, 0.0, 1.0);
  }
  return out;
}

}  // namespace

StereoPair apply_augmentation(const StereoPair& pair, const AugmentDraw& draw) {
  StereoPair out{photometric(pair.left, draw), photometric(pair.right, draw), pair.rig};
  if (draw.flip_swap) {
    Image new_left(flip_horizontal(out.right));
    Image new_right(flip_horizontal(out.left));
    out.left = std::move(new_left);
    out.right = std::move(new_right);
  }
  return out;
}

StereoPair augment(const StereoPair& pair, std::mt19937_64& rng) {
  return apply_augmentation(pair, draw_augmentation(rng));
}

Image synthesize_right(const Checkpoint& syn_ckpt, const Image& left, SignConvention convention) {
  if (syn_ckpt.spec.role != NetworkRole::kViewSynthesis) {
    throw Error(ErrorCode::kWrongCheckpointKind, "expected a view-synthesis checkpoint, got " +
                                                     to_string(syn_ckpt.spec.role));
  }
  const MultiScaleOutput out = predict(syn_ckpt, left);
  return warp(left, out.scales.front().right, WarpDirection::kReconstructRight, convention);
}

namespace {

struct Sample {
  Raster input;
  Image target_left;
  Image target_right;
};

using SampleBuilder = std::function<Sample(const StereoPair& pair, std::size_t index)>;

void check_dataset(const std::vector<StereoPair>& dataset) {
  if (dataset.empty()) throw Error(ErrorCode::kEmptyInput, "training set is empty");
  const Image& first = dataset.front().left;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const StereoPair& p = dataset[i];
    if (!p.left.same_shape(first) || !p.right.same_shape(first)) {
      throw Error(ErrorCode::kDimensionMismatch, "training pair " + std::to_string(i) + " differs in shape");
    }
  }
}

TrainResult run_training(const TrainConfig& config, const std::vector<StereoPair>& dataset, Checkpoint ckpt,
                         const SampleBuilder& build, std::ostream* loss_csv, const TrainHooks& hooks) {
  const std::size_t n = dataset.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t per_epoch = (n + batch - 1) / batch;
  long total_iterations = static_cast<long>(per_epoch) * config.epochs;
  if (config.max_iterations > 0 && config.max_iterations < total_iterations) total_iterations = config.max_iterations;

  const int levels = ckpt.spec.disparity_scales;
  AdamState state = AdamState::zeros_like(ckpt);
  std::mt19937_64 aug_rng(config.seed ^ 0xa0761d6478bd642fULL);

  TrainResult result;
  if (loss_csv) *loss_csv << loss_csv_header(levels) << '\n';

  long iteration = 0;
  for (int epoch = 0; epoch < config.epochs && iteration < total_iterations; ++epoch) {
    const double lr = lr_at(config, epoch);
    const std::vector<std::size_t> order = iteration_order(n, config.seed, epoch);
    for (std::size_t start = 0; start < n && iteration < total_iterations; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const double inv = 1.0 / static_cast<double>(end - start);

      ParameterGradients grads = zero_gradients(ckpt);
      LossReport mean;
      mean.per_scale.assign(static_cast<std::size_t>(levels), ScaleTerms{});
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const StereoPair pair = config.augment ? augment(dataset[idx], aug_rng) : dataset[idx];
        const Sample s = build(pair, idx);
        if (hooks.on_sample) hooks.on_sample({iteration, idx, &s.input, &s.target_left, &s.target_right});

        ForwardResult fwd = forward(ckpt, s.input);
        const StereoPyramid targets = StereoPyramid::build(s.target_left, s.target_right, levels);
        TotalLoss loss = total_loss(fwd.output, targets, config.weights, config.sign_convention);
        const ParameterGradients g = backward(ckpt, fwd.tape, loss.grad);
        for (std::size_t t = 0; t < grads.size(); ++t) {
          for (std::size_t e = 0; e < grads[t].size(); ++e) grads[t][e] += inv * g[t][e];
        }
        const LossReport& r = loss.report;
        mean.total += inv * r.total;
        mean.ia += inv * r.ia;
        mean.ss += inv * r.ss;
        mean.dc += inv * r.dc;
        for (std::size_t sc = 0; sc < r.per_scale.size() && sc < mean.per_scale.size(); ++sc) {
          mean.per_scale[sc].ia += inv * r.per_scale[sc].ia;
          mean.per_scale[sc].ss += inv * r.per_scale[sc].ss;
          mean.per_scale[sc].dc += inv * r.per_scale[sc].dc;
        }
      }

      if (!std::isfinite(mean.total)) {
        result.aborted = true;
        result.abort_reason = "non-finite loss at iteration " + std::to_string(iteration);
        result.checkpoint = std::move(ckpt);
        return result;
      }
      if (loss_csv) *loss_csv << loss_csv_row(iteration, mean) << '\n';
      if (hooks.on_iteration) hooks.on_iteration(iteration, mean);
      result.history.push_back(std::move(mean));

      try {
        adam_step(ckpt, grads, state, lr);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonFinite) throw;
        result.aborted = true;
        result.abort_reason = "iteration " + std::to_string(iteration) + ": " + e.what();
        result.checkpoint = std::move(ckpt);
        return result;
      }
      ++iteration;
    }
  }
  if (loss_csv) loss_csv->flush();
  result.checkpoint = std::move(ckpt);
  return result;
}

NetworkSpec spec_for(const TrainConfig& config, NetworkRole role, int image_channels) {
  NetworkSpec spec = NetworkSpec::for_preset(config.preset, role);
  spec.input_channels = role == NetworkRole::kViewSynthesis ? image_channels : 2 * image_channels;
  spec.init_std = config.init_std;
  spec.init_scheme = config.init_scheme;
  return spec;
}

}  // namespace

TrainResult train_view_synthesis(const TrainConfig& config, const std::vector<StereoPair>& dataset,
                                 std::ostream* loss_csv, const TrainHooks& hooks, const Checkpoint* resume) {
  config.validate();
  check_dataset(dataset);
  const NetworkSpec spec = spec_for(config, NetworkRole::kViewSynthesis, dataset.front().left.channels());
  Checkpoint ckpt;
  if (resume) {
    if (resume->spec.role != NetworkRole::kViewSynthesis) {
      throw Error(ErrorCode::kWrongCheckpointKind, "resume checkpoint is not a view-synthesis network");
    }
    ckpt = *resume;
    ckpt.check_compatible(ckpt.spec);
    if (ckpt.spec.input_channels != spec.input_channels) {
      throw Error(ErrorCode::kShapeMismatch, "resume checkpoint expects " + std::to_string(ckpt.spec.input_channels) +
                                                 " input channels");
    }
  } else {
    ckpt = init_network(spec, config.seed);
  }
  const SampleBuilder build = [](const StereoPair& p, std::size_t) {
    return Sample{p.left, p.left, p.right};
  };
  return run_training(config, dataset, std::move(ckpt), build, loss_csv, hooks);
}

TrainResult train_stereo_matching(const TrainConfig& config, const std::vector<StereoPair>& dataset,
                                  StereoInputMode mode, const Checkpoint* syn_ckpt, std::ostream* loss_csv,
                                  const TrainHooks& hooks) {
  config.validate();
  check_dataset(dataset);
  const bool needs_syn = mode != StereoInputMode::kOOD;
  if (needs_syn) {
    if (!syn_ckpt) {
      throw Error(ErrorCode::kInvalidArgument, to_string(mode) + " mode requires a view-synthesis checkpoint");
    }
    if (syn_ckpt->spec.role != NetworkRole::kViewSynthesis) {
      throw Error(ErrorCode::kWrongCheckpointKind, "synthesis checkpoint is not a view-synthesis network");
    }
  }
  const NetworkSpec spec = spec_for(config, NetworkRole::kStereoMatching, dataset.front().left.channels());
  Checkpoint ckpt = init_network(spec, config.seed);

  // Without augmentation the synthesized view of a sample never changes.
  std::map<std::size_t, Image> cache;
  const SignConvention conv = config.sign_convention;
  const bool cacheable = !config.augment;
  const SampleBuilder build = [&](const StereoPair& p, std::size_t idx) {
    if (mode == StereoInputMode::kOOD) return Sample{concat_channels(p.left, p.right), p.left, p.right};
    Image synth;
    if (cacheable) {
      auto it = cache.find(idx);
      if (it == cache.end()) it = cache.emplace(idx, synthesize_right(*syn_ckpt, p.left, conv)).first;
      synth = it->second;
    } else {
      synth = synthesize_right(*syn_ckpt, p.left, conv);
    }
    Raster input = concat_channels(p.left, synth);
    if (mode == StereoInputMode::kSSD) return Sample{std::move(input), p.left, std::move(synth)};
    return Sample{std::move(input), p.left, p.right};
  };
  return run_training(config, dataset, std::move(ckpt), build, loss_csv, hooks);
}

}  // namespace monostereo

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "monostereo/losses.hpp"
#include "monostereo/network.hpp"
#include "monostereo/optim.hpp"
#include "monostereo/raster.hpp"

namespace monostereo {

enum class StereoInputMode {
  kSSD,  // synthesized right as network input and as loss target
  kOOD,  // original right for both
  kSOD,  // synthesized right as input, original right as loss target
};

std::string to_string(StereoInputMode mode);
StereoInputMode parse_stereo_mode(const std::string& s);

struct TrainConfig {
  int batch_size = 10;
  int epochs = 60;
  double lr0 = 1e-4;
  int lr_hold_epochs = 40;
  int lr_halve_every = 10;
  LossWeights weights;
  std::uint64_t seed = 0;
  Preset preset = Preset::kMicro;
  /// Stop after this many optimizer steps (0 = run every epoch).
  long max_iterations = 0;
  bool augment = true;
  SignConvention sign_convention = SignConvention::kRectified;
  double init_std = 0.01;
  InitScheme init_scheme = InitScheme::kGaussian;

  /// Full-scale view-synthesis defaults.
  static TrainConfig view_synthesis_defaults();
  /// Full-scale stereo-matching defaults (lr 1e-5, 80 epochs).
  static TrainConfig stereo_defaults();

  void validate() const;
};

/// lr0 on [0, lr_hold_epochs), then halved once per lr_halve_every epochs.
double lr_at(const TrainConfig& config, int epoch);

struct AugmentDraw {
  bool flip_swap = false;
  double gamma = 1.0;
  double brightness = 1.0;
  double color[3] = {1.0, 1.0, 1.0};
};

AugmentDraw draw_augmentation(std::mt19937_64& rng);

/// Photometric changes (value^gamma, times brightness, times per-channel color,
/// clamped to [0, 1]) are identical for both views. flip_swap mirrors both
/// views and exchanges them so the result is again a valid rectified pair.
StereoPair apply_augmentation(const StereoPair& pair, const AugmentDraw& draw);
StereoPair augment(const StereoPair& pair, std::mt19937_64& rng);

/// What one training sample fed the network and the loss.
struct StepTrace {
  long iteration = 0;
  std::size_t sample = 0;
  const Raster* network_input = nullptr;
  const Image* target_left = nullptr;
  const Image* target_right = nullptr;
};

struct TrainHooks {
  std::function<void(const StepTrace&)> on_sample;
  std::function<void(long iteration, const LossReport&)> on_iteration;
};

struct TrainResult {
  Checkpoint checkpoint;  // last good parameters
  std::vector<LossReport> history;
  bool aborted = false;
  std::string abort_reason;
};

/// Left view in, both views reconstructed from the predicted disparities.
/// If `loss_csv` is set, the header and one row per iteration are written.
TrainResult train_view_synthesis(const TrainConfig& config, const std::vector<StereoPair>& dataset,
                                 std::ostream* loss_csv = nullptr, const TrainHooks& hooks = {},
                                 const Checkpoint* resume = nullptr);

/// Scale-0 d^r of the view-synthesis net applied to the left view.
Image synthesize_right(const Checkpoint& syn_ckpt, const Image& left,
                       SignConvention convention = SignConvention::kRectified);

/// Input is concat(left, right variant) per `mode`; `syn_ckpt` is required for
/// kSSD and kSOD.
TrainResult train_stereo_matching(const TrainConfig& config, const std::vector<StereoPair>& dataset,
                                  StereoInputMode mode, const Checkpoint* syn_ckpt,
                                  std::ostream* loss_csv = nullptr, const TrainHooks& hooks = {});

}  // namespace monostereo

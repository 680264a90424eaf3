#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "monostereo/multiscale.hpp"
#include "monostereo/raster.hpp"
#include "monostereo/tensor.hpp"

namespace monostereo {

enum class NetworkRole { kViewSynthesis, kStereoMatching };
enum class Preset { kMicro, kTable2Resnet, kFig3Vgg, kCustom };
enum class BlockKind {
  kPlain,       // conv(k, stride 1) -> ELU -> conv(k, stride) -> ELU
  kBottleneck,  // 1x1 -> 3x3(stride) -> 1x1 (x4 width) plus projection shortcut
};

enum class InitScheme {
  kGaussian,  // every weight ~ N(0, init_std^2)
  kFanIn,     // hidden weights ~ N(0, 2 / fan_in); disparity heads ~ N(0, init_std^2)
};

struct EncoderStage {
  int blocks = 1;
  int channels = 8;  // output channels of the stage
  int stride = 2;    // applied by the last block of the stage
  int kernel = 3;

  bool operator==(const EncoderStage&) const = default;
};

/// Encoder-decoder topology. Decoder block k concatenates the previous
/// decoder output with the encoder feature of the same resolution, upsamples
/// by two and applies two convolutions. The last kDisparityScales decoder
/// blocks each feed a two-channel (d^l, d^r) head.
struct NetworkSpec {
  NetworkRole role = NetworkRole::kViewSynthesis;
  Preset preset = Preset::kMicro;
  int input_channels = 3;
  int stem_channels = 0;  // 0 disables the strided stem convolution
  int stem_kernel = 7;
  bool stem_pool = false;  // 3x3 stride-2 max pool after the stem
  BlockKind block_kind = BlockKind::kPlain;
  std::vector<EncoderStage> encoder_stages;
  std::vector<int> decoder_channels;  // one entry per decoder block
  int disparity_scales = kDisparityScales;
  double init_std = 0.01;
  InitScheme init_scheme = InitScheme::kGaussian;
  std::vector<std::string> notes;  // free-form provenance, carried in checkpoints

  static NetworkSpec micro(NetworkRole role);
  /// ResNet50-style bottleneck encoder (16 blocks), six upconv blocks.
  static NetworkSpec table2_resnet(NetworkRole role);
  /// VGG-style seven-stage encoder, seven upconv blocks.
  static NetworkSpec fig3_vgg(NetworkRole role);
  static NetworkSpec for_preset(Preset preset, NetworkRole role);

  /// Number of 2x downsamplings between input and deepest feature.
  int downsampling_levels() const;
  /// Input height and width must be multiples of this.
  int size_multiple() const { return 1 << downsampling_levels(); }
  /// Input channels of decoder block k's first convolution (upsampled previous
  /// output plus skip channels).
  std::vector<int> decoder_input_channels() const;

  void validate() const;

  /// Flat key=value serialization used by checkpoints.
  std::string to_text() const;
  static NetworkSpec from_text(const std::string& text);

  bool operator==(const NetworkSpec&) const;
};

std::string to_string(NetworkRole role);
std::string to_string(Preset preset);
std::string to_string(InitScheme scheme);
InitScheme parse_init_scheme(const std::string& s);
NetworkRole parse_role(const std::string& s);
Preset parse_preset(const std::string& s);

struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;

  std::size_t numel() const noexcept { return values.size(); }
};

struct Checkpoint {
  NetworkSpec spec;
  std::vector<ParamTensor> params;
  std::int64_t step = 0;
  std::uint64_t revision = 0;  // bumped on every in-place parameter update

  std::size_t parameter_count() const;
  const ParamTensor& param(const std::string& name) const;

  /// Throws kShapeMismatch naming the first tensor whose name or shape
  /// differs from what `expected` would allocate.
  void check_compatible(const NetworkSpec& expected) const;
};

/// Allocates every parameter for `spec`. Weights follow spec.init_scheme and
/// are rounded to float32; biases are 0. Deterministic for a fixed seed.
Checkpoint init_network(const NetworkSpec& spec, std::uint64_t seed);

/// Parameter shapes (name, shape) in allocation order.
std::vector<std::pair<std::string, std::vector<int>>> parameter_layout(const NetworkSpec& spec);

/// Opaque record of one forward pass.
class Tape {
 public:
  struct Node;
  struct Impl;
  Tape();
  ~Tape();
  Tape(Tape&&) noexcept;
  Tape& operator=(Tape&&) noexcept;

 private:
  friend struct TapeAccess;
  std::unique_ptr<Impl> impl_;
};

struct ForwardResult {
  MultiScaleOutput output;
  Tape tape;
};

/// `input` is H x W x input_channels with H, W multiples of size_multiple().
ForwardResult forward(const Checkpoint& ckpt, const Raster& input);
/// Forward without keeping intermediates.
MultiScaleOutput predict(const Checkpoint& ckpt, const Raster& input);

using ParameterGradients = std::vector<std::vector<double>>;

ParameterGradients zero_gradients(const Checkpoint& ckpt);

/// Reverse pass. Throws kStaleTape if `ckpt` is not the same object at the
/// same revision that produced the tape.
ParameterGradients backward(const Checkpoint& ckpt, const Tape& tape,
                            const MultiScaleGradient& output_grads);

/// Container: "MSCK" magic, u32 version, u64 manifest length, UTF-8 manifest
/// (spec lines, step, then `tensor <name> <shape...> offset <n>` lines),
/// then little-endian float32 payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace monostereo

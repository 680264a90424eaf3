#pragma once

// Single description of the encoder-decoder topology, replayed by every
// consumer (parameter layout, forward pass) so they cannot drift apart.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "monostereo/network.hpp"

namespace monostereo::detail {

inline std::string pname(const std::string& layer, const char* what) { return layer + "." + what; }

template <class Builder>
void walk_architecture(const NetworkSpec& spec, Builder& b, typename Builder::Value x) {
  using Value = typename Builder::Value;
  std::map<int, Value> feature_at_level;
  int level = 0;

  if (spec.stem_channels > 0) {
    x = b.elu(b.conv("stem.conv", x, spec.stem_channels, spec.stem_kernel, 2));
    feature_at_level[++level] = x;
    if (spec.stem_pool) {
      x = b.maxpool(x);
      feature_at_level[++level] = x;
    }
  }

  for (std::size_t i = 0; i < spec.encoder_stages.size(); ++i) {
    const EncoderStage& st = spec.encoder_stages[i];
    for (int j = 0; j < st.blocks; ++j) {
      const int stride = j == st.blocks - 1 ? st.stride : 1;
      const std::string name = "enc" + std::to_string(i) + ".b" + std::to_string(j);
      if (spec.block_kind == BlockKind::kPlain) {
        x = b.elu(b.conv(name + ".conv0", x, st.channels, st.kernel, 1));
        x = b.elu(b.conv(name + ".conv1", x, st.channels, st.kernel, stride));
      } else {
        const int inner = st.channels / 4;
        Value y = b.elu(b.conv(name + ".conv0", x, inner, 1, 1));
        y = b.elu(b.conv(name + ".conv1", y, inner, 3, stride));
        y = b.conv(name + ".conv2", y, st.channels, 1, 1);
        Value shortcut = x;
        if (b.channels(x) != st.channels || stride != 1) {
          shortcut = b.conv(name + ".proj", x, st.channels, 1, stride);
        }
        x = b.elu(b.add(y, shortcut));
      }
    }
    if (st.stride == 2) ++level;
    feature_at_level[level] = x;
  }

  const int levels = level;
  const int first_head = levels - spec.disparity_scales;
  for (int k = 0; k < levels; ++k) {
    const std::string name = "dec" + std::to_string(k);
    if (k > 0) {
      auto it = feature_at_level.find(levels - k);
      if (it != feature_at_level.end()) x = b.concat(x, it->second);
    }
    b.decoder_input(k, b.channels(x));
    x = b.upsample(x);
    x = b.elu(b.conv(name + ".conv0", x, spec.decoder_channels[k], 3, 1));
    x = b.elu(b.conv(name + ".conv1", x, spec.decoder_channels[k], 3, 1));
    if (k >= first_head) {
      const int scale = levels - 1 - k;
      b.head(name + ".head", x, scale);
    }
  }
}

/// Records parameter names/shapes and channel bookkeeping without computing.
struct LayoutBuilder {
  using Value = int;

  std::vector<int> channel_of;
  std::vector<std::pair<std::string, std::vector<int>>> layout;
  std::vector<int> decoder_inputs;

  Value input(int channels) {
    channel_of.push_back(channels);
    return static_cast<int>(channel_of.size()) - 1;
  }
  int channels(Value v) const { return channel_of[v]; }
  Value conv(const std::string& name, Value x, int cout, int k, int) {
    layout.push_back({pname(name, "weight"), {cout, channel_of[x], k, k}});
    layout.push_back({pname(name, "bias"), {cout}});
    return input(cout);
  }
  Value elu(Value x) { return x; }
  Value maxpool(Value x) { return x; }
  Value upsample(Value x) { return x; }
  Value add(Value a, Value) { return a; }
  Value concat(Value a, Value c) { return input(channel_of[a] + channel_of[c]); }
  void decoder_input(int, int channels) { decoder_inputs.push_back(channels); }
  void head(const std::string& name, Value x, int) {
    layout.push_back({pname(name, "weight"), {2, channel_of[x], 3, 3}});
    layout.push_back({pname(name, "bias"), {2}});
  }
};

}  // namespace monostereo::detail

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "monostereo/error.hpp"
#include "monostereo/gradcheck.hpp"
#include "monostereo/network.hpp"
#include "monostereo/optim.hpp"

using namespace monostereo;
namespace fs = std::filesystem;

namespace {

Raster random_raster(std::mt19937_64& rng, int h, int w, int c, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Raster r(h, w, c);
  for (double& v : r.values()) v = u(rng);
  return r;
}

// A few hundred parameters with the full four-scale topology.
NetworkSpec tiny_spec() {
  NetworkSpec s;
  s.preset = Preset::kCustom;
  s.encoder_stages = {{1, 2, 2, 3}, {1, 2, 2, 3}, {1, 3, 2, 3}, {1, 3, 2, 3}};
  s.decoder_channels = {3, 3, 2, 2};
  s.init_std = 0.3;
  return s;
}

MultiScaleGradient random_output_grads(std::mt19937_64& rng, const MultiScaleOutput& out) {
  MultiScaleGradient g;
  for (const auto& s : out.scales) {
    g.scales.push_back({DisparityMap(random_raster(rng, s.left.height(), s.left.width(), 1, -1, 1)),
                        DisparityMap(random_raster(rng, s.left.height(), s.left.width(), 1, -1, 1))});
  }
  return g;
}

double dot(const MultiScaleOutput& out, const MultiScaleGradient& g) {
  double s = 0;
  for (std::size_t k = 0; k < out.scales.size(); ++k) {
    for (std::size_t i = 0; i < out.scales[k].left.size(); ++i) {
      s += out.scales[k].left.values()[i] * g.scales[k].left.values()[i] +
           out.scales[k].right.values()[i] * g.scales[k].right.values()[i];
    }
  }
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "monostereo_net_test";
  fs::create_directories(dir);
  return dir / name;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no monostereo::Error thrown";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(InitNetwork, DeterministicForSeed) {
  const NetworkSpec spec = NetworkSpec::micro(NetworkRole::kViewSynthesis);
  const Checkpoint a = init_network(spec, 9), b = init_network(spec, 9), c = init_network(spec, 10);
  ASSERT_EQ(a.params.size(), b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) EXPECT_EQ(a.params[i].values, b.params[i].values);
  EXPECT_NE(a.params[0].values, c.params[0].values);
}

TEST(InitNetwork, GaussianWeightStatistics) {
  NetworkSpec spec = NetworkSpec::micro(NetworkRole::kStereoMatching);
  const Checkpoint ck = init_network(spec, 1);
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (const auto& p : ck.params) {
    const bool bias = p.name.size() > 5 && p.name.compare(p.name.size() - 5, 5, ".bias") == 0;
    for (double v : p.values) {
      if (bias) {
        EXPECT_EQ(v, 0.0);
        continue;
      }
      sum += v;
      sq += v * v;
      ++n;
      EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
    }
  }
  ASSERT_GE(n, 100000u);
  EXPECT_LT(std::abs(sum / n), 3 * 0.01 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(std::sqrt(sq / n), 0.01, 0.01 * 0.02);
}

TEST(InitNetwork, FanInSchemeScalesHiddenWeightsOnly) {
  NetworkSpec spec = NetworkSpec::micro(NetworkRole::kViewSynthesis);
  spec.init_scheme = InitScheme::kFanIn;
  spec.init_std = 0.02;
  const Checkpoint ck = init_network(spec, 2);
  const ParamTensor& enc = ck.param("enc3.b0.conv1.weight");
  const ParamTensor& head = ck.param("dec3.head.weight");
  auto rms = [](const ParamTensor& p) {
    double s = 0;
    for (double v : p.values) s += v * v;
    return std::sqrt(s / p.values.size());
  };
  const double fan_in = enc.shape[1] * enc.shape[2] * enc.shape[3];
  EXPECT_NEAR(rms(enc), std::sqrt(2.0 / fan_in), 0.05 * std::sqrt(2.0 / fan_in));
  EXPECT_NEAR(rms(head), 0.02, 0.02 * 0.3);
}

TEST(Forward, MicroHeadDims) {
  const Checkpoint ck = init_network(NetworkSpec::micro(NetworkRole::kViewSynthesis), 3);
  const MultiScaleOutput out = predict(ck, Raster(64, 128, 3, 0.5));
  ASSERT_EQ(out.scales.size(), 4u);
  const int dims[4][2] = {{64, 128}, {32, 64}, {16, 32}, {8, 16}};
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(out.scales[s].left.height(), dims[s][0]);
    EXPECT_EQ(out.scales[s].left.width(), dims[s][1]);
    EXPECT_TRUE(out.scales[s].right.same_shape(out.scales[s].left));
  }
}

TEST(Forward, ZeroWeightsGiveHalfOfMaxDisparity) {
  NetworkSpec spec = NetworkSpec::micro(NetworkRole::kStereoMatching);
  spec.init_std = 0.0;
  const Checkpoint ck = init_network(spec, 0);
  std::mt19937_64 rng(4);
  const MultiScaleOutput out = predict(ck, random_raster(rng, 32, 64, 6));
  for (const auto& s : out.scales) {
    const double expected = 0.15 * s.left.width();
    for (double v : s.left.values()) EXPECT_EQ(v, expected);
    for (double v : s.right.values()) EXPECT_EQ(v, expected);
  }
}

TEST(Forward, OutputRangeHoldsForLargeWeights) {
  NetworkSpec spec = NetworkSpec::micro(NetworkRole::kViewSynthesis);
  spec.init_std = 1.0;
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const Checkpoint ck = init_network(spec, 100 + t);
    const MultiScaleOutput out = predict(ck, random_raster(rng, 16, 32, 3, -5.0, 5.0));
    for (const auto& s : out.scales) {
      const double dmax = DisparityMap::max_for_width(s.left.width());
      EXPECT_GE(s.left.min_value(), 0.0);
      EXPECT_LE(s.left.max_value(), dmax);
      EXPECT_GE(s.right.min_value(), 0.0);
      EXPECT_LE(s.right.max_value(), dmax);
    }
  }
}

TEST(Forward, DeterministicAndChecksInput) {
  const Checkpoint ck = init_network(NetworkSpec::micro(NetworkRole::kViewSynthesis), 6);
  std::mt19937_64 rng(6);
  const Raster in = random_raster(rng, 16, 32, 3);
  const MultiScaleOutput a = predict(ck, in), b = predict(ck, in);
  for (int s = 0; s < 4; ++s) EXPECT_EQ(a.scales[s].left, b.scales[s].left);
  EXPECT_EQ(code_of([&] { predict(ck, Raster(16, 32, 6)); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { predict(ck, Raster(16, 30, 3)); }), ErrorCode::kDimensionMismatch);
}

TEST(Backward, MatchesFiniteDifferencesOnTinyNet) {
  const NetworkSpec spec = tiny_spec();
  Checkpoint ck = init_network(spec, 7);
  ASSERT_LE(ck.parameter_count(), 2000u);
  std::mt19937_64 rng(7);
  const Raster in = random_raster(rng, 16, 32, 3);
  ForwardResult fr = forward(ck, in);
  const MultiScaleGradient g = random_output_grads(rng, fr.output);
  const ParameterGradients pg = backward(ck, fr.tape, g);

  std::vector<double> flat, analytic;
  std::vector<std::pair<std::size_t, std::size_t>> where;
  for (std::size_t t = 0; t < ck.params.size(); ++t) {
    for (std::size_t i = 0; i < ck.params[t].values.size(); ++i) where.push_back({t, i});
  }
  std::shuffle(where.begin(), where.end(), rng);
  where.resize(10);
  for (auto [t, i] : where) {
    flat.push_back(ck.params[t].values[i]);
    analytic.push_back(pg[t][i]);
  }
  auto f = [&] {
    Checkpoint probe = ck;
    for (std::size_t k = 0; k < where.size(); ++k) probe.params[where[k].first].values[where[k].second] = flat[k];
    return dot(predict(probe, in), g);
  };
  EXPECT_LT(compare_with_finite_differences(f, flat, analytic).rel_error, 1e-4);
}

TEST(Backward, LinearInOutputGradients) {
  Checkpoint ck = init_network(tiny_spec(), 8);
  std::mt19937_64 rng(8);
  ForwardResult fr = forward(ck, random_raster(rng, 16, 32, 3));
  MultiScaleGradient g = random_output_grads(rng, fr.output);
  const ParameterGradients one = backward(ck, fr.tape, g);
  MultiScaleGradient g2 = g, zero = g;
  for (auto& s : g2.scales) {
    for (double& v : s.left.values()) v *= 2;
    for (double& v : s.right.values()) v *= 2;
  }
  for (auto& s : zero.scales) {
    for (double& v : s.left.values()) v = 0;
    for (double& v : s.right.values()) v = 0;
  }
  const ParameterGradients two = backward(ck, fr.tape, g2), none = backward(ck, fr.tape, zero);
  for (std::size_t t = 0; t < one.size(); ++t) {
    for (std::size_t i = 0; i < one[t].size(); ++i) {
      EXPECT_EQ(two[t][i], 2 * one[t][i]);
      EXPECT_EQ(none[t][i], 0.0);
    }
  }
}

TEST(Backward, StaleTapeRejected) {
  Checkpoint ck = init_network(tiny_spec(), 9);
  std::mt19937_64 rng(9);
  ForwardResult fr = forward(ck, random_raster(rng, 16, 32, 3));
  const MultiScaleGradient g = random_output_grads(rng, fr.output);
  AdamState st = AdamState::zeros_like(ck);
  adam_step(ck, backward(ck, fr.tape, g), st, 1e-3);
  EXPECT_EQ(code_of([&] { backward(ck, fr.tape, g); }), ErrorCode::kStaleTape);
  const Checkpoint copy = ck;
  ForwardResult fresh = forward(ck, random_raster(rng, 16, 32, 3));
  EXPECT_EQ(code_of([&] { backward(copy, fresh.tape, g); }), ErrorCode::kStaleTape);
}

TEST(Checkpoint, SaveLoadRoundTrip) {
  NetworkSpec spec = NetworkSpec::micro(NetworkRole::kStereoMatching);
  spec.init_scheme = InitScheme::kFanIn;
  Checkpoint ck = init_network(spec, 10);
  ck.step = 42;
  save_checkpoint(ck, scratch("round.msck"));
  const Checkpoint back = load_checkpoint(scratch("round.msck"));
  EXPECT_EQ(back.spec, ck.spec);
  EXPECT_EQ(back.step, 42);
  for (std::size_t i = 0; i < ck.params.size(); ++i) EXPECT_EQ(back.params[i].values, ck.params[i].values);
  std::mt19937_64 rng(10);
  const Raster in = random_raster(rng, 16, 32, 6);
  EXPECT_EQ(predict(back, in).scales[0].left, predict(ck, in).scales[0].left);
}

TEST(Checkpoint, CorruptionAndVersionErrors) {
  const Checkpoint ck = init_network(tiny_spec(), 11);
  save_checkpoint(ck, scratch("full.msck"));
  std::ifstream in(scratch("full.msck"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  {
    std::ofstream(scratch("cut.msck"), std::ios::binary) << bytes.substr(0, bytes.size() - 7);
  }
  EXPECT_EQ(code_of([] { load_checkpoint(scratch("cut.msck")); }), ErrorCode::kCorruptFile);
  std::string bumped = bytes;
  bumped[4] = static_cast<char>(kCheckpointVersion + 1);
  {
    std::ofstream(scratch("future.msck"), std::ios::binary) << bumped;
  }
  EXPECT_EQ(code_of([] { load_checkpoint(scratch("future.msck")); }), ErrorCode::kVersionMismatch);
  EXPECT_EQ(code_of([] { load_checkpoint(scratch("absent.msck")); }), ErrorCode::kMissingFile);
  EXPECT_EQ(bytes.substr(0, 4), "MSCK");
}

TEST(Checkpoint, SpecMismatchNamesTensor) {
  const Checkpoint ck = init_network(NetworkSpec::micro(NetworkRole::kViewSynthesis), 12);
  try {
    ck.check_compatible(NetworkSpec::micro(NetworkRole::kStereoMatching));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("enc0.b0.conv0.weight"), std::string::npos);
  }
}

TEST(NetworkSpec, TextRoundTripAndPresets) {
  for (Preset p : {Preset::kMicro, Preset::kTable2Resnet, Preset::kFig3Vgg}) {
    for (NetworkRole r : {NetworkRole::kViewSynthesis, NetworkRole::kStereoMatching}) {
      const NetworkSpec s = NetworkSpec::for_preset(p, r);
      EXPECT_NO_THROW(s.validate());
      EXPECT_EQ(NetworkSpec::from_text(s.to_text()), s);
      EXPECT_EQ(s.input_channels, r == NetworkRole::kViewSynthesis ? 3 : 6);
    }
  }
  EXPECT_FALSE(NetworkSpec::table2_resnet(NetworkRole::kViewSynthesis).notes.empty());
  EXPECT_EQ(NetworkSpec::table2_resnet(NetworkRole::kViewSynthesis).decoder_channels.size(), 6u);
  EXPECT_EQ(code_of([] { NetworkSpec::from_text("role=view-synthesis\nbogus=1\n"); }), ErrorCode::kCorruptFile);
}

TEST(NetworkSpec, SkipTopologyChannelCounts) {
  const NetworkSpec s = NetworkSpec::micro(NetworkRole::kViewSynthesis);
  // Previous decoder output plus the encoder feature of the same resolution.
  EXPECT_EQ(s.decoder_input_channels(), (std::vector<int>{64, 32 + 32, 16 + 16, 8 + 8}));
  EXPECT_EQ(s.size_multiple(), 16);
}

TEST(NetworkSpec, InvalidSpecsRejected) {
  NetworkSpec s = NetworkSpec::micro(NetworkRole::kViewSynthesis);
  s.decoder_channels.pop_back();
  EXPECT_EQ(code_of([&] { init_network(s, 0); }), ErrorCode::kInvalidArgument);
  s = NetworkSpec::micro(NetworkRole::kViewSynthesis);
  s.encoder_stages[0].kernel = 4;
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(Tensor, ConvMatchesDirectLoop) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor in(2, 5, 6);
  for (double& v : in.data) v = u(rng);
  std::vector<double> w(3 * 2 * 3 * 3), b(3);
  for (double& v : w) v = u(rng);
  for (double& v : b) v = u(rng);
  const nn::ConvGeometry g{3, 2, 1};
  const Tensor out = nn::conv2d(in, w, b, 3, g);
  ASSERT_EQ(out.height, 3);
  ASSERT_EQ(out.width, 3);
  for (int o = 0; o < 3; ++o) {
    for (int y = 0; y < 3; ++y) {
      for (int x = 0; x < 3; ++x) {
        double s = b[o];
        for (int c = 0; c < 2; ++c) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = y * 2 - 1 + ky, ix = x * 2 - 1 + kx;
              if (iy < 0 || ix < 0 || iy >= 5 || ix >= 6) continue;
              s += w[((o * 2 + c) * 3 + ky) * 3 + kx] * in.at(c, iy, ix);
            }
          }
        }
        EXPECT_NEAR(out.at(o, y, x), s, 1e-14);
      }
    }
  }
}

TEST(Tensor, EluAndUpsample) {
  Tensor t(1, 1, 2);
  t.data = {-1.0, 2.0};
  const Tensor e = nn::elu(t);
  EXPECT_NEAR(e.data[0], std::exp(-1.0) - 1.0, 1e-15);
  EXPECT_EQ(e.data[1], 2.0);
  const Tensor up = nn::upsample_nearest2(t);
  EXPECT_EQ(up.height, 2);
  EXPECT_EQ(up.width, 4);
  EXPECT_EQ(up.at(0, 1, 3), 2.0);
}

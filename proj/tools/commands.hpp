#pragma once

#include <cstdint>
#include <string>

#include "monostereo/losses.hpp"
#include "monostereo/train.hpp"

namespace monostereo::cli {

struct SynthDataOptions {
  std::string out;
  int count = 200;
  int width = 128;
  int height = 64;
  int objects = 3;
  int disp_min = 8;
  int disp_max = 30;
  std::string texture = "noise";
  double haze = 0.5;
  double baseline = 0.5;
  double focal = 200.0;
  std::uint64_t seed = 0;
};

struct DataSource {
  std::string data;        // synthetic set directory
  std::string kitti_root;  // KITTI raw root
  std::string split;       // KITTI split file
  int height = 0;          // resize target, 0 keeps the stored size
  int width = 0;
};

struct TrainOptions {
  DataSource source;
  std::string out;
  std::string loss_csv;
  std::string resume;
  std::string syn_ckpt;
  std::string mode = "sod";
  std::string preset = "micro";
  std::string sign_convention = "rectified";
  std::string init_scheme = "gaussian";
  TrainConfig config;
};

struct InferOptions {
  std::string syn_ckpt;
  std::string stereo_ckpt;
  std::string image;
  DataSource source;
  std::string out_dir = ".";
  double baseline = 0.0;
  double focal = 0.0;
};

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::string syn_ckpt;
  std::string stereo_ckpt;
  DataSource source;
  std::string cap = "80";
  std::string log_base = "e";
  std::string csv;
  std::string label = "model";
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int instances = 20;
  bool network = true;
};

int run_synth_data(const SynthDataOptions& o);
int run_train_syn(const TrainOptions& o);
int run_train_stereo(const TrainOptions& o);
int run_infer(const InferOptions& o);
int run_eval(const EvalOptions& o);
int run_gradcheck(const GradcheckOptions& o);

}  // namespace monostereo::cli

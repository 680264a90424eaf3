#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "monostereo/error.hpp"

using namespace monostereo;
using namespace monostereo::cli;

namespace {

// Keys of a flat key=value file fill every option the command line left unset.
void apply_config(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
    if (!item.parents.empty()) throw CLI::ValidationError("--config", "sections are not supported: " + item.fullname());
    if (item.name == "config") throw CLI::ValidationError("--config", "config files cannot nest");
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (!opt) throw CLI::ValidationError("--config", "unknown key '" + item.name + "' in " + path);
    if (opt->count() > 0) continue;
    for (const std::string& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

void add_seed(CLI::App* sub, std::uint64_t& seed) {
  sub->add_option("--seed", seed, "Random seed (integer); every random draw derives from it")->capture_default_str();
}

void add_source(CLI::App* sub, DataSource& s, bool with_resize = true) {
  sub->add_option("--data", s.data, "Synthetic dataset directory (with manifest.txt)");
  sub->add_option("--kitti-root", s.kitti_root, "KITTI raw data root directory");
  sub->add_option("--split", s.split, "KITTI split file: one image_02 frame path per line, relative to --kitti-root");
  if (with_resize) {
    sub->add_option("--height", s.height, "Network input height (pixels); 0 keeps the stored size")
        ->capture_default_str();
    sub->add_option("--width", s.width, "Network input width (pixels); 0 keeps the stored size")
        ->capture_default_str();
  }
}

void add_train(CLI::App* sub, TrainOptions& o) {
  add_source(sub, o.source);
  TrainConfig& c = o.config;
  sub->add_option("--out", o.out, "Output checkpoint path")->required();
  sub->add_option("--loss-csv", o.loss_csv, "Per-iteration loss CSV path (default: <out>.loss.csv)");
  sub->add_option("--batch-size", c.batch_size, "Pairs per optimizer step (count)")->capture_default_str();
  sub->add_option("--epochs", c.epochs, "Passes over the training set (count, >= 1)")->capture_default_str();
  sub->add_option("--lr", c.lr0, "Initial learning rate (per step)")->capture_default_str();
  sub->add_option("--lr-hold-epochs", c.lr_hold_epochs, "Epochs at the initial rate before halving (count)")
      ->capture_default_str();
  sub->add_option("--lr-halve-every", c.lr_halve_every, "Epochs between successive halvings (count)")
      ->capture_default_str();
  sub->add_option("--max-iterations", c.max_iterations, "Stop after this many optimizer steps (count; 0 = no limit)")
      ->capture_default_str();
  sub->add_option("--alpha", c.weights.alpha, "Image alignment weight (dimensionless)")->capture_default_str();
  sub->add_option("--beta", c.weights.beta, "Disparity smoothness weight (dimensionless)")->capture_default_str();
  sub->add_option("--gamma-w", c.weights.gamma_w, "Left-right consistency weight (dimensionless)")
      ->capture_default_str();
  sub->add_option("--gamma-mix", c.weights.gamma_mix, "SSIM share of the photometric term, in [0, 1]")
      ->capture_default_str();
  sub->add_option("--sigma-g", c.weights.sigma_g, "Gaussian std of the L1 residual blur (pixels)")
      ->capture_default_str();
  sub->add_option("--scale-weights", c.weights.scale_weights, "Per-scale loss weights, finest first (4 values)")
      ->expected(4);
  sub->add_option("--init-std", c.init_std, "Std of the Gaussian weight initialization (dimensionless)")
      ->capture_default_str();
  sub->add_option("--init-scheme", o.init_scheme,
                  "Weight initialization: gaussian (every weight N(0, init-std^2)) or fan-in (hidden weights "
                  "N(0, 2/fan_in), heads N(0, init-std^2))")
      ->capture_default_str();
  sub->add_flag("--augment,!--no-augment", c.augment, "Flip-and-swap plus photometric augmentation (on/off)")
      ->capture_default_str();
  sub->add_option("--preset", o.preset, "Network preset: micro, table2-resnet, fig3-vgg")->capture_default_str();
  sub->add_option("--sign-convention", o.sign_convention, "Warp sign convention: rectified or uniform-minus")
      ->capture_default_str();
  add_seed(sub, c.seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Monocular depth from a synthesized stereo view: data generation, two-stage training, "
               "inference and evaluation.");
  app.require_subcommand(1);
  std::string config_path;

  SynthDataOptions synth;
  auto* s = app.add_subcommand("synth-data", "Generate a synthetic rectified stereo set with ground-truth disparity");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--count", synth.count, "Number of pairs (count)")->capture_default_str();
  s->add_option("--width", synth.width, "Image width (pixels)")->capture_default_str();
  s->add_option("--height", synth.height, "Image height (pixels)")->capture_default_str();
  s->add_option("--objects", synth.objects, "Foreground rectangles per scene (count)")->capture_default_str();
  s->add_option("--disp-min", synth.disp_min, "Background disparity (pixels, integer)")->capture_default_str();
  s->add_option("--disp-max", synth.disp_max, "Largest object disparity (pixels, integer)")->capture_default_str();
  s->add_option("--texture", synth.texture, "Layer texture: noise, gradient, checker")->capture_default_str();
  s->add_option("--haze", synth.haze, "Aerial-perspective strength in [0, 1]; 0 disables")->capture_default_str();
  s->add_option("--baseline", synth.baseline, "Rig baseline (meters)")->capture_default_str();
  s->add_option("--focal", synth.focal, "Rig focal length (pixels)")->capture_default_str();
  add_seed(s, synth.seed);

  TrainOptions train_syn;
  train_syn.config = TrainConfig::view_synthesis_defaults();
  auto* ts = app.add_subcommand("train-syn", "Train the view-synthesis network on left images");
  add_train(ts, train_syn);
  ts->add_option("--resume", train_syn.resume, "Continue from this view-synthesis checkpoint");

  TrainOptions train_stereo;
  train_stereo.config = TrainConfig::stereo_defaults();
  auto* tst = app.add_subcommand("train-stereo", "Train the stereo-matching network");
  add_train(tst, train_stereo);
  tst->add_option("--mode", train_stereo.mode,
                  "Input mode: ssd (synthesized input and target), ood (original both), sod (synthesized input, "
                  "original target)")
      ->capture_default_str();
  tst->add_option("--syn-ckpt", train_stereo.syn_ckpt, "View-synthesis checkpoint (required for ssd and sod)");

  InferOptions inf;
  auto* in = app.add_subcommand("infer", "Depth from single left images");
  in->add_option("--syn-ckpt", inf.syn_ckpt, "View-synthesis checkpoint")->required();
  in->add_option("--stereo-ckpt", inf.stereo_ckpt, "Stereo-matching checkpoint")->required();
  in->add_option("--image", inf.image, "Single left image (PNG or PFM)");
  add_source(in, inf.source);
  in->add_option("--out-dir", inf.out_dir, "Directory for depth/disparity PFMs and PNG previews")
      ->capture_default_str();
  in->add_option("--baseline", inf.baseline, "Override rig baseline (meters; 0 = from dataset or 0.54)")
      ->capture_default_str();
  in->add_option("--focal", inf.focal, "Override focal length at the stored image size (pixels; 0 = from dataset or 720)")
      ->capture_default_str();

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Depth metrics against ground truth");
  e->add_option("--pred", ev.pred, "Predicted depth map (PFM in meters, or KITTI 16-bit PNG)");
  e->add_option("--gt", ev.gt, "Ground-truth depth map (PFM in meters, or KITTI 16-bit PNG; 0 = invalid)");
  e->add_option("--syn-ckpt", ev.syn_ckpt, "View-synthesis checkpoint (pipeline evaluation)");
  e->add_option("--stereo-ckpt", ev.stereo_ckpt, "Stereo-matching checkpoint (pipeline evaluation)");
  add_source(e, ev.source);
  e->add_option("--cap", ev.cap, "Depth cap: 80 (0-80 m) or 50garg (1-50 m)")->capture_default_str();
  e->add_option("--log-base", ev.log_base, "Logarithm base of RMSE(log): e or 10")->capture_default_str();
  e->add_option("--csv", ev.csv, "Metrics CSV path (one row per image plus the mean)");
  e->add_option("--label", ev.label, "Row label for the table and CSV")->capture_default_str();

  GradcheckOptions gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference checks of every analytic gradient");
  add_seed(g, gc.seed);
  g->add_option("--instances", gc.instances, "Random instances per check (count)")->capture_default_str();
  g->add_flag("--network,!--no-network", gc.network, "Include the network backward check (on/off)")
      ->capture_default_str();

  for (CLI::App* sub : {s, ts, tst, in, e, g}) {
    sub->add_option("--config", config_path, "Flat key=value file; keys are long flag names, flags win");
  }

  try {
    app.parse(argc, argv);
    for (CLI::App* sub : app.get_subcommands()) apply_config(*sub, config_path);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 1;
  }

  try {
    if (s->parsed()) return run_synth_data(synth);
    if (ts->parsed()) return run_train_syn(train_syn);
    if (tst->parsed()) return run_train_stereo(train_stereo);
    if (in->parsed()) return run_infer(inf);
    if (e->parsed()) return run_eval(ev);
    if (g->parsed()) return run_gradcheck(gc);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    switch (err.code()) {
      case ErrorCode::kInvalidArgument:
      case ErrorCode::kInfeasibleScene:
      case ErrorCode::kImageTooSmall:
      case ErrorCode::kDimensionMismatch:
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 1;
}

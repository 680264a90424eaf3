#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "monostereo/image_io.hpp"
#include "monostereo/raster.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "monostereo_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run(const std::string& args) {
  const fs::path log = work_dir() / "last_output.txt";
  const std::string cmd = std::string("\"") + MONOSTEREO_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

int manifest_pairs(const fs::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) n += !line.empty() && line.rfind("rig ", 0) != 0;
  return n;
}

}  // namespace

TEST(Cli, GradcheckSucceeds) {
  const RunResult r = run("gradcheck --seed 7 --instances 2");
  EXPECT_EQ(r.exit_code, 0) << r.output;
}

TEST(Cli, EvalOfIdenticalMapsIsPerfect) {
  monostereo::DepthMap d(4, 5, 12.5);
  d.at(1, 1) = 0.0;
  const fs::path p = work_dir() / "x.pfm";
  monostereo::write_pfm(d, p);
  const RunResult r = run("eval --pred \"" + p.string() + "\" --gt \"" + p.string() + "\" --cap 80");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("0.0000    0.0000    0.0000    0.0000    1.0000    1.0000    1.0000"), std::string::npos)
      << r.output;
}

TEST(Cli, InvalidInputsExitWithOne) {
  const fs::path data = work_dir() / "tiny";
  ASSERT_EQ(run("synth-data --out \"" + data.string() + "\" --count 1 --width 32 --height 16 --disp-min 2 --disp-max 8")
                .exit_code,
            0);
  const RunResult r = run("train-syn --data \"" + data.string() + "\" --out \"" +
                          (work_dir() / "m.ckpt").string() + "\" --epochs 0");
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_EQ(run("gradcheck --no-such-flag").exit_code, 1);
  EXPECT_EQ(run("eval --pred missing.pfm --gt missing.pfm").exit_code, 2);
}

TEST(Cli, CommandLineOverridesConfigFile) {
  const fs::path cfg = work_dir() / "synth.ini";
  {
    std::ofstream out(cfg);
    out << "count=3\nwidth=48\nheight=16\ndisp-min=2\ndisp-max=10\n";
  }
  const fs::path a = work_dir() / "from_config";
  ASSERT_EQ(run("synth-data --config \"" + cfg.string() + "\" --out \"" + a.string() + "\"").exit_code, 0);
  EXPECT_EQ(manifest_pairs(a), 3);
  EXPECT_EQ(monostereo::load_image(a / "left_00000.png").width(), 48);
  const fs::path b = work_dir() / "overridden";
  ASSERT_EQ(run("synth-data --config \"" + cfg.string() + "\" --count 2 --out \"" + b.string() + "\"").exit_code, 0);
  EXPECT_EQ(manifest_pairs(b), 2);
  {
    std::ofstream out(cfg, std::ios::app);
    out << "bogus-key=1\n";
  }
  EXPECT_EQ(run("synth-data --config \"" + cfg.string() + "\" --out \"" + b.string() + "\"").exit_code, 1);
}

TEST(Cli, HelpDocumentsUnits) {
  const RunResult top = run("--help");
  EXPECT_EQ(top.exit_code, 0);
  for (const char* cmd : {"synth-data", "train-syn", "train-stereo", "infer", "eval", "gradcheck"}) {
    EXPECT_NE(top.output.find(cmd), std::string::npos) << cmd;
  }
  const RunResult train = run("train-syn --help");
  EXPECT_NE(train.output.find("pixels"), std::string::npos);
  EXPECT_NE(train.output.find("per step"), std::string::npos);
  const RunResult synth = run("synth-data --help");
  EXPECT_NE(synth.output.find("meters"), std::string::npos);
}

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eamnet/image_io.hpp"
#include "eamnet/tensor.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTiny =
    " --set input_size=32 --set batch_size=2 --set steps=2 --set train_samples=4"
    " --set test_samples=2 --set lr=0.001 --set log_every=1";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("eamnet_cli_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(EAMNET_CLI_PATH) + " " + args + " >" + out.string() +
                            " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(out);
    o.err = slurp(err);
    return o;
  }

  std::string p(const std::string& leaf) const { return (dir_ / leaf).string(); }

  fs::path dir_;
};

TEST_F(Cli, SynthWritesDatasetLayout) {
  const Outcome o = run("synth --count 3 --set input_size=32 --out " + p("data"));
  ASSERT_EQ(o.code, 0) << o.err;
  for (const char* sub : {"Images", "GT", "Edge"}) {
    EXPECT_EQ(eamnet::list_pngs(dir_ / "data" / sub).size(), 3u) << sub;
  }
  const eamnet::Tensor img = eamnet::read_png(dir_ / "data" / "Images" / "synth_0.png", 3);
  EXPECT_EQ(img.shape(), (eamnet::Shape{1, 3, 32, 32}));
}

TEST_F(Cli, TrainEvalInferRoundTrip) {
  Outcome o = run(std::string("train") + kTiny + " --seed 3 --out " + p("run"));
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out.substr(0, o.out.find('\n')), "s_alpha,e_phi,f_w_beta,mae");
  for (const char* f : {"loss.csv", "model.ckpt", "config.txt", "scores.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run" / f)) << f;
  }
  EXPECT_NE(slurp(dir_ / "run" / "config.txt").find("seed = 3"), std::string::npos);

  o = run("eval --checkpoint " + p("run/model.ckpt"));
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream lines(o.out);
  std::string header, values;
  std::getline(lines, header);
  std::getline(lines, values);
  EXPECT_EQ(header, "s_alpha,e_phi,f_w_beta,mae");
  const double m = std::stod(values.substr(values.rfind(',') + 1));
  EXPECT_GT(m, 0.0);
  EXPECT_LT(m, 1.0);

  eamnet::Tensor image({1, 3, 123, 77});
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = (i % 97) / 96.0;
  eamnet::write_png(dir_ / "probe.png", image);
  o = run("infer --checkpoint " + p("run/model.ckpt") + " --image " + p("probe.png") +
          " --out " + p("pred"));
  ASSERT_EQ(o.code, 0) << o.err;
  const eamnet::Tensor mask = eamnet::read_png(dir_ / "pred" / "probe_mask.png", 1);
  const eamnet::Tensor edge = eamnet::read_png(dir_ / "pred" / "probe_edge.png", 1);
  EXPECT_EQ(mask.shape(), (eamnet::Shape{1, 1, 123, 77}));
  EXPECT_EQ(edge.shape(), (eamnet::Shape{1, 1, 123, 77}));
  const std::string first = slurp(dir_ / "pred" / "probe_mask.png");
  ASSERT_EQ(run("infer --checkpoint " + p("run/model.ckpt") + " --image " + p("probe.png") +
                " --out " + p("pred"))
                .code,
            0);
  EXPECT_EQ(slurp(dir_ / "pred" / "probe_mask.png"), first);

  o = run("eval --checkpoint " + p("run/model.ckpt") + " --set variant=no_edge_branch" +
          kTiny);
  EXPECT_NE(o.code, 0);
  EXPECT_NE(o.err.find("different model"), std::string::npos) << o.err;
}

TEST_F(Cli, EvalOfGroundTruthAgainstItself) {
  ASSERT_EQ(run("synth --count 2 --set input_size=32 --out " + p("data")).code, 0);
  const Outcome o = run("eval --pred " + p("data/GT") + " --gt " + p("data/GT") + " --out " +
                        p("scores"));
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out, "s_alpha,e_phi,f_w_beta,mae\n1.000000,1.000000,1.000000,0.000000\n");
  EXPECT_TRUE(fs::exists(dir_ / "scores" / "scores.csv"));
}

TEST_F(Cli, UnknownConfigKeyFailsByName) {
  std::ofstream(dir_ / "bad.cfg") << "input_size = 64\nlearning_rate = 0.1\n";
  const Outcome o = run("train --config " + p("bad.cfg") + " --out " + p("run"));
  EXPECT_NE(o.code, 0);
  EXPECT_NE(o.err.find("learning_rate"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(dir_ / "run" / "model.ckpt"));
}

TEST_F(Cli, MissingInputsFail) {
  EXPECT_NE(run("infer --checkpoint " + p("none.ckpt") + " --image x.png --out " + p("o")).code,
            0);
  EXPECT_NE(run("eval --pred " + p("nowhere") + " --gt " + p("nowhere")).code, 0);
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("frobnicate").code, 0);
}

TEST_F(Cli, AblateReportsBothVariants) {
  const Outcome o = run(std::string("ablate") + kTiny + " --out " + p("abl"));
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream lines(o.out);
  std::string header, full, ablated;
  std::getline(lines, header);
  std::getline(lines, full);
  std::getline(lines, ablated);
  EXPECT_EQ(header, "variant,s_alpha,e_phi,f_w_beta,mae");
  EXPECT_EQ(full.substr(0, 5), "full,");
  EXPECT_EQ(ablated.substr(0, 8), "w/o EDB,");
  EXPECT_TRUE(fs::exists(dir_ / "abl" / "ablation.csv"));
}

}  // namespace

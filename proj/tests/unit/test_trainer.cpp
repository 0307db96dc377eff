#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "eamnet/errors.hpp"
#include "eamnet/trainer.hpp"

using namespace eamnet;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.model = ModelConfig::toy();
  c.model.input_size = 32;
  c.batch_size = 2;
  c.steps = 2;
  c.train_samples = 6;
  c.test_samples = 2;
  c.lr = 1e-3;
  c.seed = 5;
  return c;
}

TEST(LearningRate, WarmupDecayAndDrop) {
  const RunConfig c;  // 4040 samples, batch 24: 169 steps per epoch, 16900 steps
  ASSERT_EQ(c.total_steps(), 16900);
  const int warmup = 845;
  EXPECT_DOUBLE_EQ(learning_rate(c, 0), 5e-5 / warmup);
  EXPECT_DOUBLE_EQ(learning_rate(c, warmup - 1), 5e-5);
  EXPECT_DOUBLE_EQ(learning_rate(c, warmup), 5e-5);
  const double span = 16900 - warmup;
  EXPECT_DOUBLE_EQ(learning_rate(c, 8416), 5e-5 * (1.0 - (8416 - warmup) / span));
  EXPECT_DOUBLE_EQ(learning_rate(c, 8417), 0.1 * 5e-5 * (1.0 - (8417 - warmup) / span));
  EXPECT_GT(learning_rate(c, 16899), 0.0);
  for (int s = warmup + 1; s < 16900; s += 97) {
    EXPECT_LT(learning_rate(c, s), learning_rate(c, s - 1));
  }
}

TEST(LearningRate, NoWarmupStartsAtPeak) {
  RunConfig c;
  c.warmup_fraction = 0.0;
  c.steps = 10;
  EXPECT_DOUBLE_EQ(learning_rate(c, 0), c.lr);
  EXPECT_DOUBLE_EQ(learning_rate(c, 5), c.lr * 0.5);
}

TEST(AdamW, SingleStepByHand) {
  ParamStore store;
  Var w = store.declare("w", Shape{1, 1, 1, 2}, ParamKind::kWeight, 1);
  w.mutable_value()[0] = 1.0;
  w.mutable_value()[1] = -2.0;
  Var rm = store.declare("rm", Shape{1, 1, 1, 1}, ParamKind::kRunningMean);
  w.node()->grad_buffer()[0] = 0.5;
  w.node()->grad_buffer()[1] = -0.25;
  AdamW opt(store, 0.9, 0.999, 1e-8, 0.01);
  opt.step(0.1);
  // Bias-corrected first step moves each coordinate by lr * g/(|g| + eps).
  EXPECT_NEAR(w.value()[0], 1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0), 1e-15);
  EXPECT_NEAR(w.value()[1], -2.0 - 0.1 * (-0.25 / (0.25 + 1e-8) + 0.01 * -2.0), 1e-15);
  EXPECT_EQ(rm.value()[0], 0.0);
  EXPECT_EQ(opt.steps_taken(), 1);
}

TEST(AdamW, DecaysWeightsWithoutGradient) {
  ParamStore store;
  Var w = store.declare("w", Shape{1, 1, 1, 1}, ParamKind::kWeight, 1);
  w.mutable_value()[0] = 2.0;
  w.node()->grad_buffer()[0] = 0.0;
  AdamW opt(store, 0.9, 0.999, 1e-8, 0.5);
  opt.step(0.1);
  EXPECT_NEAR(w.value()[0], 2.0 - 0.1 * 0.5 * 2.0, 1e-15);
}

TEST(TrainingSamples, EpochIsAPermutation) {
  RunConfig c = tiny_config();
  c.flip = false;
  std::multiset<std::string> names;
  for (int step = 0; step < 3; ++step) {
    for (const Sample& s : training_samples(c, step)) names.insert(s.name);
  }
  EXPECT_EQ(names.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(names.count("synth_" + std::to_string(i)), 1u);
}

TEST(TrainingSamples, HeldOutSplitIsDisjoint) {
  const RunConfig c = tiny_config();
  for (const Sample& s : held_out_samples(c)) {
    EXPECT_GE(std::stoi(s.name.substr(6)), kTestIndexBase);
  }
}

TEST(Train, RunsAreBitIdentical) {
  const RunConfig c = tiny_config();
  const TrainResult a = train(c);
  const TrainResult b = train(c);
  ASSERT_EQ(a.history.size(), 2u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].total, b.history[i].total);
    EXPECT_EQ(a.history[i].lr, b.history[i].lr);
  }
  for (std::size_t i = 0; i < a.params.entries().size(); ++i) {
    ASSERT_EQ(max_abs_diff(a.params.entries()[i].var.value(), b.params.entries()[i].var.value()),
              0.0)
        << a.params.entries()[i].name;
  }
  RunConfig other = c;
  other.seed = 6;
  EXPECT_NE(train(other).history[0].total, a.history[0].total);
}

TEST(Train, ReportsEveryStep) {
  const RunConfig c = tiny_config();
  std::vector<int> seen;
  train(c, [&](const StepRecord& r) { seen.push_back(r.step); });
  EXPECT_EQ(seen, (std::vector<int>{0, 1}));
}

TEST(Train, DivergenceNamesTheStep) {
  RunConfig c = tiny_config();
  c.lr = 1e300;
  c.warmup_fraction = 0.0;
  c.steps = 4;
  try {
    train(c);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos) << e.what();
  }
}

TEST(LossCsv, HeaderAndRows) {
  std::vector<StepRecord> h(2);
  h[0].total = 3.0;
  h[1].total = 1.0;
  h[1].step = 1;
  EXPECT_DOUBLE_EQ(mean_loss(h, 0, 2), 2.0);
  const fs::path path = fs::temp_directory_path() / "eamnet_loss_test.csv";
  write_loss_csv(path, h);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,lr,total,bce1,bce2,bce3,iou1,iou2,iou3,dice1,dice2,dice3");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
  fs::remove(path);
}

TEST(Ablation, TableHasBothRows) {
  AblationResult r;
  r.full = {0.9, 0.8, 0.7, 0.05, 4};
  r.no_edge_branch = {0.85, 0.75, 0.65, 0.07, 4};
  r.runs = {{1, r.full, r.no_edge_branch}, {2, r.no_edge_branch, r.full}};
  EXPECT_EQ(r.full_wins(), 1);
  const std::string t = r.table();
  EXPECT_EQ(t.substr(0, t.find('\n')), "variant,s_alpha,e_phi,f_w_beta,mae");
  EXPECT_NE(t.find("\nfull,0.900000,0.800000,0.700000,0.050000"), std::string::npos) << t;
  EXPECT_NE(t.find("\nw/o EDB,0.850000"), std::string::npos) << t;
}

}  // namespace

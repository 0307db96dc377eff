#include <gtest/gtest.h>

#include "eamnet/errors.hpp"
#include "eamnet/network.hpp"
#include "gradcheck.hpp"

using namespace eamnet;
using eamnet::testing::random_tensor;

namespace {

// Trainable scalars of a conv block; a bias replaces the norm affine pair.
long long block(int cin, int cout, int k, bool norm = true) {
  return static_cast<long long>(k) * k * cin * cout + (norm ? 2 * cout : cout);
}

long long expected_trainable(const ModelConfig& cfg) {
  const int c = cfg.reduced_channels;
  const auto& ch = cfg.backbone.stage_channels;
  const int blocks = cfg.backbone.blocks_per_stage;
  long long backbone = block(3, ch[0], 3) + block(ch[0], ch[0], 3);
  for (int i = 1; i < 4; ++i) backbone += block(ch[i - 1], ch[i], 3);
  for (int i = 0; i < 4; ++i) backbone += blocks * block(ch[i], ch[i], 3);

  const int inner = c / cfg.eia.attention_reduction;
  const long long mirror = 2 * block(c, c, 3);
  const long long cam = 2 * (block(c, inner, 1) + block(inner, c, 1));
  const long long eia = mirror + block(3 * c, c, 3) + block(c, c, 3) +
                        3 * 2 * block(c, c, 3) + block(3 * c, c, 3) + block(c, c, 3) + cam;
  const long long sea = block(2 * c, c, 3) + block(c, c, 3) + mirror + block(2 * c, c, 1) +
                        2 * block(c, c, 3);
  const long long gca = block(c, c, 1) + block(2 * c, 1, 1, false) + block(c, c, 1) +
                        2 * block(c, c, 3) + cam;
  const long long head = block(c, 1, 1, false);

  long long total = backbone + 6 * head + 3 * eia;
  for (int i = 0; i < 4; ++i) total += block(ch[i], c, 1);
  if (cfg.variant == Variant::kFull) {
    for (int i = 0; i < 4; ++i) total += block(ch[i], c, 1);
    total += 3 * sea + 6 * gca;
  } else {
    total += block(ch[0], c, 1) + block(ch[3], c, 1);
    total += 3 * gca + block(2 * c, c, 3) + block(c, c, 3);
  }
  return total;
}

Tensor random_image(int n, int size, std::uint64_t seed) {
  Rng rng(seed);
  return random_tensor({n, 3, size, size}, rng, 0.0, 1.0);
}

TEST(Network, ParameterTallyMatchesArchitecture) {
  for (Variant v : {Variant::kFull, Variant::kNoEdgeBranch}) {
    ModelConfig cfg = ModelConfig::toy();
    cfg.variant = v;
    ParamStore p = init_params(cfg, 0);
    EXPECT_EQ(static_cast<long long>(p.trainable_count()), expected_trainable(cfg))
        << to_string(v);
  }
  // Frozen totals of the default configuration.
  EXPECT_EQ(init_params(ModelConfig::toy(), 0).trainable_count(), 5140268u);
}

TEST(Network, VariantsDeclareDifferentModules) {
  ModelConfig cfg = ModelConfig::toy();
  ParamStore full = init_params(cfg, 0);
  cfg.variant = Variant::kNoEdgeBranch;
  ParamStore ablated = init_params(cfg, 0);
  EXPECT_TRUE(full.contains("sea2.refine.0.weight"));
  EXPECT_TRUE(full.contains("gca.edge0.guide.weight"));
  EXPECT_FALSE(ablated.contains("sea2.refine.0.weight"));
  EXPECT_FALSE(ablated.contains("gca.edge0.guide.weight"));
  EXPECT_FALSE(ablated.contains("reduce.edge2.weight"));
  EXPECT_TRUE(ablated.contains("early_edge.0.weight"));
}

TEST(Network, ToyShapesForBothVariants) {
  for (Variant v : {Variant::kFull, Variant::kNoEdgeBranch}) {
    ModelConfig cfg = ModelConfig::toy();
    cfg.variant = v;
    ParamStore p = init_params(cfg, 1);
    EamNet net(cfg, p);
    const ForwardTrace t = net.trace(Var(random_image(2, 64, 2)), Mode::kTrain);
    const int sizes[] = {16, 8, 4};
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(t.predictions.seg[i].shape(), (Shape{2, 1, sizes[i], sizes[i]}));
      EXPECT_EQ(t.predictions.edge[i].shape(), (Shape{2, 1, sizes[i], sizes[i]}));
      EXPECT_TRUE(t.predictions.seg[i].value().all_finite());
      EXPECT_EQ(t.seg[i].shape(), (Shape{2, 64, sizes[i], sizes[i]}));
      EXPECT_EQ(t.edge[i].shape(), (Shape{2, 64, sizes[i], sizes[i]}));
    }
    EXPECT_EQ(t.seg[3].shape(), (Shape{2, 64, 2, 2}));
  }
}

TEST(Network, PredictMaskRestoresRequestedSize) {
  const ModelConfig cfg = ModelConfig::toy();
  ParamStore p = init_params(cfg, 3);
  EamNet net(cfg, p);
  const Tensor image = random_image(1, 64, 4);
  const Tensor mask = predict_mask(net, image, 123, 77);
  const Tensor edge = predict_edge(net, image, 123, 77);
  EXPECT_EQ(mask.shape(), (Shape{1, 1, 123, 77}));
  EXPECT_EQ(edge.shape(), (Shape{1, 1, 123, 77}));
  for (double v : mask.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(max_abs_diff(mask, predict_mask(net, image, 123, 77)), 0.0);
}

TEST(Network, RejectsWrongInputSize) {
  const ModelConfig cfg = ModelConfig::toy();
  ParamStore p = init_params(cfg, 5);
  EamNet net(cfg, p);
  EXPECT_THROW(net.forward(Var(random_image(1, 96, 6)), Mode::kEval), InputSizeError);
  EXPECT_THROW(net.forward(Var(Tensor({1, 3, 100, 100})), Mode::kEval), InputSizeError);
  ModelConfig bad = cfg;
  bad.input_size = 50;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Network, InitializationIsSeedDeterministic) {
  const ModelConfig cfg = ModelConfig::toy();
  const ParamStore a = init_params(cfg, 7);
  const ParamStore b = init_params(cfg, 7);
  const ParamStore c = init_params(cfg, 8);
  bool differs = false;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    EXPECT_EQ(max_abs_diff(a.entries()[i].var.value(), b.entries()[i].var.value()), 0.0);
    if (max_abs_diff(a.entries()[i].var.value(), c.entries()[i].var.value()) > 0.0) {
      differs = true;
    }
  }
  EXPECT_TRUE(differs);
}

TEST(Network, EveryTrainableParameterReceivesGradient) {
  for (Variant v : {Variant::kFull, Variant::kNoEdgeBranch}) {
    ModelConfig cfg = ModelConfig::toy();
    cfg.input_size = 32;
    cfg.variant = v;
    ParamStore p = init_params(cfg, 9);
    EamNet net(cfg, p);
    const PredictionSet out = net.forward(Var(random_image(2, 32, 10)), Mode::kTrain);
    Var total;
    for (int i = 0; i < 3; ++i) {
      Var term = ops::add(eamnet::testing::probe(out.seg[i], 20 + i), eamnet::testing::probe(out.edge[i], 30 + i));
      total = total.defined() ? ops::add(total, term) : term;
    }
    total.backward();
    for (const ParamEntry& e : p.entries()) {
      if (!is_trainable(e.kind)) continue;
      double mag = 0.0;
      for (double g : e.var.grad().values()) mag += std::abs(g);
      EXPECT_GT(mag, 0.0) << e.name << " (" << to_string(v) << ")";
    }
  }
}

}  // namespace

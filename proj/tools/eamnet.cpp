#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "eamnet/checkpoint.hpp"
#include "eamnet/errors.hpp"
#include "eamnet/image_io.hpp"
#include "eamnet/ops.hpp"
#include "eamnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace eamnet;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool out_required) {
  cmd->add_option("--config", o.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "overrides the config seed");
  cmd->add_option("--set", o.overrides, "key=value override, repeatable");
  auto* out = cmd->add_option("--out", o.out, "output directory");
  if (out_required) out->required();
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig config = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) config.seed = *o.seed;
  config.validate();
  return config;
}

void print_report(const MetricReport& r) {
  std::cout << "s_alpha,e_phi,f_w_beta,mae\n" << r.csv() << "\n";
}

int run_synth(const CommonOptions& o, int count, const std::string& split) {
  const RunConfig config = resolve_config(o);
  const SynthConfig synth = config.synth_config();
  const int base = split == "test" ? kTestIndexBase : 0;
  fs::create_directories(o.out);
  for (int i = 0; i < count; ++i) write_sample(o.out, generate_sample(synth, base + i));
  std::cout << "wrote " << count << " " << split << " samples to " << o.out << "\n";
  return 0;
}

int run_train(const CommonOptions& o) {
  const RunConfig config = resolve_config(o);
  fs::create_directories(o.out);
  const int total = config.total_steps();
  TrainResult result = train(config, [&](const StepRecord& r) {
    if ((r.step + 1) % config.log_every == 0 || r.step + 1 == total) {
      std::fprintf(stderr, "step %d/%d lr %.3g loss %.5f\n", r.step + 1, total, r.lr, r.total);
    }
  });
  write_loss_csv(fs::path(o.out) / "loss.csv", result.history);
  save_checkpoint(fs::path(o.out) / "model.ckpt", config, result.params);
  std::ofstream(fs::path(o.out) / "config.txt") << to_text(config);
  EamNet net(config.model, result.params);
  const DatasetEvaluation eval = evaluate_model(net, held_out_samples(config));
  write_scores_csv(fs::path(o.out) / "scores.csv", eval.per_image);
  print_report(eval.summary);
  return 0;
}

DatasetEvaluation evaluate_directory(const EamNet& net, const fs::path& root) {
  std::map<std::string, fs::path> images, masks;
  for (const auto& p : list_pngs(root / "Images")) images[p.stem().string()] = p;
  for (const auto& p : list_pngs(root / "GT")) masks[p.stem().string()] = p;
  std::string unpaired;
  for (const auto& [stem, p] : images) {
    if (!masks.count(stem)) unpaired += " " + stem;
  }
  for (const auto& [stem, p] : masks) {
    if (!images.count(stem)) unpaired += " " + stem;
  }
  if (!unpaired.empty()) throw IoError("unpaired dataset files:" + unpaired);
  if (images.empty()) throw IoError("no images under " + (root / "Images").string());
  const int size = net.config().input_size;
  DatasetEvaluation out;
  for (const auto& [stem, path] : images) {
    Tensor gt = read_png(masks.at(stem), 1);
    for (double& v : gt.values()) v = v >= 128.0 / 255.0 ? 1.0 : 0.0;
    const Tensor image = ops::resize_bilinear(read_png(path, 3), size, size);
    const Tensor pred = predict_mask(net, image, gt.h(), gt.w());
    out.per_image.push_back({stem, evaluate_pair(pred, gt)});
  }
  out.summary = mean_report(out.per_image);
  return out;
}

int run_eval(const CommonOptions& o, const std::string& checkpoint,
             const std::string& data, const std::string& pred_dir,
             const std::string& gt_dir) {
  DatasetEvaluation eval;
  if (!pred_dir.empty() || !gt_dir.empty()) {
    if (pred_dir.empty() || gt_dir.empty()) {
      throw ConfigError("--pred and --gt must be given together");
    }
    eval = evaluate_dataset(pred_dir, gt_dir);
  } else {
    if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --pred/--gt");
    Checkpoint ck = load_checkpoint(checkpoint);
    RunConfig config = ck.config;
    if (!o.config_path.empty() || !o.overrides.empty()) {
      config = resolve_config(o);
      require_same_model(config.model, ck);
    }
    EamNet net(ck.config.model, ck.params);
    eval = data.empty() ? evaluate_model(net, held_out_samples(config))
                        : evaluate_directory(net, data);
  }
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_scores_csv(fs::path(o.out) / "scores.csv", eval.per_image);
  }
  print_report(eval.summary);
  return 0;
}

int run_infer(const CommonOptions& o, const std::string& checkpoint,
              const std::string& image_path) {
  Checkpoint ck = load_checkpoint(checkpoint);
  EamNet net(ck.config.model, ck.params);
  const Tensor image = read_png(image_path, 3);
  const int size = ck.config.model.input_size;
  const Tensor input = ops::resize_bilinear(image, size, size);
  fs::create_directories(o.out);
  const std::string stem = fs::path(image_path).stem().string();
  write_png(fs::path(o.out) / (stem + "_mask.png"),
            predict_mask(net, input, image.h(), image.w()));
  write_png(fs::path(o.out) / (stem + "_edge.png"),
            predict_edge(net, input, image.h(), image.w()));
  std::cout << "wrote " << (fs::path(o.out) / (stem + "_mask.png")).string() << " and "
            << (fs::path(o.out) / (stem + "_edge.png")).string() << "\n";
  return 0;
}

int run_ablate(const CommonOptions& o) {
  const RunConfig config = resolve_config(o);
  const AblationResult result = run_ablation(
      config, [](const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); });
  const std::string table = result.table();
  std::cout << table;
  if (result.runs.size() > 1) {
    std::cout << "full model wins S_alpha in " << result.full_wins() << " of "
              << result.runs.size() << " seeds\n";
  }
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / "ablation.csv") << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EAMNet camouflaged object detection"};
  app.require_subcommand(1);

  CommonOptions synth_opts, train_opts, eval_opts, infer_opts, ablate_opts;
  int count = 100;
  std::string split = "train";
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  add_common(synth, synth_opts, true);
  synth->add_option("--count", count, "number of samples")->check(CLI::PositiveNumber);
  synth->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));

  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd, train_opts, true);

  std::string checkpoint, data, pred_dir, gt_dir, image;
  auto* eval = app.add_subcommand("eval", "score a checkpoint or a prediction directory");
  add_common(eval, eval_opts, false);
  eval->add_option("--checkpoint", checkpoint, "model checkpoint")->check(CLI::ExistingFile);
  eval->add_option("--data", data, "dataset root with Images/ and GT/");
  eval->add_option("--pred", pred_dir, "prediction PNG directory");
  eval->add_option("--gt", gt_dir, "ground-truth PNG directory");

  auto* infer = app.add_subcommand("infer", "predict mask and edge maps for one image");
  add_common(infer, infer_opts, true);
  infer->add_option("--checkpoint", checkpoint, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  infer->add_option("--image", image, "input PNG")->required();

  auto* ablate = app.add_subcommand("ablate", "compare the full model with the no-edge-branch variant");
  add_common(ablate, ablate_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_opts, count, split);
    if (train_cmd->parsed()) return run_train(train_opts);
    if (eval->parsed()) return run_eval(eval_opts, checkpoint, data, pred_dir, gt_dir);
    if (infer->parsed()) return run_infer(infer_opts, checkpoint, image);
    if (ablate->parsed()) return run_ablate(ablate_opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#include "eamnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "eamnet/errors.hpp"

namespace eamnet {

namespace {

constexpr std::uint64_t kOrderStream = 0x4f52444552ULL;
constexpr std::uint64_t kFlipStream = 0x464c4950ULL;

std::vector<int> epoch_order(const RunConfig& config, int epoch, int count) {
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(mix_seed(config.seed, kOrderStream), static_cast<std::uint64_t>(epoch)));
  for (int i = count - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  }
  return order;
}

// Training samples from data_dir are loaded once per process and config.
const std::vector<Sample>& directory_samples(const RunConfig& config) {
  static std::string cached_key;
  static std::vector<Sample> cached;
  const std::string key = config.data_dir + "#" + std::to_string(config.model.input_size) +
                          "#" + std::to_string(config.synth.edge_width);
  if (key != cached_key) {
    cached = load_dataset(config.data_dir, config.model.input_size, config.synth.edge_width);
    cached_key = key;
  }
  return cached;
}

}  // namespace

double learning_rate(const RunConfig& config, int step) {
  const int total = config.total_steps();
  const int warmup = static_cast<int>(std::floor(config.warmup_fraction * total));
  double lr;
  if (step < warmup) {
    lr = config.lr * (step + 1) / warmup;
  } else {
    const int span = total - warmup;
    lr = config.lr * (1.0 - static_cast<double>(step - warmup) / span);
  }
  const int epoch = static_cast<int>(
      static_cast<long long>(step) * config.batch_size / config.train_samples);
  if (epoch >= config.lr_drop_epoch) lr *= config.lr_drop_factor;
  return lr;
}

AdamW::AdamW(const ParamStore& params, double beta1, double beta2, double eps,
             double weight_decay)
    : params_(params.trainable()),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      weight_decay_(weight_decay) {
  for (const Var& p : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Var& p = params_[k];
    if (!p.has_grad()) continue;
    const Tensor& g = p.grad();
    Tensor& w = p.mutable_value();
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      w[i] -= lr * (update + weight_decay_ * w[i]);
    }
  }
}

std::vector<Sample> training_samples(const RunConfig& config, int step) {
  const bool synthetic = config.data_dir.empty();
  const std::vector<Sample>* loaded = synthetic ? nullptr : &directory_samples(config);
  const int count = synthetic ? config.train_samples : static_cast<int>(loaded->size());
  const SynthConfig synth = config.synth_config();
  std::vector<Sample> out;
  int cached_epoch = -1;
  std::vector<int> order;
  for (int b = 0; b < config.batch_size; ++b) {
    const long long position = static_cast<long long>(step) * config.batch_size + b;
    const int epoch = static_cast<int>(position / count);
    if (epoch != cached_epoch) {
      order = epoch_order(config, epoch, count);
      cached_epoch = epoch;
    }
    const int index = order[position % count];
    Sample s = synthetic ? generate_sample(synth, index) : (*loaded)[index];
    if (config.flip) {
      Rng rng(mix_seed(mix_seed(config.seed, kFlipStream), static_cast<std::uint64_t>(position)));
      s = augment(s, rng);
    }
    out.push_back(std::move(s));
  }
  return out;
}

TrainResult train(const RunConfig& config, const StepCallback& on_step) {
  config.validate();
  TrainResult result;
  result.params = init_params(config.model, config.seed);
  EamNet net(config.model, result.params);
  AdamW opt(result.params, config.adam_beta1, config.adam_beta2, config.adam_eps,
            config.weight_decay);
  const int total = config.total_steps();
  for (int step = 0; step < total; ++step) {
    const Batch batch = make_batch(training_samples(config, step));
    PredictionSet preds;
    try {
      preds = net.forward(Var(batch.image), Mode::kTrain);
    } catch (const NumericError& e) {
      throw NumericError("non-finite activations at step " + std::to_string(step) + ": " +
                         e.what());
    }
    LossBreakdown loss = total_loss(preds, batch.mask, batch.edge, config.loss);
    const double value = loss.total.value().item();
    if (!std::isfinite(value)) {
      throw NumericError("non-finite loss at step " + std::to_string(step));
    }
    loss.total.backward();
    StepRecord rec;
    rec.step = step;
    rec.lr = learning_rate(config, step);
    rec.total = value;
    rec.bce = loss.bce;
    rec.iou = loss.iou;
    rec.dice = loss.dice;
    opt.step(rec.lr);
    result.params.zero_grad();
    result.history.push_back(rec);
    if (on_step) on_step(rec);
  }
  for (const ParamEntry& e : result.params.entries()) {
    if (!e.var.value().all_finite()) {
      throw NumericError("parameter " + e.name + " became non-finite");
    }
  }
  return result;
}

std::vector<Sample> held_out_samples(const RunConfig& config) {
  if (!config.test_dir.empty()) {
    return load_dataset(config.test_dir, config.model.input_size, config.synth.edge_width);
  }
  const SynthConfig synth = config.synth_config();
  std::vector<Sample> out;
  for (int i = 0; i < config.test_samples; ++i) {
    out.push_back(generate_sample(synth, kTestIndexBase + i));
  }
  return out;
}

DatasetEvaluation evaluate_model(const EamNet& net, const std::vector<Sample>& samples,
                                 int batch_size) {
  if (samples.empty()) throw ContractError("evaluate_model: no samples");
  DatasetEvaluation out;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    const std::vector<Sample> chunk(samples.begin() + start, samples.begin() + end);
    const Batch batch = make_batch(chunk);
    const Tensor pred = predict_mask(net, batch.image, batch.mask.h(), batch.mask.w());
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const int n = static_cast<int>(i);
      out.per_image.push_back(
          {chunk[i].name, evaluate_pair(pred.plane(n, 0), batch.mask.plane(n, 0))});
    }
  }
  out.summary = mean_report(out.per_image);
  return out;
}

void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<StepRecord>& history) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "step,lr,total,bce1,bce2,bce3,iou1,iou2,iou3,dice1,dice2,dice3\n";
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const StepRecord& r : history) {
    f << r.step << "," << num(r.lr) << "," << num(r.total);
    for (double v : r.bce) f << "," << num(v);
    for (double v : r.iou) f << "," << num(v);
    for (double v : r.dice) f << "," << num(v);
    f << "\n";
  }
  if (!f) throw IoError("failed writing " + path.string());
}

double mean_loss(const std::vector<StepRecord>& history, std::size_t begin,
                 std::size_t end) {
  if (begin >= end || end > history.size()) {
    throw ContractError("mean_loss: invalid range");
  }
  double total = 0.0;
  for (std::size_t i = begin; i < end; ++i) total += history[i].total;
  return total / static_cast<double>(end - begin);
}

int AblationResult::full_wins() const {
  int wins = 0;
  for (const AblationRun& r : runs) {
    if (r.full.s_alpha > r.no_edge_branch.s_alpha) ++wins;
  }
  return wins;
}

std::string AblationResult::table() const {
  std::string out = "variant,s_alpha,e_phi,f_w_beta,mae\n";
  out += "full," + full.csv() + "\n";
  out += "w/o EDB," + no_edge_branch.csv() + "\n";
  return out;
}

AblationResult run_ablation(const RunConfig& config, const ProgressCallback& progress) {
  config.validate();
  AblationResult result;
  const std::vector<Sample> test = held_out_samples(config);
  std::vector<ImageScore> full_scores, ablated_scores;
  for (int r = 0; r < config.ablation_runs; ++r) {
    AblationRun run;
    run.seed = config.seed + static_cast<std::uint64_t>(r);
    for (Variant variant : {Variant::kFull, Variant::kNoEdgeBranch}) {
      RunConfig c = config;
      c.seed = run.seed;
      c.model.variant = variant;
      if (progress) {
        progress("training " + to_string(variant) + " seed " + std::to_string(run.seed));
      }
      TrainResult trained = train(c);
      EamNet net(c.model, trained.params);
      const MetricReport report = evaluate_model(net, test).summary;
      (variant == Variant::kFull ? run.full : run.no_edge_branch) = report;
      (variant == Variant::kFull ? full_scores : ablated_scores)
          .push_back({"seed" + std::to_string(run.seed), report});
      if (progress) progress(to_string(variant) + " seed " + std::to_string(run.seed) +
                             ": " + report.csv());
    }
    result.runs.push_back(run);
  }
  result.full = mean_report(full_scores);
  result.no_edge_branch = mean_report(ablated_scores);
  result.full.n_images = result.no_edge_branch.n_images = static_cast<int>(test.size());
  return result;
}

}  // namespace eamnet

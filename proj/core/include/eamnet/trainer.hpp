#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "eamnet/config.hpp"
#include "eamnet/metrics.hpp"

namespace eamnet {

/// Warm-up over the first warmup_fraction of steps, linear decay to zero
/// after it, times lr_drop_factor once the epoch reaches lr_drop_epoch.
double learning_rate(const RunConfig& config, int step);

/// Adam with decoupled weight decay over the trainable entries of a store.
class AdamW {
 public:
  AdamW(const ParamStore& params, double beta1, double beta2, double eps,
        double weight_decay);

  /// Applies one update from the accumulated gradients.
  void step(double lr);
  int steps_taken() const { return t_; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  double beta1_, beta2_, eps_, weight_decay_;
  int t_ = 0;
};

struct StepRecord {
  int step = 0;
  double lr = 0.0;
  double total = 0.0;
  std::array<double, 3> bce{};
  std::array<double, 3> iou{};
  std::array<double, 3> dice{};
};

struct TrainResult {
  ParamStore params;
  std::vector<StepRecord> history;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Deterministic in the config. Throws NumericError naming the step when the
/// loss turns non-finite.
TrainResult train(const RunConfig& config, const StepCallback& on_step = {});

/// The training samples of one step, augmentation applied.
std::vector<Sample> training_samples(const RunConfig& config, int step);

/// Synthetic test split or the samples under test_dir.
std::vector<Sample> held_out_samples(const RunConfig& config);

/// Predicts every sample at its mask resolution and scores it.
DatasetEvaluation evaluate_model(const EamNet& net, const std::vector<Sample>& samples,
                                 int batch_size = 8);

/// Header `step,lr,total,bce1,bce2,bce3,iou1,iou2,iou3,dice1,dice2,dice3`.
void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<StepRecord>& history);

/// Mean total loss over history[begin, end).
double mean_loss(const std::vector<StepRecord>& history, std::size_t begin,
                 std::size_t end);

struct AblationRun {
  std::uint64_t seed = 0;
  MetricReport full;
  MetricReport no_edge_branch;
};

struct AblationResult {
  std::vector<AblationRun> runs;
  MetricReport full;            // mean over runs
  MetricReport no_edge_branch;  // mean over runs

  /// Runs in which the full model has the higher S-measure.
  int full_wins() const;
  /// Rows full and w/o EDB, columns S_alpha, E_phi, F^w_beta, M.
  std::string table() const;
};

using ProgressCallback = std::function<void(const std::string&)>;

/// Trains and scores both variants with seeds seed, seed+1, ... under the
/// same budget.
AblationResult run_ablation(const RunConfig& config,
                            const ProgressCallback& progress = {});

}  // namespace eamnet

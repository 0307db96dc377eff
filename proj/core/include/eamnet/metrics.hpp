#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eamnet/tensor.hpp"

namespace eamnet {

/// Scores of one prediction/GT pair or the mean over a dataset.
struct MetricReport {
  double s_alpha = 0.0;
  double e_phi = 0.0;
  double f_w_beta = 0.0;
  double mae = 0.0;
  int n_images = 0;

  /// `s_alpha,e_phi,f_w_beta,mae` with fixed precision.
  std::string csv() const;
};

/// All map arguments are single planes of shape (1,1,H,W); predictions lie
/// in [0,1] and ground truths are binary.
double mae(const Tensor& pred, const Tensor& gt);

/// Structure measure: alpha * object score + (1 - alpha) * region score.
/// All-background gt scores 1 - mean(pred); all-foreground gt scores
/// mean(pred).
double s_measure(const Tensor& pred, const Tensor& gt, double alpha = 0.5);

/// Enhanced-alignment measure of pred binarized at min(2 mean(pred), 1).
double e_measure(const Tensor& pred, const Tensor& gt);

/// Weighted F-measure with a 7x7, sigma 5 Gaussian dependency kernel.
/// An empty gt scores 0.
double weighted_fbeta(const Tensor& pred, const Tensor& gt, double beta2 = 1.0);

MetricReport evaluate_pair(const Tensor& pred, const Tensor& gt);

struct ImageScore {
  std::string name;
  MetricReport scores;
};

struct DatasetEvaluation {
  MetricReport summary;
  std::vector<ImageScore> per_image;
};

/// Mean over per-image reports; n_images is the count.
MetricReport mean_report(const std::vector<ImageScore>& scores);

/// Scores every PNG of `gt_dir` against the same-named file in `pred_dir`.
/// Predictions are bilinearly resized to each GT's size; GT pixels >= 128
/// are foreground. Throws IoError listing unmatched names.
DatasetEvaluation evaluate_dataset(const std::filesystem::path& pred_dir,
                                   const std::filesystem::path& gt_dir);

/// Header `filename,s_alpha,e_phi,f_w_beta,mae`, one row per image.
void write_scores_csv(const std::filesystem::path& path,
                      const std::vector<ImageScore>& scores);

}  // namespace eamnet

#include "eamnet/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "eamnet/errors.hpp"
#include "eamnet/image_io.hpp"
#include "eamnet/ops.hpp"

namespace eamnet {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_pair(const Tensor& pred, const Tensor& gt, const char* what) {
  if (pred.n() != 1 || pred.c() != 1) {
    throw ContractError(std::string(what) + ": expected a single plane, got " +
                        pred.shape().str());
  }
  if (!(pred.shape() == gt.shape())) {
    throw ContractError(std::string(what) + ": prediction " + pred.shape().str() +
                        " and ground truth " + gt.shape().str() + " differ");
  }
  for (double v : gt.values()) {
    if (v != 0.0 && v != 1.0) {
      throw ContractError(std::string(what) + ": ground truth must be binary");
    }
  }
}

// A rectangular window [y0, y1) x [x0, x1) of a plane.
struct Window {
  int y0, y1, x0, x1;
  int size() const { return std::max(0, y1 - y0) * std::max(0, x1 - x0); }
};

double object_score(const Tensor& pred, const Tensor& gt, bool foreground) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if ((gt[i] == 1.0) == foreground) {
      sum += foreground ? pred[i] : 1.0 - pred[i];
      ++count;
    }
  }
  if (count == 0) return 0.0;
  const double mean = sum / count;
  double var = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if ((gt[i] == 1.0) == foreground) {
      const double v = (foreground ? pred[i] : 1.0 - pred[i]) - mean;
      var += v * v;
    }
  }
  const double sd = count > 1 ? std::sqrt(var / (count - 1)) : 0.0;
  return 2.0 * mean / (mean * mean + 1.0 + sd);
}

double s_object(const Tensor& pred, const Tensor& gt) {
  const double u = gt.mean();
  return u * object_score(pred, gt, true) +
         (1.0 - u) * object_score(pred, gt, false);
}

double ssim(const Tensor& pred, const Tensor& gt, const Window& win) {
  const int n = win.size();
  if (n == 0) return 0.0;
  const int w = pred.w();
  double mx = 0.0, my = 0.0;
  for (int y = win.y0; y < win.y1; ++y) {
    for (int x = win.x0; x < win.x1; ++x) {
      mx += pred[y * w + x];
      my += gt[y * w + x];
    }
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int y = win.y0; y < win.y1; ++y) {
    for (int x = win.x0; x < win.x1; ++x) {
      const double a = pred[y * w + x] - mx;
      const double b = gt[y * w + x] - my;
      sxx += a * a;
      syy += b * b;
      sxy += a * b;
    }
  }
  const double denom = n > 1 ? n - 1 : 1;
  sxx /= denom;
  syy /= denom;
  sxy /= denom;
  const double alpha = 4.0 * mx * my * sxy;
  const double beta = (mx * mx + my * my) * (sxx + syy);
  if (alpha != 0.0) return alpha / beta;
  if (beta == 0.0) return 1.0;
  return 0.0;
}

double s_region(const Tensor& pred, const Tensor& gt) {
  const int h = gt.h(), w = gt.w();
  const double total = gt.sum();
  // 1-based centroid, rounded half away from zero.
  int cx, cy;
  if (total == 0.0) {
    cx = static_cast<int>(std::round(w / 2.0));
    cy = static_cast<int>(std::round(h / 2.0));
  } else {
    double sx = 0.0, sy = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        sx += gt[y * w + x] * (x + 1);
        sy += gt[y * w + x] * (y + 1);
      }
    }
    cx = static_cast<int>(std::round(sx / total));
    cy = static_cast<int>(std::round(sy / total));
  }
  const double area = static_cast<double>(w) * h;
  const double weighted = static_cast<double>(cx) * cy * ssim(pred, gt, {0, cy, 0, cx}) +
                          static_cast<double>(w - cx) * cy * ssim(pred, gt, {0, cy, cx, w}) +
                          static_cast<double>(cx) * (h - cy) * ssim(pred, gt, {cy, h, 0, cx}) +
                          static_cast<double>(w - cx) * (h - cy) * ssim(pred, gt, {cy, h, cx, w});
  return weighted / area;
}

// Exact Euclidean nearest-foreground search. For every pixel returns the
// squared distance and the flat index of the nearest foreground pixel;
// ties go to the smallest (row, col).
void nearest_foreground(const Tensor& gt, std::vector<double>& dist2,
                        std::vector<int>& nearest) {
  const int h = gt.h(), w = gt.w();
  constexpr int kNone = -1;
  // Per column: row of the closest foreground pixel (upper one on ties).
  std::vector<int> col_row(static_cast<std::size_t>(h) * w, kNone);
  for (int x = 0; x < w; ++x) {
    int last = kNone;
    for (int y = 0; y < h; ++y) {
      if (gt[y * w + x] == 1.0) last = y;
      col_row[y * w + x] = last;
    }
    int next = kNone;
    for (int y = h - 1; y >= 0; --y) {
      if (gt[y * w + x] == 1.0) next = y;
      const int up = col_row[y * w + x];
      if (next != kNone && (up == kNone || next - y < y - up)) {
        col_row[y * w + x] = next;
      }
    }
  }
  dist2.assign(static_cast<std::size_t>(h) * w, 0.0);
  nearest.assign(static_cast<std::size_t>(h) * w, kNone);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = std::numeric_limits<double>::infinity();
      int best_row = 0, best_col = 0;
      for (int xc = 0; xc < w; ++xc) {
        const int r = col_row[y * w + xc];
        if (r == kNone) continue;
        const double d2 = static_cast<double>(x - xc) * (x - xc) +
                          static_cast<double>(y - r) * (y - r);
        if (d2 < best || (d2 == best && (r < best_row || (r == best_row && xc < best_col)))) {
          best = d2;
          best_row = r;
          best_col = xc;
        }
      }
      dist2[y * w + x] = best;
      nearest[y * w + x] = best_row * w + best_col;
    }
  }
}

std::array<double, 49> gaussian_kernel() {
  std::array<double, 49> k{};
  const double sigma = 5.0;
  double total = 0.0;
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k[(dy + 3) * 7 + dx + 3] = v;
      total += v;
    }
  }
  for (double& v : k) v /= total;
  return k;
}

}  // namespace

std::string MetricReport::csv() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f", s_alpha, e_phi, f_w_beta, mae);
  return buf;
}

double mae(const Tensor& pred, const Tensor& gt) {
  require_pair(pred, gt, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] - gt[i]);
  return total / static_cast<double>(pred.size());
}

double s_measure(const Tensor& pred, const Tensor& gt, double alpha) {
  require_pair(pred, gt, "s_measure");
  const double y = gt.mean();
  if (y == 0.0) return 1.0 - pred.mean();
  if (y == 1.0) return pred.mean();
  const double q = alpha * s_object(pred, gt) + (1.0 - alpha) * s_region(pred, gt);
  return std::max(q, 0.0);
}

double e_measure(const Tensor& pred, const Tensor& gt) {
  require_pair(pred, gt, "e_measure");
  const double threshold = std::min(2.0 * pred.mean(), 1.0);
  const std::size_t n = pred.size();
  std::vector<double> fm(n);
  for (std::size_t i = 0; i < n; ++i) fm[i] = pred[i] >= threshold ? 1.0 : 0.0;
  const double gt_sum = gt.sum();
  double score = 0.0;
  if (gt_sum == 0.0) {
    for (double v : fm) score += 1.0 - v;
  } else if (gt_sum == static_cast<double>(n)) {
    for (double v : fm) score += v;
  } else {
    double mu_fm = 0.0;
    for (double v : fm) mu_fm += v;
    mu_fm /= static_cast<double>(n);
    const double mu_gt = gt_sum / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = fm[i] - mu_fm;
      const double b = gt[i] - mu_gt;
      const double spread = a * a + b * b;
      const double align = spread > 0.0 ? 2.0 * a * b / spread : 0.0;
      score += (align + 1.0) * (align + 1.0) / 4.0;
    }
  }
  return score / static_cast<double>(n);
}

double weighted_fbeta(const Tensor& pred, const Tensor& gt, double beta2) {
  require_pair(pred, gt, "weighted_fbeta");
  if (gt.sum() == 0.0) return 0.0;
  const int h = gt.h(), w = gt.w();
  const std::size_t n = gt.size();
  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) err[i] = std::abs(pred[i] - gt[i]);

  std::vector<double> dist2;
  std::vector<int> nearest;
  nearest_foreground(gt, dist2, nearest);

  std::vector<double> et(err);
  for (std::size_t i = 0; i < n; ++i) {
    if (gt[i] == 0.0) et[i] = err[nearest[i]];
  }
  static const std::array<double, 49> kernel = gaussian_kernel();
  std::vector<double> ea(n, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -3; dy <= 3; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -3; dx <= 3; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          acc += kernel[(dy + 3) * 7 + dx + 3] * et[yy * w + xx];
        }
      }
      ea[y * w + x] = acc;
    }
  }
  double fg = 0.0, ew_fg = 0.0, ew_bg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt[i] == 1.0) {
      fg += 1.0;
      ew_fg += std::min(err[i], ea[i]);
    } else {
      const double b = 2.0 - std::exp(std::log(0.5) / 5.0 * std::sqrt(dist2[i]));
      ew_bg += err[i] * b;
    }
  }
  const double tp = fg - ew_fg;
  const double recall = 1.0 - ew_fg / fg;
  const double precision = tp / (kEps + tp + ew_bg);
  return (1.0 + beta2) * recall * precision / (kEps + recall + beta2 * precision);
}

MetricReport evaluate_pair(const Tensor& pred, const Tensor& gt) {
  MetricReport r;
  r.s_alpha = s_measure(pred, gt);
  r.e_phi = e_measure(pred, gt);
  r.f_w_beta = weighted_fbeta(pred, gt);
  r.mae = mae(pred, gt);
  r.n_images = 1;
  return r;
}

MetricReport mean_report(const std::vector<ImageScore>& scores) {
  if (scores.empty()) throw ContractError("mean_report: no scores");
  MetricReport r;
  for (const ImageScore& s : scores) {
    r.s_alpha += s.scores.s_alpha;
    r.e_phi += s.scores.e_phi;
    r.f_w_beta += s.scores.f_w_beta;
    r.mae += s.scores.mae;
  }
  const double k = static_cast<double>(scores.size());
  r.s_alpha /= k;
  r.e_phi /= k;
  r.f_w_beta /= k;
  r.mae /= k;
  r.n_images = static_cast<int>(scores.size());
  return r;
}

DatasetEvaluation evaluate_dataset(const std::filesystem::path& pred_dir,
                                   const std::filesystem::path& gt_dir) {
  const std::vector<std::filesystem::path> gts = list_pngs(gt_dir);
  const std::vector<std::filesystem::path> preds = list_pngs(pred_dir);
  std::set<std::string> gt_names, pred_names;
  for (const auto& p : gts) gt_names.insert(p.filename().string());
  for (const auto& p : preds) pred_names.insert(p.filename().string());
  std::string missing, extra;
  for (const auto& name : gt_names) {
    if (!pred_names.count(name)) missing += " " + name;
  }
  for (const auto& name : pred_names) {
    if (!gt_names.count(name)) extra += " " + name;
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "prediction and ground-truth sets differ;";
    if (!missing.empty()) msg += " missing predictions:" + missing + ";";
    if (!extra.empty()) msg += " predictions without ground truth:" + extra + ";";
    throw IoError(msg);
  }
  if (gts.empty()) throw IoError("no PNG images in " + gt_dir.string());

  DatasetEvaluation out;
  for (const auto& gt_path : gts) {
    Tensor gt = read_png(gt_path, 1);
    for (double& v : gt.values()) v = v >= 128.0 / 255.0 ? 1.0 : 0.0;
    Tensor pred = read_png(pred_dir / gt_path.filename(), 1);
    if (pred.h() != gt.h() || pred.w() != gt.w()) {
      pred = ops::resize_bilinear(pred, gt.h(), gt.w());
      for (double& v : pred.values()) v = std::clamp(v, 0.0, 1.0);
    }
    out.per_image.push_back({gt_path.filename().string(), evaluate_pair(pred, gt)});
  }
  out.summary = mean_report(out.per_image);
  return out;
}

void write_scores_csv(const std::filesystem::path& path,
                      const std::vector<ImageScore>& scores) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "filename,s_alpha,e_phi,f_w_beta,mae\n";
  for (const ImageScore& s : scores) f << s.name << "," << s.scores.csv() << "\n";
  if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace eamnet

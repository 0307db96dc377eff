#include "eamnet/losses.hpp"

#include <cmath>
#include <vector>

#include "eamnet/errors.hpp"

namespace eamnet {

namespace {

void require_binary(const Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (v != 0.0 && v != 1.0) {
      throw ContractError(std::string(what) + " must be binary (0/1)");
    }
  }
}

void require_loss_shapes(const Var& logits, const Tensor& gt, const char* op) {
  const Shape& s = logits.shape();
  if (s.c != 1) {
    throw ContractError(std::string(op) + ": logits must be single-channel, got " +
                        s.str());
  }
  if (!(gt.shape() == s)) {
    throw ContractError(std::string(op) + ": logits " + s.str() +
                        " and target " + gt.shape().str() + " differ");
  }
}

double stable_sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// BCE(sigmoid(x), g) = max(x, 0) - x g + log(1 + exp(-|x|)).
double bce_from_logit(double x, double g) {
  return std::max(x, 0.0) - x * g + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

void LossConfig::validate() const {
  if (bce_weight_window < 3 || bce_weight_window % 2 == 0) {
    throw ConfigError("bce_weight_window must be odd and >= 3, got " +
                      std::to_string(bce_weight_window));
  }
  if (bce_weight_amplitude < 0.0) {
    throw ConfigError("bce_weight_amplitude must be non-negative");
  }
}

Tensor pixel_weights(const Tensor& gt, const LossConfig& config) {
  config.validate();
  if (gt.c() != 1) throw ContractError("pixel_weights: gt must be single-channel");
  require_binary(gt, "pixel_weights gt");
  const int h = gt.h(), w = gt.w();
  const int r = config.bce_weight_window / 2;
  Tensor out(gt.shape());
  // Summed-area table per image for the box means.
  std::vector<double> integral(static_cast<std::size_t>(h + 1) * (w + 1));
  for (int n = 0; n < gt.n(); ++n) {
    std::fill(integral.begin(), integral.end(), 0.0);
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += gt.at(n, 0, y, x);
        integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
      }
    }
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
      for (int x = 0; x < w; ++x) {
        const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
        const double total = integral[y1 * (w + 1) + x1] - integral[y0 * (w + 1) + x1] -
                             integral[y1 * (w + 1) + x0] + integral[y0 * (w + 1) + x0];
        const double mean = total / ((y1 - y0) * (x1 - x0));
        out.at(n, 0, y, x) =
            1.0 + config.bce_weight_amplitude * std::abs(mean - gt.at(n, 0, y, x));
      }
    }
  }
  return out;
}

Var weighted_bce(const Var& logits, const Tensor& gt, const Tensor& weights) {
  require_loss_shapes(logits, gt, "weighted_bce");
  require_loss_shapes(logits, weights, "weighted_bce");
  const Shape& s = logits.shape();
  const std::size_t hw = s.plane();
  std::vector<double> wsum(s.n);
  double loss = 0.0;
  for (int n = 0; n < s.n; ++n) {
    double num = 0.0, den = 0.0;
    const std::size_t base = static_cast<std::size_t>(n) * hw;
    for (std::size_t i = base; i < base + hw; ++i) {
      num += weights[i] * bce_from_logit(logits.value()[i], gt[i]);
      den += weights[i];
    }
    wsum[n] = den;
    loss += num / den;
  }
  loss /= s.n;
  return make_result(Tensor::scalar(loss), {logits}, "weighted_bce",
                     [logits, gt, weights, wsum, hw](Node& self) {
                       Tensor& d = logits.node()->grad_buffer();
                       const int nb = logits.shape().n;
                       const double g = self.grad[0] / nb;
                       for (int n = 0; n < nb; ++n) {
                         const std::size_t base = static_cast<std::size_t>(n) * hw;
                         for (std::size_t i = base; i < base + hw; ++i) {
                           const double p = stable_sigmoid(logits.value()[i]);
                           d[i] += g * weights[i] * (p - gt[i]) / wsum[n];
                         }
                       }
                     });
}

Var weighted_iou(const Var& logits, const Tensor& gt, const Tensor& weights) {
  require_loss_shapes(logits, gt, "weighted_iou");
  require_loss_shapes(logits, weights, "weighted_iou");
  const Shape& s = logits.shape();
  const std::size_t hw = s.plane();
  std::vector<double> inter(s.n), uni(s.n);
  double loss = 0.0;
  for (int n = 0; n < s.n; ++n) {
    double a = 0.0, b = 0.0;
    const std::size_t base = static_cast<std::size_t>(n) * hw;
    for (std::size_t i = base; i < base + hw; ++i) {
      const double p = stable_sigmoid(logits.value()[i]);
      a += weights[i] * p * gt[i];
      b += weights[i] * (p + gt[i] - p * gt[i]);
    }
    inter[n] = a + kLossSmooth;
    uni[n] = b + kLossSmooth;
    loss += 1.0 - inter[n] / uni[n];
  }
  loss /= s.n;
  return make_result(
      Tensor::scalar(loss), {logits}, "weighted_iou",
      [logits, gt, weights, inter, uni, hw](Node& self) {
        Tensor& d = logits.node()->grad_buffer();
        const int nb = logits.shape().n;
        const double g = self.grad[0] / nb;
        for (int n = 0; n < nb; ++n) {
          const std::size_t base = static_cast<std::size_t>(n) * hw;
          const double u2 = uni[n] * uni[n];
          for (std::size_t i = base; i < base + hw; ++i) {
            const double p = stable_sigmoid(logits.value()[i]);
            const double dp = p * (1.0 - p);
            const double d_inter = weights[i] * gt[i];
            const double d_union = weights[i] * (1.0 - gt[i]);
            const double dratio = (d_inter * uni[n] - inter[n] * d_union) / u2;
            d[i] -= g * dratio * dp;
          }
        }
      });
}

Var dice_loss(const Var& logits, const Tensor& gt_edge) {
  require_loss_shapes(logits, gt_edge, "dice_loss");
  const Shape& s = logits.shape();
  const std::size_t hw = s.plane();
  std::vector<double> num(s.n), den(s.n);
  double loss = 0.0;
  for (int n = 0; n < s.n; ++n) {
    double pg = 0.0, ps = 0.0, gs = 0.0;
    const std::size_t base = static_cast<std::size_t>(n) * hw;
    for (std::size_t i = base; i < base + hw; ++i) {
      const double p = stable_sigmoid(logits.value()[i]);
      pg += p * gt_edge[i];
      ps += p;
      gs += gt_edge[i];
    }
    num[n] = 2.0 * pg + kLossSmooth;
    den[n] = ps + gs + kLossSmooth;
    loss += 1.0 - num[n] / den[n];
  }
  loss /= s.n;
  return make_result(Tensor::scalar(loss), {logits}, "dice_loss",
                     [logits, gt_edge, num, den, hw](Node& self) {
                       Tensor& d = logits.node()->grad_buffer();
                       const int nb = logits.shape().n;
                       const double g = self.grad[0] / nb;
                       for (int n = 0; n < nb; ++n) {
                         const std::size_t base = static_cast<std::size_t>(n) * hw;
                         const double d2 = den[n] * den[n];
                         for (std::size_t i = base; i < base + hw; ++i) {
                           const double p = stable_sigmoid(logits.value()[i]);
                           const double dratio =
                               (2.0 * gt_edge[i] * den[n] - num[n]) / d2;
                           d[i] -= g * dratio * p * (1.0 - p);
                         }
                       }
                     });
}

LossBreakdown total_loss(const PredictionSet& preds, const Tensor& mask,
                         const Tensor& edge, const LossConfig& config) {
  if (!(mask.shape() == edge.shape())) {
    throw ContractError("total_loss: mask " + mask.shape().str() +
                        " and edge " + edge.shape().str() + " differ");
  }
  for (int i = 0; i < 3; ++i) {
    if (!preds.seg[i].defined() || !preds.edge[i].defined()) {
      throw ContractError("total_loss: prediction set must hold three levels");
    }
    if (preds.seg[i].shape().n != mask.n() || preds.edge[i].shape().n != mask.n()) {
      throw ContractError("total_loss: batch size mismatch at level " +
                          std::to_string(i + 1));
    }
    if (preds.seg[i].shape().h > mask.h() || preds.seg[i].shape().w > mask.w()) {
      throw ContractError("total_loss: predictions finer than the masks");
    }
  }
  require_binary(edge, "edge mask");
  const Tensor weights = pixel_weights(mask, config);
  LossBreakdown out;
  Var total;
  for (int i = 0; i < 3; ++i) {
    Var seg = ops::resize_bilinear(preds.seg[i], mask.h(), mask.w());
    Var edg = ops::resize_bilinear(preds.edge[i], mask.h(), mask.w());
    Var bce = weighted_bce(seg, mask, weights);
    Var iou = weighted_iou(seg, mask, weights);
    Var dice = dice_loss(edg, edge);
    out.bce[i] = bce.value().item();
    out.iou[i] = iou.value().item();
    out.dice[i] = dice.value().item();
    Var level = ops::scale(ops::add(ops::add(bce, iou), dice), config.lambdas[i]);
    total = total.defined() ? ops::add(total, level) : level;
  }
  out.total = total;
  return out;
}

}  // namespace eamnet

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace eamnet::testing {

namespace {

constexpr double kEps = 2.220446049250313e-16;

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Pixel {
  int y, x;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a;
  return v.empty() ? 0.0 : s / v.size();
}

// Object-level similarity of one region.
double object_term(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double mu = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  const double sd = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
  return 2.0 * mu / (mu * mu + 1.0 + sd + kEps);
}

double region_ssim(const std::vector<double>& p, const std::vector<double>& g) {
  const std::size_t n = p.size();
  if (n == 0) return 0.0;
  const double mx = mean_of(p), my = mean_of(g);
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    vx += (p[i] - mx) * (p[i] - mx);
    vy += (g[i] - my) * (g[i] - my);
    cxy += (p[i] - mx) * (g[i] - my);
  }
  vx /= (n - 1 + kEps);
  vy /= (n - 1 + kEps);
  cxy /= (n - 1 + kEps);
  const double num = 4.0 * mx * my * cxy;
  const double den = (mx * mx + my * my) * (vx + vy);
  if (num != 0.0) return num / (den + kEps);
  return den == 0.0 ? 1.0 : 0.0;
}

}  // namespace

Tensor conv2d_oracle(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                     int padding, int dilation) {
  const int k = w.h();
  const int ho = (x.h() + 2 * padding - dilation * (k - 1) - 1) / stride + 1;
  const int wo = (x.w() + 2 * padding - dilation * (k - 1) - 1) / stride + 1;
  Tensor out(Shape{x.n(), w.n(), ho, wo});
  for (int n = 0; n < x.n(); ++n)
    for (int co = 0; co < w.n(); ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = bias ? bias->at(0, co, 0, 0) : 0.0;
          for (int ci = 0; ci < x.c(); ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride - padding + ky * dilation;
                const int ix = ox * stride - padding + kx * dilation;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                acc += w.at(co, ci, ky, kx) * x.at(n, ci, iy, ix);
              }
          out.at(n, co, oy, ox) = acc;
        }
  return out;
}

Tensor bilinear_oracle(const Tensor& x, int out_h, int out_w) {
  Tensor out(Shape{x.n(), x.c(), out_h, out_w});
  const auto source = [](int i, int in, int outn) {
    double s = (i + 0.5) * in / outn - 0.5;
    return std::max(s, 0.0);
  };
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
          const double sy = source(oy, x.h(), out_h);
          const double sx = source(ox, x.w(), out_w);
          const int y0 = static_cast<int>(std::floor(sy));
          const int x0 = static_cast<int>(std::floor(sx));
          const int y1 = std::min(y0 + 1, x.h() - 1);
          const int x1 = std::min(x0 + 1, x.w() - 1);
          const double fy = sy - y0, fx = sx - x0;
          out.at(n, c, oy, ox) = (1 - fy) * (1 - fx) * x.at(n, c, y0, x0) +
                                 (1 - fy) * fx * x.at(n, c, y0, x1) +
                                 fy * (1 - fx) * x.at(n, c, y1, x0) +
                                 fy * fx * x.at(n, c, y1, x1);
        }
  return out;
}

Tensor pixel_weights_oracle(const Tensor& gt, int window, double amplitude) {
  const int r = window / 2;
  Tensor out(gt.shape());
  for (int n = 0; n < gt.n(); ++n)
    for (int y = 0; y < gt.h(); ++y)
      for (int x = 0; x < gt.w(); ++x) {
        double s = 0.0;
        int count = 0;
        for (int yy = y - r; yy <= y + r; ++yy)
          for (int xx = x - r; xx <= x + r; ++xx) {
            if (yy < 0 || yy >= gt.h() || xx < 0 || xx >= gt.w()) continue;
            s += gt.at(n, 0, yy, xx);
            ++count;
          }
        out.at(n, 0, y, x) = 1.0 + amplitude * std::abs(s / count - gt.at(n, 0, y, x));
      }
  return out;
}

double weighted_bce_oracle(const Tensor& logits, const Tensor& gt, const Tensor& w) {
  double total = 0.0;
  const std::size_t hw = logits.shape().plane();
  for (int n = 0; n < logits.n(); ++n) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = n * hw; i < (n + 1) * hw; ++i) {
      const double p = sig(logits[i]);
      num += w[i] * -(gt[i] * std::log(p) + (1 - gt[i]) * std::log(1 - p));
      den += w[i];
    }
    total += num / den;
  }
  return total / logits.n();
}

double weighted_iou_oracle(const Tensor& logits, const Tensor& gt, const Tensor& w) {
  double total = 0.0;
  const std::size_t hw = logits.shape().plane();
  for (int n = 0; n < logits.n(); ++n) {
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = n * hw; i < (n + 1) * hw; ++i) {
      const double p = sig(logits[i]);
      inter += w[i] * p * gt[i];
      uni += w[i] * (p + gt[i] - p * gt[i]);
    }
    total += 1.0 - (inter + 1.0) / (uni + 1.0);
  }
  return total / logits.n();
}

double dice_oracle(const Tensor& logits, const Tensor& gt) {
  double total = 0.0;
  const std::size_t hw = logits.shape().plane();
  for (int n = 0; n < logits.n(); ++n) {
    double pg = 0.0, p_sum = 0.0, g_sum = 0.0;
    for (std::size_t i = n * hw; i < (n + 1) * hw; ++i) {
      const double p = sig(logits[i]);
      pg += p * gt[i];
      p_sum += p;
      g_sum += gt[i];
    }
    total += 1.0 - (2.0 * pg + 1.0) / (p_sum + g_sum + 1.0);
  }
  return total / logits.n();
}

double mae_oracle(const Tensor& pred, const Tensor& gt) {
  double s = 0.0;
  for (int y = 0; y < gt.h(); ++y)
    for (int x = 0; x < gt.w(); ++x) s += std::abs(pred.at(0, 0, y, x) - gt.at(0, 0, y, x));
  return s / (gt.h() * gt.w());
}

double s_measure_oracle(const Tensor& pred, const Tensor& gt, double alpha) {
  const int h = gt.h(), w = gt.w();
  std::vector<double> fg_vals, bg_vals, all_pred;
  int fg = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double p = pred.at(0, 0, y, x);
      all_pred.push_back(p);
      if (gt.at(0, 0, y, x) > 0.5) {
        fg_vals.push_back(p);
        ++fg;
      } else {
        bg_vals.push_back(1.0 - p);
      }
    }
  const double ratio = static_cast<double>(fg) / (h * w);
  if (fg == 0) return 1.0 - mean_of(all_pred);
  if (fg == h * w) return mean_of(all_pred);

  const double object = ratio * object_term(fg_vals) + (1 - ratio) * object_term(bg_vals);

  // Centroid with 1-based coordinates, ties rounded away from zero.
  double sx = 0.0, sy = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (gt.at(0, 0, y, x) > 0.5) {
        sx += x + 1;
        sy += y + 1;
      }
  const int X = static_cast<int>(std::floor(sx / fg + 0.5));
  const int Y = static_cast<int>(std::floor(sy / fg + 0.5));

  double region = 0.0;
  const int rows[2][2] = {{0, Y}, {Y, h}};
  const int cols[2][2] = {{0, X}, {X, w}};
  for (int qy = 0; qy < 2; ++qy)
    for (int qx = 0; qx < 2; ++qx) {
      std::vector<double> p, g;
      for (int y = rows[qy][0]; y < rows[qy][1]; ++y)
        for (int x = cols[qx][0]; x < cols[qx][1]; ++x) {
          p.push_back(pred.at(0, 0, y, x));
          g.push_back(gt.at(0, 0, y, x));
        }
      const double weight = static_cast<double>(p.size()) / (h * w);
      region += weight * region_ssim(p, g);
    }
  const double s = alpha * object + (1 - alpha) * region;
  return s < 0.0 ? 0.0 : s;
}

double e_measure_oracle(const Tensor& pred, const Tensor& gt) {
  const int h = gt.h(), w = gt.w();
  const int n = h * w;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += pred[i];
  mean /= n;
  const double th = 2.0 * mean > 1.0 ? 1.0 : 2.0 * mean;
  std::vector<double> b(n), g(n);
  double gsum = 0.0, bsum = 0.0;
  for (int i = 0; i < n; ++i) {
    b[i] = pred[i] >= th ? 1.0 : 0.0;
    g[i] = gt[i];
    gsum += g[i];
    bsum += b[i];
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double phi;
    if (gsum == 0.0) {
      phi = 1.0 - b[i];
    } else if (gsum == n) {
      phi = b[i];
    } else {
      const double db = b[i] - bsum / n;
      const double dg = g[i] - gsum / n;
      const double xi = 2.0 * dg * db / (dg * dg + db * db + kEps);
      phi = (1.0 + xi) * (1.0 + xi) / 4.0;
    }
    total += phi;
  }
  return total / n;
}

double wfb_oracle(const Tensor& pred, const Tensor& gt, double beta2) {
  const int h = gt.h(), w = gt.w();
  std::vector<Pixel> fg;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (gt.at(0, 0, y, x) > 0.5) fg.push_back({y, x});
  if (fg.empty()) return 0.0;

  std::vector<double> E(h * w), Et(h * w), dist(h * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) E[y * w + x] = std::abs(pred.at(0, 0, y, x) - gt.at(0, 0, y, x));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (gt.at(0, 0, y, x) > 0.5) {
        Et[y * w + x] = E[y * w + x];
        continue;
      }
      // fg is in row-major order, so the first strict minimum is the
      // smallest (row, col) among the nearest.
      double best = std::numeric_limits<double>::infinity();
      Pixel arg{0, 0};
      for (const Pixel& q : fg) {
        const double d = std::sqrt(double((q.y - y) * (q.y - y) + (q.x - x) * (q.x - x)));
        if (d < best) {
          best = d;
          arg = q;
        }
      }
      dist[y * w + x] = best;
      Et[y * w + x] = E[arg.y * w + arg.x];
    }
  double kernel[7][7], ksum = 0.0;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) {
      kernel[i][j] = std::exp(-((i - 3) * (i - 3) + (j - 3) * (j - 3)) / 50.0);
      ksum += kernel[i][j];
    }
  double tp_loss = 0.0, fp = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      if (gt.at(0, 0, y, x) > 0.5) {
        double ea = 0.0;
        for (int a = 0; a < 7; ++a)
          for (int b = 0; b < 7; ++b) {
            const int yy = y + a - 3, xx = x + b - 3;
            if (yy >= 0 && yy < h && xx >= 0 && xx < w) ea += kernel[a][b] / ksum * Et[yy * w + xx];
          }
        tp_loss += ea < E[i] ? ea : E[i];
      } else {
        fp += E[i] * (2.0 - std::pow(0.5, dist[i] / 5.0));
      }
    }
  const double nfg = static_cast<double>(fg.size());
  const double tpw = nfg - tp_loss;
  const double recall = 1.0 - tp_loss / nfg;
  const double precision = tpw / (kEps + tpw + fp);
  return (1.0 + beta2) * recall * precision / (kEps + recall + beta2 * precision);
}

Tensor edge_oracle(const Tensor& mask, int width) {
  const int rd = width / 2, re = (width + 1) / 2;
  Tensor out(mask.shape());
  for (int y = 0; y < mask.h(); ++y)
    for (int x = 0; x < mask.w(); ++x) {
      bool any = false, all = true;
      for (int yy = y - std::max(rd, re); yy <= y + std::max(rd, re); ++yy)
        for (int xx = x - std::max(rd, re); xx <= x + std::max(rd, re); ++xx) {
          if (yy < 0 || yy >= mask.h() || xx < 0 || xx >= mask.w()) continue;
          const bool on = mask.at(0, 0, yy, xx) > 0.5;
          const int cheb = std::max(std::abs(yy - y), std::abs(xx - x));
          if (cheb <= rd && on) any = true;
          if (cheb <= re && !on) all = false;
        }
      out.at(0, 0, y, x) = (any && !all) ? 1.0 : 0.0;
    }
  return out;
}

}  // namespace eamnet::testing

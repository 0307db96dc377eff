#include "eamnet/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "eamnet/errors.hpp"

namespace eamnet::ops {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

int conv_out_extent(int in, int k, const Conv2dOptions& o) {
  return (in + 2 * o.padding - o.dilation * (k - 1) - 1) / o.stride + 1;
}

// col is (Cin*k*k) x (N*Ho*Wo), row-major.
void im2col(const Tensor& x, int k, const Conv2dOptions& o, int ho, int wo,
            std::vector<double>& col) {
  const int n_batch = x.n(), cin = x.c(), h = x.h(), w = x.w();
  const std::size_t p = static_cast<std::size_t>(n_batch) * ho * wo;
  col.assign(static_cast<std::size_t>(cin) * k * k * p, 0.0);
  for (int ci = 0; ci < cin; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* dst = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * p;
        for (int n = 0; n < n_batch; ++n) {
          const double* src = x.data() + x.index(n, ci, 0, 0);
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * o.stride - o.padding + ky * o.dilation;
            double* row = dst + (static_cast<std::size_t>(n) * ho + oy) * wo;
            if (iy < 0 || iy >= h) continue;
            const double* src_row = src + static_cast<std::size_t>(iy) * w;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * o.stride - o.padding + kx * o.dilation;
              if (ix >= 0 && ix < w) row[ox] = src_row[ix];
            }
          }
        }
      }
    }
  }
}

void col2im(const std::vector<double>& col, int k, const Conv2dOptions& o,
            int ho, int wo, Tensor& dx) {
  const int n_batch = dx.n(), cin = dx.c(), h = dx.h(), w = dx.w();
  const std::size_t p = static_cast<std::size_t>(n_batch) * ho * wo;
  for (int ci = 0; ci < cin; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* src = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * p;
        for (int n = 0; n < n_batch; ++n) {
          double* dst = dx.data() + dx.index(n, ci, 0, 0);
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * o.stride - o.padding + ky * o.dilation;
            if (iy < 0 || iy >= h) continue;
            const double* row = src + (static_cast<std::size_t>(n) * ho + oy) * wo;
            double* dst_row = dst + static_cast<std::size_t>(iy) * w;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * o.stride - o.padding + kx * o.dilation;
              if (ix >= 0 && ix < w) dst_row[ix] += row[ox];
            }
          }
        }
      }
    }
  }
}

// Strides of `s` viewed inside an output of shape `out`; broadcast dims get 0.
struct BroadcastStrides {
  std::size_t n, c, h, w;
};

BroadcastStrides broadcast_strides(const Shape& s) {
  return {s.n == 1 ? 0 : static_cast<std::size_t>(s.c) * s.h * s.w,
          s.c == 1 ? 0 : static_cast<std::size_t>(s.h) * s.w,
          s.h == 1 ? 0 : static_cast<std::size_t>(s.w), s.w == 1 ? 0u : 1u};
}

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  auto dim = [&](int x, int y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ContractError(std::string(op) + ": shapes " + a.str() + " and " +
                        b.str() + " are not broadcast-compatible");
  };
  return Shape{dim(a.n, b.n), dim(a.c, b.c), dim(a.h, b.h), dim(a.w, b.w)};
}

template <typename F>
void for_each_broadcast(const Shape& out, const Shape& a, const Shape& b,
                        F&& f) {
  const auto sa = broadcast_strides(a);
  const auto sb = broadcast_strides(b);
  std::size_t o = 0;
  for (int n = 0; n < out.n; ++n) {
    for (int c = 0; c < out.c; ++c) {
      for (int h = 0; h < out.h; ++h) {
        const std::size_t ia = n * sa.n + c * sa.c + h * sa.h;
        const std::size_t ib = n * sb.n + c * sb.c + h * sb.h;
        for (int w = 0; w < out.w; ++w, ++o) {
          f(o, ia + w * sa.w, ib + w * sb.w);
        }
      }
    }
  }
}

struct ResizeTaps {
  std::vector<int> lo, hi;
  std::vector<double> frac;
};

ResizeTaps bilinear_taps(int in, int out) {
  ResizeTaps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(src);
    if (lo > in - 1) lo = in - 1;
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - lo;
  }
  return t;
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias,
           const Conv2dOptions& opts) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws.c != xs.c) {
    throw ConfigError("conv2d: weight expects " + std::to_string(ws.c) +
                      " input channels, input has " + std::to_string(xs.c));
  }
  if (ws.h != ws.w) throw ConfigError("conv2d: kernel must be square");
  if (opts.stride < 1 || opts.dilation < 1 || opts.padding < 0) {
    throw ConfigError("conv2d: invalid stride/dilation/padding");
  }
  const int k = ws.h;
  const int cout = ws.n;
  const int ho = conv_out_extent(xs.h, k, opts);
  const int wo = conv_out_extent(xs.w, k, opts);
  if (ho < 1 || wo < 1) {
    throw ContractError("conv2d: input " + xs.str() + " too small for kernel");
  }
  if (bias.defined() && bias.value().size() != static_cast<std::size_t>(cout)) {
    throw ConfigError("conv2d: bias size does not match output channels");
  }

  const int kdim = xs.c * k * k;
  const std::size_t hw = static_cast<std::size_t>(ho) * wo;
  const std::size_t p = xs.n * hw;

  std::vector<double> col;
  im2col(x.value(), k, opts, ho, wo, col);
  std::vector<double> ymat(static_cast<std::size_t>(cout) * p);
  MatrixMap(ymat.data(), cout, p).noalias() =
      ConstMatrixMap(weight.value().data(), cout, kdim) *
      ConstMatrixMap(col.data(), kdim, p);
  col.clear();
  col.shrink_to_fit();

  Tensor out(Shape{xs.n, cout, ho, wo});
  for (int n = 0; n < xs.n; ++n) {
    for (int co = 0; co < cout; ++co) {
      const double b = bias.defined() ? bias.value()[co] : 0.0;
      const double* src = ymat.data() + co * p + n * hw;
      double* dst = out.data() + out.index(n, co, 0, 0);
      for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] + b;
    }
  }

  return make_result(
      std::move(out), {x, weight, bias}, "conv2d",
      [x, weight, bias, opts, k, cout, ho, wo, kdim, hw, p](Node& self) {
        const Tensor& g = self.grad;
        const int nb = g.n();
        std::vector<double> dy(static_cast<std::size_t>(cout) * p);
        for (int n = 0; n < nb; ++n) {
          for (int co = 0; co < cout; ++co) {
            std::copy_n(g.data() + g.index(n, co, 0, 0), hw,
                        dy.data() + co * p + n * hw);
          }
        }
        if (bias.defined() && bias.requires_grad()) {
          Tensor& db = bias.node()->grad_buffer();
          for (int co = 0; co < cout; ++co) {
            double s = 0.0;
            const double* row = dy.data() + co * p;
            for (std::size_t i = 0; i < p; ++i) s += row[i];
            db[co] += s;
          }
        }
        const bool need_w = weight.requires_grad();
        const bool need_x = x.requires_grad();
        if (!need_w && !need_x) return;
        std::vector<double> col;
        if (need_w) {
          im2col(x.value(), k, opts, ho, wo, col);
          MatrixMap(weight.node()->grad_buffer().data(), cout, kdim).noalias() +=
              ConstMatrixMap(dy.data(), cout, p) *
              ConstMatrixMap(col.data(), kdim, p).transpose();
        }
        if (need_x) {
          col.resize(static_cast<std::size_t>(kdim) * p);
          MatrixMap(col.data(), kdim, p).noalias() =
              ConstMatrixMap(weight.value().data(), cout, kdim).transpose() *
              ConstMatrixMap(dy.data(), cout, p);
          col2im(col, k, opts, ho, wo, x.node()->grad_buffer());
        }
      });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta,
               Var& running_mean, Var& running_var, bool training,
               double momentum, double eps) {
  const Shape& s = x.shape();
  const std::size_t hw = s.plane();
  const std::size_t count = s.n * hw;
  if (gamma.value().size() != static_cast<std::size_t>(s.c) ||
      beta.value().size() != static_cast<std::size_t>(s.c)) {
    throw ConfigError("batch_norm: parameter size does not match channels");
  }
  std::vector<double> mean(s.c), invstd(s.c);
  const Tensor& xv = x.value();
  if (training) {
    Tensor& rm = running_mean.mutable_value();
    Tensor& rv = running_var.mutable_value();
    for (int c = 0; c < s.c; ++c) {
      double acc = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const double* src = xv.data() + xv.index(n, c, 0, 0);
        for (std::size_t i = 0; i < hw; ++i) acc += src[i];
      }
      const double m = acc / count;
      double var = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const double* src = xv.data() + xv.index(n, c, 0, 0);
        for (std::size_t i = 0; i < hw; ++i) var += (src[i] - m) * (src[i] - m);
      }
      const double biased = var / count;
      const double unbiased = count > 1 ? var / (count - 1) : biased;
      mean[c] = m;
      invstd[c] = 1.0 / std::sqrt(biased + eps);
      rm[c] = (1.0 - momentum) * rm[c] + momentum * m;
      rv[c] = (1.0 - momentum) * rv[c] + momentum * unbiased;
    }
  } else {
    for (int c = 0; c < s.c; ++c) {
      mean[c] = running_mean.value()[c];
      invstd[c] = 1.0 / std::sqrt(running_var.value()[c] + eps);
    }
  }

  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double g = gamma.value()[c] * invstd[c];
      const double b = beta.value()[c] - mean[c] * g;
      const double* src = xv.data() + xv.index(n, c, 0, 0);
      double* dst = out.data() + out.index(n, c, 0, 0);
      for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] * g + b;
    }
  }

  return make_result(
      std::move(out), {x, gamma, beta}, "batch_norm",
      [x, gamma, beta, mean = std::move(mean), invstd = std::move(invstd),
       training, hw, count](Node& self) {
        const Tensor& g = self.grad;
        const Tensor& xv = x.value();
        const Shape& s = xv.shape();
        for (int c = 0; c < s.c; ++c) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int n = 0; n < s.n; ++n) {
            const double* dy = g.data() + g.index(n, c, 0, 0);
            const double* src = xv.data() + xv.index(n, c, 0, 0);
            for (std::size_t i = 0; i < hw; ++i) {
              sum_dy += dy[i];
              sum_dy_xhat += dy[i] * (src[i] - mean[c]) * invstd[c];
            }
          }
          if (gamma.requires_grad()) gamma.node()->grad_buffer()[c] += sum_dy_xhat;
          if (beta.requires_grad()) beta.node()->grad_buffer()[c] += sum_dy;
          if (!x.requires_grad()) continue;
          Tensor& dx = x.node()->grad_buffer();
          const double gi = gamma.value()[c] * invstd[c];
          const double mdy = sum_dy / count;
          const double mdyx = sum_dy_xhat / count;
          for (int n = 0; n < s.n; ++n) {
            const double* dy = g.data() + g.index(n, c, 0, 0);
            const double* src = xv.data() + xv.index(n, c, 0, 0);
            double* d = dx.data() + dx.index(n, c, 0, 0);
            for (std::size_t i = 0; i < hw; ++i) {
              if (training) {
                const double xhat = (src[i] - mean[c]) * invstd[c];
                d[i] += gi * (dy[i] - mdy - xhat * mdyx);
              } else {
                d[i] += gi * dy[i];
              }
            }
          }
        }
      });
}

Var relu(const Var& x) {
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return make_result(std::move(out), {x}, "relu", [x](Node& self) {
    Tensor& dx = x.node()->grad_buffer();
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += self.grad[i];
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor out(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
  }
  return make_result(std::move(out), {x}, "sigmoid", [x](Node& self) {
    Tensor& dx = x.node()->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double y = self.value[i];
      dx[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Var add(const Var& a, const Var& b) {
  const Shape os = broadcast_shape(a.shape(), b.shape(), "add");
  Tensor out(os);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  for_each_broadcast(os, a.shape(), b.shape(),
                     [&](std::size_t o, std::size_t ia, std::size_t ib) {
                       out[o] = av[ia] + bv[ib];
                     });
  return make_result(std::move(out), {a, b}, "add", [a, b, os](Node& self) {
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    Tensor* da = ga ? &a.node()->grad_buffer() : nullptr;
    Tensor* db = gb ? &b.node()->grad_buffer() : nullptr;
    for_each_broadcast(os, a.shape(), b.shape(),
                       [&](std::size_t o, std::size_t ia, std::size_t ib) {
                         if (da) (*da)[ia] += self.grad[o];
                         if (db) (*db)[ib] += self.grad[o];
                       });
  });
}

Var mul(const Var& a, const Var& b) {
  const Shape os = broadcast_shape(a.shape(), b.shape(), "mul");
  Tensor out(os);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  for_each_broadcast(os, a.shape(), b.shape(),
                     [&](std::size_t o, std::size_t ia, std::size_t ib) {
                       out[o] = av[ia] * bv[ib];
                     });
  return make_result(std::move(out), {a, b}, "mul", [a, b, os](Node& self) {
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    Tensor* da = ga ? &a.node()->grad_buffer() : nullptr;
    Tensor* db = gb ? &b.node()->grad_buffer() : nullptr;
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    for_each_broadcast(os, a.shape(), b.shape(),
                       [&](std::size_t o, std::size_t ia, std::size_t ib) {
                         if (da) (*da)[ia] += self.grad[o] * bv[ib];
                         if (db) (*db)[ib] += self.grad[o] * av[ia];
                       });
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.values()) v *= factor;
  return make_result(std::move(out), {x}, "scale", [x, factor](Node& self) {
    Tensor& dx = x.node()->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * self.grad[i];
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_channels: no inputs");
  const Shape& first = parts.front().shape();
  int channels = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ContractError("concat_channels: shape " + s.str() +
                          " incompatible with " + first.str());
    }
    channels += s.c;
  }
  Tensor out(Shape{first.n, channels, first.h, first.w});
  const std::size_t hw = first.plane();
  for (int n = 0; n < first.n; ++n) {
    int offset = 0;
    for (const auto& p : parts) {
      const Tensor& v = p.value();
      std::copy_n(v.data() + v.index(n, 0, 0, 0), v.c() * hw,
                  out.data() + out.index(n, offset, 0, 0));
      offset += v.c();
    }
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_result(std::move(out), inputs, "concat",
                     [inputs, hw](Node& self) {
                       const Tensor& g = self.grad;
                       for (int n = 0; n < g.n(); ++n) {
                         int offset = 0;
                         for (const auto& p : inputs) {
                           const int c = p.shape().c;
                           if (p.requires_grad()) {
                             Tensor& d = p.node()->grad_buffer();
                             const double* src = g.data() + g.index(n, offset, 0, 0);
                             double* dst = d.data() + d.index(n, 0, 0, 0);
                             for (std::size_t i = 0; i < c * hw; ++i) dst[i] += src[i];
                           }
                           offset += c;
                         }
                       }
                     });
}

Var concat_channels(std::initializer_list<Var> parts) {
  return concat_channels(std::span<const Var>(parts.begin(), parts.size()));
}

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ContractError("resize_bilinear: output extent must be positive");
  }
  const auto ty = bilinear_taps(x.h(), out_h);
  const auto tx = bilinear_taps(x.w(), out_w);
  Tensor out(Shape{x.n(), x.c(), out_h, out_w});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double* src = x.data() + x.index(n, c, 0, 0);
      double* dst = out.data() + out.index(n, c, 0, 0);
      for (int oy = 0; oy < out_h; ++oy) {
        const double fy = ty.frac[oy];
        const double* r0 = src + static_cast<std::size_t>(ty.lo[oy]) * x.w();
        const double* r1 = src + static_cast<std::size_t>(ty.hi[oy]) * x.w();
        for (int ox = 0; ox < out_w; ++ox) {
          const double fx = tx.frac[ox];
          const int x0 = tx.lo[ox], x1 = tx.hi[ox];
          const double top = r0[x0] * (1.0 - fx) + r0[x1] * fx;
          const double bot = r1[x0] * (1.0 - fx) + r1[x1] * fx;
          dst[static_cast<std::size_t>(oy) * out_w + ox] = top * (1.0 - fy) + bot * fy;
        }
      }
    }
  }
  return out;
}

Var resize_bilinear(const Var& x, int out_h, int out_w) {
  Tensor out = resize_bilinear(x.value(), out_h, out_w);
  return make_result(std::move(out), {x}, "resize_bilinear",
                     [x, out_h, out_w](Node& self) {
                       const Shape& s = x.shape();
                       const auto ty = bilinear_taps(s.h, out_h);
                       const auto tx = bilinear_taps(s.w, out_w);
                       Tensor& dx = x.node()->grad_buffer();
                       for (int n = 0; n < s.n; ++n) {
                         for (int c = 0; c < s.c; ++c) {
                           const double* g = self.grad.data() + self.grad.index(n, c, 0, 0);
                           double* d = dx.data() + dx.index(n, c, 0, 0);
                           for (int oy = 0; oy < out_h; ++oy) {
                             const double fy = ty.frac[oy];
                             double* r0 = d + static_cast<std::size_t>(ty.lo[oy]) * s.w;
                             double* r1 = d + static_cast<std::size_t>(ty.hi[oy]) * s.w;
                             for (int ox = 0; ox < out_w; ++ox) {
                               const double v = g[static_cast<std::size_t>(oy) * out_w + ox];
                               const double fx = tx.frac[ox];
                               const int x0 = tx.lo[ox], x1 = tx.hi[ox];
                               r0[x0] += v * (1.0 - fy) * (1.0 - fx);
                               r0[x1] += v * (1.0 - fy) * fx;
                               r1[x0] += v * fy * (1.0 - fx);
                               r1[x1] += v * fy * fx;
                             }
                           }
                         }
                       }
                     });
}

Tensor resize_nearest(const Tensor& x, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ContractError("resize_nearest: output extent must be positive");
  }
  Tensor out(Shape{x.n(), x.c(), out_h, out_w});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        const int iy = std::min(x.h() - 1, static_cast<int>(std::floor(
                                               oy * static_cast<double>(x.h()) / out_h)));
        for (int ox = 0; ox < out_w; ++ox) {
          const int ix = std::min(x.w() - 1, static_cast<int>(std::floor(
                                                 ox * static_cast<double>(x.w()) / out_w)));
          out.at(n, c, oy, ox) = x.at(n, c, iy, ix);
        }
      }
    }
  }
  return out;
}

Var global_avg_pool(const Var& x) {
  const Shape& s = x.shape();
  const std::size_t hw = s.plane();
  Tensor out(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = x.value().data() + x.value().index(n, c, 0, 0);
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += src[i];
      out.at(n, c, 0, 0) = acc / hw;
    }
  }
  return make_result(std::move(out), {x}, "global_avg_pool",
                     [x, hw](Node& self) {
                       Tensor& dx = x.node()->grad_buffer();
                       const Shape& s = x.shape();
                       for (int n = 0; n < s.n; ++n) {
                         for (int c = 0; c < s.c; ++c) {
                           const double g = self.grad.at(n, c, 0, 0) / hw;
                           double* d = dx.data() + dx.index(n, c, 0, 0);
                           for (std::size_t i = 0; i < hw; ++i) d[i] += g;
                         }
                       }
                     });
}

Var sum(const Var& x) {
  return make_result(Tensor::scalar(x.value().sum()), {x}, "sum",
                     [x](Node& self) {
                       Tensor& dx = x.node()->grad_buffer();
                       const double g = self.grad[0];
                       for (auto& v : dx.values()) v += g;
                     });
}

Var weighted_sum(const Var& x, const Tensor& weights) {
  if (!(weights.shape() == x.shape())) {
    throw ContractError("weighted_sum: weight shape " + weights.shape().str() +
                        " differs from " + x.shape().str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += x.value()[i] * weights[i];
  return make_result(Tensor::scalar(acc), {x}, "weighted_sum",
                     [x, weights](Node& self) {
                       Tensor& dx = x.node()->grad_buffer();
                       const double g = self.grad[0];
                       for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * weights[i];
                     });
}

}  // namespace eamnet::ops

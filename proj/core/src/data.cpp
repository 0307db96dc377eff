#include "eamnet/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "eamnet/errors.hpp"
#include "eamnet/image_io.hpp"
#include "eamnet/ops.hpp"

namespace eamnet {

namespace {

constexpr int kGratings = 6;

struct Texture {
  std::array<double, 3> base{};
  std::array<double, 3> tint{};
  std::array<double, kGratings> amp{}, fx{}, fy{}, phase{};
  double strength = 0.0;

  double operator()(int c, double x, double y, int size) const {
    double p = 0.0;
    for (int k = 0; k < kGratings; ++k) {
      p += amp[k] * std::sin(2.0 * M_PI * (fx[k] * x + fy[k] * y) / size + phase[k]);
    }
    return base[c] + strength * tint[c] * p;
  }
};

Texture random_texture(Rng& rng, std::array<double, 3> base, double fmin,
                       double fmax) {
  Texture t;
  t.base = base;
  for (double& v : t.tint) v = rng.uniform(0.6, 1.0);
  double norm = 0.0;
  for (int k = 0; k < kGratings; ++k) {
    t.amp[k] = rng.uniform(0.3, 1.0);
    const double f = rng.uniform(fmin, fmax);
    const double theta = rng.uniform(0.0, M_PI);
    t.fx[k] = f * std::cos(theta);
    t.fy[k] = f * std::sin(theta);
    t.phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    norm += t.amp[k];
  }
  for (double& a : t.amp) a /= norm;
  t.strength = 0.35;
  return t;
}

void require_binary_mask(const Tensor& mask, const char* what) {
  if (mask.c() != 1) {
    throw ContractError(std::string(what) + ": mask must be single-channel, got " +
                        mask.shape().str());
  }
  for (double v : mask.values()) {
    if (v != 0.0 && v != 1.0) {
      throw ContractError(std::string(what) + ": mask must be binary (0/1)");
    }
  }
}

// Min (erode) or max (dilate) over the in-image part of a square window.
Tensor morph(const Tensor& mask, int radius, bool dilating) {
  if (radius < 0) throw ContractError("morphology radius must be >= 0");
  Tensor out(mask.shape());
  const int h = mask.h(), w = mask.w();
  for (int n = 0; n < mask.n(); ++n) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = dilating ? 0.0 : 1.0;
        for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius); ++yy) {
          for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
            const double m = mask.at(n, 0, yy, xx);
            v = dilating ? std::max(v, m) : std::min(v, m);
          }
        }
        out.at(n, 0, y, x) = v;
      }
    }
  }
  return out;
}

Tensor flip_tensor(const Tensor& t) {
  Tensor out(t.shape());
  for (int n = 0; n < t.n(); ++n) {
    for (int c = 0; c < t.c(); ++c) {
      for (int y = 0; y < t.h(); ++y) {
        for (int x = 0; x < t.w(); ++x) {
          out.at(n, c, y, t.w() - 1 - x) = t.at(n, c, y, x);
        }
      }
    }
  }
  return out;
}

Tensor binarize(Tensor t) {
  for (double& v : t.values()) v = v >= 0.5 ? 1.0 : 0.0;
  return t;
}

}  // namespace

void SynthConfig::validate() const {
  if (size < 32 || size % 32 != 0) {
    throw ConfigError("synth size must be a positive multiple of 32, got " +
                      std::to_string(size));
  }
  if (camo_level < 0.0 || camo_level > 1.0) {
    throw ConfigError("camo_level must lie in [0,1]");
  }
  if (!(object_scale_min > 0.0 && object_scale_min < object_scale_max &&
        object_scale_max <= 0.4)) {
    throw ConfigError("object scale bounds must satisfy 0 < min < max <= 0.4");
  }
  if (edge_width < 1) throw ConfigError("edge_width must be >= 1");
}

Sample generate_sample(const SynthConfig& config, int index) {
  config.validate();
  Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(index)));
  const int size = config.size;

  std::array<double, 3> bg_base{}, fg_base{};
  for (int c = 0; c < 3; ++c) {
    bg_base[c] = rng.uniform(0.25, 0.75);
    const double shift = rng.uniform(0.3, 0.45);
    fg_base[c] = bg_base[c] < 0.5 ? bg_base[c] + shift : bg_base[c] - shift;
  }
  const Texture background = random_texture(rng, bg_base, 2.0, 6.0);
  const Texture contrast = random_texture(rng, fg_base, 5.0, 10.0);

  // Smooth star-shaped blob r(t) = R (1 + sum a_k cos(k t + p_k)).
  std::array<double, 3> harm_amp{}, harm_phase{};
  double spread = 0.0;
  for (int k = 0; k < 3; ++k) {
    harm_amp[k] = rng.uniform(-0.15, 0.15);
    harm_phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    spread += harm_amp[k] * harm_amp[k] / 2.0;
  }
  const double margin = 0.1 * (config.object_scale_max - config.object_scale_min);
  const double fraction =
      rng.uniform(config.object_scale_min + margin, config.object_scale_max - margin);
  const double radius =
      std::sqrt(fraction * size * size / (M_PI * (1.0 + spread)));
  double reach = 1.0;
  for (double a : harm_amp) reach += std::abs(a);
  const double r_max = radius * reach;
  const double lo = r_max + 1.0, hi = size - 1.0 - r_max;
  const double cx = lo < hi ? rng.uniform(lo, hi) : size / 2.0;
  const double cy = lo < hi ? rng.uniform(lo, hi) : size / 2.0;

  Sample s;
  s.name = "synth_" + std::to_string(index);
  s.image = Tensor(Shape{1, 3, size, size});
  s.mask = Tensor(Shape{1, 1, size, size});
  const double camo = config.camo_level;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double rho = std::hypot(dx, dy);
      const double theta = std::atan2(dy, dx);
      double boundary = 1.0;
      for (int k = 0; k < 3; ++k) {
        boundary += harm_amp[k] * std::cos((k + 2) * theta + harm_phase[k]);
      }
      boundary *= radius;
      const double alpha = std::clamp(0.5 + (boundary - rho) / 1.5, 0.0, 1.0);
      s.mask.at(0, 0, y, x) = rho < boundary ? 1.0 : 0.0;
      for (int c = 0; c < 3; ++c) {
        const double bg = background(c, x, y, size);
        const double fg = camo * bg + (1.0 - camo) * contrast(c, x, y, size);
        s.image.at(0, c, y, x) = std::clamp(alpha * fg + (1.0 - alpha) * bg, 0.0, 1.0);
      }
    }
  }
  s.edge = edge_from_mask(s.mask, config.edge_width);
  return s;
}

Tensor dilate(const Tensor& mask, int radius) {
  require_binary_mask(mask, "dilate");
  return morph(mask, radius, true);
}

Tensor erode(const Tensor& mask, int radius) {
  require_binary_mask(mask, "erode");
  return morph(mask, radius, false);
}

Tensor edge_from_mask(const Tensor& mask, int width) {
  if (width < 1) throw ContractError("edge width must be >= 1");
  require_binary_mask(mask, "edge_from_mask");
  const Tensor outer = morph(mask, width / 2, true);
  const Tensor inner = morph(mask, (width + 1) / 2, false);
  Tensor out(mask.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = outer[i] - inner[i];
  return out;
}

Sample flip_horizontal(const Sample& s) {
  return Sample{s.name, flip_tensor(s.image), flip_tensor(s.mask), flip_tensor(s.edge)};
}

Sample augment(const Sample& s, Rng& rng) {
  return rng.bernoulli(0.5) ? flip_horizontal(s) : s;
}

Batch make_batch(const std::vector<Sample>& samples) {
  if (samples.empty()) throw ContractError("make_batch: no samples");
  const Shape is = samples[0].image.shape();
  const Shape ms = samples[0].mask.shape();
  const int n = static_cast<int>(samples.size());
  Batch b{Tensor(Shape{n, is.c, is.h, is.w}), Tensor(Shape{n, 1, ms.h, ms.w}),
          Tensor(Shape{n, 1, ms.h, ms.w})};
  for (int i = 0; i < n; ++i) {
    const Sample& s = samples[i];
    if (!(s.image.shape() == is) || !(s.mask.shape() == ms) || !(s.edge.shape() == ms)) {
      throw ContractError("make_batch: sample " + s.name + " has a different shape");
    }
    std::copy(s.image.data(), s.image.data() + s.image.size(),
              b.image.data() + static_cast<std::size_t>(i) * s.image.size());
    std::copy(s.mask.data(), s.mask.data() + s.mask.size(),
              b.mask.data() + static_cast<std::size_t>(i) * s.mask.size());
    std::copy(s.edge.data(), s.edge.data() + s.edge.size(),
              b.edge.data() + static_cast<std::size_t>(i) * s.edge.size());
  }
  return b;
}

std::vector<Sample> load_dataset(const std::filesystem::path& root, int size,
                                 int edge_width) {
  if (size < 1) throw ContractError("load_dataset: size must be positive");
  const auto by_stem = [](const std::filesystem::path& dir) {
    std::map<std::string, std::filesystem::path> out;
    for (const auto& p : list_pngs(dir)) out[p.stem().string()] = p;
    return out;
  };
  const auto images = by_stem(root / "Images");
  const auto masks = by_stem(root / "GT");
  const bool has_edges = std::filesystem::is_directory(root / "Edge");
  const auto edges = has_edges ? by_stem(root / "Edge")
                               : std::map<std::string, std::filesystem::path>{};
  std::string unpaired;
  for (const auto& [stem, path] : images) {
    if (!masks.count(stem)) unpaired += " " + stem + " (no GT)";
    if (has_edges && !edges.count(stem)) unpaired += " " + stem + " (no Edge)";
  }
  for (const auto& [stem, path] : masks) {
    if (!images.count(stem)) unpaired += " " + stem + " (no image)";
  }
  if (!unpaired.empty()) throw IoError("unpaired dataset files:" + unpaired);
  if (images.empty()) throw IoError("no images under " + (root / "Images").string());

  std::vector<Sample> out;
  for (const auto& [stem, path] : images) {
    Sample s;
    s.name = stem;
    s.image = ops::resize_bilinear(read_png(path, 3), size, size);
    for (double& v : s.image.values()) v = std::clamp(v, 0.0, 1.0);
    s.mask = binarize(ops::resize_nearest(read_png(masks.at(stem), 1), size, size));
    s.edge = has_edges
                 ? binarize(ops::resize_nearest(read_png(edges.at(stem), 1), size, size))
                 : edge_from_mask(s.mask, edge_width);
    out.push_back(std::move(s));
  }
  return out;
}

void write_sample(const std::filesystem::path& root, const Sample& s) {
  for (const char* sub : {"Images", "GT", "Edge"}) {
    std::filesystem::create_directories(root / sub);
  }
  write_png(root / "Images" / (s.name + ".png"), s.image);
  write_png(root / "GT" / (s.name + ".png"), s.mask);
  write_png(root / "Edge" / (s.name + ".png"), s.edge);
}

}  // namespace eamnet

#include "eamnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eamnet/errors.hpp"

namespace eamnet {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
    throw ContractError("tensor extents must be positive, got " + shape.str());
  }
  data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
    throw ContractError("tensor extents must be positive, got " + shape.str());
  }
  if (data_.size() != shape.numel()) {
    throw ContractError("tensor data size " + std::to_string(data_.size()) +
                        " does not match shape " + shape.str());
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_.str());
  }
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Tensor::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

double Tensor::mean() const {
  return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size());
}

Tensor Tensor::plane(int n, int c) const {
  Tensor out(Shape{1, 1, shape_.h, shape_.w});
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(index(n, c, 0, 0)),
              shape_.plane(), out.data());
  return out;
}

void Tensor::set_plane(int n, int c, const Tensor& src) {
  if (src.h() != shape_.h || src.w() != shape_.w || src.size() != shape_.plane()) {
    throw ContractError("set_plane: plane " + src.shape().str() +
                        " does not fit " + shape_.str());
  }
  std::copy_n(src.data(), shape_.plane(),
              data_.begin() + static_cast<std::ptrdiff_t>(index(n, c, 0, 0)));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) {
    throw ContractError("max_abs_diff: shapes " + a.shape().str() + " and " +
                        b.shape().str() + " differ");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace eamnet

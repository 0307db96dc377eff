#include "eamnet/params.hpp"

#include <cmath>

#include "eamnet/errors.hpp"
#include "eamnet/rng.hpp"

namespace eamnet {

namespace {

double neutral_value(ParamKind kind) {
  switch (kind) {
    case ParamKind::kNormScale:
    case ParamKind::kRunningVar:
      return 1.0;
    default:
      return 0.0;
  }
}

}  // namespace

bool is_trainable(ParamKind kind) {
  return kind != ParamKind::kRunningMean && kind != ParamKind::kRunningVar;
}

Var ParamStore::declare(const std::string& name, Shape shape, ParamKind kind,
                        int fan_in) {
  if (auto it = index_.find(name); it != index_.end()) {
    const ParamEntry& e = entries_[it->second];
    if (!(e.var.shape() == shape) || e.kind != kind) {
      throw ConfigError("parameter '" + name + "' redeclared with shape " +
                        shape.str() + ", existing " + e.var.shape().str());
    }
    return e.var;
  }
  Var v(Tensor(shape, neutral_value(kind)), is_trainable(kind));
  index_.emplace(name, entries_.size());
  entries_.push_back(ParamEntry{name, kind, v, fan_in});
  return v;
}

bool ParamStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

Var ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return entries_[it->second].var;
}

std::vector<Var> ParamStore::trainable() const {
  std::vector<Var> out;
  for (const auto& e : entries_) {
    if (is_trainable(e.kind)) out.push_back(e.var);
  }
  return out;
}

std::size_t ParamStore::trainable_count() const {
  std::size_t total = 0;
  for (const auto& e : entries_) {
    if (is_trainable(e.kind)) total += e.var.value().size();
  }
  return total;
}

void ParamStore::randomize(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x45414d4eULL));
  for (auto& e : entries_) {
    Tensor& t = e.var.mutable_value();
    if (e.kind == ParamKind::kWeight) {
      const double bound = std::sqrt(6.0 / std::max(1, e.fan_in));
      for (auto& v : t.values()) v = rng.uniform(-bound, bound);
    } else {
      t.fill(neutral_value(e.kind));
    }
  }
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& e : entries_) {
    Var v = out.declare(e.name, e.var.shape(), e.kind, e.fan_in);
    v.mutable_value() = e.var.value();
  }
  return out;
}

void ParamStore::assign(const ParamStore& other) {
  if (other.entries_.size() != entries_.size()) {
    throw ConfigError("parameter sets differ in size: " +
                      std::to_string(other.entries_.size()) + " vs " +
                      std::to_string(entries_.size()));
  }
  for (auto& e : entries_) {
    Var src = other.get(e.name);
    if (!(src.shape() == e.var.shape())) {
      throw ConfigError("parameter '" + e.name + "' shape mismatch: " +
                        src.shape().str() + " vs " + e.var.shape().str());
    }
    e.var.mutable_value() = src.value();
  }
}

}  // namespace eamnet

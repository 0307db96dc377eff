#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eamnet/autograd.hpp"

namespace eamnet {

enum class ParamKind {
  kWeight,
  kBias,
  kNormScale,
  kNormShift,
  kRunningMean,
  kRunningVar,
};

bool is_trainable(ParamKind kind);

struct ParamEntry {
  std::string name;
  ParamKind kind;
  Var var;
  int fan_in = 0;
};

/// Named learnable parameters and normalization buffers, in declaration
/// order. Copies share the underlying tensors; use clone() for a deep copy.
class ParamStore {
 public:
  /// Returns the existing entry when `name` is already declared (the shape
  /// must then agree), otherwise registers a new one at its neutral value:
  /// zeros for weights, biases, shifts and running means; ones for scales
  /// and running variances.
  Var declare(const std::string& name, Shape shape, ParamKind kind,
              int fan_in = 0);

  bool contains(const std::string& name) const;
  Var get(const std::string& name) const;
  std::span<const ParamEntry> entries() const { return entries_; }
  std::vector<Var> trainable() const;

  /// Number of trainable scalars.
  std::size_t trainable_count() const;

  /// Fan-in scaled uniform draw for every weight, U(-b, b) with
  /// b = sqrt(6 / fan_in); everything else reset to its neutral value.
  void randomize(std::uint64_t seed);

  void zero_grad();
  ParamStore clone() const;

  /// Overwrites values by name from `other`; names and shapes must match.
  void assign(const ParamStore& other);

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Concatenates a dotted parameter path.
inline std::string join_name(const std::string& prefix, const std::string& leaf) {
  return prefix.empty() ? leaf : prefix + "." + leaf;
}

}  // namespace eamnet

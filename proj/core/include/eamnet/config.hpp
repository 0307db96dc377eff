#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eamnet/data.hpp"
#include "eamnet/losses.hpp"
#include "eamnet/network.hpp"

namespace eamnet {

/// Everything a command needs. Defaults follow the published training
/// protocol (384 input, batch 24, 100 epochs, lr 5e-5).
struct RunConfig {
  ModelConfig model;
  SynthConfig synth;
  LossConfig loss;

  std::uint64_t seed = 0;
  std::string data_dir;  // empty: synthetic training data
  std::string test_dir;  // empty: synthetic held-out split
  int train_samples = 4040;
  int test_samples = 64;

  int batch_size = 24;
  int epochs = 100;
  int steps = 0;  // > 0 overrides epochs
  double lr = 5e-5;
  double weight_decay = 1e-4;
  double warmup_fraction = 0.05;
  int lr_drop_epoch = 50;
  double lr_drop_factor = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool flip = true;
  int log_every = 10;
  int ablation_runs = 1;

  /// Synthetic-data settings at the model input size.
  SynthConfig synth_config() const;
  int steps_per_epoch() const;
  int total_steps() const;
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string type;  // int, real, bool, string
  std::string help;
};

/// The schema, in canonical order.
const std::vector<ConfigKey>& config_schema();

/// Sets one key from text. Unknown keys and malformed values throw
/// ConfigError naming the key.
void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

/// `key = value` lines; `#` starts a comment; blank lines are skipped.
/// Starts from the defaults and validates the result.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key in schema order; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

}  // namespace eamnet

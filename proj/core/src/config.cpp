#include "eamnet/config.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "eamnet/errors.hpp"

namespace eamnet {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < INT32_MIN || x > INT32_MAX) {
    throw ConfigError("config key '" + key + "' is out of range");
  }
  return static_cast<int>(x);
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Entry {
  ConfigKey key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

Entry int_entry(const char* name, const char* help, int RunConfig::*field) {
  return {{name, "int", help},
          [name, field](RunConfig& c, const std::string& v) { c.*field = to_int(name, v); },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

Entry real_entry(const char* name, const char* help, double RunConfig::*field) {
  return {{name, "real", help},
          [name, field](RunConfig& c, const std::string& v) { c.*field = parse_real(name, v); },
          [field](const RunConfig& c) { return real_text(c.*field); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back({{"seed", "int", "initialization, sampling and augmentation seed"},
                 [](RunConfig& c, const std::string& v) {
                   c.seed = parse_seed("seed", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    t.push_back({{"data_seed", "int", "synthetic dataset seed"},
                 [](RunConfig& c, const std::string& v) {
                   c.synth.seed = parse_seed("data_seed", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.synth.seed); }});
    t.push_back({{"input_size", "int", "square network input size, multiple of 32"},
                 [](RunConfig& c, const std::string& v) {
                   c.model.input_size = to_int("input_size", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.model.input_size); }});
    t.push_back({{"variant", "string", "full or no_edge_branch"},
                 [](RunConfig& c, const std::string& v) { c.model.variant = parse_variant(v); },
                 [](const RunConfig& c) { return to_string(c.model.variant); }});
    t.push_back({{"backbone_channels", "string", "four comma-separated backbone stage widths"},
                 [](RunConfig& c, const std::string& v) {
                   std::array<int, 4> widths{};
                   std::stringstream in(v);
                   std::string item;
                   int i = 0;
                   while (std::getline(in, item, ',')) {
                     if (i < 4) widths[i] = to_int("backbone_channels", trim(item));
                     ++i;
                   }
                   if (i != 4) {
                     throw ConfigError("config key 'backbone_channels' expects four integers, got '" +
                                       v + "'");
                   }
                   c.model.backbone.stage_channels = widths;
                 },
                 [](const RunConfig& c) {
                   const auto& w = c.model.backbone.stage_channels;
                   return std::to_string(w[0]) + "," + std::to_string(w[1]) + "," +
                          std::to_string(w[2]) + "," + std::to_string(w[3]);
                 }});
    t.push_back({{"reduced_channels", "int", "decoder feature width"},
                 [](RunConfig& c, const std::string& v) {
                   c.model.reduced_channels = to_int("reduced_channels", v);
                   c.model.eia.channels = c.model.reduced_channels;
                 },
                 [](const RunConfig& c) { return std::to_string(c.model.reduced_channels); }});
    t.push_back({{"blocks_per_stage", "int", "conv blocks per backbone stage"},
                 [](RunConfig& c, const std::string& v) {
                   c.model.backbone.blocks_per_stage = to_int("blocks_per_stage", v);
                 },
                 [](const RunConfig& c) {
                   return std::to_string(c.model.backbone.blocks_per_stage);
                 }});
    t.push_back({{"attention_reduction", "int", "channel attention bottleneck ratio"},
                 [](RunConfig& c, const std::string& v) {
                   c.model.eia.attention_reduction = to_int("attention_reduction", v);
                 },
                 [](const RunConfig& c) {
                   return std::to_string(c.model.eia.attention_reduction);
                 }});
    t.push_back({{"camo_level", "real", "synthetic camouflage level in [0,1]"},
                 [](RunConfig& c, const std::string& v) {
                   c.synth.camo_level = parse_real("camo_level", v);
                 },
                 [](const RunConfig& c) { return real_text(c.synth.camo_level); }});
    t.push_back({{"object_scale_min", "real", "smallest object area fraction"},
                 [](RunConfig& c, const std::string& v) {
                   c.synth.object_scale_min = parse_real("object_scale_min", v);
                 },
                 [](const RunConfig& c) { return real_text(c.synth.object_scale_min); }});
    t.push_back({{"object_scale_max", "real", "largest object area fraction"},
                 [](RunConfig& c, const std::string& v) {
                   c.synth.object_scale_max = parse_real("object_scale_max", v);
                 },
                 [](const RunConfig& c) { return real_text(c.synth.object_scale_max); }});
    t.push_back({{"edge_width", "int", "edge band width in pixels"},
                 [](RunConfig& c, const std::string& v) {
                   c.synth.edge_width = to_int("edge_width", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.synth.edge_width); }});
    t.push_back({{"bce_weight_amplitude", "real", "boundary weight amplitude"},
                 [](RunConfig& c, const std::string& v) {
                   c.loss.bce_weight_amplitude = parse_real("bce_weight_amplitude", v);
                 },
                 [](const RunConfig& c) { return real_text(c.loss.bce_weight_amplitude); }});
    t.push_back({{"bce_weight_window", "int", "boundary weight window, odd"},
                 [](RunConfig& c, const std::string& v) {
                   c.loss.bce_weight_window = to_int("bce_weight_window", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.loss.bce_weight_window); }});
    t.push_back({{"data_dir", "string", "training dataset root; empty for synthetic"},
                 [](RunConfig& c, const std::string& v) { c.data_dir = v; },
                 [](const RunConfig& c) { return c.data_dir; }});
    t.push_back({{"test_dir", "string", "held-out dataset root; empty for synthetic"},
                 [](RunConfig& c, const std::string& v) { c.test_dir = v; },
                 [](const RunConfig& c) { return c.test_dir; }});
    t.push_back(int_entry("train_samples", "synthetic training set size",
                          &RunConfig::train_samples));
    t.push_back(int_entry("test_samples", "synthetic held-out set size",
                          &RunConfig::test_samples));
    t.push_back(int_entry("batch_size", "samples per step", &RunConfig::batch_size));
    t.push_back(int_entry("epochs", "passes over the training set", &RunConfig::epochs));
    t.push_back(int_entry("steps", "optimizer steps; 0 derives from epochs",
                          &RunConfig::steps));
    t.push_back(real_entry("lr", "peak learning rate", &RunConfig::lr));
    t.push_back(real_entry("weight_decay", "decoupled weight decay",
                           &RunConfig::weight_decay));
    t.push_back(real_entry("warmup_fraction", "share of steps spent in linear warm-up",
                           &RunConfig::warmup_fraction));
    t.push_back(int_entry("lr_drop_epoch", "epoch from which the drop factor applies",
                          &RunConfig::lr_drop_epoch));
    t.push_back(real_entry("lr_drop_factor", "learning-rate multiplier after the drop",
                           &RunConfig::lr_drop_factor));
    t.push_back(real_entry("adam_beta1", "first-moment decay", &RunConfig::adam_beta1));
    t.push_back(real_entry("adam_beta2", "second-moment decay", &RunConfig::adam_beta2));
    t.push_back(real_entry("adam_eps", "denominator epsilon", &RunConfig::adam_eps));
    t.push_back({{"flip", "bool", "random horizontal flip augmentation"},
                 [](RunConfig& c, const std::string& v) { c.flip = parse_bool("flip", v); },
                 [](const RunConfig& c) { return std::string(c.flip ? "true" : "false"); }});
    t.push_back(int_entry("log_every", "progress print interval in steps",
                          &RunConfig::log_every));
    t.push_back(int_entry("ablation_runs", "seeds per variant in ablate",
                          &RunConfig::ablation_runs));
    return t;
  }();
  return table;
}

const Entry& find_entry(const std::string& key) {
  for (const Entry& e : entries()) {
    if (e.key.name == key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

SynthConfig RunConfig::synth_config() const {
  SynthConfig s = synth;
  s.size = model.input_size;
  return s;
}

int RunConfig::steps_per_epoch() const {
  return std::max(1, (train_samples + batch_size - 1) / batch_size);
}

int RunConfig::total_steps() const {
  return steps > 0 ? steps : epochs * steps_per_epoch();
}

void RunConfig::validate() const {
  model.validate();
  synth_config().validate();
  loss.validate();
  if (train_samples < 1) throw ConfigError("train_samples must be positive");
  if (test_samples < 1) throw ConfigError("test_samples must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
    throw ConfigError("warmup_fraction must lie in [0,1)");
  }
  if (lr_drop_epoch < 0) throw ConfigError("lr_drop_epoch must be non-negative");
  if (lr_drop_factor <= 0.0 || lr_drop_factor > 1.0) {
    throw ConfigError("lr_drop_factor must lie in (0,1]");
  }
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ConfigError("adam betas must lie in [0,1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (log_every < 1) throw ConfigError("log_every must be positive");
  if (ablation_runs < 1) throw ConfigError("ablation_runs must be positive");
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Entry& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value) {
  find_entry(key).set(config, value);
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  return find_entry(key).get(config);
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_text(const RunConfig& config) {
  std::string out;
  for (const Entry& e : entries()) out += e.key.name + " = " + e.get(config) + "\n";
  return out;
}

}  // namespace eamnet

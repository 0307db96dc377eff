#include "eamnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "eamnet/errors.hpp"

namespace eamnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'A', 'M', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::ifstream& f, const std::filesystem::path& path) {
  T v{};
  if (!f.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw IoError("truncated checkpoint " + path.string());
  }
  return v;
}

std::string take_string(std::ifstream& f, std::uint64_t len,
                        const std::filesystem::path& path) {
  if (len > (1u << 24)) throw IoError("corrupt checkpoint " + path.string());
  std::string s(len, '\0');
  if (!f.read(s.data(), static_cast<std::streamsize>(len))) {
    throw IoError("truncated checkpoint " + path.string());
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const ParamStore& params) {
  for (const ParamEntry& e : params.entries()) {
    if (!e.var.value().all_finite()) {
      throw NumericError("refusing to save non-finite parameter " + e.name);
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(f, kVersion);
  const std::string text = to_text(config);
  put<std::uint64_t>(f, text.size());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint64_t>(f, config.seed);
  put<std::uint64_t>(f, params.entries().size());
  for (const ParamEntry& e : params.entries()) {
    put<std::uint32_t>(f, static_cast<std::uint32_t>(e.name.size()));
    f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const Shape& s = e.var.shape();
    for (int d : {s.n, s.c, s.h, s.w}) put<std::int32_t>(f, d);
    f.write(reinterpret_cast<const char*>(e.var.value().data()),
            static_cast<std::streamsize>(e.var.value().size() * sizeof(double)));
  }
  if (!f) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint " + path.string());
  char magic[8];
  if (!f.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError(path.string() + " is not a checkpoint");
  }
  const auto version = take<std::uint32_t>(f, path);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto text_len = take<std::uint64_t>(f, path);
  Checkpoint ck;
  ck.config = parse_config(take_string(f, text_len, path));
  ck.config.seed = take<std::uint64_t>(f, path);
  EamNet net(ck.config.model, ck.params);

  const auto count = take<std::uint64_t>(f, path);
  if (count != ck.params.entries().size()) {
    throw ConfigError("checkpoint holds " + std::to_string(count) +
                      " tensors, the architecture declares " +
                      std::to_string(ck.params.entries().size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(f, path);
    const std::string name = take_string(f, len, path);
    Shape s;
    s.n = take<std::int32_t>(f, path);
    s.c = take<std::int32_t>(f, path);
    s.h = take<std::int32_t>(f, path);
    s.w = take<std::int32_t>(f, path);
    if (!ck.params.contains(name)) {
      throw ConfigError("checkpoint tensor '" + name + "' is not part of the model");
    }
    Var v = ck.params.get(name);
    if (!(v.shape() == s)) {
      throw ConfigError("checkpoint tensor '" + name + "' has shape " + s.str() +
                        ", model expects " + v.shape().str());
    }
    Tensor& dst = v.mutable_value();
    if (!f.read(reinterpret_cast<char*>(dst.data()),
                static_cast<std::streamsize>(dst.size() * sizeof(double)))) {
      throw IoError("truncated checkpoint " + path.string());
    }
  }
  return ck;
}

void require_same_model(const ModelConfig& expected, const Checkpoint& ckpt) {
  if (!(expected == ckpt.config.model)) {
    throw ConfigError("checkpoint was trained with a different model config");
  }
}

}  // namespace eamnet

#include "rewardforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rewardforge::model {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1, i64 = 2 };

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return value;
}

void write_blob(std::ostream& os, const std::string& name, Dtype dtype,
                const void* data, std::uint64_t count, size_t elem_size) {
  write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(dtype));
  write_pod<std::uint64_t>(os, count);
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(count * elem_size));
}

struct Blob {
  std::string name;
  Dtype dtype;
  std::vector<char> bytes;
  std::uint64_t count;
};

Blob read_blob(std::istream& is) {
  Blob b;
  const auto name_len = read_pod<std::uint16_t>(is);
  b.name.resize(name_len);
  is.read(b.name.data(), name_len);
  b.dtype = static_cast<Dtype>(read_pod<std::uint8_t>(is));
  b.count = read_pod<std::uint64_t>(is);
  const size_t elem = b.dtype == Dtype::f32 ? 4 : 8;
  b.bytes.resize(b.count * elem);
  is.read(b.bytes.data(), static_cast<std::streamsize>(b.bytes.size()));
  if (!is) throw std::runtime_error("checkpoint: truncated blob");
  return b;
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{{"context_len", cfg.context_len},
                        {"d_ff", cfg.d_ff},
                        {"d_model", cfg.d_model},
                        {"embed_init_std", cfg.embed_init_std},
                        {"n_head", cfg.n_head},
                        {"n_layer", cfg.n_layer},
                        {"rope", cfg.rope},
                        {"seed", cfg.seed},
                        {"tie_output", cfg.tie_output},
                        {"vocab_size", cfg.vocab_size}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.context_len = j.at("context_len").get<int>();
  cfg.d_ff = j.at("d_ff").get<int>();
  cfg.d_model = j.at("d_model").get<int>();
  cfg.embed_init_std = j.at("embed_init_std").get<double>();
  cfg.n_head = j.at("n_head").get<int>();
  cfg.n_layer = j.at("n_layer").get<int>();
  cfg.rope = j.at("rope").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.tie_output = j.at("tie_output").get<bool>();
  cfg.vocab_size = j.at("vocab_size").get<int>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const ModelState& state) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());

  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kVersion);
  const std::string cfg_json = config_to_json(state.cfg).dump();
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(cfg_json.size()));
  os.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));

  const std::uint32_t blob_count =
      static_cast<std::uint32_t>(state.params.size() * 3 + 1);
  write_pod<std::uint32_t>(os, blob_count);

  for (const Tensor& t : state.params) {
    write_blob(os, t.name, Dtype::f32, t.w.data(), t.w.size(), 4);
    write_blob(os, t.name + ".adam_m", Dtype::f64, t.m.data(), t.m.size(), 8);
    write_blob(os, t.name + ".adam_v", Dtype::f64, t.v.data(), t.v.size(), 8);
  }
  const std::int64_t step = state.step;
  write_blob(os, "__step", Dtype::i64, &step, 1, 8);

  if (!os) throw std::runtime_error("checkpoint: write failed");
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  const auto cfg_len = read_pod<std::uint32_t>(is);
  std::string cfg_json(cfg_len, '\0');
  is.read(cfg_json.data(), cfg_len);
  if (!is) throw std::runtime_error("checkpoint: truncated config");

  ModelState state = init_model(config_from_json(nlohmann::json::parse(cfg_json)));

  const auto blob_count = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < blob_count; ++i) {
    Blob b = read_blob(is);
    if (b.name == "__step") {
      if (b.dtype != Dtype::i64 || b.count != 1) {
        throw std::runtime_error("checkpoint: bad step blob");
      }
      std::memcpy(&state.step, b.bytes.data(), 8);
      continue;
    }
    std::string base = b.name;
    enum { kW, kM, kV } field = kW;
    if (base.ends_with(".adam_m")) {
      base.resize(base.size() - 7);
      field = kM;
    } else if (base.ends_with(".adam_v")) {
      base.resize(base.size() - 7);
      field = kV;
    }
    Tensor& t = state.param(base);
    if (b.count != t.size()) {
      throw std::runtime_error("checkpoint: size mismatch for " + b.name);
    }
    if (field == kW) {
      if (b.dtype != Dtype::f32) {
        throw std::runtime_error("checkpoint: parameter blob must be f32");
      }
      std::memcpy(t.w.data(), b.bytes.data(), b.bytes.size());
    } else {
      if (b.dtype != Dtype::f64) {
        throw std::runtime_error("checkpoint: moment blob must be f64");
      }
      std::memcpy(field == kM ? t.m.data() : t.v.data(), b.bytes.data(),
                  b.bytes.size());
    }
  }
  return state;
}

}  // namespace rewardforge::model

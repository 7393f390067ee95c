#include "pathcast/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'K', 'P', 'T', '0', '0', '1'};

static_assert(sizeof(float) == 4);

void write_u32(std::ostream& out, std::uint32_t value) {
  if constexpr (std::endian::native == std::endian::big) {
    value = __builtin_bswap32(value);
  }
  out.write(reinterpret_cast<const char*>(&value), 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t value = 0;
  in.read(reinterpret_cast<char*>(&value), 4);
  if (!in) throw InputError("truncated checkpoint file");
  if constexpr (std::endian::native == std::endian::big) {
    value = __builtin_bswap32(value);
  }
  return value;
}

void write_f32_array(std::ostream& out, const double* data, Eigen::Index count) {
  std::vector<float> buffer(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) buffer[i] = static_cast<float>(data[i]);
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& f : buffer) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      bits = __builtin_bswap32(bits);
      std::memcpy(&f, &bits, 4);
    }
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * 4));
}

void read_f32_array(std::istream& in, double* data, Eigen::Index count) {
  std::vector<float> buffer(static_cast<std::size_t>(count));
  in.read(reinterpret_cast<char*>(buffer.data()),
          static_cast<std::streamsize>(buffer.size() * 4));
  if (!in) throw InputError("truncated checkpoint tensor data");
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& f : buffer) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      bits = __builtin_bswap32(bits);
      std::memcpy(&f, &bits, 4);
    }
  }
  for (Eigen::Index i = 0; i < count; ++i) data[i] = static_cast<double>(buffer[i]);
}

nlohmann::json dims_to_json(const ModelDims& dims) {
  nlohmann::json j;
  j["categories"] = dims.categories;
  j["state_dim"] = dims.state_dim;
  j["embed_dim"] = dims.embed_dim;
  j["attention_dim"] = dims.attention_dim;
  j["lstm_layers"] = dims.lstm_layers;
  j["window"] = dims.window;
  j["feature_dims"] = dims.feature_dims;
  j["metapath"] = dims.metapath;
  return j;
}

ModelDims dims_from_json(const nlohmann::json& j) {
  ModelDims dims;
  dims.categories = j.at("categories").get<int>();
  dims.state_dim = j.at("state_dim").get<int>();
  dims.embed_dim = j.at("embed_dim").get<int>();
  dims.attention_dim = j.at("attention_dim").get<int>();
  dims.lstm_layers = j.at("lstm_layers").get<int>();
  dims.window = j.at("window").get<int>();
  auto fd = j.at("feature_dims").get<std::vector<int>>();
  if (fd.size() != kFactorKindCount) throw InputError("checkpoint feature_dims malformed");
  std::copy(fd.begin(), fd.end(), dims.feature_dims.begin());
  dims.metapath = j.at("metapath").get<bool>();
  return dims;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");

  auto refs = tensor_refs(const_cast<ModelParams&>(params));
  nlohmann::json manifest;
  manifest["dims"] = dims_to_json(params.dims);
  manifest["config_hash"] = hex64(config_hash);
  manifest["tensor_count"] = refs.size();

  out.write(kMagic, sizeof kMagic);
  const std::string manifest_text = manifest.dump();
  write_u32(out, static_cast<std::uint32_t>(manifest_text.size()));
  out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));

  for (const auto& ref : refs) {
    write_u32(out, static_cast<std::uint32_t>(ref.name.size()));
    out.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
    write_u32(out, static_cast<std::uint32_t>(ref.rows));
    write_u32(out, static_cast<std::uint32_t>(ref.cols));
    write_f32_array(out, ref.data, ref.size());
  }
  if (!out) throw std::runtime_error("checkpoint write failed for '" + path.string() + "'");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");

  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw InputError("'" + path.string() + "' is not a checkpoint file");
  }
  const std::uint32_t manifest_len = read_u32(in);
  std::string manifest_text(manifest_len, '\0');
  in.read(manifest_text.data(), manifest_len);
  if (!in) throw InputError("truncated checkpoint manifest");
  nlohmann::json manifest = nlohmann::json::parse(manifest_text);

  LoadedCheckpoint loaded;
  loaded.config_hash = std::stoull(manifest.at("config_hash").get<std::string>(), nullptr, 16);
  const ModelDims dims = dims_from_json(manifest.at("dims"));
  // Allocate tensors of the right shapes, then overwrite from the file.
  loaded.params = ModelParams::init(dims, 0);

  auto refs = tensor_refs(loaded.params);
  const auto tensor_count = manifest.at("tensor_count").get<std::size_t>();
  if (tensor_count != refs.size()) {
    throw InputError("checkpoint tensor count does not match the model layout");
  }
  for (auto& ref : refs) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    if (!in || name != ref.name || rows != static_cast<std::uint32_t>(ref.rows) ||
        cols != static_cast<std::uint32_t>(ref.cols)) {
      throw InputError("checkpoint tensor '" + name + "' does not match expected '" +
                       ref.name + "'");
    }
    read_f32_array(in, ref.data, ref.size());
  }
  return loaded;
}

}  // namespace pathcast

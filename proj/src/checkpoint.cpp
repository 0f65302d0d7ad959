#include <vf/checkpoint.hpp>

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include <vf/errors.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace vf {
namespace {

constexpr char kMagic[8] = {'v', 'f', 'c', 'k', 'p', 't', '0', '1'};
constexpr int kFormatVersion = 1;

CheckpointMeta meta_from_json(const nlohmann::json& j) {
  CheckpointMeta meta;
  meta.slice_depth = j.at("slice_depth").get<int>();
  meta.use_unchanged = j.at("use_unchanged").get<bool>();
  meta.cut_timestamp = j.at("cut_timestamp").get<std::int64_t>();
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const CheckpointMeta& meta) {
  nlohmann::json tensors = nlohmann::json::array();
  auto list = model.tensors();
  for (const auto& [name, mat] : list)
    tensors.push_back({{"name", name}, {"rows", mat->rows()}, {"cols", mat->cols()}});
  nlohmann::json header = {{"format_version", kFormatVersion},
                           {"model_config", to_json(model.cfg)},
                           {"meta",
                            {{"slice_depth", meta.slice_depth},
                             {"use_unchanged", meta.use_unchanged},
                             {"cut_timestamp", meta.cut_timestamp}}},
                           {"tensors", tensors}};
  std::string header_text = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(kMagic, sizeof(kMagic));
  std::uint64_t len = header_text.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, mat] : list) {
    for (Eigen::Index r = 0; r < mat->rows(); ++r) {
      for (Eigen::Index c = 0; c < mat->cols(); ++c) {
        Scalar v = (*mat)(r, c);
        f.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
  }
  if (!f) throw IoError("error while writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char magic[sizeof(kMagic)];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError(path + " is not a checkpoint file");
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!f || len > (1ull << 30)) throw IoError(path + " has a corrupt header");
  std::string header_text(len, '\0');
  f.read(header_text.data(), static_cast<std::streamsize>(len));
  if (!f) throw IoError(path + " is truncated");

  nlohmann::json header = nlohmann::json::parse(header_text, nullptr, false);
  if (header.is_discarded()) throw IoError(path + " has a corrupt header");
  try {
    if (header.at("format_version").get<int>() != kFormatVersion)
      throw IoError(path + " has an unsupported format version");

    Checkpoint ckpt;
    ckpt.model = Model::init(model_config_from_json(header.at("model_config")));
    ckpt.meta = meta_from_json(header.at("meta"));

    auto list = ckpt.model.tensors();
    const nlohmann::json& tensors = header.at("tensors");
    if (!tensors.is_array() || tensors.size() != list.size())
      throw IoError(path + " tensor directory does not match the model config");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const nlohmann::json& tj = tensors.at(i);
      if (tj.at("name").get<std::string>() != list[i].first ||
          tj.at("rows").get<Eigen::Index>() != list[i].second->rows() ||
          tj.at("cols").get<Eigen::Index>() != list[i].second->cols())
        throw IoError(path + " tensor directory does not match the model config");
    }
    for (auto& [name, mat] : list) {
      for (Eigen::Index r = 0; r < mat->rows(); ++r) {
        for (Eigen::Index c = 0; c < mat->cols(); ++c) {
          Scalar v;
          f.read(reinterpret_cast<char*>(&v), sizeof(v));
          (*mat)(r, c) = v;
        }
      }
    }
    if (!f) throw IoError(path + " is truncated");
    return ckpt;
  } catch (const nlohmann::json::exception&) {
    throw IoError(path + " has a corrupt header");
  }
}

}  // namespace vf

#include "phat/model_io.hpp"

#include "phat/errors.hpp"

namespace phat {

namespace {

void check_header(const Archive& archive, const char* kind) {
  const auto& m = archive.manifest;
  if (!m.contains("format_version")) throw CheckpointError("checkpoint manifest lacks format_version");
  if (m.at("format_version") != kCheckpointFormatVersion) {
    throw CheckpointError("unsupported checkpoint format_version " + m.at("format_version").dump());
  }
  if (m.value("kind", std::string()) != kind) {
    throw CheckpointError(std::string("checkpoint kind is '") + m.value("kind", std::string()) +
                          "', expected '" + kind + "'");
  }
}

template <typename T>
T field(const nlohmann::json& m, const char* key) {
  try {
    return m.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError(std::string("checkpoint manifest field '") + key + "' missing or invalid");
  }
}

}  // namespace

nlohmann::json layer_listing(const nn::NamedParams& params) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, var] : params) {
    const Tensor& t = var.value();
    out.push_back({{"name", name}, {"shape", {t.channels(), t.height(), t.width()}}});
  }
  return out;
}

void store_params(Archive& archive, const nn::NamedParams& params, const std::string& prefix) {
  for (const auto& [name, var] : params) archive.arrays[prefix + name] = var.value();
}

void restore_params(const Archive& archive, const nn::NamedParams& params, const std::string& prefix) {
  for (auto [name, var] : params) {
    auto it = archive.arrays.find(prefix + name);
    if (it == archive.arrays.end()) throw CheckpointError("checkpoint lacks parameter " + prefix + name);
    if (!it->second.same_shape(var.value())) {
      throw CheckpointError("parameter " + name + " has shape " + it->second.shape_string() +
                            ", model expects " + var.value().shape_string());
    }
    var.mutable_value() = it->second;
  }
}

std::string architecture_fingerprint(const nn::NamedParams& params) {
  return layer_listing(params).dump();
}

Archive phatnet_archive(const PhatnetWeights& w, std::uint64_t seed) {
  Archive a;
  const auto params = w.params();
  a.manifest = {{"format_version", kCheckpointFormatVersion},
                {"kind", "phatnet"},
                {"tool_version", kToolVersion},
                {"channels", w.config.phdt.channels},
                {"stages", w.config.stages},
                {"res_blocks", w.config.phdt.res_blocks},
                {"widths", w.config.phdt.widths()},
                {"seed", seed},
                {"layers", layer_listing(params)}};
  store_params(a, params);
  return a;
}

PhatnetWeights phatnet_from_archive(const Archive& archive) {
  check_header(archive, "phatnet");
  const auto& m = archive.manifest;
  PhatnetConfig cfg;
  cfg.stages = field<int>(m, "stages");
  cfg.phdt.channels = field<int>(m, "channels");
  cfg.phdt.res_blocks = field<int>(m, "res_blocks");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  PhatnetWeights w = PhatnetWeights::init(cfg, 0);
  restore_params(archive, w.params());
  return w;
}

void save_phatnet(const std::filesystem::path& path, const PhatnetWeights& w, std::uint64_t seed) {
  save_archive(path, phatnet_archive(w, seed));
}

PhatnetWeights load_phatnet(const std::filesystem::path& path) {
  return phatnet_from_archive(load_archive(path));
}

Archive dehazer_archive(const DehazerWeights& w, std::uint64_t seed) {
  Archive a;
  const auto params = w.params();
  a.manifest = {{"format_version", kCheckpointFormatVersion},
                {"kind", "dehazer"},
                {"tool_version", kToolVersion},
                {"depth", w.config.depth},
                {"base_channels", w.config.base_channels},
                {"res_blocks", w.config.res_blocks},
                {"seed", seed},
                {"layers", layer_listing(params)}};
  store_params(a, params);
  return a;
}

DehazerWeights dehazer_from_archive(const Archive& archive) {
  check_header(archive, "dehazer");
  const auto& m = archive.manifest;
  DehazerConfig cfg;
  cfg.depth = field<int>(m, "depth");
  cfg.base_channels = field<int>(m, "base_channels");
  cfg.res_blocks = field<int>(m, "res_blocks");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  DehazerWeights w = DehazerWeights::init(cfg, 0);
  restore_params(archive, w.params());
  return w;
}

void save_dehazer(const std::filesystem::path& path, const DehazerWeights& w, std::uint64_t seed) {
  save_archive(path, dehazer_archive(w, seed));
}

DehazerWeights load_dehazer(const std::filesystem::path& path) {
  return dehazer_from_archive(load_archive(path));
}

}  // namespace phat

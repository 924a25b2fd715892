#pragma once

// Checkpoint manifests for the haze-transfer network and the dehazer.
//
// Both use the archive container from checkpoint.hpp. The manifest carries
// format_version, kind ("phatnet" / "dehazer"), the architecture fields
// needed to rebuild the model, the init seed and the tool version, plus a
// "layers" list with every parameter's name and shape. Parameter arrays are
// stored under their own names (stage-indexed "stage<k>.ale..." for
// PHATNet).

#include <cstdint>
#include <filesystem>
#include <string>

#include "phat/checkpoint.hpp"
#include "phat/dehazer.hpp"
#include "phat/phatnet.hpp"

namespace phat {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

nlohmann::json layer_listing(const nn::NamedParams& params);
void store_params(Archive& archive, const nn::NamedParams& params, const std::string& prefix = "");
// Throws CheckpointError when an array is missing or has the wrong shape.
void restore_params(const Archive& archive, const nn::NamedParams& params, const std::string& prefix = "");

Archive phatnet_archive(const PhatnetWeights& w, std::uint64_t seed);
PhatnetWeights phatnet_from_archive(const Archive& archive);
void save_phatnet(const std::filesystem::path& path, const PhatnetWeights& w, std::uint64_t seed);
PhatnetWeights load_phatnet(const std::filesystem::path& path);

Archive dehazer_archive(const DehazerWeights& w, std::uint64_t seed);
DehazerWeights dehazer_from_archive(const Archive& archive);
void save_dehazer(const std::filesystem::path& path, const DehazerWeights& w, std::uint64_t seed);
DehazerWeights load_dehazer(const std::filesystem::path& path);

// Shape manifest (names and shapes) used to assert architecture equality.
std::string architecture_fingerprint(const nn::NamedParams& params);

}  // namespace phat

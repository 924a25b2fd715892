#pragma once

// Single-file archive: a JSON manifest plus named float64 arrays.
//
// Layout (all integers little-endian):
//   8 bytes   magic "PHATARC\0"
//   u32       container version (kArchiveVersion)
//   u64       manifest length in bytes
//   ...       manifest (UTF-8 JSON); manifest["arrays"] lists
//             {name, shape:[c,h,w], offset} with offsets in doubles
//   ...       array payload, IEEE-754 binary64
//
// Arrays are stored bit-exactly, so save/load is lossless.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "phat/tensor.hpp"

namespace phat {

inline constexpr std::uint32_t kArchiveVersion = 1;

struct Archive {
  nlohmann::json manifest = nlohmann::json::object();
  std::map<std::string, Tensor> arrays;
};

// Writes to a temporary sibling and renames it into place.
void save_archive(const std::filesystem::path& path, const Archive& archive);
// Throws CheckpointError on malformed input, IoError when unreadable.
Archive load_archive(const std::filesystem::path& path);

// Hex SHA-256 of a file's bytes / of a buffer.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const void* data, std::size_t size);
std::string sha256_tensor(const Tensor& t);

// Writes `text` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace phat

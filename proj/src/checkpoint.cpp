#include "phat/checkpoint.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "phat/errors.hpp"

namespace phat {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 8> kMagic{'P', 'H', 'A', 'T', 'A', 'R', 'C', '\0'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw CheckpointError("archive truncated");
  return v;
}

fs::path temp_sibling(const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  return tmp;
}

std::string to_hex(const unsigned char* digest, unsigned len) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kDigits[digest[i] >> 4]);
    out.push_back(kDigits[digest[i] & 0xf]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest initialisation failed");
    }
  }
  void update(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_.get(), data, size); }
  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest, &len);
    return to_hex(digest, len);
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os << text;
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_archive(const fs::path& path, const Archive& archive) {
  nlohmann::json manifest = archive.manifest;
  nlohmann::json listing = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : archive.arrays) {
    listing.push_back({{"name", name},
                       {"shape", {t.channels(), t.height(), t.width()}},
                       {"offset", offset}});
    offset += t.size();
  }
  manifest["arrays"] = listing;
  const std::string text = manifest.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kArchiveVersion);
    put<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : archive.arrays) {
      os.write(reinterpret_cast<const char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

Archive load_archive(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw CheckpointError(path.string() + " is not a checkpoint archive");
  const auto version = get<std::uint32_t>(is);
  if (version != kArchiveVersion) {
    throw CheckpointError("unsupported archive version " + std::to_string(version));
  }
  const auto length = get<std::uint64_t>(is);
  if (length > (1ULL << 32)) throw CheckpointError("implausible manifest length");
  std::string text(length, '\0');
  is.read(text.data(), static_cast<std::streamsize>(length));
  if (!is) throw CheckpointError("archive truncated in manifest");

  Archive archive;
  try {
    archive.manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed archive manifest: ") + e.what());
  }
  const auto payload_start = is.tellg();
  try {
    for (const auto& entry : archive.manifest.at("arrays")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<std::vector<int>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      if (shape.size() != 3) throw CheckpointError("array " + name + " has bad shape");
      Tensor t(shape[0], shape[1], shape[2]);
      is.seekg(payload_start + static_cast<std::streamoff>(offset * sizeof(double)));
      is.read(reinterpret_cast<char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
      if (!is) throw CheckpointError("archive truncated in array " + name);
      archive.arrays.emplace(name, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed array listing: ") + e.what());
  } catch (const DimensionError& e) {
    throw CheckpointError(std::string("bad array shape: ") + e.what());
  }
  archive.manifest.erase("arrays");
  return archive;
}

std::string sha256_bytes(const void* data, std::size_t size) {
  Sha256 h;
  h.update(data, size);
  return h.hex();
}

std::string sha256_tensor(const Tensor& t) {
  Sha256 h;
  const int dims[3] = {t.channels(), t.height(), t.width()};
  h.update(dims, sizeof dims);
  h.update(t.raw(), t.size() * sizeof(double));
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  return h.hex();
}

}  // namespace phat

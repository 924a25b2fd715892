#pragma once

// Test-time domain adaptation: haze from M target-domain hazy images is
// transferred onto N source-domain clean images, and the resulting
// (transferred, clean) pairs fine-tune a dehazer for the target domain.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phat/dehazer.hpp"
#include "phat/dehazer_train.hpp"
#include "phat/phatnet.hpp"
#include "phat/tm_edit.hpp"

namespace phat {

// Default augmentation list: plain transfer, thinner and denser haze, and
// the vertically flipped haze pattern.
std::vector<TmEdit> default_edits();

struct FinetuneEntry {
  int target_idx = 0;  // i, the haze donor
  int source_idx = 0;  // j, the content / clean reference
  TmEdit edit;
  std::string transferred_sha256;  // of the float64 image before serialisation
};

struct FinetuneFailure {
  int target_idx = 0;
  int source_idx = 0;
  std::string edit;
  std::string message;
};

// Entries refer to their images lazily: transferred images live either in
// memory or as 16-bit PNGs under a directory, and are only read on access.
class FinetuneSet {
 public:
  std::vector<FinetuneEntry> entries;
  std::vector<FinetuneFailure> failures;
  std::string phatnet_sha256;  // checkpoint hash, empty when built from memory
  std::vector<std::string> target_sha256;  // per hazy donor i
  std::vector<std::string> source_sha256;  // per clean image j

  std::size_t size() const { return entries.size(); }
  ImageTensor transferred(std::size_t k) const;
  const ImageTensor& clean_ref(std::size_t k) const;
  const std::vector<ImageTensor>& clean_images() const { return clean_; }
  bool on_disk() const { return !directory_.empty(); }
  const std::filesystem::path& directory() const { return directory_; }

  // Hash over every entry's provenance and image hash, in order.
  std::string content_hash() const;

  // Writes transferred/{i:04}_{j:04}_{edit}.png, clean/{j:04}.png and
  // manifest.json. In-memory images are released after writing.
  void save(const std::filesystem::path& dir);
  static FinetuneSet load(const std::filesystem::path& dir);

  static std::string entry_file(const FinetuneEntry& e);

 private:
  friend FinetuneSet build_finetune_set(const std::vector<ImageTensor>&, const std::vector<ImageTensor>&,
                                        const PhatnetWeights&, const std::vector<TmEdit>&, int,
                                        const std::filesystem::path&);
  std::vector<ImageTensor> clean_;
  std::vector<std::optional<ImageTensor>> memory_;
  std::filesystem::path directory_;
};

// Enumerates (i, j, edit) in i-major, then j, then edit order. Per-entry
// errors (e.g. mismatched resolutions) are recorded in `failures` and
// enumeration continues. `workers` bounds the number of threads. With a
// non-empty `out_dir` each image is written as it is produced and not kept
// in memory.
FinetuneSet build_finetune_set(const std::vector<ImageTensor>& target_hazy, const std::vector<ImageTensor>& source_clean,
                               const PhatnetWeights& w, const std::vector<TmEdit>& edits = {TmEdit::none()},
                               int workers = 1, const std::filesystem::path& out_dir = {});

struct AdaptConfig {
  int epochs = 1;
  int batch_size = 1;
  double lr = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct AdaptResult {
  DehazerWeights weights;
  std::vector<SupervisedStep> history;
};

// Fine-tunes a copy of `w` on (transferred -> clean_ref) with a constant
// learning rate; `w` itself is not modified. Throws ConfigError on an empty
// set and Error if the architecture changed.
AdaptResult adapt_dehazer(const DehazerWeights& w, const FinetuneSet& set, const AdaptConfig& cfg = {});

}  // namespace phat

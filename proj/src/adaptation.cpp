#include "phat/adaptation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "phat/checkpoint.hpp"
#include "phat/errors.hpp"
#include "phat/model_io.hpp"
#include "phat/png_io.hpp"

namespace phat {

namespace fs = std::filesystem;

namespace {

constexpr int kFinetuneFormatVersion = 1;

std::string index4(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", v);
  return buf;
}

std::string clean_file(int j) { return "clean/" + index4(j) + ".png"; }

}  // namespace

std::vector<TmEdit> default_edits() {
  return {TmEdit::none(), TmEdit::gamma_correction(0.7), TmEdit::gamma_correction(1.5), TmEdit::vflip()};
}

std::string FinetuneSet::entry_file(const FinetuneEntry& e) {
  return "transferred/" + index4(e.target_idx) + "_" + index4(e.source_idx) + "_" + e.edit.tag() + ".png";
}

ImageTensor FinetuneSet::transferred(std::size_t k) const {
  if (k >= entries.size()) throw ParameterError("finetune entry index out of range");
  if (k < memory_.size() && memory_[k]) return *memory_[k];
  if (directory_.empty()) throw Error("finetune entry " + std::to_string(k) + " has no backing image");
  return read_image(directory_ / entry_file(entries[k]));
}

const ImageTensor& FinetuneSet::clean_ref(std::size_t k) const {
  if (k >= entries.size()) throw ParameterError("finetune entry index out of range");
  return clean_.at(static_cast<std::size_t>(entries[k].source_idx));
}

std::string FinetuneSet::content_hash() const {
  std::string text;
  for (const auto& e : entries) {
    text += std::to_string(e.target_idx) + ',' + std::to_string(e.source_idx) + ',' + e.edit.tag() + ',' +
            e.transferred_sha256 + ';';
  }
  for (const auto& h : source_sha256) text += h + ';';
  return sha256_bytes(text.data(), text.size());
}

void FinetuneSet::save(const fs::path& dir) {
  fs::create_directories(dir / "transferred");
  fs::create_directories(dir / "clean");
  nlohmann::json entry_list = nlohmann::json::array();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    const fs::path file = dir / entry_file(e);
    if (k < memory_.size() && memory_[k]) {
      write_image(file, *memory_[k], 16);
    } else if (!directory_.empty() && fs::absolute(directory_) != fs::absolute(dir)) {
      fs::copy_file(directory_ / entry_file(e), file, fs::copy_options::overwrite_existing);
    }
    entry_list.push_back({{"target_idx", e.target_idx},
                          {"source_idx", e.source_idx},
                          {"edit", e.edit.tag()},
                          {"file", entry_file(e)},
                          {"transferred_sha256", e.transferred_sha256},
                          {"target_sha256", target_sha256.at(static_cast<std::size_t>(e.target_idx))},
                          {"source_sha256", source_sha256.at(static_cast<std::size_t>(e.source_idx))}});
  }
  nlohmann::json cleans = nlohmann::json::array();
  for (std::size_t j = 0; j < clean_.size(); ++j) {
    write_image(dir / clean_file(static_cast<int>(j)), clean_[j], 16);
    cleans.push_back({{"source_idx", j}, {"file", clean_file(static_cast<int>(j))}, {"sha256", source_sha256[j]}});
  }
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : failures) {
    fails.push_back({{"target_idx", f.target_idx}, {"source_idx", f.source_idx}, {"edit", f.edit}, {"message", f.message}});
  }
  const nlohmann::json manifest{{"format_version", kFinetuneFormatVersion},
                                {"kind", "finetune_set"},
                                {"tool_version", kToolVersion},
                                {"phatnet_sha256", phatnet_sha256},
                                {"target_sha256", target_sha256},
                                {"content_hash", content_hash()},
                                {"entries", entry_list},
                                {"clean", cleans},
                                {"failures", fails}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2));
  memory_.assign(entries.size(), std::nullopt);
  directory_ = dir;
}

FinetuneSet FinetuneSet::load(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("no finetune manifest in " + dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed finetune manifest: " + std::string(e.what()));
  }
  try {
    if (m.at("format_version").get<int>() != kFinetuneFormatVersion) {
      throw CheckpointError("unsupported finetune set format version " + m.at("format_version").dump());
    }
    FinetuneSet set;
    set.phatnet_sha256 = m.at("phatnet_sha256").get<std::string>();
    set.target_sha256 = m.at("target_sha256").get<std::vector<std::string>>();
    for (const auto& c : m.at("clean")) {
      set.clean_.push_back(read_image(dir / c.at("file").get<std::string>()));
      set.source_sha256.push_back(c.at("sha256").get<std::string>());
    }
    for (const auto& e : m.at("entries")) {
      FinetuneEntry entry;
      entry.target_idx = e.at("target_idx").get<int>();
      entry.source_idx = e.at("source_idx").get<int>();
      entry.edit = TmEdit::parse(e.at("edit").get<std::string>());
      entry.transferred_sha256 = e.at("transferred_sha256").get<std::string>();
      if (entry.source_idx < 0 || static_cast<std::size_t>(entry.source_idx) >= set.clean_.size()) {
        throw CheckpointError("finetune entry refers to missing clean image " + std::to_string(entry.source_idx));
      }
      if (!fs::exists(dir / entry_file(entry))) throw IoError("missing " + (dir / entry_file(entry)).string());
      set.entries.push_back(entry);
    }
    for (const auto& f : m.at("failures")) {
      set.failures.push_back({f.at("target_idx").get<int>(), f.at("source_idx").get<int>(),
                              f.at("edit").get<std::string>(), f.at("message").get<std::string>()});
    }
    set.memory_.assign(set.entries.size(), std::nullopt);
    set.directory_ = dir;
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed finetune manifest: " + std::string(e.what()));
  }
}

FinetuneSet build_finetune_set(const std::vector<ImageTensor>& target_hazy, const std::vector<ImageTensor>& source_clean,
                               const PhatnetWeights& w, const std::vector<TmEdit>& edits, int workers,
                               const fs::path& out_dir) {
  if (target_hazy.empty() || source_clean.empty()) throw ConfigError("finetune set needs M >= 1 and N >= 1 images");
  if (edits.empty()) throw ConfigError("finetune set needs at least one edit");
  if (workers < 1) throw ConfigError("workers must be >= 1");

  FinetuneSet set;
  set.clean_ = source_clean;
  for (const auto& t : target_hazy) set.target_sha256.push_back(sha256_tensor(t.tensor()));
  for (const auto& c : source_clean) set.source_sha256.push_back(sha256_tensor(c.tensor()));

  struct Task {
    int i, j;
    TmEdit edit;
  };
  std::vector<Task> tasks;
  for (int i = 0; i < static_cast<int>(target_hazy.size()); ++i) {
    for (int j = 0; j < static_cast<int>(source_clean.size()); ++j) {
      for (const auto& e : edits) tasks.push_back({i, j, e});
    }
  }
  const bool to_disk = !out_dir.empty();
  if (to_disk) fs::create_directories(out_dir / "transferred");

  std::vector<std::optional<ImageTensor>> images(tasks.size());
  std::vector<std::string> hashes(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& t = tasks[k];
      try {
        ImageTensor out = transfer(target_hazy[static_cast<std::size_t>(t.i)], source_clean[static_cast<std::size_t>(t.j)],
                                   w, t.edit);
        hashes[k] = sha256_tensor(out.tensor());
        if (to_disk) {
          write_image(out_dir / FinetuneSet::entry_file({t.i, t.j, t.edit, {}}), out, 16);
        } else {
          images[k] = std::move(out);
        }
      } catch (const Error& e) {
        errors[k] = e.what();
      }
    }
  };
  const int n_threads = std::min<int>(workers, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }

  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const Task& t = tasks[k];
    if (!errors[k].empty()) {
      set.failures.push_back({t.i, t.j, t.edit.tag(), errors[k]});
      continue;
    }
    set.entries.push_back({t.i, t.j, t.edit, hashes[k]});
    set.memory_.push_back(std::move(images[k]));
  }
  if (to_disk) set.save(out_dir);
  return set;
}

void AdaptConfig::validate() const {
  if (epochs < 0) throw ConfigError("adapt epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("adapt batch_size must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("adapt lr must be >= 0");
}

nlohmann::json AdaptConfig::to_json() const {
  return {{"epochs", epochs}, {"batch_size", batch_size}, {"lr", lr}, {"seed", seed}};
}

AdaptResult adapt_dehazer(const DehazerWeights& w, const FinetuneSet& set, const AdaptConfig& cfg) {
  cfg.validate();
  if (set.size() == 0) throw ConfigError("cannot adapt on an empty finetune set");
  AdaptResult result{w.clone(), {}};
  const std::string before = architecture_fingerprint(w.params());
  PairSource source{set.size(), [&](std::size_t k) { return ImagePair{set.transferred(k), set.clean_ref(k)}; }};
  SupervisedSchedule s{cfg.epochs, cfg.batch_size, cfg.lr, cfg.lr, cfg.seed, std::nullopt};
  result.history = fit_supervised(result.weights, source, s);
  if (architecture_fingerprint(result.weights.params()) != before) {
    throw Error("adaptation changed the dehazer architecture");
  }
  return result;
}

}  // namespace phat

// phatnet: command-line driver for data synthesis, haze-transfer training,
// fine-tuning set construction, dehazer adaptation and evaluation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phat/adaptation.hpp"
#include "phat/checkpoint.hpp"
#include "phat/datagen.hpp"
#include "phat/dehazer_train.hpp"
#include "phat/errors.hpp"
#include "phat/metrics.hpp"
#include "phat/model_io.hpp"
#include "phat/png_io.hpp"
#include "phat/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phat;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kCheckpoint = 3, kDivergence = 4 };

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// Recorded for every command and written next to its outputs.
struct RunManifest {
  std::string command;
  json argv = json::array();
  json config = json::object();
  json seeds = json::object();
  json inputs = json::object();
  json outputs = json::object();
  json checkpoint_hashes = json::object();
  fs::path path;
  std::string started = iso_now();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void write(const std::string& status, int code, const std::string& message) const {
    if (path.empty()) return;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json m{{"command", command},
           {"argv", argv},
           {"config", config},
           {"seeds", seeds},
           {"inputs", inputs},
           {"outputs", outputs},
           {"checkpoint_hashes", checkpoint_hashes},
           {"tool_version", kToolVersion},
           {"backend", "cpu"},
           {"wall_clock", {{"started", started}, {"finished", iso_now()}, {"seconds", secs}}},
           {"status", status},
           {"exit_code", code}};
    if (!message.empty()) m["error"] = message;
    try {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      write_file_atomic(path, m.dump(2));
    } catch (const std::exception& e) {
      std::cerr << "warning: could not write run manifest: " << e.what() << "\n";
    }
  }
};

// Manifest path for a command whose main output is a directory or a file.
fs::path manifest_for_dir(const fs::path& dir) { return dir / "run_manifest.json"; }
fs::path manifest_for_file(const fs::path& file) {
  fs::path p = file;
  p += ".manifest.json";
  return p;
}

// hazy/ and clean/ subdirectories if present, else the directory itself.
fs::path image_dir(const fs::path& root, const char* sub) {
  return fs::is_directory(root / sub) ? root / sub : root;
}

std::vector<ImageTensor> read_images(const fs::path& dir, std::size_t limit) {
  const auto files = list_pngs(dir);
  if (files.empty()) throw IoError("no PNG images in " + dir.string());
  std::vector<ImageTensor> out;
  for (std::size_t k = 0; k < files.size() && (limit == 0 || k < limit); ++k) out.push_back(read_image(files[k]));
  return out;
}

// Images side by side separated by white 2-pixel gutters.
Tensor hconcat(const std::vector<Tensor>& parts) {
  constexpr int kGap = 2;
  int h = 0;
  int w = -kGap;
  for (const auto& p : parts) {
    h = std::max(h, p.height());
    w += p.width() + kGap;
  }
  Tensor out(3, h, w);
  out.fill(1.0);
  int x0 = 0;
  for (const auto& p : parts) {
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < p.height(); ++y) {
        for (int x = 0; x < p.width(); ++x) out(c, y, x0 + x) = p(p.channels() == 3 ? c : 0, y, x);
      }
    }
    x0 += p.width() + kGap;
  }
  return out;
}

Tensor vconcat(const std::vector<Tensor>& rows) {
  constexpr int kGap = 2;
  int h = -kGap;
  int w = 0;
  for (const auto& r : rows) {
    h += r.height() + kGap;
    w = std::max(w, r.width());
  }
  Tensor out(3, h, w);
  out.fill(1.0);
  int y0 = 0;
  for (const auto& r : rows) {
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < r.height(); ++y) {
        for (int x = 0; x < r.width(); ++x) out(c, y0 + y, x) = r(c, y, x);
      }
    }
    y0 += r.height() + kGap;
  }
  return out;
}

Tensor upscale_nearest(const Tensor& t, int factor) {
  Tensor out(t.channels(), t.height() * factor, t.width() * factor);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) out(c, y, x) = t(c, y / factor, x / factor);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

constexpr const char* kResizeHelp = "Resize images whose sides are not a valid multiple instead of rejecting them";
ResolutionPolicy policy(bool resize) { return resize ? ResolutionPolicy::kResize : ResolutionPolicy::kReject; }

struct SynthArgs {
  std::string spec_file;
  std::string out_dir;
};

int cmd_synth_data(const SynthArgs& a, RunManifest& run) {
  run.path = manifest_for_dir(a.out_dir);
  run.inputs["spec_file"] = a.spec_file;
  const DomainSpec spec = DomainSpec::from_json(read_json(a.spec_file));
  run.config = spec.to_json();
  run.seeds["domain"] = spec.seed;
  const auto pairs = generate_domain(spec);
  save_domain(a.out_dir, spec, pairs);
  run.outputs["dataset_dir"] = a.out_dir;
  run.outputs["pairs"] = pairs.size();
  std::cout << "wrote " << pairs.size() << " pairs to " << a.out_dir << "\n";
  return kOk;
}

struct TrainArgs {
  std::string dataset_dir;
  std::string config_file;
  std::string out_checkpoint;
  std::string resume;
  std::optional<long> stop_at;
  bool resize = false;
};

int cmd_train_phatnet(const TrainArgs& a, RunManifest& run) {
  run.path = manifest_for_file(a.out_checkpoint);
  run.inputs = {{"dataset_dir", a.dataset_dir}, {"config_file", a.config_file}};
  const TrainConfig cfg = TrainConfig::from_json(read_json(a.config_file));
  run.config = cfg.to_json();
  run.seeds["train"] = cfg.seed;
  const auto data = load_external_dataset(a.dataset_dir, policy(a.resize), cfg.network().resolution_multiple());

  std::optional<TrainState> resume;
  if (!a.resume.empty()) {
    resume = load_train_state(a.resume);
    run.inputs["resume"] = a.resume;
    run.checkpoint_hashes["resume"] = sha256_file(a.resume);
  }
  fs::path state_path = a.out_checkpoint;
  state_path += ".state";
  TrainOptions opts;
  opts.stop_at_step = a.stop_at;
  opts.checkpoint_dir = fs::path(a.out_checkpoint).parent_path() / "checkpoints";
  const long total = total_steps(cfg, data.size());
  opts.on_step = [&](const TrainState& s) {
    if (s.step % 20 == 0 || s.step == total) {
      const auto& r = s.history.back();
      std::cout << "step " << s.step << "/" << total << " lr " << r.lr << " htc " << r.htc << " cl " << r.cl << "\n";
    }
  };
  const TrainState state = train(data, cfg, resume, opts);
  save_phatnet(a.out_checkpoint, state.weights, cfg.seed);
  save_train_state(state_path, state, cfg);
  fs::path csv = a.out_checkpoint;
  csv += ".loss.csv";
  write_file_atomic(csv, loss_history_csv(state.history));
  run.outputs = {{"checkpoint", a.out_checkpoint}, {"train_state", state_path.string()}, {"loss_csv", csv.string()},
                 {"steps", state.step}};
  run.checkpoint_hashes["phatnet"] = sha256_file(a.out_checkpoint);
  run.checkpoint_hashes["train_state"] = sha256_file(state_path);
  return kOk;
}

struct DehazerTrainArgs {
  std::string dataset_dir;
  std::string config_file;
  std::string out_checkpoint;
  bool identity = false;
  bool resize = false;
};

int cmd_train_dehazer(const DehazerTrainArgs& a, RunManifest& run) {
  run.path = manifest_for_file(a.out_checkpoint);
  DehazerTrainConfig cfg;
  if (!a.config_file.empty()) {
    cfg = DehazerTrainConfig::from_json(read_json(a.config_file));
    run.inputs["config_file"] = a.config_file;
  }
  run.config = cfg.to_json();
  run.config["identity"] = a.identity;
  run.seeds["train"] = cfg.seed;
  DehazerWeights w;
  if (a.identity) {
    w = DehazerWeights::init(cfg.network, cfg.seed);
    nn::zero_all(w.params());
  } else {
    run.inputs["dataset_dir"] = a.dataset_dir;
    const auto data = load_external_dataset(a.dataset_dir, policy(a.resize),
                                            std::max(8, cfg.network.resolution_multiple()));
    std::vector<SupervisedStep> history;
    w = train_dehazer(data, cfg, &history);
    if (!history.empty()) std::cout << "final loss " << history.back().loss << "\n";
  }
  save_dehazer(a.out_checkpoint, w, cfg.seed);
  run.outputs["checkpoint"] = a.out_checkpoint;
  run.checkpoint_hashes["dehazer"] = sha256_file(a.out_checkpoint);
  return kOk;
}

struct TransferArgs {
  std::string checkpoint;
  std::string hazy;
  std::string clean;
  std::string out;
  double gamma = 1.0;
  bool vflip = false;
  std::string recipe;
  std::string grid;
};

int cmd_transfer(const TransferArgs& a, RunManifest& run) {
  run.path = manifest_for_file(a.out);
  run.inputs = {{"checkpoint", a.checkpoint}, {"hazy", a.hazy}, {"clean", a.clean}};
  if (a.vflip && a.gamma != 1.0) throw ConfigError("--gamma and --vflip are mutually exclusive");
  TmEdit edit;
  if (a.vflip) {
    edit = TmEdit::vflip();
  } else if (a.gamma != 1.0) {
    edit = TmEdit::gamma_correction(a.gamma);
  }
  run.config = {{"edit", edit.tag()}, {"gamma", a.gamma}, {"vflip", a.vflip}};
  const PhatnetWeights w = load_phatnet(a.checkpoint);
  run.checkpoint_hashes["phatnet"] = sha256_file(a.checkpoint);
  const ImageTensor hazy = read_image(a.hazy);
  const ImageTensor clean = read_image(a.clean);
  const ImageTensor out = transfer(hazy, clean, w, edit);
  write_image(a.out, out, 16);
  run.outputs["image"] = a.out;
  run.outputs["sha256"] = sha256_file(a.out);
  std::vector<Tensor> panels{hazy.tensor(), clean.tensor(), out.tensor()};
  if (!a.recipe.empty()) {
    run.inputs["recipe"] = a.recipe;
    const HazeRecipe r = load_recipe(a.recipe);
    const ImageTensor oracle = compose_asm(clean, transmission_from_recipe(r), r.airlight);
    panels.push_back(oracle.tensor());
    const double p = psnr(out, oracle);
    run.outputs["psnr_vs_oracle_db"] = std::isinf(p) ? json("inf") : json(p);
    std::cout << "PSNR vs ASM oracle: " << p << " dB\n";
  }
  if (!a.grid.empty()) {
    write_png(a.grid, hconcat(panels));
    run.outputs["grid"] = a.grid;
  }
  return kOk;
}

struct BuildSetArgs {
  std::string checkpoint;
  std::string target_dir;
  std::string source_clean_dir;
  std::string out_dir;
  std::vector<std::string> edits{"none"};
  int workers = 1;
  std::size_t max_target = 0;
  std::size_t max_source = 0;
};

int cmd_build_finetune_set(const BuildSetArgs& a, RunManifest& run) {
  run.path = manifest_for_dir(a.out_dir);
  run.inputs = {{"checkpoint", a.checkpoint}, {"target_dir", a.target_dir}, {"source_clean_dir", a.source_clean_dir}};
  std::vector<TmEdit> edits;
  for (const auto& e : a.edits) edits.push_back(e == "default" ? TmEdit::none() : TmEdit::parse(e));
  if (std::find(a.edits.begin(), a.edits.end(), "default") != a.edits.end()) edits = default_edits();
  json edit_tags = json::array();
  for (const auto& e : edits) edit_tags.push_back(e.tag());
  run.config = {{"edits", edit_tags}, {"workers", a.workers}, {"max_target", a.max_target}, {"max_source", a.max_source}};
  const PhatnetWeights w = load_phatnet(a.checkpoint);
  const std::string ckpt_hash = sha256_file(a.checkpoint);
  run.checkpoint_hashes["phatnet"] = ckpt_hash;
  const auto targets = read_images(image_dir(a.target_dir, "hazy"), a.max_target);
  const auto sources = read_images(image_dir(a.source_clean_dir, "clean"), a.max_source);
  FinetuneSet set = build_finetune_set(targets, sources, w, edits, a.workers, a.out_dir);
  set.phatnet_sha256 = ckpt_hash;
  set.save(a.out_dir);
  for (const auto& f : set.failures) {
    std::cerr << "entry (" << f.target_idx << ", " << f.source_idx << ", " << f.edit << ") failed: " << f.message << "\n";
  }
  // Preview grid: first target's haze on up to four clean images.
  std::vector<Tensor> row;
  for (std::size_t k = 0; k < set.size() && row.size() < 4; ++k) row.push_back(set.transferred(k).tensor());
  if (!row.empty()) write_png(fs::path(a.out_dir) / "preview.png", hconcat(row));
  run.outputs = {{"finetune_dir", a.out_dir},
                 {"entries", set.size()},
                 {"failures", set.failures.size()},
                 {"content_hash", set.content_hash()}};
  std::cout << set.size() << " entries, " << set.failures.size() << " failures, content hash " << set.content_hash()
            << "\n";
  return kOk;
}

struct AdaptArgs {
  std::string dehazer;
  std::string finetune_dir;
  std::string out;
  AdaptConfig cfg;
};

int cmd_adapt(const AdaptArgs& a, RunManifest& run) {
  run.path = manifest_for_file(a.out);
  run.inputs = {{"dehazer", a.dehazer}, {"finetune_dir", a.finetune_dir}};
  run.config = a.cfg.to_json();
  run.seeds["adapt"] = a.cfg.seed;
  const DehazerWeights w = load_dehazer(a.dehazer);
  run.checkpoint_hashes["dehazer_in"] = sha256_file(a.dehazer);
  const FinetuneSet set = FinetuneSet::load(a.finetune_dir);
  run.checkpoint_hashes["phatnet"] = set.phatnet_sha256;
  run.inputs["finetune_content_hash"] = set.content_hash();
  const AdaptResult r = adapt_dehazer(w, set, a.cfg);
  save_dehazer(a.out, r.weights, a.cfg.seed);
  run.checkpoint_hashes["dehazer_out"] = sha256_file(a.out);
  run.outputs = {{"checkpoint", a.out}, {"steps", r.history.size()}, {"parameters", nn::parameter_count(r.weights.params())}};
  std::cout << "adapted over " << r.history.size() << " steps\n";
  return kOk;
}

struct EvaluateArgs {
  std::string dehazer;
  std::string dataset_dir;
  std::string out_report;
  std::size_t grid_rows = 4;
  bool resize = false;
};

int cmd_evaluate(const EvaluateArgs& a, RunManifest& run) {
  run.path = manifest_for_file(a.out_report);
  run.inputs = {{"dehazer", a.dehazer}, {"dataset_dir", a.dataset_dir}};
  const DehazerWeights w = load_dehazer(a.dehazer);
  run.checkpoint_hashes["dehazer"] = sha256_file(a.dehazer);
  const auto files = list_pngs(fs::path(a.dataset_dir) / "hazy");
  const auto data = load_external_dataset(a.dataset_dir, policy(a.resize),
                                          std::max(8, w.config.resolution_multiple()));
  MetricReport report;
  std::vector<Tensor> grid;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const ImageTensor out = dehaze(data[k].hazy, w);
    report.add(files[k].stem().string(), psnr(out, data[k].clean), ssim(out, data[k].clean));
    if (grid.size() < a.grid_rows) grid.push_back(hconcat({data[k].hazy.tensor(), out.tensor(), data[k].clean.tensor()}));
  }
  run.config = {{"dehazer", {{"depth", w.config.depth}, {"base_channels", w.config.base_channels},
                             {"res_blocks", w.config.res_blocks}}},
                {"grid_rows", a.grid_rows}};
  const json config_echo{{"dehazer", a.dehazer}, {"dataset_dir", a.dataset_dir}, {"metric", run.config}};
  fs::path json_path = a.out_report;
  fs::path csv_path = a.out_report;
  if (json_path.extension() == ".json") {
    csv_path.replace_extension(".csv");
  } else {
    json_path += ".json";
    csv_path += ".csv";
  }
  if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
  write_file_atomic(json_path, report.to_json(config_echo).dump(2));
  write_file_atomic(csv_path, report.to_csv());
  run.outputs = {{"report_json", json_path.string()}, {"report_csv", csv_path.string()}};
  if (!grid.empty()) {
    fs::path grid_path = json_path;
    grid_path.replace_extension(".grid.png");
    write_png(grid_path, vconcat(grid));
    run.outputs["grid"] = grid_path.string();
  }
  std::cout << "mean PSNR " << report.mean_psnr_db << " dB, mean SSIM " << report.mean_ssim << " over "
            << report.rows.size() << " images\n";
  return kOk;
}

struct InspectArgs {
  std::string checkpoint;
  std::string hazy;
  std::string out_dir;
};

int cmd_inspect(const InspectArgs& a, RunManifest& run) {
  run.path = manifest_for_dir(a.out_dir);
  run.inputs = {{"checkpoint", a.checkpoint}, {"hazy", a.hazy}};
  const PhatnetWeights w = load_phatnet(a.checkpoint);
  run.checkpoint_hashes["phatnet"] = sha256_file(a.checkpoint);
  const ImageTensor hazy = read_image(a.hazy);
  struct Capture {
    Tensor tm_mean;
    Tensor airlight;
  };
  std::map<int, Capture> captured;
  const FusionObserver observer = [&](int stage, const Tensor&, const Tensor& tm, const Tensor& al) {
    Tensor mean(1, tm.height(), tm.width());
    for (int c = 0; c < tm.channels(); ++c) {
      for (int y = 0; y < tm.height(); ++y) {
        for (int x = 0; x < tm.width(); ++x) mean(0, y, x) += tm(c, y, x) / tm.channels();
      }
    }
    captured[stage] = {std::move(mean), al};
  };
  forward(hazy, hazy, w, TmEdit::none(), &observer);
  fs::create_directories(a.out_dir);
  std::ostringstream tm_csv;
  tm_csv << "stage,height,width,min,mean,max\n";
  std::ostringstream al_csv;
  al_csv << "stage,channel,value\n";
  json files = json::array();
  for (const auto& [stage, cap] : captured) {
    const auto [lo, hi] = std::minmax_element(cap.tm_mean.values().begin(), cap.tm_mean.values().end());
    tm_csv << stage << ',' << cap.tm_mean.height() << ',' << cap.tm_mean.width() << ',' << *lo << ','
           << cap.tm_mean.mean() << ',' << *hi << '\n';
    const std::string tm_name = "stage" + std::to_string(stage) + "_tm_mean.png";
    write_png(fs::path(a.out_dir) / tm_name, upscale_nearest(cap.tm_mean, hazy.height() / cap.tm_mean.height()), 16);
    files.push_back(tm_name);

    const int channels = cap.airlight.channels();
    constexpr int kBarWidth = 6;
    constexpr int kBarHeight = 64;
    Tensor bars(1, kBarHeight, channels * kBarWidth);
    for (int c = 0; c < channels; ++c) {
      const double v = cap.airlight[static_cast<std::size_t>(c)];
      al_csv << stage << ',' << c << ',' << v << '\n';
      const int filled = static_cast<int>(std::lround(v * kBarHeight));
      for (int y = kBarHeight - filled; y < kBarHeight; ++y) {
        for (int x = 1; x < kBarWidth - 1; ++x) bars(0, y, c * kBarWidth + x) = 1.0;
      }
    }
    const std::string al_name = "stage" + std::to_string(stage) + "_airlight_bars.png";
    write_png(fs::path(a.out_dir) / al_name, bars);
    files.push_back(al_name);
  }
  write_file_atomic(fs::path(a.out_dir) / "transmission_stats.csv", tm_csv.str());
  write_file_atomic(fs::path(a.out_dir) / "airlight.csv", al_csv.str());
  run.outputs = {{"out_dir", a.out_dir}, {"images", files}, {"csv", {"transmission_stats.csv", "airlight.csv"}}};
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return kDivergence;
  if (dynamic_cast<const CheckpointError*>(&e)) return kCheckpoint;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kIo;
  return kUsage;
}

const char* error_kind(int code) {
  switch (code) {
    case kIo:
      return "io";
    case kCheckpoint:
      return "checkpoint";
    case kDivergence:
      return "divergence";
    default:
      return "usage";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Haze transfer and test-time dehazer adaptation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-data", "Generate a synthetic hazy/clean domain");
  c_synth->add_option("spec_file", synth.spec_file, "DomainSpec JSON")->required()->check(CLI::ExistingFile);
  c_synth->add_option("out_dir", synth.out_dir, "Output dataset directory")->required();

  TrainArgs train_args;
  auto* c_train = app.add_subcommand("train-phatnet", "Train the haze transfer network");
  c_train->add_option("dataset_dir", train_args.dataset_dir)->required()->check(CLI::ExistingDirectory);
  c_train->add_option("config_file", train_args.config_file)->required()->check(CLI::ExistingFile);
  c_train->add_option("out_checkpoint", train_args.out_checkpoint)->required();
  c_train->add_option("--resume", train_args.resume, "Training state to continue from")->check(CLI::ExistingFile);
  c_train->add_option("--stop-at", train_args.stop_at, "Stop before this step (for staged runs)");
  c_train->add_flag("--resize", train_args.resize, kResizeHelp);

  DehazerTrainArgs dtrain;
  auto* c_dtrain = app.add_subcommand("train-dehazer", "Train the baseline dehazer");
  c_dtrain->add_option("dataset_dir", dtrain.dataset_dir, "Paired training data (omit with --identity)");
  c_dtrain->add_option("out_checkpoint", dtrain.out_checkpoint);
  c_dtrain->add_option("--config", dtrain.config_file, "Dehazer training config JSON")->check(CLI::ExistingFile);
  c_dtrain->add_flag("--identity", dtrain.identity, "Write zero weights (identity dehazer) without training");
  c_dtrain->add_flag("--resize", dtrain.resize, kResizeHelp);

  TransferArgs tr;
  auto* c_transfer = app.add_subcommand("transfer", "Transfer the haze of one image onto another");
  c_transfer->add_option("checkpoint", tr.checkpoint)->required()->check(CLI::ExistingFile);
  c_transfer->add_option("hazy", tr.hazy)->required()->check(CLI::ExistingFile);
  c_transfer->add_option("clean", tr.clean)->required()->check(CLI::ExistingFile);
  c_transfer->add_option("out", tr.out)->required();
  c_transfer->add_option("--gamma", tr.gamma, "Gamma applied to latent transmission features")->capture_default_str();
  c_transfer->add_flag("--vflip", tr.vflip, "Vertically flip latent transmission features");
  c_transfer->add_option("--recipe", tr.recipe, "Haze recipe of the hazy image, for the oracle panel")
      ->check(CLI::ExistingFile);
  c_transfer->add_option("--grid", tr.grid, "Write a hazy | clean | transferred | oracle grid");

  BuildSetArgs bs;
  auto* c_build = app.add_subcommand("build-finetune-set", "Build the domain-specific fine-tuning set");
  c_build->add_option("checkpoint", bs.checkpoint)->required()->check(CLI::ExistingFile);
  c_build->add_option("target_dir", bs.target_dir, "Target-domain hazy images (or dataset root)")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_build->add_option("source_clean_dir", bs.source_clean_dir, "Source-domain clean images (or dataset root)")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_build->add_option("out_dir", bs.out_dir)->required();
  c_build->add_option("--edits", bs.edits, "Edits: none, vflip, gamma<g>, or default")->delimiter(',');
  c_build->add_option("--workers", bs.workers, "Worker threads")->check(CLI::PositiveNumber);
  c_build->add_option("--max-target", bs.max_target, "Use the first M target images (0 = all)");
  c_build->add_option("--max-source", bs.max_source, "Use the first N source images (0 = all)");

  AdaptArgs ad_args;
  auto* c_adapt = app.add_subcommand("adapt", "Fine-tune a dehazer on a fine-tuning set");
  c_adapt->add_option("dehazer_ckpt", ad_args.dehazer)->required()->check(CLI::ExistingFile);
  c_adapt->add_option("finetune_dir", ad_args.finetune_dir)->required()->check(CLI::ExistingDirectory);
  c_adapt->add_option("out_ckpt", ad_args.out)->required();
  c_adapt->add_option("--epochs", ad_args.cfg.epochs)->capture_default_str();
  c_adapt->add_option("--lr", ad_args.cfg.lr)->capture_default_str();
  c_adapt->add_option("--batch", ad_args.cfg.batch_size)->capture_default_str();
  c_adapt->add_option("--seed", ad_args.cfg.seed)->capture_default_str();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "PSNR/SSIM of a dehazer on a paired dataset");
  c_eval->add_option("dehazer_ckpt", ev.dehazer)->required()->check(CLI::ExistingFile);
  c_eval->add_option("dataset_dir", ev.dataset_dir)->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("out_report", ev.out_report, "Report path (.json; a .csv is written alongside)")->required();
  c_eval->add_option("--grid-rows", ev.grid_rows)->capture_default_str();
  c_eval->add_flag("--resize", ev.resize, kResizeHelp);

  InspectArgs in;
  auto* c_inspect = app.add_subcommand("inspect", "Dump per-stage latent transmission and airlight features");
  c_inspect->add_option("checkpoint", in.checkpoint)->required()->check(CLI::ExistingFile);
  c_inspect->add_option("hazy", in.hazy)->required()->check(CLI::ExistingFile);
  c_inspect->add_option("out_dir", in.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  RunManifest run;
  run.command = app.get_subcommands().front()->get_name();
  for (int k = 0; k < argc; ++k) run.argv.push_back(argv[k]);
  try {
    if (const char* backend = std::getenv("PHATNET_BACKEND"); backend && std::string(backend) != "cpu") {
      throw ConfigError(std::string("unsupported backend '") + backend + "' (only 'cpu' is available)");
    }
    int rc = kOk;
    if (*c_synth) rc = cmd_synth_data(synth, run);
    if (*c_train) rc = cmd_train_phatnet(train_args, run);
    if (*c_dtrain) {
      if (dtrain.out_checkpoint.empty() && dtrain.identity) std::swap(dtrain.out_checkpoint, dtrain.dataset_dir);
      if (dtrain.out_checkpoint.empty()) throw ConfigError("train-dehazer needs an out_checkpoint");
      if (!dtrain.identity && dtrain.dataset_dir.empty()) throw ConfigError("train-dehazer needs a dataset_dir");
      rc = cmd_train_dehazer(dtrain, run);
    }
    if (*c_transfer) rc = cmd_transfer(tr, run);
    if (*c_build) rc = cmd_build_finetune_set(bs, run);
    if (*c_adapt) rc = cmd_adapt(ad_args, run);
    if (*c_eval) rc = cmd_evaluate(ev, run);
    if (*c_inspect) rc = cmd_inspect(in, run);
    run.write("ok", rc, "");
    return rc;
  } catch (const std::exception& e) {
    const int rc = exit_code_for(e);
    run.write("error", rc, e.what());
    std::cerr << "error [" << error_kind(rc) << "]: " << e.what() << "\n";
    return rc;
  }
}

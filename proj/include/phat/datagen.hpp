#pragma once

// Procedural synthetic haze domains with ground-truth haze recipes.
//
// A domain is a set of (clean, hazy, recipe) triples where the hazy image is
// rendered from the clean one with the scattering model, so every learned
// quantity can be checked against the recipe that produced it.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phat/asm.hpp"
#include "phat/image.hpp"

namespace phat {

struct SceneParams {
  int min_shapes = 3;
  int max_shapes = 7;
  int texture_octaves = 3;
  double texture_strength = 0.12;
  double edge_softness = 3.0;  // pixels over which shape edges blend
  std::string palette = "natural";  // natural | warm | cool

  void validate() const;
};

struct HazeParams {
  double beta_min = 0.6;
  double beta_max = 1.6;
  // A = lo + u (hi - lo) with one shared u, plus per-channel jitter.
  Airlight airlight_lo{0.75, 0.75, 0.75};
  Airlight airlight_hi{0.95, 0.95, 0.95};
  double airlight_jitter = 0.02;
  double depth_near = 0.3;
  double depth_far = 1.6;
  bool homogeneous = true;
  int field_octaves = 3;
  double field_scale = 32.0;  // lattice spacing of the coarsest octave, pixels
  double field_floor = 0.25;  // field is remapped to [floor, 1]

  void validate() const;
};

struct DomainSpec {
  std::string name = "source";
  std::uint64_t seed = 1;
  int size = 128;
  int pair_count = 20;
  SceneParams scene;
  HazeParams haze;

  // Throws ConfigError. Airlight bounds must lie in [0.6, 1.0], beta > 0,
  // size divisible by 32.
  void validate() const;
  nlohmann::json to_json() const;
  // Strict: unknown keys are rejected, missing keys take defaults.
  static DomainSpec from_json(const nlohmann::json& j);
};

struct SynthPair {
  ImageTensor clean;
  ImageTensor hazy;
  HazeRecipe recipe;
};

ImageTensor generate_clean_scene(std::uint64_t seed, int size, const SceneParams& params = {});

// Smooth multi-octave value noise, min-max normalised to [0,1]. `scale` is
// the lattice spacing of the coarsest octave in pixels.
Tensor generate_haze_field(std::uint64_t seed, int size, int octaves, double scale);

// Depth increasing towards the top of the frame, with smooth variation.
Tensor generate_depth(std::uint64_t seed, int size, double near, double far);

HazeRecipe sample_recipe(std::uint64_t seed, int size, const HazeParams& params);

std::vector<SynthPair> generate_domain(const DomainSpec& spec);

// Writes hazy/NNNN.png, clean/NNNN.png (8-bit), transmission/NNNN.png
// (16-bit), recipes/NNNN.json with raw depth/field arrays alongside, and
// domain.json.
void save_domain(const std::filesystem::path& root, const DomainSpec& spec, const std::vector<SynthPair>& pairs);

// Reads recipes/NNNN.json as written by save_domain.
HazeRecipe load_recipe(const std::filesystem::path& json_path);

enum class ResolutionPolicy { kReject, kResize };

// Loads hazy/<stem>.png and clean/<stem>.png pairs sorted by stem. A missing
// counterpart raises IoError naming the stem. Images whose sides are not
// divisible by `multiple` are rejected (DimensionError) or bilinearly
// resized down to the nearest multiple.
std::vector<ImagePair> load_external_dataset(const std::filesystem::path& root,
                                             ResolutionPolicy policy = ResolutionPolicy::kReject,
                                             int multiple = 32);

// Sorted *.png files of `dir`.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

// Bilinear resampling (half-pixel centres) to an arbitrary size.
Tensor resize_bilinear(const Tensor& t, int height, int width);

}  // namespace phat

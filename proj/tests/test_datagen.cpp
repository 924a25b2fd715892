#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "phat/datagen.hpp"
#include "phat/errors.hpp"
#include "phat/png_io.hpp"
#include "test_util.hpp"

using namespace phat;
namespace fs = std::filesystem;

namespace {

double mean_abs(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

std::vector<double> channel_means(const std::vector<SynthPair>& pairs) {
  std::vector<double> m(3, 0.0);
  for (const auto& p : pairs) {
    const Tensor& t = p.hazy.tensor();
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int y = 0; y < t.height(); ++y)
        for (int x = 0; x < t.width(); ++x) s += t(c, y, x);
      m[static_cast<std::size_t>(c)] += s / t.plane() / static_cast<double>(pairs.size());
    }
  }
  return m;
}

}  // namespace

TEST_CASE("clean scenes are deterministic and seed-dependent") {
  CHECK(generate_clean_scene(5, 64) == generate_clean_scene(5, 64));
  double worst = 1.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    worst = std::min(worst, mean_abs(generate_clean_scene(2 * s, 64).tensor(), generate_clean_scene(2 * s + 1, 64).tensor()));
  }
  MESSAGE("smallest mean abs difference over 100 seed pairs: " << worst);
  CHECK(worst > 0.05);
}

TEST_CASE("clean scenes span at least half the value range") {
  int failures = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const ImageTensor img = generate_clean_scene(s, 128);
    const auto v = img.tensor().values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*hi - *lo < 0.5) ++failures;
  }
  CHECK(failures == 0);
  SceneParams bad;
  bad.palette = "neon";
  CHECK_THROWS_AS(generate_clean_scene(1, 64, bad), ConfigError);
}

TEST_CASE("haze field range, determinism and smoothness") {
  const Tensor f = generate_haze_field(3, 128, 3, 32.0);
  CHECK(f == generate_haze_field(3, 128, 3, 32.0));
  const auto v = f.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  CHECK(*lo >= 0.0);
  CHECK(*hi <= 1.0);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0, cov = 0.0;
  int n = 0;
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      const double d = f(0, y, x) - mean;
      var += d * d;
      if (x + 1 < 128) {
        cov += d * (f(0, y, x + 1) - mean);
        ++n;
      }
    }
  }
  const double rho = (cov / n) / (var / (128.0 * 128.0));
  MESSAGE("lag-1 autocorrelation: " << rho);
  CHECK(rho > 0.9);
  CHECK_THROWS_AS(generate_haze_field(1, 16, 0, 8.0), ParameterError);
}

TEST_CASE("domain pairs satisfy the scattering invariant") {
  DomainSpec spec;
  spec.size = 64;
  spec.pair_count = 6;
  spec.haze.homogeneous = false;
  const auto pairs = generate_domain(spec);
  REQUIRE(pairs.size() == 6);
  for (const auto& p : pairs) {
    CHECK(p.hazy == compose_asm(p.clean, transmission_from_recipe(p.recipe), p.recipe.airlight));
    CHECK(p.recipe.haze_field.has_value());
    CHECK(p.recipe.beta >= spec.haze.beta_min);
    CHECK(p.recipe.beta <= spec.haze.beta_max);
    for (double a : p.recipe.airlight) {
      CHECK(a >= 0.6);
      CHECK(a <= 1.0);
    }
  }
  const auto again = generate_domain(spec);
  for (std::size_t k = 0; k < pairs.size(); ++k) CHECK(again[k].hazy == pairs[k].hazy);
  spec.pair_count = 0;
  CHECK(generate_domain(spec).empty());
}

TEST_CASE("airlight distribution produces a measurable domain gap") {
  DomainSpec a;
  a.size = 64;
  a.pair_count = 12;
  DomainSpec b = a;
  b.haze.airlight_lo = {0.9, 0.78, 0.6};
  b.haze.airlight_hi = {1.0, 0.88, 0.7};
  const auto ma = channel_means(generate_domain(a));
  const auto mb = channel_means(generate_domain(b));
  double gap = 0.0;
  for (int c = 0; c < 3; ++c) gap += std::abs(ma[static_cast<std::size_t>(c)] - mb[static_cast<std::size_t>(c)]) / 3.0;
  MESSAGE("mean channel gap: " << gap);
  CHECK(gap > 0.05);
}

TEST_CASE("saved domains round trip") {
  testutil::TempDir dir("domain");
  DomainSpec spec;
  spec.size = 32;
  spec.pair_count = 3;
  spec.haze.homogeneous = false;
  const auto pairs = generate_domain(spec);
  save_domain(dir.path(), spec, pairs);
  const auto loaded = load_external_dataset(dir.path());
  REQUIRE(loaded.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(testutil::max_abs_diff(loaded[k].hazy.tensor(), pairs[k].hazy.tensor()) <= 1.0 / 255.0);
    CHECK(testutil::max_abs_diff(loaded[k].clean.tensor(), pairs[k].clean.tensor()) <= 1.0 / 255.0);
  }
  const HazeRecipe r = load_recipe(dir.path() / "recipes" / "0001.json");
  CHECK(r.beta == pairs[1].recipe.beta);
  CHECK(r.airlight == pairs[1].recipe.airlight);
  CHECK(r.depth == pairs[1].recipe.depth);
  CHECK(*r.haze_field == *pairs[1].recipe.haze_field);
  CHECK(DomainSpec::from_json(nlohmann::json::parse(std::ifstream(dir.path() / "domain.json"))).seed == spec.seed);
}

TEST_CASE("external dataset errors") {
  testutil::TempDir dir("external");
  CHECK(load_external_dataset(dir.path()).empty());
  fs::create_directories(dir.path() / "hazy");
  fs::create_directories(dir.path() / "clean");
  write_image(dir.path() / "hazy" / "a.png", ImageTensor(32, 32, 0.5));
  write_image(dir.path() / "clean" / "a.png", ImageTensor(32, 32, 0.5));
  write_image(dir.path() / "hazy" / "orphan.png", ImageTensor(32, 32, 0.5));
  try {
    load_external_dataset(dir.path());
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("orphan") != std::string::npos);
  }
  fs::remove(dir.path() / "hazy" / "orphan.png");
  write_png(dir.path() / "hazy" / "b.png", Tensor(1, 40, 72, 0.25));
  write_png(dir.path() / "clean" / "b.png", Tensor(1, 40, 72, 0.75));
  CHECK_THROWS_AS(load_external_dataset(dir.path()), DimensionError);
  const auto resized = load_external_dataset(dir.path(), ResolutionPolicy::kResize);
  REQUIRE(resized.size() == 2);
  CHECK(resized[1].hazy.height() == 32);
  CHECK(resized[1].hazy.width() == 64);
  CHECK(resized[1].clean(2, 5, 5) == doctest::Approx(0.75).epsilon(1e-2));
}

TEST_CASE("domain spec JSON is strict") {
  DomainSpec spec;
  spec.haze.homogeneous = false;
  const DomainSpec back = DomainSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());
  CHECK_THROWS_AS(DomainSpec::from_json({{"sizes", 64}}), ConfigError);
  CHECK_THROWS_AS(DomainSpec::from_json({{"haze", {{"beta_mn", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(DomainSpec::from_json({{"size", 48}}), ConfigError);
  CHECK_THROWS_AS(DomainSpec::from_json({{"size", "big"}}), ConfigError);
  CHECK_THROWS_AS(DomainSpec::from_json({{"haze", {{"airlight_lo", {0.5, 0.7, 0.7}}}}}), ConfigError);
}

TEST_CASE("bilinear resize keeps constants") {
  const Tensor t(3, 10, 14, 0.3);
  const Tensor r = resize_bilinear(t, 7, 9);
  for (double v : r.values()) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
}

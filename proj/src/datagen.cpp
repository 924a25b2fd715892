#include "phat/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "phat/checkpoint.hpp"
#include "phat/errors.hpp"
#include "phat/png_io.hpp"
#include "phat/random.hpp"

namespace phat {

namespace fs = std::filesystem;

namespace {

using Rgb = std::array<double, 3>;

const std::map<std::string, std::vector<Rgb>>& palettes() {
  static const std::map<std::string, std::vector<Rgb>> kPalettes{
      {"natural",
       {{0.45, 0.62, 0.85}, {0.78, 0.86, 0.95}, {0.22, 0.45, 0.18}, {0.42, 0.58, 0.25}, {0.48, 0.36, 0.22},
        {0.62, 0.55, 0.45}, {0.30, 0.30, 0.32}, {0.85, 0.80, 0.70}, {0.12, 0.18, 0.10}, {0.70, 0.25, 0.18}}},
      {"warm",
       {{0.92, 0.72, 0.45}, {0.85, 0.45, 0.25}, {0.55, 0.25, 0.12}, {0.95, 0.88, 0.60}, {0.40, 0.20, 0.15},
        {0.75, 0.60, 0.30}, {0.20, 0.12, 0.08}, {0.98, 0.80, 0.70}}},
      {"cool",
       {{0.30, 0.45, 0.70}, {0.60, 0.75, 0.90}, {0.15, 0.35, 0.40}, {0.40, 0.60, 0.55}, {0.10, 0.15, 0.30},
        {0.75, 0.80, 0.85}, {0.25, 0.25, 0.45}, {0.50, 0.70, 0.75}}},
  };
  return kPalettes;
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double lattice_value(std::uint64_t seed, int octave, int ix, int iy) {
  const std::uint64_t h = mix_seed(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(octave)),
                                            static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix))),
                                   static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Unnormalised sum of octaves, amplitude halving per octave.
Tensor value_noise(std::uint64_t seed, int size, int octaves, double scale) {
  Tensor out(1, size, size);
  double amp = 1.0;
  double spacing = scale;
  for (int o = 0; o < octaves; ++o) {
    for (int y = 0; y < size; ++y) {
      const double fy = (y + 0.5) / spacing;
      const int iy = static_cast<int>(std::floor(fy));
      const double ty = smoothstep(0.0, 1.0, fy - iy);
      for (int x = 0; x < size; ++x) {
        const double fx = (x + 0.5) / spacing;
        const int ix = static_cast<int>(std::floor(fx));
        const double tx = smoothstep(0.0, 1.0, fx - ix);
        const double v00 = lattice_value(seed, o, ix, iy);
        const double v10 = lattice_value(seed, o, ix + 1, iy);
        const double v01 = lattice_value(seed, o, ix, iy + 1);
        const double v11 = lattice_value(seed, o, ix + 1, iy + 1);
        const double top = v00 + (v10 - v00) * tx;
        const double bottom = v01 + (v11 - v01) * tx;
        out(0, y, x) += amp * (top + (bottom - top) * ty);
      }
    }
    amp *= 0.5;
    spacing = std::max(spacing * 0.5, 1.0);
  }
  return out;
}

void normalise01(Tensor& t) {
  const auto [lo, hi] = std::minmax_element(t.values().begin(), t.values().end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : t.values()) v = range > 0.0 ? (v - min) / range : 0.5;
}

struct Shape {
  bool ellipse = true;
  double cx = 0, cy = 0, rx = 0, ry = 0, angle = 0;
  std::vector<std::array<double, 2>> vertices;  // convex, counter-clockwise
  Rgb color{};
};

// Signed distance (negative inside), exact for polygons and approximate for
// ellipses.
double signed_distance(const Shape& s, double x, double y) {
  if (s.ellipse) {
    const double ca = std::cos(s.angle);
    const double sa = std::sin(s.angle);
    const double dx = x - s.cx;
    const double dy = y - s.cy;
    const double u = (ca * dx + sa * dy) / s.rx;
    const double v = (-sa * dx + ca * dy) / s.ry;
    return (std::sqrt(u * u + v * v) - 1.0) * std::min(s.rx, s.ry);
  }
  double d = -1e300;
  const std::size_t n = s.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = s.vertices[i];
    const auto& b = s.vertices[(i + 1) % n];
    const double ex = b[0] - a[0];
    const double ey = b[1] - a[1];
    const double len = std::hypot(ex, ey);
    // Outward normal of a counter-clockwise polygon in image coordinates.
    const double nx = ey / len;
    const double ny = -ex / len;
    d = std::max(d, (x - a[0]) * nx + (y - a[1]) * ny);
  }
  return d;
}

std::string stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return buf;
}

void write_raw(const fs::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("domain spec key '") + key + "' has the wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& keys, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw ConfigError(std::string("unknown key '") + key + "' in " + where);
  }
}

}  // namespace

void SceneParams::validate() const {
  if (min_shapes < 0 || max_shapes < min_shapes) throw ConfigError("shape count range invalid");
  if (texture_octaves < 0 || texture_octaves > 8) throw ConfigError("texture_octaves must be in [0, 8]");
  if (!(texture_strength >= 0.0 && texture_strength <= 0.5)) throw ConfigError("texture_strength must be in [0, 0.5]");
  if (!(edge_softness > 0.0)) throw ConfigError("edge_softness must be > 0");
  if (!palettes().count(palette)) throw ConfigError("unknown palette '" + palette + "'");
}

void HazeParams::validate() const {
  if (!(beta_min > 0.0) || beta_max < beta_min) throw ConfigError("beta range must be positive and ordered");
  for (int c = 0; c < 3; ++c) {
    const double lo = airlight_lo[static_cast<std::size_t>(c)];
    const double hi = airlight_hi[static_cast<std::size_t>(c)];
    if (!(lo >= 0.6 && hi <= 1.0 && lo <= hi)) throw ConfigError("airlight bounds must satisfy 0.6 <= lo <= hi <= 1");
  }
  if (!(airlight_jitter >= 0.0 && airlight_jitter <= 0.1)) throw ConfigError("airlight_jitter must be in [0, 0.1]");
  if (!(depth_near >= 0.0) || depth_far < depth_near) throw ConfigError("depth range invalid");
  if (field_octaves < 1 || field_octaves > 8) throw ConfigError("field_octaves must be in [1, 8]");
  if (!(field_scale >= 2.0)) throw ConfigError("field_scale must be >= 2");
  if (!(field_floor >= 0.0 && field_floor <= 1.0)) throw ConfigError("field_floor must be in [0, 1]");
}

void DomainSpec::validate() const {
  if (size < 32 || size % 32 != 0) throw ConfigError("domain image size must be a positive multiple of 32");
  if (pair_count < 0) throw ConfigError("pair_count must be >= 0");
  scene.validate();
  haze.validate();
}

nlohmann::json DomainSpec::to_json() const {
  return {{"name", name},
          {"seed", seed},
          {"size", size},
          {"pair_count", pair_count},
          {"scene",
           {{"min_shapes", scene.min_shapes},
            {"max_shapes", scene.max_shapes},
            {"texture_octaves", scene.texture_octaves},
            {"texture_strength", scene.texture_strength},
            {"edge_softness", scene.edge_softness},
            {"palette", scene.palette}}},
          {"haze",
           {{"beta_min", haze.beta_min},
            {"beta_max", haze.beta_max},
            {"airlight_lo", haze.airlight_lo},
            {"airlight_hi", haze.airlight_hi},
            {"airlight_jitter", haze.airlight_jitter},
            {"depth_near", haze.depth_near},
            {"depth_far", haze.depth_far},
            {"homogeneous", haze.homogeneous},
            {"field_octaves", haze.field_octaves},
            {"field_scale", haze.field_scale},
            {"field_floor", haze.field_floor}}}};
}

DomainSpec DomainSpec::from_json(const nlohmann::json& j) {
  reject_unknown(j, {"name", "seed", "size", "pair_count", "scene", "haze"}, "domain spec");
  DomainSpec s;
  read_key(j, "name", s.name);
  read_key(j, "seed", s.seed);
  read_key(j, "size", s.size);
  read_key(j, "pair_count", s.pair_count);
  if (j.contains("scene")) {
    const auto& sc = j.at("scene");
    reject_unknown(sc, {"min_shapes", "max_shapes", "texture_octaves", "texture_strength", "edge_softness", "palette"},
                   "scene");
    read_key(sc, "min_shapes", s.scene.min_shapes);
    read_key(sc, "max_shapes", s.scene.max_shapes);
    read_key(sc, "texture_octaves", s.scene.texture_octaves);
    read_key(sc, "texture_strength", s.scene.texture_strength);
    read_key(sc, "edge_softness", s.scene.edge_softness);
    read_key(sc, "palette", s.scene.palette);
  }
  if (j.contains("haze")) {
    const auto& hz = j.at("haze");
    reject_unknown(hz,
                   {"beta_min", "beta_max", "airlight_lo", "airlight_hi", "airlight_jitter", "depth_near", "depth_far",
                    "homogeneous", "field_octaves", "field_scale", "field_floor"},
                   "haze");
    read_key(hz, "beta_min", s.haze.beta_min);
    read_key(hz, "beta_max", s.haze.beta_max);
    read_key(hz, "airlight_lo", s.haze.airlight_lo);
    read_key(hz, "airlight_hi", s.haze.airlight_hi);
    read_key(hz, "airlight_jitter", s.haze.airlight_jitter);
    read_key(hz, "depth_near", s.haze.depth_near);
    read_key(hz, "depth_far", s.haze.depth_far);
    read_key(hz, "homogeneous", s.haze.homogeneous);
    read_key(hz, "field_octaves", s.haze.field_octaves);
    read_key(hz, "field_scale", s.haze.field_scale);
    read_key(hz, "field_floor", s.haze.field_floor);
  }
  s.validate();
  return s;
}

ImageTensor generate_clean_scene(std::uint64_t seed, int size, const SceneParams& params) {
  params.validate();
  if (size < 8 || size % 8 != 0) throw DimensionError("scene size must be a positive multiple of 8");
  const auto& colors = palettes().at(params.palette);
  Rng rng(seed);
  auto pick = [&]() { return colors[static_cast<std::size_t>(rng.below(static_cast<int>(colors.size())))]; };
  auto jitter = [&](Rgb c) {
    const double k = rng.uniform(0.75, 1.1);
    for (double& v : c) v = std::clamp(v * k, 0.0, 1.0);
    return c;
  };

  // Sky/ground background split at a soft horizon, with a horizontal tilt.
  const Rgb sky = jitter(pick());
  const Rgb ground = jitter(pick());
  const double horizon = rng.uniform(0.3, 0.6) * size;
  const double band = size / 8.0;
  const double tilt = rng.uniform(-0.15, 0.15);
  Tensor img(3, size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double a = smoothstep(horizon - band, horizon + band, y + tilt * (x - size / 2.0));
      const double shade = 1.0 - 0.25 * (static_cast<double>(y) / size - 0.5) * (a - 0.5);
      for (int c = 0; c < 3; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        img(c, y, x) = ((1.0 - a) * sky[cc] + a * ground[cc]) * shade;
      }
    }
  }

  const int count = params.min_shapes + rng.below(params.max_shapes - params.min_shapes + 1);
  for (int k = 0; k < count; ++k) {
    Shape s;
    s.ellipse = rng.uniform() < 0.5;
    s.cx = rng.uniform(0.0, size);
    s.cy = rng.uniform(0.2 * size, 1.0 * size);
    s.rx = rng.uniform(size / 12.0, size / 4.0);
    s.ry = rng.uniform(size / 12.0, size / 4.0);
    s.angle = rng.uniform(0.0, 3.14159265358979);
    s.color = jitter(pick());
    if (!s.ellipse) {
      const int n = 3 + rng.below(4);
      // Sorted angles around the centre give a convex, ordered polygon.
      std::vector<double> angles;
      for (int v = 0; v < n; ++v) angles.push_back(rng.uniform(0.0, 6.28318530717959));
      std::sort(angles.begin(), angles.end());
      const double r = 0.5 * (s.rx + s.ry);
      for (double t : angles) s.vertices.push_back({s.cx + r * std::cos(t), s.cy - r * std::sin(t)});
      if (n < 3 || r <= 0) s.ellipse = true;
    }
    const double grad = rng.uniform(-0.15, 0.15);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double d = signed_distance(s, x + 0.5, y + 0.5);
        if (d > params.edge_softness) continue;
        const double alpha = 1.0 - smoothstep(-params.edge_softness, params.edge_softness, d);
        const double shade = 1.0 + grad * (y - s.cy) / std::max(s.ry, 1.0);
        for (int c = 0; c < 3; ++c) {
          const double v = std::clamp(s.color[static_cast<std::size_t>(c)] * shade, 0.0, 1.0);
          img(c, y, x) = (1.0 - alpha) * img(c, y, x) + alpha * v;
        }
      }
    }
  }

  if (params.texture_octaves > 0 && params.texture_strength > 0.0) {
    Tensor tex = value_noise(mix_seed(seed, 0x74657874), size, params.texture_octaves, size / 8.0);
    normalise01(tex);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) img(c, y, x) *= 1.0 + params.texture_strength * (2.0 * tex(0, y, x) - 1.0);
      }
    }
  }

  img = clamp01(std::move(img));
  const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
  const double min = *lo;
  const double range = *hi - *lo;
  constexpr double kMinRange = 0.5;
  if (range < kMinRange) {
    // Stretch around the mean to a 0.6 span so contrast is never degenerate.
    const double target = 0.6;
    const double base = std::clamp(img.mean() - 0.5 * target, 0.0, 1.0 - target);
    for (double& v : img.values()) v = range > 0.0 ? base + (v - min) * target / range : base + 0.5 * target;
  }
  const auto [lo2, hi2] = std::minmax_element(img.values().begin(), img.values().end());
  if (*hi2 - *lo2 < kMinRange) throw Error("generated scene has insufficient dynamic range");
  return ImageTensor(std::move(img));
}

Tensor generate_haze_field(std::uint64_t seed, int size, int octaves, double scale) {
  if (size < 1) throw DimensionError("haze field size must be positive");
  if (octaves < 1) throw ParameterError("haze field needs at least one octave");
  if (!(scale >= 1.0)) throw ParameterError("haze field scale must be >= 1 pixel");
  Tensor field = value_noise(seed, size, octaves, scale);
  normalise01(field);
  return field;
}

Tensor generate_depth(std::uint64_t seed, int size, double near, double far) {
  Tensor noise = value_noise(seed, size, 2, size / 2.0);
  normalise01(noise);
  Tensor d(1, size, size);
  for (int y = 0; y < size; ++y) {
    const double up = std::pow(1.0 - (y + 0.5) / size, 1.2);
    for (int x = 0; x < size; ++x) {
      d(0, y, x) = std::max(0.0, near + (far - near) * up * (0.8 + 0.4 * noise(0, y, x)));
    }
  }
  return d;
}

HazeRecipe sample_recipe(std::uint64_t seed, int size, const HazeParams& params) {
  params.validate();
  Rng rng(seed);
  HazeRecipe r;
  r.beta = rng.uniform(params.beta_min, params.beta_max);
  const double u = rng.uniform();
  for (std::size_t c = 0; c < 3; ++c) {
    const double base = params.airlight_lo[c] + u * (params.airlight_hi[c] - params.airlight_lo[c]);
    r.airlight[c] = std::clamp(base + rng.uniform(-params.airlight_jitter, params.airlight_jitter), 0.0, 1.0);
  }
  r.depth = generate_depth(mix_seed(seed, 1), size, params.depth_near, params.depth_far);
  if (!params.homogeneous) {
    Tensor field = generate_haze_field(mix_seed(seed, 2), size, params.field_octaves, params.field_scale);
    for (double& v : field.values()) v = params.field_floor + (1.0 - params.field_floor) * v;
    r.haze_field = std::move(field);
  }
  r.validate();
  return r;
}

std::vector<SynthPair> generate_domain(const DomainSpec& spec) {
  spec.validate();
  std::vector<SynthPair> out;
  out.reserve(static_cast<std::size_t>(spec.pair_count));
  for (int k = 0; k < spec.pair_count; ++k) {
    const auto key = static_cast<std::uint64_t>(k);
    SynthPair p;
    p.clean = generate_clean_scene(mix_seed(spec.seed, 2 * key), spec.size, spec.scene);
    p.recipe = sample_recipe(mix_seed(spec.seed, 2 * key + 1), spec.size, spec.haze);
    p.hazy = compose_asm(p.clean, transmission_from_recipe(p.recipe), p.recipe.airlight);
    out.push_back(std::move(p));
  }
  return out;
}

void save_domain(const fs::path& root, const DomainSpec& spec, const std::vector<SynthPair>& pairs) {
  fs::create_directories(root / "hazy");
  fs::create_directories(root / "clean");
  fs::create_directories(root / "transmission");
  fs::create_directories(root / "recipes");
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const std::string s = stem(static_cast<int>(k));
    const auto& p = pairs[k];
    write_image(root / "hazy" / (s + ".png"), p.hazy);
    write_image(root / "clean" / (s + ".png"), p.clean);
    write_png(root / "transmission" / (s + ".png"), transmission_from_recipe(p.recipe).tensor(), 16);
    write_raw(root / "recipes" / (s + "_depth.f64"), p.recipe.depth);
    nlohmann::json rec = {{"beta", p.recipe.beta},
                          {"airlight", p.recipe.airlight},
                          {"height", p.recipe.depth.height()},
                          {"width", p.recipe.depth.width()},
                          {"depth", s + "_depth.f64"},
                          {"haze_field", nullptr}};
    if (p.recipe.haze_field) {
      write_raw(root / "recipes" / (s + "_field.f64"), *p.recipe.haze_field);
      rec["haze_field"] = s + "_field.f64";
    }
    write_file_atomic(root / "recipes" / (s + ".json"), rec.dump(2));
  }
  write_file_atomic(root / "domain.json", spec.to_json().dump(2));
}

HazeRecipe load_recipe(const fs::path& json_path) {
  std::ifstream is(json_path);
  if (!is) throw IoError("cannot open " + json_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed recipe " + json_path.string() + ": " + e.what());
  }
  auto read_raw = [&](const std::string& name, int h, int w) {
    const fs::path path = json_path.parent_path() / name;
    std::ifstream rs(path, std::ios::binary);
    if (!rs) throw IoError("cannot open " + path.string());
    Tensor t(1, h, w);
    rs.read(reinterpret_cast<char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (rs.gcount() != static_cast<std::streamsize>(t.size() * sizeof(double))) {
      throw IoError(path.string() + " is truncated");
    }
    return t;
  };
  try {
    HazeRecipe r;
    const int h = j.at("height").get<int>();
    const int w = j.at("width").get<int>();
    r.beta = j.at("beta").get<double>();
    r.airlight = j.at("airlight").get<Airlight>();
    r.depth = read_raw(j.at("depth").get<std::string>(), h, w);
    if (!j.at("haze_field").is_null()) r.haze_field = read_raw(j.at("haze_field").get<std::string>(), h, w);
    r.validate();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed recipe " + json_path.string() + ": " + e.what());
  }
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Tensor resize_bilinear(const Tensor& t, int height, int width) {
  Tensor out(t.channels(), height, width);
  const double sy = static_cast<double>(t.height()) / height;
  const double sx = static_cast<double>(t.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, t.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, t.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, t.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, t.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < t.channels(); ++c) {
        const double top = t(c, y0, x0) * (1 - wx) + t(c, y0, x1) * wx;
        const double bottom = t(c, y1, x0) * (1 - wx) + t(c, y1, x1) * wx;
        out(c, y, x) = top * (1 - wy) + bottom * wy;
      }
    }
  }
  return out;
}

std::vector<ImagePair> load_external_dataset(const fs::path& root, ResolutionPolicy policy, int multiple) {
  const auto hazy = list_pngs(root / "hazy");
  const auto clean = list_pngs(root / "clean");
  std::map<std::string, fs::path> hazy_by_stem;
  std::map<std::string, fs::path> clean_by_stem;
  for (const auto& p : hazy) hazy_by_stem[p.stem().string()] = p;
  for (const auto& p : clean) clean_by_stem[p.stem().string()] = p;

  std::vector<std::string> missing;
  for (const auto& [s, p] : hazy_by_stem) {
    if (!clean_by_stem.count(s)) missing.push_back("clean/" + s + ".png");
  }
  for (const auto& [s, p] : clean_by_stem) {
    if (!hazy_by_stem.count(s)) missing.push_back("hazy/" + s + ".png");
  }
  if (!missing.empty()) {
    std::string msg = "dataset " + root.string() + " lacks counterparts:";
    for (const auto& m : missing) msg += " " + m;
    throw IoError(msg);
  }

  auto conform = [&](Tensor t, const std::string& s) {
    if (t.channels() == 1) {
      Tensor rgb(3, t.height(), t.width());
      for (int c = 0; c < 3; ++c) std::copy_n(t.raw(), t.plane(), rgb.raw() + c * t.plane());
      t = std::move(rgb);
    }
    if (t.height() % multiple != 0 || t.width() % multiple != 0) {
      if (policy == ResolutionPolicy::kReject) {
        throw DimensionError("image '" + s + "' is " + std::to_string(t.height()) + "x" + std::to_string(t.width()) +
                             ", not divisible by " + std::to_string(multiple));
      }
      const int h = t.height() / multiple * multiple;
      const int w = t.width() / multiple * multiple;
      if (h == 0 || w == 0) throw DimensionError("image '" + s + "' is smaller than " + std::to_string(multiple));
      t = resize_bilinear(t, h, w);
    }
    return ImageTensor(std::move(t));
  };

  std::vector<ImagePair> out;
  for (const auto& [s, hp] : hazy_by_stem) {
    ImageTensor h = conform(read_png(hp), s);
    ImageTensor c = conform(read_png(clean_by_stem.at(s)), s);
    if (!h.tensor().same_shape(c.tensor())) throw DimensionError("pair '" + s + "' has mismatched resolutions");
    out.push_back({std::move(h), std::move(c)});
  }
  return out;
}

}  // namespace phat

#include "phat/asm.hpp"

#include <cmath>

#include "phat/errors.hpp"

namespace phat {

namespace {

void require_airlight(const Airlight& a) {
  for (double v : a) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("atmospheric light outside [0,1]");
  }
}

}  // namespace

void HazeRecipe::validate() const {
  if (depth.empty() || depth.channels() != 1) throw DimensionError("recipe depth must be 1xHxW");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("recipe beta must be > 0");
  require_airlight(airlight);
  for (double d : depth.values()) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw ParameterError("recipe depth must be >= 0");
  }
  if (haze_field) {
    require_same_shape(depth, *haze_field, "recipe haze field");
    for (double f : haze_field->values()) {
      if (!(f >= 0.0 && f <= 1.0)) throw ParameterError("haze field outside [0,1]");
    }
  }
}

ImageTensor compose_asm(const ImageTensor& clean, const TransmissionMap& t, const Airlight& airlight) {
  if (clean.height() != t.height() || clean.width() != t.width()) {
    throw DimensionError("compose_asm: image " + clean.tensor().shape_string() +
                         " vs transmission " + t.tensor().shape_string());
  }
  require_airlight(airlight);
  Tensor out(3, clean.height(), clean.width());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < clean.height(); ++y) {
      for (int x = 0; x < clean.width(); ++x) {
        const double tx = t(y, x);
        out(c, y, x) = clean(c, y, x) * tx + airlight[c] * (1.0 - tx);
      }
    }
  }
  return ImageTensor(std::move(out));
}

TransmissionMap transmission_from_recipe(const HazeRecipe& recipe) {
  recipe.validate();
  Tensor t(1, recipe.depth.height(), recipe.depth.width());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double field = recipe.haze_field ? (*recipe.haze_field)[i] : 1.0;
    t[i] = std::exp(-recipe.beta * field * recipe.depth[i]);
  }
  return TransmissionMap(std::move(t));
}

TransmissionMap gamma_adjust(const TransmissionMap& t, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be > 0");
  Tensor out = t.tensor();
  for (double& v : out.values()) v = std::pow(v, gamma);
  return TransmissionMap(std::move(out));
}

TransmissionMap flip_vertical(const TransmissionMap& t) { return TransmissionMap(flip_rows(t.tensor())); }

}  // namespace phat

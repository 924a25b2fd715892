#pragma once

#include <array>
#include <optional>

#include "phat/image.hpp"

namespace phat {

using Airlight = std::array<double, 3>;

// Ground-truth haze parameters of a synthetic image.
//
// Transmission is exp(-beta * field * depth). Without a haze field the
// recipe is the classic homogeneous scattering model; the field (values in
// [0,1]) modulates the density spatially for non-homogeneous haze.
struct HazeRecipe {
  Tensor depth;  // 1 x H x W, >= 0
  double beta = 1.0;
  Airlight airlight{1.0, 1.0, 1.0};
  std::optional<Tensor> haze_field;  // 1 x H x W, in [0,1]

  // Throws ParameterError / DimensionError on invalid contents.
  void validate() const;
};

// out(x,c) = clean(x,c) * t(x) + A(c) * (1 - t(x)), clamped to [0,1].
ImageTensor compose_asm(const ImageTensor& clean, const TransmissionMap& t, const Airlight& airlight);

TransmissionMap transmission_from_recipe(const HazeRecipe& recipe);

// t^gamma. gamma > 1 thickens haze, gamma < 1 thins it.
TransmissionMap gamma_adjust(const TransmissionMap& t, double gamma);

TransmissionMap flip_vertical(const TransmissionMap& t);

}  // namespace phat

#pragma once

#include <filesystem>

#include "phat/image.hpp"

namespace phat {

// Reads an 8- or 16-bit PNG into [0,1]. Grey images come back with one
// channel, colour images with three (alpha is dropped).
Tensor read_png(const std::filesystem::path& path);

// Writes a 1- or 3-channel tensor, clamped to [0,1], with round-to-nearest
// quantisation at `bit_depth` (8 or 16).
void write_png(const std::filesystem::path& path, const Tensor& t, int bit_depth = 8);

// read_png promoted to RGB and validated as an ImageTensor.
ImageTensor read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const ImageTensor& image, int bit_depth = 8);

}  // namespace phat

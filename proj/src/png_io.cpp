#include "phat/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "phat/errors.hpp"

namespace phat {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

Tensor read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw IoError("libpng initialisation failed");

  // Declared before setjmp so they survive a longjmp.
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  Tensor out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode " + path.string() + ": " + err);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // native little-endian 16-bit samples
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * static_cast<std::size_t>(height));
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) throw IoError(path.string() + ": unsupported channel layout");
  out = Tensor(channels, height, width);
  const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
  for (int y = 0; y < height; ++y) {
    const unsigned char* row = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t idx = static_cast<std::size_t>(x) * channels + c;
        double v = 0.0;
        if (depth == 16) {
          std::uint16_t s = 0;
          std::memcpy(&s, row + 2 * idx, 2);
          v = s;
        } else {
          v = row[idx];
        }
        out(c, y, x) = v * scale;
      }
    }
  }
  return out;
}

void write_png(const fs::path& path, const Tensor& t, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ParameterError("PNG bit depth must be 8 or 16");
  if (t.channels() != 1 && t.channels() != 3) throw DimensionError("PNG needs 1 or 3 channels, got " + t.shape_string());
  if (path.has_parent_path()) fs::create_directories(path.parent_path());

  const int channels = t.channels();
  const int bytes = bit_depth / 8;
  const std::size_t rowbytes = static_cast<std::size_t>(t.width()) * channels * bytes;
  std::vector<unsigned char> buffer(rowbytes * static_cast<std::size_t>(t.height()));
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < t.height(); ++y) {
    unsigned char* row = buffer.data() + rowbytes * static_cast<std::size_t>(y);
    for (int x = 0; x < t.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(t(c, y, x), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(v * maxv));
        const std::size_t idx = static_cast<std::size_t>(x) * channels + c;
        if (bit_depth == 16) {
          row[2 * idx] = static_cast<unsigned char>(q >> 8);  // PNG stores big-endian
          row[2 * idx + 1] = static_cast<unsigned char>(q & 0xff);
        } else {
          row[idx] = static_cast<unsigned char>(q);
        }
      }
    }
  }

  fs::path tmp = path;
  tmp += ".tmp";
  {
    FilePtr file(std::fopen(tmp.c_str(), "wb"));
    if (!file) throw IoError("cannot write " + tmp.string());
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw IoError("libpng initialisation failed");
    std::vector<png_bytep> rows(static_cast<std::size_t>(t.height()));
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw IoError("failed to encode " + path.string() + ": " + err);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(t.width()), static_cast<png_uint_32>(t.height()), bit_depth,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < t.height(); ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * static_cast<std::size_t>(y);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  fs::rename(tmp, path);
}

ImageTensor read_image(const fs::path& path) {
  Tensor t = read_png(path);
  if (t.channels() == 1) {
    Tensor rgb(3, t.height(), t.width());
    for (int c = 0; c < 3; ++c) std::copy_n(t.raw(), t.plane(), rgb.raw() + c * t.plane());
    t = std::move(rgb);
  }
  return ImageTensor(std::move(t));
}

void write_image(const fs::path& path, const ImageTensor& image, int bit_depth) {
  write_png(path, image.tensor(), bit_depth);
}

}  // namespace phat

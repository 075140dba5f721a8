#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

#include "priorslam/frame_io.hpp"

namespace priorslam {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

// Expands palettes and sub-byte gray; keeps 16-bit samples in host order.
DecodedPng decode(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw InputError("cannot open image: " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw InputError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("libpng initialisation failed");
  }
  DecodedPng out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (bit_depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
            const std::uint8_t* data, std::size_t stride) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw InputError("cannot write image: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw InputError("libpng initialisation failed");
  }
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("failed writing PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data + stride * y);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image8 read_png_rgb(const std::filesystem::path& path) {
  const DecodedPng d = decode(path);
  if (d.bit_depth != 8) throw InputError("expected 8-bit color image: " + path.string());
  Image8 img{d.width, d.height, std::vector<std::uint8_t>(static_cast<std::size_t>(d.width) * d.height * 3)};
  const std::size_t stride = d.bytes.size() / d.height;
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::uint8_t* px = d.bytes.data() + stride * y + static_cast<std::size_t>(x) * d.channels;
      std::uint8_t* dst = img.rgb.data() + (static_cast<std::size_t>(y) * d.width + x) * 3;
      if (d.channels >= 3) {
        dst[0] = px[0], dst[1] = px[1], dst[2] = px[2];
      } else {
        dst[0] = dst[1] = dst[2] = px[0];
      }
    }
  }
  return img;
}

Image16 read_png_depth(const std::filesystem::path& path) {
  const DecodedPng d = decode(path);
  if (d.bit_depth != 16 || d.channels != 1) throw InputError("expected 16-bit single-channel depth: " + path.string());
  Image16 img{d.width, d.height, std::vector<std::uint16_t>(static_cast<std::size_t>(d.width) * d.height)};
  const std::size_t stride = d.bytes.size() / d.height;
  for (int y = 0; y < d.height; ++y) {
    const auto* row = reinterpret_cast<const std::uint16_t*>(d.bytes.data() + stride * y);
    std::copy(row, row + d.width, img.values.begin() + static_cast<std::ptrdiff_t>(y) * d.width);
  }
  return img;
}

void write_png_rgb(const std::filesystem::path& path, const Image8& image) {
  encode(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, image.rgb.data(),
         static_cast<std::size_t>(image.width) * 3);
}

void write_png_depth(const std::filesystem::path& path, const Image16& image) {
  encode(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 16,
         reinterpret_cast<const std::uint8_t*>(image.values.data()), static_cast<std::size_t>(image.width) * 2);
}

}  // namespace priorslam

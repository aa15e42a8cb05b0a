#pragma once

// PNG I/O on top of libpng: 8-bit grayscale images and KITTI-style 16-bit
// depth maps (depth_m = value / 256, 0 = no depth).

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthcorr/common.hpp"
#include "depthcorr/geometry.hpp"

namespace depthcorr {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decoded PNG after palette / low-bit expansion. Samples are stored
// interleaved, widened to 16 bits, in file order.
struct RawPng {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;
  std::vector<png_byte> bytes;
  std::vector<png_bytep> rows;
};

// Everything touched after setjmp lives on the heap so a longjmp out of
// libpng leaves no indeterminate locals behind.
inline std::unique_ptr<RawPng> read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open png: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  auto raw = std::make_unique<RawPng>();
  volatile bool ok = false;  // survives a longjmp from libpng
  if (setjmp(png_jmpbuf(png)) == 0) {
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
    }
    png_read_update_info(png, info);
    raw->width = png_get_image_width(png, info);
    raw->height = png_get_image_height(png, info);
    raw->channels = png_get_channels(png, info);
    raw->bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    raw->bytes.resize(stride * raw->height);
    raw->rows.resize(raw->height);
    for (std::size_t y = 0; y < raw->height; ++y) raw->rows[y] = raw->bytes.data() + y * stride;
    png_read_image(png, raw->rows.data());
    png_read_end(png, nullptr);
    ok = true;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw std::runtime_error("failed to decode png: " + path);

  const std::size_t n = raw->width * raw->height * static_cast<std::size_t>(raw->channels);
  raw->samples.resize(n);
  if (raw->bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raw->samples[i] = static_cast<std::uint16_t>((raw->bytes[2 * i] << 8) | raw->bytes[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raw->samples[i] = raw->bytes[i];
  }
  raw->bytes.clear();
  raw->rows.clear();
  return raw;
}

inline void write_png(const std::string& path, std::size_t width, std::size_t height,
                      int bit_depth, const std::vector<std::uint16_t>& samples) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write png: " + path);
  const std::size_t stride = width * (bit_depth == 16 ? 2 : 1);
  auto bytes = std::make_unique<std::vector<png_byte>>(stride * height);
  auto rows = std::make_unique<std::vector<png_bytep>>(height);
  for (std::size_t i = 0; i < width * height; ++i) {
    if (bit_depth == 16) {
      (*bytes)[2 * i] = static_cast<png_byte>(samples[i] >> 8);
      (*bytes)[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xff);
    } else {
      (*bytes)[i] = static_cast<png_byte>(samples[i]);
    }
  }
  for (std::size_t y = 0; y < height; ++y) (*rows)[y] = bytes->data() + y * stride;

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  volatile bool ok = false;  // survives a longjmp from libpng
  if (setjmp(png_jmpbuf(png)) == 0) {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows->data());
    png_write_end(png, nullptr);
    ok = true;
  }
  png_destroy_write_struct(&png, &info);
  if (!ok) throw std::runtime_error("failed to encode png: " + path);
}

}  // namespace detail

// Any 8-bit PNG as grayscale; colour is reduced with ITU-R 601 luma.
inline GrayImage load_gray_png(const std::string& path) {
  const auto raw = detail::read_png(path);
  if (raw->bit_depth != 8) throw std::runtime_error("expected an 8-bit png: " + path);
  GrayImage img(raw->width, raw->height);
  const int c = raw->channels;
  for (std::size_t i = 0; i < raw->width * raw->height; ++i) {
    const std::uint16_t* s = raw->samples.data() + i * static_cast<std::size_t>(c);
    if (c <= 2) {
      img.data()[i] = static_cast<std::uint8_t>(s[0]);
    } else {
      const double y = 0.299 * s[0] + 0.587 * s[1] + 0.114 * s[2];
      img.data()[i] = static_cast<std::uint8_t>(std::lround(y));
    }
  }
  return img;
}

inline void save_gray_png(const std::string& path, const GrayImage& img) {
  std::vector<std::uint16_t> samples(img.data().begin(), img.data().end());
  detail::write_png(path, img.width(), img.height(), 8, samples);
}

inline Grid<std::uint16_t> load_png16(const std::string& path) {
  const auto raw = detail::read_png(path);
  if (raw->bit_depth != 16 || raw->channels != 1) {
    throw std::runtime_error("expected a 16-bit single-channel png: " + path);
  }
  Grid<std::uint16_t> g(raw->width, raw->height);
  g.data() = raw->samples;
  return g;
}

inline void save_png16(const std::string& path, const Grid<std::uint16_t>& g) {
  detail::write_png(path, g.width(), g.height(), 16, g.data());
}

constexpr double kDepthPngScale = 256.0;

// Quantises to 1/256 m. Valid depths round to at least 1 so they never
// collide with the invalid code.
inline Grid<std::uint16_t> encode_depth_png16(const DepthMap& depth) {
  Grid<std::uint16_t> g(depth.width(), depth.height(), 0);
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    if (!depth.mask()[i]) continue;
    const double q = std::round(depth.values()[i] * kDepthPngScale);
    g.data()[i] = static_cast<std::uint16_t>(q < 1.0 ? 1.0 : (q > 65535.0 ? 65535.0 : q));
  }
  return g;
}

inline DepthMap decode_depth_png16(const Grid<std::uint16_t>& g) {
  DepthMap depth(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.data()[i] == 0) continue;
    depth.values()[i] = g.data()[i] / kDepthPngScale;
    depth.mask()[i] = 1;
  }
  return depth;
}

inline DepthMap load_depth_png(const std::string& path) {
  return decode_depth_png16(load_png16(path));
}

inline void save_depth_png(const std::string& path, const DepthMap& depth) {
  save_png16(path, encode_depth_png16(depth));
}

}  // namespace depthcorr

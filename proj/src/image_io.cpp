#include "priorforge/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "priorforge/errors.hpp"

namespace pf {

uint8_t unit_to_u8(float v) {
  float scaled = (v + 1.0f) * 127.5f;
  float rounded = scaled >= 0.0f ? std::floor(scaled + 0.5f) : std::ceil(scaled - 0.5f);
  if (rounded < 0.0f) rounded = 0.0f;
  if (rounded > 255.0f) rounded = 255.0f;
  return static_cast<uint8_t>(rounded);
}

void write_png(const std::string& path, const Tensor& image) {
  check_shape(image.rank() == 3 && (image.dim(0) == 1 || image.dim(0) == 3),
              "write_png: C x H x W with C in {1,3} required");
  int C = image.dim(0), H = image.dim(1), W = image.dim(2);

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw DataError("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw DataError("libpng write failure: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
               C == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(W) * C);
  for (int h = 0; h < H; ++h) {
    for (int w = 0; w < W; ++w)
      for (int c = 0; c < C; ++c)
        row[static_cast<size_t>(w) * C + c] =
            unit_to_u8(image.data[(static_cast<int64_t>(c) * H + h) * W + w]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

Tensor read_png(const std::string& path, int channels) {
  check_shape(channels == 1 || channels == 3, "read_png: channels must be 1 or 3");
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw DataError("cannot open: " + path);
  unsigned char header[8];
  if (std::fread(header, 1, 8, fp) != 8 || png_sig_cmp(header, 0, 8)) {
    std::fclose(fp);
    throw DataError("not a PNG file: " + path);
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("libpng read failure: " + path);
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_uint_32 W = png_get_image_width(png, info), H = png_get_image_height(png, info);
  // Normalize everything to 8-bit RGB, then mix down if grayscale requested.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  std::vector<uint8_t> rgb(static_cast<size_t>(W) * H * 3);
  std::vector<png_bytep> rows(H);
  for (png_uint_32 h = 0; h < H; ++h) rows[h] = rgb.data() + static_cast<size_t>(h) * W * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  Tensor out({channels, static_cast<int>(H), static_cast<int>(W)});
  for (png_uint_32 h = 0; h < H; ++h)
    for (png_uint_32 w = 0; w < W; ++w) {
      const uint8_t* p = rgb.data() + (static_cast<size_t>(h) * W + w) * 3;
      if (channels == 3) {
        for (int c = 0; c < 3; ++c)
          out.data[(static_cast<int64_t>(c) * H + h) * W + w] = static_cast<float>(p[c]) / 255.0f;
      } else {
        float g = (0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2]) / 255.0f;
        out.data[static_cast<int64_t>(h) * W + w] = g;
      }
    }
  return out;
}

Tensor center_crop_square(const Tensor& image) {
  int C = image.dim(0), H = image.dim(1), W = image.dim(2);
  int side = std::min(H, W);
  int oh = (H - side) / 2, ow = (W - side) / 2;
  Tensor out({C, side, side});
  for (int c = 0; c < C; ++c)
    for (int h = 0; h < side; ++h)
      for (int w = 0; w < side; ++w)
        out.data[(static_cast<int64_t>(c) * side + h) * side + w] =
            image.data[(static_cast<int64_t>(c) * H + h + oh) * W + w + ow];
  return out;
}

Tensor resize_bilinear_32(const Tensor& image) {
  int C = image.dim(0), H = image.dim(1), W = image.dim(2);
  const int S = 32;
  Tensor out({C, S, S});
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        float sy = (static_cast<float>(y) + 0.5f) * H / S - 0.5f;
        float sx = (static_cast<float>(x) + 0.5f) * W / S - 0.5f;
        int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, H - 1);
        int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, W - 1);
        int y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
        float fy = std::clamp(sy - static_cast<float>(y0), 0.0f, 1.0f);
        float fx = std::clamp(sx - static_cast<float>(x0), 0.0f, 1.0f);
        auto px = [&](int yy, int xx) {
          return image.data[(static_cast<int64_t>(c) * H + yy) * W + xx];
        };
        out.data[(static_cast<int64_t>(c) * S + y) * S + x] =
            (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x1)) +
            fy * ((1 - fx) * px(y1, x0) + fx * px(y1, x1));
      }
  return out;
}

Tensor tile_grid(const Tensor& images, int rows, int cols) {
  check_shape(images.rank() == 4 && images.dim(0) == rows * cols && images.dim(2) == 32 &&
                  images.dim(3) == 32,
              "tile_grid: need rows*cols images of 32x32");
  int C = images.dim(1);
  Tensor out({C, rows * 32, cols * 32});
  for (int r = 0; r < rows; ++r)
    for (int col = 0; col < cols; ++col) {
      int n = r * cols + col;
      for (int c = 0; c < C; ++c)
        for (int h = 0; h < 32; ++h)
          std::copy_n(images.ptr() + ((static_cast<int64_t>(n) * C + c) * 32 + h) * 32, 32,
                      out.ptr() + (static_cast<int64_t>(c) * rows * 32 + r * 32 + h) *
                                      (static_cast<int64_t>(cols) * 32) +
                          static_cast<int64_t>(col) * 32);
    }
  return out;
}

}  // namespace pf

#pragma once

#include <cstdint>
#include <string>

#include "priorforge/tensor.hpp"

namespace pf {

// [-1, 1] -> [0, 255], round half away from zero.
uint8_t unit_to_u8(float v);

// image: C x H x W in [-1, 1], C in {1, 3}.
void write_png(const std::string& path, const Tensor& image);

// Returns C x H x W in [0, 1], converted to the requested channel count.
Tensor read_png(const std::string& path, int channels);

Tensor center_crop_square(const Tensor& image);
Tensor resize_bilinear_32(const Tensor& image);

// images: N x C x 32 x 32 -> C x (rows*32) x (cols*32), row-major cell
// order, pixel values copied exactly.
Tensor tile_grid(const Tensor& images, int rows, int cols);

}  // namespace pf

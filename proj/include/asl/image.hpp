// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asl/tensor.hpp"

namespace asl {

// 8-bit interleaved image; channels is 3 (RGB) or 1 (gray).
struct Image8 {
  int w = 0, h = 0, channels = 0;
  std::vector<uint8_t> pix;

  Image8() = default;
  Image8(int width, int height, int ch)
      : w(width), h(height), channels(ch),
        pix(size_t(width) * height * ch, 0) {}

  uint8_t& at(int x, int y, int c) {
    return pix[(size_t(y) * w + x) * channels + c];
  }
  uint8_t at(int x, int y, int c) const {
    return pix[(size_t(y) * w + x) * channels + c];
  }
};

Image8 read_ppm(const std::string& path);  // P6 or P5, maxval 255
void write_ppm(const std::string& path, const Image8& img);  // atomic
void write_pgm(const std::string& path, const Image8& img);  // atomic

// Planar float {C,H,W} in [0,1] <-> interleaved u8.
Tensor image_to_tensor(const Image8& img);
Image8 tensor_to_image(const Tensor& t);  // clamps to [0,1]

// Bilinear rescale (corner-aligned, same convention as the net).
Image8 resize_image(const Image8& img, int out_w, int out_h);

// 2D float grid scaled to 8-bit gray over [lo, hi].
Image8 grid_to_gray(const Tensor& grid, float lo, float hi);

}  // namespace asl

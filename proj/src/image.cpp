// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/image.hpp"

#include <algorithm>
#include <cmath>

#include "asl/io_util.hpp"
#include "asl/kernels.hpp"

namespace asl {

namespace {

// Skips PNM whitespace and '#' comments, returns the next integer token.
int pnm_int(const std::string& s, size_t* pos, const std::string& path) {
  size_t i = *pos;
  while (i < s.size()) {
    if (s[i] == '#') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (std::isspace(static_cast<unsigned char>(s[i]))) {
      ++i;
    } else {
      break;
    }
  }
  if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
    throw FormatError("pnm: bad header in " + path + " at byte " +
                      std::to_string(i));
  int v = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    v = v * 10 + (s[i] - '0');
    ++i;
  }
  *pos = i;
  return v;
}

}  // namespace

Image8 read_ppm(const std::string& path) {
  const std::string s = read_file(path);
  if (s.size() < 2 || s[0] != 'P' || (s[1] != '6' && s[1] != '5'))
    throw FormatError("pnm: " + path + " is not a P5/P6 file");
  const int channels = s[1] == '6' ? 3 : 1;
  size_t pos = 2;
  const int w = pnm_int(s, &pos, path);
  const int h = pnm_int(s, &pos, path);
  const int maxval = pnm_int(s, &pos, path);
  if (maxval != 255)
    throw FormatError("pnm: " + path + " has maxval " + std::to_string(maxval) +
                      ", only 255 is supported");
  ++pos;  // single whitespace after maxval
  const size_t need = size_t(w) * h * channels;
  if (s.size() - pos < need)
    throw FormatError("pnm: " + path + " truncated (want " +
                      std::to_string(need) + " pixel bytes, have " +
                      std::to_string(s.size() - pos) + ")");
  Image8 img(w, h, channels);
  std::copy_n(reinterpret_cast<const uint8_t*>(s.data()) + pos, need,
              img.pix.data());
  return img;
}

namespace {

void write_pnm(const std::string& path, const Image8& img, char magic) {
  std::string out = "P";
  out += magic;
  out += "\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pix.data()), img.pix.size());
  atomic_write_file(path, out);
}

}  // namespace

void write_ppm(const std::string& path, const Image8& img) {
  if (img.channels != 3) throw UsageError("write_ppm: need 3 channels");
  write_pnm(path, img, '6');
}

void write_pgm(const std::string& path, const Image8& img) {
  if (img.channels != 1) throw UsageError("write_pgm: need 1 channel");
  write_pnm(path, img, '5');
}

Tensor image_to_tensor(const Image8& img) {
  Tensor t({img.channels, img.h, img.w});
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < img.channels; ++c)
        t.at3(c, y, x) = float(img.at(x, y, c)) / 255.0f;
  return t;
}

Image8 tensor_to_image(const Tensor& t) {
  if (t.rank() != 3) throw ShapeError("tensor_to_image: want {C,H,W}");
  Image8 img(t.dim(2), t.dim(1), t.dim(0));
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const float v = std::clamp(t.at3(c, y, x), 0.0f, 1.0f);
        img.at(x, y, c) = uint8_t(std::lround(v * 255.0f));
      }
  return img;
}

Image8 resize_image(const Image8& img, int out_w, int out_h) {
  if (img.w == out_w && img.h == out_h) return img;
  Tensor t = image_to_tensor(img).reshaped({1, img.channels, img.h, img.w});
  Tensor r = kern::resize_bilinear_forward(t, out_h, out_w)
                 .reshaped({img.channels, out_h, out_w});
  return tensor_to_image(r);
}

Image8 grid_to_gray(const Tensor& grid, float lo, float hi) {
  if (grid.rank() != 2) throw ShapeError("grid_to_gray: want {H,W}");
  Image8 img(grid.dim(1), grid.dim(0), 1);
  const float span = hi - lo;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      float v = (grid.at2(y, x) - lo) / (span != 0 ? span : 1.0f);
      v = std::clamp(v, 0.0f, 1.0f);
      img.at(x, y, 0) = uint8_t(std::lround(v * 255.0f));
    }
  return img;
}

}  // namespace asl

// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// Geometry of the 360-degree spherical voice map and its alignment with
// the camera image. The map is a 180x90 cylindrical grid at 2 degrees per
// cell; cell (i,j) covers azimuth [-180 + 2i, -180 + 2i + 2) and elevation
// [-90 + 2j, -90 + 2j + 2), so its center is (-180 + (i+0.5)*2,
// -90 + (j+0.5)*2). Tensors are stored {planes, 90, 180}: rows run over
// elevation, columns over azimuth, and azimuth wraps.

#pragma once

#include <vector>

#include "asl/kernels.hpp"
#include "asl/tensor.hpp"

namespace asl {

struct Direction {
  double az = 0;  // degrees in [-180, 180)
  double el = 0;  // degrees in [-90, 90]
};

constexpr int kSphereAz = 180;  // azimuth cells
constexpr int kSphereEl = 90;   // elevation cells
constexpr double kCellDeg = 2.0;
constexpr int kPlaneActive = 0;
constexpr int kPlaneInactive = 1;

// Equi-angular pinhole approximation: pixels map linearly to angles.
// Pixel centers sit at half-integer offsets; row 0 is the top of the image
// (highest elevation).
struct CameraModel {
  double h_fov = 80.0;
  double v_fov = 45.0;
  int image_w = 640;
  int image_h = 360;

  void validate() const;
  // Continuous pixel coordinates of a direction (may fall outside image).
  double pix_u(double az, int w) const { return (az + h_fov / 2) * w / h_fov - 0.5; }
  double pix_v(double el, int h) const { return (v_fov / 2 - el) * h / v_fov - 0.5; }
  Direction dir_at(double u, double v, int w, int h) const {
    return {-h_fov / 2 + (u + 0.5) * h_fov / w,
            v_fov / 2 - (v + 0.5) * v_fov / h};
  }
  bool in_fov(const Direction& d) const {
    return d.az >= -h_fov / 2 && d.az <= h_fov / 2 && d.el >= -v_fov / 2 &&
           d.el <= v_fov / 2;
  }
};

// Two-plane (active/inactive) logit grid over the sphere.
struct SphericalVoiceMap {
  Tensor logits;  // {2, kSphereEl, kSphereAz}
  SphericalVoiceMap() : logits({2, kSphereEl, kSphereAz}) {}
  explicit SphericalVoiceMap(Tensor l) : logits(std::move(l)) {
    if (logits.dims() != std::vector<int>{2, kSphereEl, kSphereAz})
      throw ShapeError("SphericalVoiceMap: want {2,90,180}, got " +
                       logits.shape_str());
  }
};

// Two-plane logit grid in image space inside the camera FOV.
struct FovHeatMap {
  Tensor logits;  // {2, H, W}
  CameraModel camera;
};

struct HeadBox {
  int x = 0, y = 0, w = 0, h = 0;
  int person_id = -1;
  bool active = false;
};

double wrap_az(double az);                  // into [-180, 180)
int az_cell(double az);                     // column index, wraps
int el_cell(double el);                     // row index, clamps
Direction cell_center(int i_az, int j_el);

// Softmax across the two planes of a {2,H,W} logit grid.
Tensor probability(const Tensor& logits);

// One-hot sphere target: solid disks of the given cell radius around each
// active source, wrapping in azimuth.
Tensor render_gt_sphere(const std::vector<Direction>& active_sources,
                        int radius_cells = 5);

// One-hot image target: union of the active head boxes (clipped).
Tensor render_gt_fov(const std::vector<HeadBox>& boxes, int image_w,
                     int image_h);

// Output pixel (v,u) -> continuous sphere grid coordinates for the FOV
// window. Shared by the differentiable crop in the network and the plain
// crop below so both sample identically.
kern::RectMap fov_rect_map(const CameraModel& cam, int out_w, int out_h);

// Active-probability plane of `map` cropped to the camera FOV and
// upsampled to out_w x out_h. Returns {out_h, out_w}.
Tensor crop_to_fov(const SphericalVoiceMap& map, const CameraModel& cam,
                   int out_w, int out_h);

// Final 180x90 score grid in probability scale: sphere active probability
// plus the FOV active probability area-averaged into the cells the camera
// covers (zero contribution elsewhere, bit-exactly).
Tensor fuse(const SphericalVoiceMap& sphere, const FovHeatMap& fov);

// Monotone log-odds transform for fused probability-scale grids. Matches
// ln(p/(1-p)) below 0.9 and continues linearly above so values >= 1 (which
// the fused sum can reach) stay finite and strictly ordered. Zero threshold
// then means p > 0.5.
double score_from_probability(double p);
Tensor score_grid(const Tensor& fused);

struct Peak {
  Direction dir;
  float score = 0;
  int cell_az = 0;
  int cell_el = 0;
};

// Strict local maxima over a disk neighborhood (azimuth wraps), above the
// threshold, sorted by descending score.
std::vector<Peak> nms_peaks(const Tensor& scores, double threshold,
                            int radius_cells = 5);

// Great-circle angle in degrees.
double angular_distance(const Direction& a, const Direction& b);

}  // namespace asl

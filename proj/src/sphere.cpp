// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/sphere.hpp"

#include <algorithm>
#include <cmath>

namespace asl {

void CameraModel::validate() const {
  if (!(h_fov > 0 && h_fov < 360))
    throw ConfigError("camera: h_fov must be in (0, 360)");
  if (!(v_fov > 0 && v_fov < 180))
    throw ConfigError("camera: v_fov must be in (0, 180)");
  if (image_w < 1 || image_h < 1)
    throw ConfigError("camera: image size must be positive");
}

double wrap_az(double az) {
  double a = std::fmod(az + 180.0, 360.0);
  if (a < 0) a += 360.0;
  return a - 180.0;
}

int az_cell(double az) {
  int i = static_cast<int>(std::floor((wrap_az(az) + 180.0) / kCellDeg));
  if (i < 0) i = 0;
  if (i >= kSphereAz) i = kSphereAz - 1;
  return i;
}

int el_cell(double el) {
  int j = static_cast<int>(std::floor((el + 90.0) / kCellDeg));
  if (j < 0) j = 0;
  if (j >= kSphereEl) j = kSphereEl - 1;
  return j;
}

Direction cell_center(int i_az, int j_el) {
  return {-180.0 + (i_az + 0.5) * kCellDeg, -90.0 + (j_el + 0.5) * kCellDeg};
}

Tensor probability(const Tensor& logits) {
  if (logits.rank() != 3 || logits.dim(0) != 2)
    throw ShapeError("probability: want {2,H,W}, got " + logits.shape_str());
  Tensor in4 = logits.reshaped({1, 2, logits.dim(1), logits.dim(2)});
  return kern::softmax_planes_forward(in4).reshaped(logits.dims());
}

Tensor render_gt_sphere(const std::vector<Direction>& active_sources,
                        int radius_cells) {
  Tensor t({2, kSphereEl, kSphereAz});
  for (int j = 0; j < kSphereEl; ++j)
    for (int i = 0; i < kSphereAz; ++i) t.at3(kPlaneInactive, j, i) = 1.0f;
  const int r2 = radius_cells * radius_cells;
  for (const auto& s : active_sources) {
    const int ci = az_cell(s.az);
    const int cj = el_cell(s.el);
    for (int dj = -radius_cells; dj <= radius_cells; ++dj) {
      const int j = cj + dj;
      if (j < 0 || j >= kSphereEl) continue;
      for (int di = -radius_cells; di <= radius_cells; ++di) {
        if (di * di + dj * dj > r2) continue;
        const int i = ((ci + di) % kSphereAz + kSphereAz) % kSphereAz;
        t.at3(kPlaneActive, j, i) = 1.0f;
        t.at3(kPlaneInactive, j, i) = 0.0f;
      }
    }
  }
  return t;
}

Tensor render_gt_fov(const std::vector<HeadBox>& boxes, int image_w,
                     int image_h) {
  Tensor t({2, image_h, image_w});
  for (int v = 0; v < image_h; ++v)
    for (int u = 0; u < image_w; ++u) t.at3(kPlaneInactive, v, u) = 1.0f;
  for (const auto& b : boxes) {
    if (!b.active) continue;
    const int x0 = std::max(0, b.x);
    const int y0 = std::max(0, b.y);
    const int x1 = std::min(image_w, b.x + b.w);
    const int y1 = std::min(image_h, b.y + b.h);
    for (int v = y0; v < y1; ++v)
      for (int u = x0; u < x1; ++u) {
        t.at3(kPlaneActive, v, u) = 1.0f;
        t.at3(kPlaneInactive, v, u) = 0.0f;
      }
  }
  return t;
}

kern::RectMap fov_rect_map(const CameraModel& cam, int out_w, int out_h) {
  cam.validate();
  kern::RectMap m;
  // Column: continuous azimuth-cell coordinate of each output pixel center.
  m.dc = cam.h_fov / (kCellDeg * out_w);
  m.c0 = (-cam.h_fov / 2 + 0.5 * cam.h_fov / out_w + 180.0) / kCellDeg - 0.5;
  // Row: elevation decreases down the image, hence the negative step.
  m.dr = -cam.v_fov / (kCellDeg * out_h);
  m.r0 = (cam.v_fov / 2 - 0.5 * cam.v_fov / out_h + 90.0) / kCellDeg - 0.5;
  return m;
}

Tensor crop_to_fov(const SphericalVoiceMap& map, const CameraModel& cam,
                   int out_w, int out_h) {
  cam.validate();
  if (cam.h_fov > 360.0 || cam.v_fov > 180.0)
    throw ConfigError("crop_to_fov: FOV exceeds sphere bounds");
  Tensor prob = probability(map.logits);
  Tensor active({1, 1, kSphereEl, kSphereAz});
  std::copy_n(prob.data(), size_t(kSphereEl) * kSphereAz, active.data());
  Tensor out = kern::sample_rect_forward(active, fov_rect_map(cam, out_w, out_h),
                                         out_h, out_w);
  return out.reshaped({out_h, out_w});
}

Tensor fuse(const SphericalVoiceMap& sphere, const FovHeatMap& fov) {
  Tensor p_sphere = probability(sphere.logits);
  Tensor p_fov = probability(fov.logits);
  const int h = fov.logits.dim(1), w = fov.logits.dim(2);

  Tensor out({kSphereEl, kSphereAz});
  for (int j = 0; j < kSphereEl; ++j)
    for (int i = 0; i < kSphereAz; ++i)
      out.at2(j, i) = p_sphere.at3(kPlaneActive, j, i);

  // Area-average the FOV probability into the cells its pixels land in.
  Tensor sum({kSphereEl, kSphereAz});
  std::vector<int> count(size_t(kSphereEl) * kSphereAz, 0);
  const auto& cam = fov.camera;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Direction d = cam.dir_at(u, v, w, h);
      const int i = az_cell(d.az);
      const int j = el_cell(d.el);
      sum.at2(j, i) += p_fov.at3(kPlaneActive, v, u);
      ++count[size_t(j) * kSphereAz + i];
    }
  }
  for (int j = 0; j < kSphereEl; ++j)
    for (int i = 0; i < kSphereAz; ++i) {
      const int c = count[size_t(j) * kSphereAz + i];
      if (c > 0) out.at2(j, i) += sum.at2(j, i) / float(c);
    }
  return out;
}

double score_from_probability(double p) {
  constexpr double kKnee = 0.9;
  if (p <= 0) return -745.0;  // below any softmax output; keeps order
  if (p <= kKnee) return std::log(p / (1.0 - p));
  const double s0 = std::log(kKnee / (1.0 - kKnee));
  return s0 + (p - kKnee) / (kKnee * (1.0 - kKnee));
}

Tensor score_grid(const Tensor& fused) {
  Tensor out(fused.dims());
  for (int64_t i = 0; i < fused.numel(); ++i)
    out[i] = static_cast<float>(score_from_probability(double(fused[i])));
  return out;
}

std::vector<Peak> nms_peaks(const Tensor& scores, double threshold,
                            int radius_cells) {
  if (scores.dims() != std::vector<int>{kSphereEl, kSphereAz})
    throw ShapeError("nms_peaks: want {90,180} scores, got " +
                     scores.shape_str());
  if (radius_cells < 1) throw UsageError("nms_peaks: radius must be >= 1");
  // Neighborhood offsets within the disk, excluding the center.
  std::vector<std::pair<int, int>> hood;
  const int r2 = radius_cells * radius_cells;
  for (int dj = -radius_cells; dj <= radius_cells; ++dj)
    for (int di = -radius_cells; di <= radius_cells; ++di)
      if ((di || dj) && di * di + dj * dj <= r2) hood.emplace_back(di, dj);

  std::vector<Peak> peaks;
  for (int j = 0; j < kSphereEl; ++j) {
    for (int i = 0; i < kSphereAz; ++i) {
      const float v = scores.at2(j, i);
      if (!(v > threshold)) continue;
      bool is_peak = true;
      for (const auto& [di, dj] : hood) {
        const int jj = j + dj;
        if (jj < 0 || jj >= kSphereEl) continue;
        const int ii = ((i + di) % kSphereAz + kSphereAz) % kSphereAz;
        if (scores.at2(jj, ii) >= v) {
          is_peak = false;
          break;
        }
      }
      if (is_peak) peaks.push_back({cell_center(i, j), v, i, j});
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cell_az != b.cell_az) return a.cell_az < b.cell_az;
    return a.cell_el < b.cell_el;
  });
  return peaks;
}

double angular_distance(const Direction& a, const Direction& b) {
  const double az1 = deg_to_rad(a.az), el1 = deg_to_rad(a.el);
  const double az2 = deg_to_rad(b.az), el2 = deg_to_rad(b.el);
  const double x1 = std::cos(el1) * std::sin(az1), y1 = std::sin(el1),
               z1 = std::cos(el1) * std::cos(az1);
  const double x2 = std::cos(el2) * std::sin(az2), y2 = std::sin(el2),
               z2 = std::cos(el2) * std::cos(az2);
  const double dot = x1 * x2 + y1 * y2 + z1 * z2;
  const double cx = y1 * z2 - z1 * y2;
  const double cy = z1 * x2 - x1 * z2;
  const double cz = x1 * y2 - y1 * x2;
  const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  return rad_to_deg(std::atan2(cross, dot));
}

}  // namespace asl

// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace asl {

std::vector<BoxSample> box_scores(const Tensor& scores,
                                  const std::vector<HeadBox>& boxes,
                                  int frame_index, int* skipped) {
  if (scores.rank() != 2)
    throw ShapeError("box_scores: want {H,W} scores, got " +
                     scores.shape_str());
  const int h = scores.dim(0), w = scores.dim(1);
  std::vector<BoxSample> out;
  for (const auto& b : boxes) {
    const int x0 = std::max(0, b.x);
    const int y0 = std::max(0, b.y);
    const int x1 = std::min(w, b.x + b.w);
    const int y1 = std::min(h, b.y + b.h);
    if (x0 >= x1 || y0 >= y1) {
      if (skipped) ++*skipped;
      continue;
    }
    float best = scores.at2(y0, x0);
    for (int v = y0; v < y1; ++v)
      for (int u = x0; u < x1; ++u) best = std::max(best, scores.at2(v, u));
    out.push_back({frame_index, b, double(best), b.active});
  }
  return out;
}

double average_precision(const std::vector<BoxSample>& samples) {
  int positives = 0;
  for (const auto& s : samples) positives += s.positive ? 1 : 0;
  if (positives == 0)
    throw UsageError("average_precision: no positive samples");

  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return samples[a].score > samples[b].score;
  });

  std::vector<double> precision(order.size());
  std::vector<bool> is_tp(order.size());
  int tp = 0;
  for (size_t r = 0; r < order.size(); ++r) {
    if (samples[order[r]].positive) ++tp;
    is_tp[r] = samples[order[r]].positive;
    precision[r] = double(tp) / double(r + 1);
  }
  // Precision envelope from the tail, integrated at each recall step.
  double ap = 0, envelope = 0;
  for (size_t r = order.size(); r-- > 0;) {
    envelope = std::max(envelope, precision[r]);
    if (is_tp[r]) ap += envelope;
  }
  return ap / double(positives);
}

double wearer_ap(const std::vector<double>& probabilities,
                 const std::vector<bool>& labels) {
  if (probabilities.size() != labels.size())
    throw UsageError("wearer_ap: probability/label count mismatch");
  std::vector<BoxSample> samples(probabilities.size());
  for (size_t i = 0; i < probabilities.size(); ++i) {
    samples[i].frame = static_cast<int>(i);
    samples[i].score = probabilities[i];
    samples[i].positive = labels[i];
  }
  return average_precision(samples);
}

namespace {

double min_distance(const Direction& d, const std::vector<Direction>& to) {
  double best = angular_distance(d, to[0]);
  for (size_t i = 1; i < to.size(); ++i)
    best = std::min(best, angular_distance(d, to[i]));
  return best;
}

void mean_std(const std::vector<double>& v, double* mean, double* sd) {
  if (v.empty()) {
    *mean = 0;
    *sd = 0;
    return;
  }
  double m = 0;
  for (double x : v) m += x;
  m /= double(v.size());
  double var = 0;
  for (double x : v) var += (x - m) * (x - m);
  *mean = m;
  *sd = std::sqrt(var / double(v.size()));
}

}  // namespace

AngularErrorReport spherical_errors(
    const std::vector<std::vector<Direction>>& detections,
    const std::vector<std::vector<Direction>>& ground_truth) {
  if (detections.size() != ground_truth.size())
    throw UsageError("spherical_errors: frame count mismatch");
  std::vector<double> e1, e2;
  for (size_t f = 0; f < detections.size(); ++f) {
    const auto& det = detections[f];
    const auto& gt = ground_truth[f];
    if (det.empty() || gt.empty()) continue;
    double s1 = 0;
    for (const auto& d : det) s1 += min_distance(d, gt);
    e1.push_back(s1 / double(det.size()));
    double s2 = 0;
    for (const auto& g : gt) s2 += min_distance(g, det);
    e2.push_back(s2 / double(gt.size()));
  }
  AngularErrorReport rep;
  rep.frames_e1 = static_cast<int>(e1.size());
  rep.frames_e2 = static_cast<int>(e2.size());
  mean_std(e1, &rep.mean_e1, &rep.std1);
  mean_std(e2, &rep.mean_e2, &rep.std2);
  return rep;
}

std::string AngularErrorReport::to_text() const {
  std::ostringstream os;
  os << "Mean E1 " << mean_e1 << " deg (std " << std1 << ", " << frames_e1
     << " frames), Mean E2 " << mean_e2 << " deg (std " << std2 << ", "
     << frames_e2 << " frames)";
  return os.str();
}

std::string AngularErrorReport::to_csv() const {
  std::ostringstream os;
  os << "mean_e1,std1,mean_e2,std2,frames_e1,frames_e2\n";
  os << mean_e1 << "," << std1 << "," << mean_e2 << "," << std2 << ","
     << frames_e1 << "," << frames_e2 << "\n";
  return os.str();
}

}  // namespace asl

// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "asl/sphere.hpp"
#include "asl/tensor.hpp"

namespace asl {

// One scored ground-truth head box.
struct BoxSample {
  int frame = 0;
  HeadBox box;
  double score = 0;
  bool positive = false;
};

// Max score inside each ground-truth box (clipped to the image). Boxes that
// are empty after clipping are skipped; their count lands in *skipped.
std::vector<BoxSample> box_scores(const Tensor& scores,
                                  const std::vector<HeadBox>& boxes,
                                  int frame_index, int* skipped = nullptr);

// All-points average precision with the precision envelope. Ranking is a
// stable sort by descending score, so ties keep the caller's order
// (frame asc, box asc by construction). Zero positives is an error.
double average_precision(const std::vector<BoxSample>& samples);

// Same AP over per-frame wearer probabilities.
double wearer_ap(const std::vector<double>& probabilities,
                 const std::vector<bool>& labels);

struct AngularErrorReport {
  double mean_e1 = 0, std1 = 0;  // detections -> nearest ground truth
  double mean_e2 = 0, std2 = 0;  // ground truth -> nearest detection
  int frames_e1 = 0;             // frames contributing to E1
  int frames_e2 = 0;             // frames contributing to E2

  std::string to_text() const;
  std::string to_csv() const;
};

// Per frame, E1 is the mean over detections of the minimum great-circle
// distance to any ground-truth direction; E2 runs the other way. A frame
// contributes to a direction only when both point sets are non-empty.
// Means and population standard deviations run over per-frame values.
AngularErrorReport spherical_errors(
    const std::vector<std::vector<Direction>>& detections,
    const std::vector<std::vector<Direction>>& ground_truth);

}  // namespace asl

// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>

namespace asl {

// Flat run configuration. File form is `key = value` lines with '#'
// comments; CLI flags mirror the keys one to one. Unknown keys are
// rejected.
struct RunConfig {
  std::string feature = "cor+eng";  // cor|eng|spec|cor+eng
  bool use_box_mask = false;        // black out pixels outside head boxes
  int channels = 4;
  double fov_h_deg = 80.0;
  double fov_v_deg = 45.0;
  int work_w = 320;  // AV branch working resolution
  int work_h = 180;
  int epochs = 5;
  int batch = 8;
  double lr = 1e-3;
  uint64_t seed = 1;
  int nms_radius = 5;
  double nms_threshold = 0.0;

  void set(const std::string& key, const std::string& value);
  void validate() const;
  std::string to_text() const;  // key=value lines, also the checkpoint echo

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text,
                             const std::string& origin = "<text>");
};

}  // namespace asl

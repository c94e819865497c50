// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/config.hpp"

#include <sstream>

#include "asl/common.hpp"
#include "asl/features.hpp"
#include "asl/io_util.hpp"

namespace asl {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    int r = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' wants an integer, got '" + v +
                      "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' wants a number, got '" + v +
                      "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' wants a boolean, got '" + v +
                    "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "feature") {
    parse_net_feature(value);  // validates
    feature = value;
  } else if (key == "use_box_mask") {
    use_box_mask = to_bool(key, value);
  } else if (key == "channels") {
    channels = to_int(key, value);
  } else if (key == "fov_h_deg") {
    fov_h_deg = to_double(key, value);
  } else if (key == "fov_v_deg") {
    fov_v_deg = to_double(key, value);
  } else if (key == "work_w") {
    work_w = to_int(key, value);
  } else if (key == "work_h") {
    work_h = to_int(key, value);
  } else if (key == "epochs") {
    epochs = to_int(key, value);
  } else if (key == "batch") {
    batch = to_int(key, value);
  } else if (key == "lr") {
    lr = to_double(key, value);
  } else if (key == "seed") {
    seed = static_cast<uint64_t>(std::stoull(value));
  } else if (key == "nms_radius") {
    nms_radius = to_int(key, value);
  } else if (key == "nms_threshold") {
    nms_threshold = to_double(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void RunConfig::validate() const {
  parse_net_feature(feature);
  if (channels < 1) throw ConfigError("config: channels must be >= 1");
  if (!(fov_h_deg > 0 && fov_h_deg < 360))
    throw ConfigError("config: fov_h_deg must be in (0,360)");
  if (!(fov_v_deg > 0 && fov_v_deg < 180))
    throw ConfigError("config: fov_v_deg must be in (0,180)");
  if (work_w < 8 || work_h < 8)
    throw ConfigError("config: working resolution too small");
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (batch < 1) throw ConfigError("config: batch must be >= 1");
  if (!(lr > 0)) throw ConfigError("config: lr must be positive");
  if (nms_radius < 1) throw ConfigError("config: nms_radius must be >= 1");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "feature=" << feature << "\n";
  os << "use_box_mask=" << (use_box_mask ? "true" : "false") << "\n";
  os << "channels=" << channels << "\n";
  os << "fov_h_deg=" << format_double(fov_h_deg) << "\n";
  os << "fov_v_deg=" << format_double(fov_v_deg) << "\n";
  os << "work_w=" << work_w << "\n";
  os << "work_h=" << work_h << "\n";
  os << "epochs=" << epochs << "\n";
  os << "batch=" << batch << "\n";
  os << "lr=" << format_double(lr) << "\n";
  os << "seed=" << seed << "\n";
  os << "nms_radius=" << nms_radius << "\n";
  os << "nms_threshold=" << format_double(nms_threshold) << "\n";
  return os.str();
}

RunConfig RunConfig::from_text(const std::string& text,
                               const std::string& origin) {
  RunConfig cfg;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + origin + ":" + std::to_string(line_no) +
                        ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  return from_text(read_file(path), path);
}

}  // namespace asl

// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "asl/image.hpp"
#include "asl/io_util.hpp"

namespace asl {

using nlohmann::json;

std::vector<FrameLabel> read_labels(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<FrameLabel> out;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  int last_frame = -1;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("labels: " + path + ":" + std::to_string(line_no) +
                        ": " + e.what());
    }
    FrameLabel fl;
    fl.frame = j.at("frame").get<int>();
    if (fl.frame <= last_frame)
      throw FormatError("labels: " + path + ":" + std::to_string(line_no) +
                        ": frame " + std::to_string(fl.frame) +
                        " is not strictly increasing");
    last_frame = fl.frame;
    for (const auto& b : j.at("boxes")) {
      HeadBox hb;
      hb.x = b.at("x").get<int>();
      hb.y = b.at("y").get<int>();
      hb.w = b.at("w").get<int>();
      hb.h = b.at("h").get<int>();
      hb.person_id = b.at("person_id").get<int>();
      hb.active = b.at("active").get<bool>();
      fl.boxes.push_back(hb);
    }
    for (const auto& s : j.at("sources")) {
      FrameSourceLabel sl;
      sl.az = s.at("az").get<double>();
      sl.el = s.at("el").get<double>();
      sl.active = s.at("active").get<bool>();
      fl.sources.push_back(sl);
    }
    fl.wearer_active = j.at("wearer_active").get<bool>();
    out.push_back(std::move(fl));
  }
  return out;
}

void write_labels(const std::string& path,
                  const std::vector<FrameLabel>& labels) {
  std::string out;
  for (const auto& fl : labels) {
    json j;
    j["frame"] = fl.frame;
    json boxes = json::array();
    for (const auto& b : fl.boxes)
      boxes.push_back({{"x", b.x},
                       {"y", b.y},
                       {"w", b.w},
                       {"h", b.h},
                       {"person_id", b.person_id},
                       {"active", b.active}});
    j["boxes"] = boxes;
    json sources = json::array();
    for (const auto& s : fl.sources)
      sources.push_back({{"az", s.az}, {"el", s.el}, {"active", s.active}});
    j["sources"] = sources;
    j["wearer_active"] = fl.wearer_active;
    out += j.dump();
    out += '\n';
  }
  atomic_write_file(path, out);
}

DatasetMeta read_meta(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError("meta: " + path + ": " + e.what());
  }
  DatasetMeta m;
  m.sample_rate = j.at("sample_rate").get<int>();
  m.fps = j.at("fps").get<int>();
  m.channels = j.at("channels").get<int>();
  m.image_w = j.at("image_w").get<int>();
  m.image_h = j.at("image_h").get<int>();
  m.fov_h = j.at("fov_h").get<double>();
  m.fov_v = j.at("fov_v").get<double>();
  m.frames = j.at("frames").get<int>();
  return m;
}

void write_meta(const std::string& path, const DatasetMeta& meta) {
  json j;
  j["sample_rate"] = meta.sample_rate;
  j["fps"] = meta.fps;
  j["channels"] = meta.channels;
  j["image_w"] = meta.image_w;
  j["image_h"] = meta.image_h;
  j["fov_h"] = meta.fov_h;
  j["fov_v"] = meta.fov_v;
  j["frames"] = meta.frames;
  atomic_write_file(path, j.dump(2) + "\n");
}

std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.ppm", index);
  return buf;
}

Dataset Dataset::load(const std::string& dir) {
  Dataset d;
  d.dir = dir;
  d.meta = read_meta(dir + "/meta.json");
  d.audio = read_wav(dir + "/audio.wav");
  d.labels = read_labels(dir + "/labels.jsonl");
  if (d.audio.channel_count() != d.meta.channels)
    throw FormatError("dataset: audio has " +
                      std::to_string(d.audio.channel_count()) +
                      " channels, meta says " +
                      std::to_string(d.meta.channels));
  const int64_t need =
      int64_t(d.meta.frames) * d.meta.samples_per_frame();
  if (d.audio.length() < need)
    throw FormatError("dataset: audio too short (" +
                      std::to_string(d.audio.length()) + " samples, need " +
                      std::to_string(need) + ")");
  return d;
}

std::string Dataset::frame_path(int index) const {
  return dir + "/frames/" + frame_filename(index);
}

Image8 Dataset::frame(int index) const { return read_ppm(frame_path(index)); }

AudioSegment Dataset::segment(int frame, const FeatureConfig& cfg) const {
  const int spf = meta.samples_per_frame();
  const int64_t n = int64_t(frame + 1) * spf - 1;
  const int back =
      std::max(cfg.correlation_window + cfg.max_lag, spf - 1);
  const int fwd = cfg.max_lag;
  AudioSegment seg;
  seg.sample_rate = meta.sample_rate;
  seg.frame_timestamp = double(n) / meta.sample_rate;
  seg.ref = back;
  seg.samples.resize(size_t(audio.channel_count()));
  const int64_t len = audio.length();
  for (int c = 0; c < audio.channel_count(); ++c) {
    auto& dst = seg.samples[size_t(c)];
    dst.assign(size_t(back + fwd + 1), 0.0f);
    const auto& src = audio.channels[size_t(c)];
    for (int64_t i = n - back; i <= n + fwd; ++i)
      if (i >= 0 && i < len) dst[size_t(i - (n - back))] = src[size_t(i)];
  }
  return seg;
}

}  // namespace asl

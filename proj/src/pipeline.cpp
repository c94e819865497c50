// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "asl/io_util.hpp"
#include "asl/kernels.hpp"

namespace asl {

void write_grid_csv(const std::string& path, const Tensor& grid) {
  if (grid.rank() != 2) throw ShapeError("grid csv: want {H,W}");
  std::string out;
  out.reserve(size_t(grid.numel()) * 10);
  for (int y = 0; y < grid.dim(0); ++y) {
    for (int x = 0; x < grid.dim(1); ++x) {
      if (x) out += ',';
      out += format_double(double(grid.at2(y, x)));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

Tensor read_grid_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<float> values;
  int cols = -1, col = 0, rows = 0;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    char* next = nullptr;
    const float v = std::strtof(p, &next);
    if (next == p)
      throw FormatError("grid csv: parse error in " + path + " at byte " +
                        std::to_string(p - text.data()));
    values.push_back(v);
    ++col;
    p = next;
    if (p < end && *p == ',') {
      ++p;
    } else if (p<end && *p == '\n') {
      ++p;
      if (cols < 0) cols = col;
      else if (col != cols)
        throw FormatError("grid csv: ragged rows in " + path);
      col = 0;
      ++rows;
    }
  }
  if (col != 0) throw FormatError("grid csv: missing trailing newline in " + path);
  if (rows == 0 || cols <= 0) throw FormatError("grid csv: empty file " + path);
  return Tensor({rows, cols}, std::move(values));
}

namespace {

std::string index_name(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%06d.%s", stem, index, ext);
  return buf;
}

}  // namespace

void run_inference(const Dataset& dataset, const Model& model,
                   const std::string& out_dir, int limit,
                   const std::function<void(int, int)>& progress) {
  ensure_dir(out_dir);
  ensure_dir(out_dir + "/sphere");
  ensure_dir(out_dir + "/fov");
  const FeatureConfig fcfg = model.feature_config();
  const int n = limit < 0 ? int(dataset.labels.size())
                          : std::min<int>(limit, int(dataset.labels.size()));
  std::string wearer_csv = "frame,probability\n";
  for (int i = 0; i < n; ++i) {
    const auto& label = dataset.labels[size_t(i)];
    const AudioSegment seg = dataset.segment(label.frame, fcfg);
    const AudioFeatureMap feat = extract_features(seg, fcfg, model.feature);
    const Image8 frame = dataset.frame(label.frame);
    const ForwardResult out =
        full_forward(model, feat, frame, &label.boxes);

    write_grid_csv(out_dir + "/sphere/" + index_name("sphere", label.frame, "csv"),
                   out.fused);
    const Tensor score = fov_score_map(model, out);
    write_grid_csv(out_dir + "/fov/" + index_name("fovscore", label.frame, "csv"),
                   score);
    write_pgm(out_dir + "/fov/" + index_name("fov", label.frame, "pgm"),
              grid_to_gray(score, 0.0f, 2.0f));
    wearer_csv += std::to_string(label.frame) + "," +
                  format_double(out.wearer_probability) + "\n";
    if (progress) progress(i + 1, n);
  }
  atomic_write_file(out_dir + "/wearer.csv", wearer_csv);
}

namespace {

std::vector<std::pair<int, double>> read_wearer_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::pair<int, double>> out;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError("wearer.csv: bad line '" + line + "'");
    out.emplace_back(std::stoi(line.substr(0, comma)),
                     std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace

EvalResult run_eval(const Dataset& dataset, const std::string& infer_dir,
                    const RunConfig& cfg) {
  const auto wearer_rows = read_wearer_csv(infer_dir + "/wearer.csv");
  if (wearer_rows.empty()) throw UsageError("eval: no inferred frames");

  std::vector<std::vector<Direction>> detections, gts;
  std::vector<BoxSample> box_samples;
  std::vector<double> wearer_probs;
  std::vector<bool> wearer_labels;
  int skipped = 0;

  for (const auto& [frame, prob] : wearer_rows) {
    const auto it =
        std::find_if(dataset.labels.begin(), dataset.labels.end(),
                     [f = frame](const FrameLabel& l) { return l.frame == f; });
    if (it == dataset.labels.end())
      throw UsageError("eval: inferred frame " + std::to_string(frame) +
                       " missing from labels");
    const FrameLabel& label = *it;

    const Tensor fused =
        read_grid_csv(infer_dir + "/sphere/" + index_name("sphere", frame, "csv"));
    const auto peaks =
        nms_peaks(score_grid(fused), cfg.nms_threshold, cfg.nms_radius);
    std::vector<Direction> det;
    for (const auto& p : peaks) det.push_back(p.dir);
    detections.push_back(std::move(det));
    gts.push_back(label.active_directions());

    if (!label.boxes.empty()) {
      Tensor score = read_grid_csv(
          infer_dir + "/fov/" + index_name("fovscore", frame, "csv"));
      // Scores are upsampled to the ground-truth image resolution.
      Tensor up = kern::resize_bilinear_forward(
                      score.reshaped({1, 1, score.dim(0), score.dim(1)}),
                      dataset.meta.image_h, dataset.meta.image_w)
                      .reshaped({dataset.meta.image_h, dataset.meta.image_w});
      auto samples = box_scores(up, label.boxes, frame, &skipped);
      box_samples.insert(box_samples.end(), samples.begin(), samples.end());
    }
    wearer_probs.push_back(prob);
    wearer_labels.push_back(label.wearer_active);
  }
  if (skipped > 0)
    std::fprintf(stderr, "eval: warning: %d boxes empty after clipping\n",
                 skipped);

  EvalResult r;
  r.frames = int(wearer_rows.size());
  r.boxes_scored = int(box_samples.size());
  r.asl_ap = average_precision(box_samples);
  r.angular = spherical_errors(detections, gts);
  r.wearer_ap = wearer_ap(wearer_probs, wearer_labels);
  return r;
}

std::string EvalResult::to_text() const {
  std::ostringstream os;
  os << "frames evaluated:  " << frames << "\n";
  os << "in-FOV ASL AP:     " << asl_ap << "  (" << boxes_scored
     << " ground-truth boxes)\n";
  os << "angular errors:    " << angular.to_text() << "\n";
  os << "wearer voice AP:   " << wearer_ap << "\n";
  return os.str();
}

std::string EvalResult::to_csv() const {
  std::ostringstream os;
  os << "asl_ap,mean_e1,std1,mean_e2,std2,wearer_ap,frames,boxes\n";
  os << asl_ap << "," << angular.mean_e1 << "," << angular.std1 << ","
     << angular.mean_e2 << "," << angular.std2 << "," << wearer_ap << ","
     << frames << "," << boxes_scored << "\n";
  return os.str();
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

}  // namespace

BenchResult run_bench(const Dataset& dataset, const Model& model,
                      int n_frames) {
  if (n_frames <= 0) throw UsageError("bench: need at least one frame");
  if (dataset.labels.empty()) throw UsageError("bench: empty dataset");
  const FeatureConfig fcfg = model.feature_config();
  const int avail = int(dataset.labels.size());

  // Preload frames so disk I/O stays out of the measurement.
  const int distinct = std::min(n_frames, avail);
  std::vector<Image8> frames(size_t(distinct));
  for (int i = 0; i < distinct; ++i) frames[size_t(i)] = dataset.frame(i);

  std::vector<double> t_feat, t_audio, t_av, t_fuse;
  const int warmup = 2;
  for (int k = 0; k < n_frames + warmup; ++k) {
    const int i = k % distinct;
    const bool timed = k >= warmup;
    WallTimer t;
    const AudioSegment seg = dataset.segment(i, fcfg);
    const AudioFeatureMap feat = extract_features(seg, fcfg, model.feature);
    if (timed) t_feat.push_back(t.seconds() * 1e3);

    nn::NoGradGuard no_grad;
    t.reset();
    nn::Var fx = nn::constant(feat.planes.reshaped(
        {1, feat.plane_count(), feat.height(), feat.width()}));
    nn::Var extracted = model.audio->extract(fx);
    nn::Var sphere = model.audio->sphere_logits(extracted);
    nn::Var wearer = model.audio->wearer_logits(extracted);
    (void)wearer;
    if (timed) t_audio.push_back(t.seconds() * 1e3);

    t.reset();
    Image8 small = resize_image(frames[size_t(i)], model.run.work_w,
                                model.run.work_h);
    nn::Var fr = nn::constant(image_to_tensor(small).reshaped(
        {1, 3, model.run.work_h, model.run.work_w}));
    nn::Var x4 = av_input(sphere, fr, model.camera, model.run.work_w,
                          model.run.work_h);
    nn::Var fov = model.av->forward(x4, model.run.work_h, model.run.work_w);
    if (timed) t_av.push_back(t.seconds() * 1e3);

    t.reset();
    SphericalVoiceMap smap(
        sphere->value.reshaped({2, kSphereEl, kSphereAz}));
    FovHeatMap fmap{fov->value.reshaped({2, model.run.work_h, model.run.work_w}),
                    model.camera};
    const Tensor fused = fuse(smap, fmap);
    (void)fused;
    if (timed) t_fuse.push_back(t.seconds() * 1e3);
  }

  BenchResult r;
  r.frames = n_frames;
  r.ms_features = mean(t_feat);
  r.ms_audio = mean(t_audio);
  r.ms_av = mean(t_av);
  r.ms_fuse = mean(t_fuse);
  r.ms_features_med = median(t_feat);
  r.ms_audio_med = median(t_audio);
  r.ms_av_med = median(t_av);
  r.ms_fuse_med = median(t_fuse);
  const double total_ms = r.ms_features + r.ms_audio + r.ms_av + r.ms_fuse;
  r.fps_end_to_end = total_ms > 0 ? 1e3 / total_ms : 0;
  r.fps_features_only = r.ms_features > 0 ? 1e3 / r.ms_features : 0;
  return r;
}

std::string BenchResult::to_text() const {
  std::ostringstream os;
  os << "frames timed:      " << frames << "\n";
  os << "end-to-end:        " << fps_end_to_end << " fps\n";
  os << "features only:     " << fps_features_only << " fps\n";
  os << "per stage (mean/median ms):\n";
  os << "  features       " << ms_features << " / " << ms_features_med << "\n";
  os << "  audio_forward  " << ms_audio << " / " << ms_audio_med << "\n";
  os << "  av_forward     " << ms_av << " / " << ms_av_med << "\n";
  os << "  fuse           " << ms_fuse << " / " << ms_fuse_med << "\n";
  return os.str();
}

void dump_features(const Dataset& dataset, const RunConfig& cfg,
                   const std::string& out_dir, int limit) {
  ensure_dir(out_dir);
  const NetFeature which = parse_net_feature(cfg.feature);
  FeatureConfig fcfg;
  const int n = limit < 0 ? int(dataset.labels.size())
                          : std::min<int>(limit, int(dataset.labels.size()));
  for (int i = 0; i < n; ++i) {
    const auto& label = dataset.labels[size_t(i)];
    const AudioSegment seg = dataset.segment(label.frame, fcfg);
    const AudioFeatureMap feat = extract_features(seg, fcfg, which);
    for (int p = 0; p < feat.plane_count(); ++p) {
      Tensor plane({feat.height(), feat.width()});
      std::copy_n(feat.planes.data() + int64_t(p) * plane.numel(),
                  plane.numel(), plane.data());
      float lo = plane[0], hi = plane[0];
      for (int64_t k = 0; k < plane.numel(); ++k) {
        lo = std::min(lo, plane[k]);
        hi = std::max(hi, plane[k]);
      }
      if (feat.kind == FeatureMapKind::kCorrelation) {
        lo = -1;
        hi = 1;
      }
      const std::string name =
          feat.plane_count() == 1
              ? index_name("feat", label.frame, "pgm")
              : index_name(("feat_p" + std::to_string(p)).c_str(),
                           label.frame, "pgm");
      write_pgm(out_dir + "/" + name, grid_to_gray(plane, lo, hi));
    }
  }
}

void render_overlays(const Dataset& dataset, const std::string& infer_dir,
                     const std::string& out_dir, int limit) {
  ensure_dir(out_dir);
  const auto wearer_rows = read_wearer_csv(infer_dir + "/wearer.csv");
  const int n = limit < 0 ? int(wearer_rows.size())
                          : std::min<int>(limit, int(wearer_rows.size()));
  for (int k = 0; k < n; ++k) {
    const int frame = wearer_rows[size_t(k)].first;
    const auto it =
        std::find_if(dataset.labels.begin(), dataset.labels.end(),
                     [frame](const FrameLabel& l) { return l.frame == frame; });
    if (it == dataset.labels.end()) continue;

    // Camera image with the score map in the red channel.
    Image8 img = dataset.frame(frame);
    Tensor score = read_grid_csv(infer_dir + "/fov/" +
                                 index_name("fovscore", frame, "csv"));
    Tensor up = kern::resize_bilinear_forward(
                    score.reshaped({1, 1, score.dim(0), score.dim(1)}),
                    img.h, img.w)
                    .reshaped({img.h, img.w});
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        const float v = std::clamp(up.at2(y, x) * 0.5f, 0.0f, 1.0f);
        img.at(x, y, 0) =
            uint8_t(std::max<int>(img.at(x, y, 0), int(v * 255)));
      }
    for (const auto& b : it->boxes) {
      const uint8_t g = b.active ? 255 : 120;
      for (int x = std::max(0, b.x); x < std::min(img.w, b.x + b.w); ++x) {
        for (int yy : {b.y, b.y + b.h - 1})
          if (yy >= 0 && yy < img.h) {
            img.at(x, yy, 1) = g;
            img.at(x, yy, 2) = b.active ? 0 : 120;
          }
      }
      for (int y = std::max(0, b.y); y < std::min(img.h, b.y + b.h); ++y) {
        for (int xx : {b.x, b.x + b.w - 1})
          if (xx >= 0 && xx < img.w) {
            img.at(xx, y, 1) = g;
            img.at(xx, y, 2) = b.active ? 0 : 120;
          }
      }
    }
    write_ppm(out_dir + "/" + index_name("overlay", frame, "ppm"), img);

    // Fused sphere map (x4) with ground-truth directions in blue.
    const Tensor fused = read_grid_csv(infer_dir + "/sphere/" +
                                       index_name("sphere", frame, "csv"));
    const int scale = 4;
    Image8 smap(kSphereAz * scale, kSphereEl * scale, 3);
    for (int y = 0; y < smap.h; ++y)
      for (int x = 0; x < smap.w; ++x) {
        // Row 0 at the top = highest elevation.
        const int j = kSphereEl - 1 - y / scale;
        const int i = x / scale;
        const float v = std::clamp(fused.at2(j, i) * 0.5f, 0.0f, 1.0f);
        smap.at(x, y, 0) = uint8_t(v * 255);
      }
    for (const auto& d : it->active_directions()) {
      const int i = az_cell(d.az), j = el_cell(d.el);
      const int cx = i * scale + scale / 2;
      const int cy = (kSphereEl - 1 - j) * scale + scale / 2;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const int x = cx + dx, y = cy + dy;
          if (x >= 0 && x < smap.w && y >= 0 && y < smap.h)
            smap.at(x, y, 2) = 255;
        }
    }
    write_ppm(out_dir + "/" + index_name("sphere", frame, "ppm"), smap);
  }
}

}  // namespace asl

// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/sim.hpp"

#include <algorithm>
#include <cmath>

#include "asl/io_util.hpp"

namespace asl::sim {

MicArrayGeometry MicArrayGeometry::glasses_default() {
  MicArrayGeometry g;
  g.positions = {{0.07, 0.00, 0.02},
                 {-0.07, 0.00, 0.02},
                 {0.08, -0.01, -0.06},
                 {-0.08, -0.01, -0.06}};
  return g;
}

namespace {

double norm3(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

Vec3 sub3(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

}  // namespace

void MicArrayGeometry::validate() const {
  if (positions.empty()) throw ConfigError("mic array: no microphones");
  for (size_t i = 0; i < positions.size(); ++i)
    for (size_t j = i + 1; j < positions.size(); ++j) {
      const double d = norm3(sub3(positions[i], positions[j]));
      if (d <= 0) throw ConfigError("mic array: coincident microphones");
      if (d >= 0.5) throw ConfigError("mic array: aperture must be < 0.5 m");
    }
}

bool schedule_active(const Schedule& s, double t) {
  for (const auto& iv : s)
    if (t >= iv.begin && t < iv.end) return true;
  return false;
}

void SceneSpec::validate() const {
  geometry.validate();
  camera.validate();
  if (frames < 1) throw ConfigError("scene: frames must be >= 1");
  if (fps < 1) throw ConfigError("scene: fps must be >= 1");
  if (sample_rate % fps != 0)
    throw ConfigError("scene: sample_rate must be a multiple of fps");
  for (const auto& s : sources)
    if (s.distance < 0.1)
      throw ConfigError("scene: source distance must be >= 0.1 m");
}

Direction vec_to_direction(const Vec3& v) {
  const double r = norm3(v);
  if (r <= 0) return {0, 0};
  const double el = rad_to_deg(std::asin(std::clamp(v[1] / r, -1.0, 1.0)));
  const double az = rad_to_deg(std::atan2(v[0], v[2]));
  return {wrap_az(az), el};
}

Vec3 direction_to_vec(const Direction& d, double distance) {
  const double az = deg_to_rad(d.az), el = deg_to_rad(d.el);
  return {distance * std::cos(el) * std::sin(az), distance * std::sin(el),
          distance * std::cos(el) * std::cos(az)};
}

Scene::Scene(SceneSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int f = spec_.frames;
  yaw_.assign(size_t(f) + 1, 0.0);
  pitch_.assign(size_t(f) + 1, 0.0);
  if (spec_.head_motion.enabled) {
    Rng rng = Rng(spec_.seed).fork(17);
    const auto& hm = spec_.head_motion;
    auto reflect = [](double v, double lim) {
      if (v > lim) return 2 * lim - v;
      if (v < -lim) return -2 * lim - v;
      return v;
    };
    for (int i = 1; i <= f; ++i) {
      yaw_[size_t(i)] =
          reflect(yaw_[size_t(i) - 1] + rng.normal() * hm.yaw_step, hm.max_yaw);
      pitch_[size_t(i)] = reflect(
          pitch_[size_t(i) - 1] + rng.normal() * hm.pitch_step, hm.max_pitch);
    }
  }
}

Vec3 Scene::source_world(int source, double t) const {
  const auto& s = spec_.sources[size_t(source)];
  const Direction d{wrap_az(s.start_az + s.az_drift * t), s.start_el};
  return direction_to_vec(d, s.distance);
}

Vec3 Scene::world_to_device(const Vec3& w, double t_frames) const {
  double tf = std::clamp(t_frames, 0.0, double(spec_.frames));
  const int f0 = std::min(int(tf), spec_.frames - 1);
  const double a = tf - f0;
  const double yaw = deg_to_rad(yaw_[size_t(f0)] +
                                a * (yaw_[size_t(f0) + 1] - yaw_[size_t(f0)]));
  const double pitch =
      deg_to_rad(pitch_[size_t(f0)] +
                 a * (pitch_[size_t(f0) + 1] - pitch_[size_t(f0)]));
  // Device-to-world is R_y(yaw) * R_x(pitch); invert by applying the
  // transposes in reverse order.
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double x1 = cy * w[0] - sy * w[2];
  const double y1 = w[1];
  const double z1 = sy * w[0] + cy * w[2];
  return {x1, cp * y1 + sp * z1, -sp * y1 + cp * z1};
}

Direction Scene::source_direction(int source, int frame) const {
  const double t = (frame + 0.5) / spec_.fps;
  return vec_to_direction(world_to_device(source_world(source, t),
                                          frame + 0.5));
}

bool Scene::source_active(int source, int frame) const {
  return schedule_active(spec_.sources[size_t(source)].schedule,
                         (frame + 0.5) / spec_.fps);
}

bool Scene::wearer_active(int frame) const {
  return schedule_active(spec_.wearer.schedule, (frame + 0.5) / spec_.fps);
}

namespace {

// RBJ biquad, direct form I.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  static Biquad highpass(double freq, double fs) {
    const double w = 2 * kPi * freq / fs;
    const double alpha = std::sin(w) / (2 * 0.70710678);
    const double c = std::cos(w);
    const double a0 = 1 + alpha;
    return {(1 + c) / 2 / a0, -(1 + c) / a0, (1 + c) / 2 / a0,
            -2 * c / a0, (1 - alpha) / a0};
  }
  static Biquad lowpass(double freq, double fs) {
    const double w = 2 * kPi * freq / fs;
    const double alpha = std::sin(w) / (2 * 0.70710678);
    const double c = std::cos(w);
    const double a0 = 1 + alpha;
    return {(1 - c) / 2 / a0, (1 - c) / a0, (1 - c) / 2 / a0,
            -2 * c / a0, (1 - alpha) / a0};
  }
  double step(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

// Activity gate with short cosine ramps so on/off edges do not click.
double gate(const Schedule& s, double t, double ramp) {
  double g = 0;
  for (const auto& iv : s) {
    if (t < iv.begin - ramp || t >= iv.end + ramp) continue;
    double v = 1.0;
    if (t < iv.begin) v = 0.0;
    else if (t < iv.begin + ramp)
      v = 0.5 - 0.5 * std::cos(kPi * (t - iv.begin) / ramp);
    else if (t >= iv.end)
      v = 0.0;
    else if (t > iv.end - ramp)
      v = 0.5 - 0.5 * std::cos(kPi * (iv.end - t) / ramp);
    g = std::max(g, v);
  }
  return g;
}

// Speech proxy: band-limited (200-4000 Hz) noise with 4 Hz amplitude
// modulation, gated by the activity schedule.
std::vector<float> make_dry(int64_t n, int fs, const Schedule& schedule,
                            double amplitude, double am_phase, Rng rng) {
  std::vector<float> out(size_t(n), 0.0f);
  Biquad hp = Biquad::highpass(200.0, fs);
  Biquad lp = Biquad::lowpass(4000.0, fs);
  constexpr double kRamp = 0.005;
  for (int64_t i = 0; i < n; ++i) {
    const double t = double(i) / fs;
    const double g = gate(schedule, t, kRamp);
    double v = lp.step(hp.step(rng.normal()));
    if (g > 0) {
      const double am = 0.55 + 0.45 * std::sin(2 * kPi * 4.0 * t + am_phase);
      out[size_t(i)] = float(v * g * am * amplitude);
    }
    // The filters keep running through silence so resumption is seamless.
  }
  return out;
}

float sample_lerp(const std::vector<float>& s, double u) {
  if (u < 0) return 0.0f;
  const int64_t i = int64_t(u);
  if (i + 1 >= int64_t(s.size())) return 0.0f;
  const double f = u - double(i);
  return float((1 - f) * s[size_t(i)] + f * s[size_t(i) + 1]);
}

}  // namespace

WavData Scene::synthesize_audio() const {
  const int64_t n = spec_.total_samples();
  const int spf = spec_.samples_per_frame();
  const int fs = spec_.sample_rate;
  const int n_mics = int(spec_.geometry.positions.size());
  const double c = spec_.geometry.speed_of_sound;
  Rng base(spec_.seed);

  WavData wav;
  wav.sample_rate = fs;
  wav.channels.assign(size_t(n_mics), std::vector<float>(size_t(n), 0.0f));

  // Far sources: delay and gain vary with head motion; both are computed at
  // frame boundaries and interpolated per sample.
  for (int s = 0; s < int(spec_.sources.size()); ++s) {
    Rng dry_rng = base.fork(uint64_t(100 + s));
    const double am_phase = dry_rng.uniform(0, 2 * kPi);
    const std::vector<float> dry =
        make_dry(n, fs, spec_.sources[size_t(s)].schedule,
                 spec_.sources[size_t(s)].amplitude, am_phase, dry_rng);
    for (int m = 0; m < n_mics; ++m) {
      const Vec3& mic = spec_.geometry.positions[size_t(m)];
      auto& out = wav.channels[size_t(m)];
      double d0 = 0, g0 = 0;
      for (int f = 0; f <= spec_.frames; ++f) {
        const Vec3 pos = world_to_device(source_world(s, double(f) / spec_.fps),
                                         double(f));
        const double dist = norm3(sub3(pos, mic));
        if (dist < 0.01)
          throw ConfigError("scene: source " + std::to_string(s) +
                            " passes inside a microphone");
        const double d1 = dist / c * fs;  // delay in samples
        const double g1 = 1.0 / dist;
        if (f > 0) {
          const int64_t t0 = int64_t(f - 1) * spf;
          for (int k = 0; k < spf; ++k) {
            const double a = double(k) / spf;
            const double delay = d0 + a * (d1 - d0);
            const double gain = g0 + a * (g1 - g0);
            out[size_t(t0 + k)] +=
                float(gain * sample_lerp(dry, double(t0 + k) - delay));
          }
        }
        d0 = d1;
        g0 = g1;
      }
    }
  }

  // Wearer: the mouth is fixed in the device frame, so delay and gain per
  // microphone are constants.
  {
    Rng dry_rng = base.fork(999);
    const double am_phase = dry_rng.uniform(0, 2 * kPi);
    const std::vector<float> dry = make_dry(
        n, fs, spec_.wearer.schedule, spec_.wearer.amplitude, am_phase,
        dry_rng);
    for (int m = 0; m < n_mics; ++m) {
      const Vec3& mic = spec_.geometry.positions[size_t(m)];
      const double dist = norm3(sub3(spec_.wearer.mouth, mic));
      if (dist < 0.01)
        throw ConfigError("scene: wearer mouth inside a microphone");
      const double delay = dist / c * fs;
      const double gain = 1.0 / dist;
      auto& out = wav.channels[size_t(m)];
      for (int64_t t = 0; t < n; ++t)
        out[size_t(t)] += float(gain * sample_lerp(dry, double(t) - delay));
    }
  }

  // Additive white noise at the requested SNR, measured over samples where
  // anything is active.
  if (std::isfinite(spec_.snr_db)) {
    std::vector<bool> any(size_t(spec_.frames), false);
    for (int f = 0; f < spec_.frames; ++f) {
      bool a = wearer_active(f);
      for (int s = 0; !a && s < int(spec_.sources.size()); ++s)
        a = source_active(s, f);
      any[size_t(f)] = a;
    }
    for (int m = 0; m < n_mics; ++m) {
      auto& out = wav.channels[size_t(m)];
      double power = 0;
      int64_t count = 0;
      for (int f = 0; f < spec_.frames; ++f) {
        if (!any[size_t(f)]) continue;
        const int64_t t0 = int64_t(f) * spf;
        for (int k = 0; k < spf; ++k) {
          const double v = out[size_t(t0 + k)];
          power += v * v;
        }
        count += spf;
      }
      if (count == 0) continue;
      const double rms = std::sqrt(power / double(count));
      const double sigma = rms * std::pow(10.0, -spec_.snr_db / 20.0);
      Rng noise = base.fork(uint64_t(5000 + m));
      for (int64_t t = 0; t < n; ++t)
        out[size_t(t)] += float(sigma * noise.normal());
    }
  }

  // Keep every sample in [-1,1]; a global scale preserves inter-channel
  // ratios (and therefore correlations).
  float peak = 0;
  for (const auto& ch : wav.channels)
    for (float v : ch) peak = std::max(peak, std::abs(v));
  if (peak > 0.99f) {
    const float scale = 0.99f / peak;
    for (auto& ch : wav.channels)
      for (auto& v : ch) v *= scale;
  }
  return wav;
}

namespace {

struct Rgb {
  uint8_t r, g, b;
};

void fill_rect(Image8* img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  x1 = std::min(img->w, x1);
  y1 = std::min(img->h, y1);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      img->at(x, y, 0) = c.r;
      img->at(x, y, 1) = c.g;
      img->at(x, y, 2) = c.b;
    }
}

}  // namespace

Image8 Scene::render_frame(int frame, FrameLabel* label) const {
  const auto& cam = spec_.camera;
  Image8 img(cam.image_w, cam.image_h, 3);
  fill_rect(&img, 0, 0, img.w, img.h, {40, 42, 50});

  FrameLabel fl;
  fl.frame = frame;
  fl.wearer_active = wearer_active(frame);

  for (int s = 0; s < int(spec_.sources.size()); ++s) {
    const Direction dir = source_direction(s, frame);
    const bool active = source_active(s, frame);
    fl.sources.push_back({dir.az, dir.el, active});
    if (!cam.in_fov(dir)) continue;

    const double dist = spec_.sources[size_t(s)].distance;
    const double ang_w = 2.0 * rad_to_deg(std::atan2(0.11, dist));
    const int bw = std::max(4, int(std::lround(ang_w * cam.image_w / cam.h_fov)));
    const int bh = std::max(5, int(std::lround(1.35 * bw)));
    const double u = cam.pix_u(dir.az, cam.image_w);
    const double v = cam.pix_v(dir.el, cam.image_h);
    HeadBox box;
    box.x = int(std::lround(u)) - bw / 2;
    box.y = int(std::lround(v)) - bh / 2;
    box.w = bw;
    box.h = bh;
    box.person_id = s;
    box.active = active;
    fl.boxes.push_back(box);

    fill_rect(&img, box.x, box.y, box.x + bw, box.y + bh, {52, 46, 42});
    fill_rect(&img, box.x + 1, box.y + 1, box.x + bw - 1, box.y + bh - 1,
              {202, 176, 150});
    // Mouth band: the only pixels that depend on voice activity.
    const int mx0 = box.x + int(std::lround(0.14 * bw));
    const int mx1 = box.x + bw - int(std::lround(0.14 * bw));
    const int my0 = box.y + int(std::lround(0.66 * bh));
    const int my1 = box.y + int(std::lround(0.84 * bh));
    fill_rect(&img, mx0, my0, mx1, my1,
              active ? Rgb{250, 60, 48} : Rgb{98, 64, 60});
  }
  if (label) *label = std::move(fl);
  return img;
}

SceneSpec make_random_scene(const RandomSceneParams& p) {
  if (p.participants < 2)
    throw ConfigError("random scene: need at least 2 participants");
  SceneSpec spec;
  spec.frames = p.frames;
  spec.seed = p.seed;
  spec.snr_db = p.snr_db;
  spec.head_motion.enabled = p.head_motion;
  spec.camera = {p.fov_h, p.fov_v, p.image_w, p.image_h};

  Rng rng = Rng(p.seed).fork(3);
  const double duration = double(p.frames) / spec.fps;
  const int n_src = p.participants - 1;

  auto random_schedule = [&](Rng& r, double on_lo, double on_hi, double off_lo,
                             double off_hi, double first_off) {
    Schedule s;
    double t = r.uniform(0, first_off);
    while (t < duration) {
      const double on = r.uniform(on_lo, on_hi);
      double end = std::min(t + on, duration);
      if (end > t) s.push_back({t, end});
      t = end + r.uniform(off_lo, off_hi);
    }
    return s;
  };

  for (int s = 0; s < n_src; ++s) {
    SourceSpec src;
    src.start_az = rng.uniform(-180, 180);
    src.start_el = rng.uniform(p.min_el, p.max_el);
    src.az_drift = rng.uniform(-3, 3);
    src.distance = rng.uniform(p.min_dist, p.max_dist);
    src.amplitude = rng.uniform(0.2, 0.3);
    src.schedule = random_schedule(rng, 0.6, 2.2, 0.8, 3.5, 2.0);
    spec.sources.push_back(std::move(src));
  }
  spec.wearer.schedule = random_schedule(rng, 0.8, 2.0, 6.0, 14.0, 10.0);

  // Cap concurrent talkers: an interval that would start while max_active
  // are already speaking is dropped. Deterministic sweep by (time, source).
  struct Event {
    double t;
    int kind;  // 0 = end, 1 = begin
    int src, idx;
  };
  std::vector<Event> events;
  for (int s = 0; s < n_src; ++s)
    for (int i = 0; i < int(spec.sources[size_t(s)].schedule.size()); ++i) {
      const auto& iv = spec.sources[size_t(s)].schedule[size_t(i)];
      events.push_back({iv.begin, 1, s, i});
      events.push_back({iv.end, 0, s, i});
    }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.kind != b.kind) return a.kind < b.kind;  // ends before begins
    if (a.src != b.src) return a.src < b.src;
    return a.idx < b.idx;
  });
  std::vector<std::vector<bool>> keep(size_t(n_src));
  for (int s = 0; s < n_src; ++s)
    keep[size_t(s)].assign(spec.sources[size_t(s)].schedule.size(), true);
  int active = 0;
  for (const auto& e : events) {
    if (!keep[size_t(e.src)][size_t(e.idx)]) continue;
    if (e.kind == 1) {
      if (active >= p.max_active)
        keep[size_t(e.src)][size_t(e.idx)] = false;
      else
        ++active;
    } else {
      --active;
    }
  }
  for (int s = 0; s < n_src; ++s) {
    Schedule pruned;
    for (size_t i = 0; i < spec.sources[size_t(s)].schedule.size(); ++i)
      if (keep[size_t(s)][i])
        pruned.push_back(spec.sources[size_t(s)].schedule[i]);
    spec.sources[size_t(s)].schedule = std::move(pruned);
  }
  return spec;
}

void generate_dataset(const SceneSpec& spec, const std::string& out_dir) {
  Scene scene(spec);
  ensure_dir(out_dir);
  ensure_dir(out_dir + "/frames");

  write_wav_f32(out_dir + "/audio.wav", scene.synthesize_audio());

  std::vector<FrameLabel> labels;
  labels.reserve(size_t(spec.frames));
  for (int f = 0; f < spec.frames; ++f) {
    FrameLabel fl;
    const Image8 img = scene.render_frame(f, &fl);
    write_ppm(out_dir + "/frames/" + frame_filename(f), img);
    labels.push_back(std::move(fl));
  }
  write_labels(out_dir + "/labels.jsonl", labels);

  DatasetMeta meta;
  meta.sample_rate = spec.sample_rate;
  meta.fps = spec.fps;
  meta.channels = int(spec.geometry.positions.size());
  meta.image_w = spec.camera.image_w;
  meta.image_h = spec.camera.image_h;
  meta.fov_h = spec.camera.h_fov;
  meta.fov_v = spec.camera.v_fov;
  meta.frames = spec.frames;
  write_meta(out_dir + "/meta.json", meta);
}

}  // namespace asl::sim

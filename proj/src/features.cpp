// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/features.hpp"

#include <cmath>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "asl/kernels.hpp"

namespace asl {

void AudioSegment::validate() const {
  if (samples.empty()) throw ShapeError("audio segment: no channels");
  const size_t len = samples[0].size();
  for (const auto& c : samples)
    if (c.size() != len)
      throw ShapeError("audio segment: channels differ in length");
}

NetFeature parse_net_feature(const std::string& s) {
  if (s == "cor") return NetFeature::kCor;
  if (s == "eng") return NetFeature::kEng;
  if (s == "spec") return NetFeature::kSpec;
  if (s == "cor+eng") return NetFeature::kCorEng;
  throw ConfigError("unknown feature '" + s +
                    "' (expected cor|eng|spec|cor+eng)");
}

std::string net_feature_name(NetFeature f) {
  switch (f) {
    case NetFeature::kCor: return "cor";
    case NetFeature::kEng: return "eng";
    case NetFeature::kSpec: return "spec";
    case NetFeature::kCorEng: return "cor+eng";
  }
  return "?";
}

AudioSegment normalize_audio(const std::vector<std::vector<int32_t>>& raw,
                             int bit_depth, int sample_rate) {
  double denom;
  switch (bit_depth) {
    case 16: denom = 32768.0; break;
    case 24: denom = 8388608.0; break;
    default:
      throw FormatError("normalize_audio: unsupported bit depth " +
                        std::to_string(bit_depth));
  }
  AudioSegment seg;
  seg.sample_rate = sample_rate;
  seg.samples.reserve(raw.size());
  for (const auto& ch : raw) {
    std::vector<float> out(ch.size());
    for (size_t i = 0; i < ch.size(); ++i)
      out[i] = static_cast<float>(ch[i] / denom);
    seg.samples.push_back(std::move(out));
  }
  seg.ref = seg.length() - 1;
  seg.validate();
  return seg;
}

std::vector<std::pair<int, int>> channel_pairs(int channels, PairMode mode) {
  std::vector<std::pair<int, int>> pairs;
  for (int p = 0; p < channels; ++p)
    for (int q = 0; q < channels; ++q) {
      if (mode == PairMode::kUnordered ? (p < q) : (p != q))
        pairs.emplace_back(p, q);
    }
  return pairs;
}

namespace {

// Copies the window [ref - back, ref + fwd] of one channel, zero-padding
// reads outside the stored samples.
std::vector<double> padded_window(const AudioSegment& seg, int ch, int back,
                                  int fwd) {
  std::vector<double> out(static_cast<size_t>(back + fwd + 1), 0.0);
  for (int i = -back; i <= fwd; ++i)
    out[static_cast<size_t>(i + back)] = seg.at(ch, seg.ref + i);
  return out;
}

}  // namespace

std::vector<float> correlation_pair(const AudioSegment& seg,
                                    const FeatureConfig& cfg, int p, int q) {
  seg.validate();
  const int K = cfg.correlation_window;
  const int L = cfg.max_lag;
  // wp[j] = A_p(n-K+j), j=0..K ; wq[j] = A_q(n-K-L+j), j=0..K+2L
  const std::vector<double> wp = padded_window(seg, p, K, 0);
  const std::vector<double> wq = padded_window(seg, q, K + L, L);

  double sp = 0;
  for (double v : wp) sp += v * v;
  const double sqrt_sp = std::sqrt(sp);

  // Prefix sums of squares over wq give each lag's denominator in O(1).
  std::vector<double> prefix(wq.size() + 1, 0.0);
  for (size_t i = 0; i < wq.size(); ++i)
    prefix[i + 1] = prefix[i] + wq[i] * wq[i];

  std::vector<float> row(static_cast<size_t>(cfg.lag_count()));
  for (int m = -L; m <= L; ++m) {
    const double* a = wp.data();
    const double* b = wq.data() + (m + L);
    double num = 0;
    for (int j = 0; j <= K; ++j) num += a[j] * b[j];
    const double sq = prefix[static_cast<size_t>(m + L + K + 1)] -
                      prefix[static_cast<size_t>(m + L)];
    const double denom = sqrt_sp * std::sqrt(sq);
    row[static_cast<size_t>(m + L)] =
        denom < cfg.eps ? 0.0f : static_cast<float>(num / denom);
  }
  return row;
}

std::vector<double> channel_energies(const AudioSegment& seg,
                                     const FeatureConfig& cfg) {
  seg.validate();
  std::vector<double> out(static_cast<size_t>(seg.channels()));
  for (int ch = 0; ch < seg.channels(); ++ch) {
    double acc = 0;
    for (int k = 0; k <= cfg.correlation_window; ++k) {
      const double v = seg.at(ch, seg.ref - k);
      acc += v * v;
    }
    out[static_cast<size_t>(ch)] = std::sqrt(acc);
  }
  return out;
}

AudioFeatureMap cross_correlation_rows(const AudioSegment& seg,
                                       const FeatureConfig& cfg) {
  if (seg.channels() < 2)
    throw ShapeError("cross_correlation_rows: need at least 2 channels");
  const auto pairs = channel_pairs(seg.channels(), cfg.pair_mode);
  const int w = cfg.lag_count();
  AudioFeatureMap map;
  map.kind = FeatureMapKind::kCorrelation;
  map.planes = Tensor({1, static_cast<int>(pairs.size()), w});
  for (size_t r = 0; r < pairs.size(); ++r) {
    const auto row = correlation_pair(seg, cfg, pairs[r].first,
                                      pairs[r].second);
    std::copy(row.begin(), row.end(),
              map.planes.data() + r * static_cast<size_t>(w));
  }
  return map;
}

AudioFeatureMap energy_rows(const AudioSegment& seg,
                            const FeatureConfig& cfg) {
  const auto energies = channel_energies(seg, cfg);
  const int w = cfg.lag_count();
  AudioFeatureMap map;
  map.kind = FeatureMapKind::kEnergy;
  map.planes = Tensor({1, seg.channels(), w});
  for (int ch = 0; ch < seg.channels(); ++ch) {
    float* row = map.planes.data() + static_cast<size_t>(ch) * w;
    std::fill(row, row + w, static_cast<float>(energies[size_t(ch)]));
  }
  return map;
}

AudioFeatureMap resize_map(const AudioFeatureMap& map, int out_size) {
  if (out_size < 8) throw ConfigError("feature out_size must be >= 8");
  const int p = map.plane_count();
  Tensor in4 = map.planes.reshaped({1, p, map.height(), map.width()});
  Tensor out4 = kern::resize_bilinear_forward(in4, out_size, out_size);
  AudioFeatureMap out;
  out.kind = map.kind;
  out.planes = out4.reshaped({p, out_size, out_size});
  return out;
}

AudioFeatureMap cross_correlation_map(const AudioSegment& seg,
                                      const FeatureConfig& cfg) {
  return resize_map(cross_correlation_rows(seg, cfg), cfg.out_size);
}

AudioFeatureMap energy_map(const AudioSegment& seg, const FeatureConfig& cfg) {
  return resize_map(energy_rows(seg, cfg), cfg.out_size);
}

namespace {

struct DftTable {
  std::vector<double> cos_bj;  // [bin * len + j]
  std::vector<double> sin_bj;
  std::vector<double> hann;
};

const DftTable& dft_table(int len) {
  static std::mutex mu;
  static std::unordered_map<int, std::unique_ptr<DftTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[len];
  if (!slot) {
    auto t = std::make_unique<DftTable>();
    t->cos_bj.resize(static_cast<size_t>(len) * len);
    t->sin_bj.resize(static_cast<size_t>(len) * len);
    t->hann.resize(static_cast<size_t>(len));
    for (int b = 0; b < len; ++b)
      for (int j = 0; j < len; ++j) {
        const double a = 2.0 * kPi * double(b) * double(j) / double(len);
        t->cos_bj[static_cast<size_t>(b) * len + j] = std::cos(a);
        t->sin_bj[static_cast<size_t>(b) * len + j] = std::sin(a);
      }
    for (int j = 0; j < len; ++j)
      t->hann[static_cast<size_t>(j)] =
          0.5 - 0.5 * std::cos(2.0 * kPi * double(j) / double(len - 1));
    slot = std::move(t);
  }
  return *slot;
}

}  // namespace

AudioFeatureMap spectrogram_map(const AudioSegment& seg,
                                const FeatureConfig& cfg) {
  seg.validate();
  const int spf = cfg.samples_per_frame;
  const int len = cfg.dft_len;
  const int count = cfg.dft_count;
  const int hop = spf / count;
  if (hop < 1 || hop * count > spf)
    throw ConfigError("spectrogram: dft_count*hop must fit in one frame");
  if (seg.ref + 1 < spf)
    throw ShapeError("spectrogram: segment holds fewer than one frame of audio");
  const auto& table = dft_table(len);

  const int n_ch = seg.channels();
  const int frame_start = seg.ref - spf + 1;
  Tensor planes({2 * n_ch, count, len});
  std::vector<double> windowed(static_cast<size_t>(len));
  for (int ch = 0; ch < n_ch; ++ch) {
    for (int w = 0; w < count; ++w) {
      const int start = frame_start + w * hop;
      for (int j = 0; j < len; ++j) {
        const int idx = start + j;
        // Windows are zero-padded past the frame end.
        const double v = (idx <= seg.ref) ? seg.at(ch, idx) : 0.0;
        windowed[static_cast<size_t>(j)] = v * table.hann[size_t(j)];
      }
      float* re = planes.data() +
                  (size_t(2 * ch) * count + size_t(w)) * len;
      float* im = planes.data() +
                  (size_t(2 * ch + 1) * count + size_t(w)) * len;
      for (int b = 0; b < len; ++b) {
        const double* cb = table.cos_bj.data() + static_cast<size_t>(b) * len;
        const double* sb = table.sin_bj.data() + static_cast<size_t>(b) * len;
        double acc_re = 0, acc_im = 0;
        for (int j = 0; j < len; ++j) {
          acc_re += windowed[size_t(j)] * cb[j];
          acc_im -= windowed[size_t(j)] * sb[j];
        }
        re[b] = static_cast<float>(acc_re);
        im[b] = static_cast<float>(acc_im);
      }
    }
  }
  AudioFeatureMap map;
  map.kind = FeatureMapKind::kSpectrogram;
  map.planes = std::move(planes);
  return resize_map(map, cfg.out_size);
}

AudioFeatureMap stack_rows(const std::vector<AudioFeatureMap>& maps) {
  if (maps.empty()) throw UsageError("stack_rows: no inputs");
  const int w = maps[0].width();
  int rows = 0;
  for (const auto& m : maps) {
    if (m.plane_count() != 1)
      throw ShapeError("stack_rows: inputs must be single-plane row maps");
    if (m.width() != w)
      throw ShapeError("stack_rows: column count mismatch (" +
                       std::to_string(m.width()) + " vs " + std::to_string(w) +
                       ")");
    rows += m.height();
  }
  AudioFeatureMap stacked;
  stacked.kind = FeatureMapKind::kCombined;
  stacked.planes = Tensor({1, rows, w});
  float* dst = stacked.planes.data();
  for (const auto& m : maps) {
    std::copy_n(m.planes.data(), m.planes.numel(), dst);
    dst += m.planes.numel();
  }
  return stacked;
}

AudioFeatureMap combine_features(const std::vector<AudioFeatureMap>& maps,
                                 const FeatureConfig& cfg) {
  return resize_map(stack_rows(maps), cfg.out_size);
}

AudioFeatureMap extract_features(const AudioSegment& seg,
                                 const FeatureConfig& cfg, NetFeature which) {
  switch (which) {
    case NetFeature::kCor: return cross_correlation_map(seg, cfg);
    case NetFeature::kEng: return energy_map(seg, cfg);
    case NetFeature::kSpec: return spectrogram_map(seg, cfg);
    case NetFeature::kCorEng: {
      std::vector<AudioFeatureMap> parts;
      parts.push_back(cross_correlation_rows(seg, cfg));
      parts.push_back(energy_rows(seg, cfg));
      return combine_features(parts, cfg);
    }
  }
  throw UsageError("extract_features: bad feature kind");
}

}  // namespace asl

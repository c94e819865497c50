// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asl/tensor.hpp"

namespace asl {

// One multi-channel sample window aligned to a video frame. `ref` indexes
// the sample matching the frame timestamp; feature windows look backwards
// from it (and up to max_lag forwards for cross-correlation). Reads outside
// the stored window are zero, which covers the cold start at stream begin.
struct AudioSegment {
  std::vector<std::vector<float>> samples;  // [channel][sample]
  int sample_rate = 48000;
  double frame_timestamp = 0.0;
  int ref = 0;

  int channels() const { return static_cast<int>(samples.size()); }
  int length() const {
    return samples.empty() ? 0 : static_cast<int>(samples[0].size());
  }
  float at(int ch, int idx) const {
    const auto& c = samples[static_cast<size_t>(ch)];
    return (idx >= 0 && idx < static_cast<int>(c.size()))
               ? c[static_cast<size_t>(idx)]
               : 0.0f;
  }
  void validate() const;
};

enum class PairMode { kUnordered, kOrdered };

struct FeatureConfig {
  int correlation_window = 1200;  // K, samples summed per lag
  int max_lag = 50;               // L, lags run -L..L
  int out_size = 128;             // square side after resize
  int dft_count = 100;            // DFT windows per video frame
  int dft_len = 200;              // DFT length in samples
  int samples_per_frame = 2400;   // 48 kHz / 20 Hz
  PairMode pair_mode = PairMode::kUnordered;
  double eps = 1e-9;              // silent-window denominator guard

  int lag_count() const { return 2 * max_lag + 1; }
};

enum class FeatureMapKind { kCorrelation, kEnergy, kCombined, kSpectrogram };

// Stack of 2D feature planes. Row-space maps (height = feature rows) and
// resized maps (out_size x out_size) share this type.
struct AudioFeatureMap {
  Tensor planes;  // {P, H, W}
  FeatureMapKind kind = FeatureMapKind::kCorrelation;

  int plane_count() const { return planes.dim(0); }
  int height() const { return planes.dim(1); }
  int width() const { return planes.dim(2); }
};

// Which representation feeds the network.
enum class NetFeature { kCor, kEng, kSpec, kCorEng };
NetFeature parse_net_feature(const std::string& s);
std::string net_feature_name(NetFeature f);

// Integer PCM to [-1,1] floats; bit_depth must be 16 or 24.
AudioSegment normalize_audio(const std::vector<std::vector<int32_t>>& raw,
                             int bit_depth, int sample_rate = 48000);

// Channel pairs in row order for the correlation map.
std::vector<std::pair<int, int>> channel_pairs(int channels, PairMode mode);

// Normalized cross-correlation of one channel pair at lags -L..L. p == q is
// allowed as a diagnostic (normalized autocorrelation).
std::vector<float> correlation_pair(const AudioSegment& seg,
                                    const FeatureConfig& cfg, int p, int q);

// Short-time energy per channel over the trailing window.
std::vector<double> channel_energies(const AudioSegment& seg,
                                     const FeatureConfig& cfg);

// Row-space maps (pre-resize), one row per pair / channel.
AudioFeatureMap cross_correlation_rows(const AudioSegment& seg,
                                       const FeatureConfig& cfg);
AudioFeatureMap energy_rows(const AudioSegment& seg, const FeatureConfig& cfg);

// Resized single-plane maps.
AudioFeatureMap cross_correlation_map(const AudioSegment& seg,
                                      const FeatureConfig& cfg);
AudioFeatureMap energy_map(const AudioSegment& seg, const FeatureConfig& cfg);

// Hann-windowed DFT planes, real and imaginary per channel (2N planes).
AudioFeatureMap spectrogram_map(const AudioSegment& seg,
                                const FeatureConfig& cfg);

// Vertical stack of row-space maps in argument order (still row-space).
AudioFeatureMap stack_rows(const std::vector<AudioFeatureMap>& maps);

// Vertical stack of row-space maps in argument order, then resize.
AudioFeatureMap combine_features(const std::vector<AudioFeatureMap>& maps,
                                 const FeatureConfig& cfg);

// Resize any map to cfg.out_size square (corner-aligned bilinear).
AudioFeatureMap resize_map(const AudioFeatureMap& map, int out_size);

// Dispatcher producing the network input for a feature choice.
AudioFeatureMap extract_features(const AudioSegment& seg,
                                 const FeatureConfig& cfg, NetFeature which);

}  // namespace asl

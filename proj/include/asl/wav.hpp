// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

namespace asl {

// De-interleaved multichannel audio, samples in [-1,1].
struct WavData {
  int sample_rate = 48000;
  std::vector<std::vector<float>> channels;

  int channel_count() const { return static_cast<int>(channels.size()); }
  int64_t length() const {
    return channels.empty() ? 0 : static_cast<int64_t>(channels[0].size());
  }
};

// RIFF PCM 16/24-bit or IEEE float 32-bit, interleaved. Integer samples are
// normalized by the bit-depth magnitude. Malformed input raises FormatError
// with the failing byte offset.
WavData read_wav(const std::string& path);

// IEEE float 32-bit writer (atomic: temp file + rename). Float data round
// trips bit-exactly through read_wav.
void write_wav_f32(const std::string& path, const WavData& wav);

}  // namespace asl

// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "asl/common.hpp"
#include "asl/io_util.hpp"

namespace asl {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

[[noreturn]] void fail(const std::string& what, int64_t offset) {
  throw FormatError("wav: " + what + " at byte " + std::to_string(offset));
}

uint32_t u32le(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
uint16_t u16le(const uint8_t* p) { return uint16_t(p[0] | p[1] << 8); }

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("wav: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  const int64_t n = static_cast<int64_t>(bytes.size());
  if (n < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0)
    fail("missing RIFF header", 0);
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail("missing WAVE tag", 8);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  int64_t data_len = 0, data_off = 0;

  int64_t off = 12;
  while (off + 8 <= n) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + off);
    const uint32_t size = u32le(bytes.data() + off + 4);
    const int64_t body = off + 8;
    if (body + size > n)
      fail("chunk '" + std::string(id, 4) + "' claims " + std::to_string(size) +
               " bytes but only " + std::to_string(n - body) + " remain",
           off);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) fail("fmt chunk too short", off);
      const uint8_t* f = bytes.data() + body;
      format = u16le(f);
      channels = u16le(f + 2);
      rate = u32le(f + 4);
      bits = u16le(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) fail("extensible fmt chunk too short", off);
        format = u16le(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = size;
      data_off = body;
    }
    off = body + size + (size & 1);  // chunks are word-aligned
  }
  if (!have_fmt) fail("no fmt chunk", n);
  if (!data) fail("no data chunk", n);
  if (channels < 1) fail("zero channels", data_off);

  int bytes_per_sample;
  if (format == kFormatPcm && bits == 16) {
    bytes_per_sample = 2;
  } else if (format == kFormatPcm && bits == 24) {
    bytes_per_sample = 3;
  } else if (format == kFormatFloat && bits == 32) {
    bytes_per_sample = 4;
  } else {
    fail("unsupported codec (format " + std::to_string(format) + ", " +
             std::to_string(bits) + " bits)",
         data_off);
  }

  const int64_t frame_bytes = int64_t(bytes_per_sample) * channels;
  if (data_len % frame_bytes != 0)
    fail("data length " + std::to_string(data_len) +
             " is not a whole number of frames (expected a multiple of " +
             std::to_string(frame_bytes) + ")",
         data_off);
  const int64_t frames = data_len / frame_bytes;

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.channels.assign(channels, std::vector<float>(size_t(frames)));
  const uint8_t* p = data;
  for (int64_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      float v;
      if (bytes_per_sample == 2) {
        const int16_t s = int16_t(p[0] | p[1] << 8);
        v = float(s / 32768.0);
      } else if (bytes_per_sample == 3) {
        int32_t s = p[0] | p[1] << 8 | p[2] << 16;
        if (s & 0x800000) s |= ~0xFFFFFF;  // sign extend
        v = float(s / 8388608.0);
      } else {
        uint32_t u = u32le(p);
        std::memcpy(&v, &u, 4);
      }
      out.channels[size_t(c)][size_t(i)] = v;
      p += bytes_per_sample;
    }
  }
  return out;
}

void write_wav_f32(const std::string& path, const WavData& wav) {
  const int channels = wav.channel_count();
  if (channels < 1) throw UsageError("write_wav: no channels");
  const int64_t frames = wav.length();
  for (const auto& c : wav.channels)
    if (static_cast<int64_t>(c.size()) != frames)
      throw ShapeError("write_wav: channels differ in length");

  const uint32_t data_bytes = uint32_t(frames * channels * 4);
  std::string body;
  body.reserve(size_t(data_bytes) + 64);
  auto put_u32 = [&body](uint32_t v) {
    char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
    body.append(b, 4);
  };
  auto put_u16 = [&body](uint16_t v) {
    char b[2] = {char(v), char(v >> 8)};
    body.append(b, 2);
  };
  body.append("RIFF");
  put_u32(4 + 26 + 12 + 8 + data_bytes);  // WAVE + fmt(18) + fact + data
  body.append("WAVE");
  body.append("fmt ");
  put_u32(18);
  put_u16(kFormatFloat);
  put_u16(uint16_t(channels));
  put_u32(uint32_t(wav.sample_rate));
  put_u32(uint32_t(wav.sample_rate) * uint32_t(channels) * 4);
  put_u16(uint16_t(channels * 4));
  put_u16(32);
  put_u16(0);  // no extension
  body.append("fact");
  put_u32(4);
  put_u32(uint32_t(frames));
  body.append("data");
  put_u32(data_bytes);
  for (int64_t i = 0; i < frames; ++i)
    for (int c = 0; c < channels; ++c) {
      uint32_t u;
      std::memcpy(&u, &wav.channels[size_t(c)][size_t(i)], 4);
      put_u32(u);
    }
  atomic_write_file(path, body);
}

}  // namespace asl

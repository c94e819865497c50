// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// Checkpoint container: magic "ASLCKPT1", then arrays until end of file.
// Per array, all little-endian: name length (u32), name bytes, dtype code
// (u8: 0=f32, 1=f64, 2=u8, 3=i64), rank (u8), extents (u32 x rank), raw
// values. Weights, optimizer state and a config echo all ride in named
// arrays, so the format round-trips bit-exactly and diffs cleanly.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "asl/tensor.hpp"

namespace asl {

enum class CkptDtype : uint8_t { kF32 = 0, kF64 = 1, kU8 = 2, kI64 = 3 };

struct CkptArray {
  std::string name;
  CkptDtype dtype = CkptDtype::kF32;
  std::vector<int> dims;
  std::vector<uint8_t> raw;

  int64_t numel() const;
  Tensor as_f32() const;
  int64_t as_i64() const;
  std::string as_text() const;
};

class CheckpointWriter {
 public:
  void add_f32(const std::string& name, const Tensor& t);
  void add_i64(const std::string& name, int64_t v);
  void add_text(const std::string& name, const std::string& text);
  void write(const std::string& path) const;  // atomic

 private:
  std::vector<CkptArray> arrays_;
};

// Parses a checkpoint; truncated or malformed input raises FormatError
// without partial results.
std::map<std::string, CkptArray> read_checkpoint(const std::string& path);

}  // namespace asl

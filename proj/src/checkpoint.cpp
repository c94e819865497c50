// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/checkpoint.hpp"

#include <cstring>

#include "asl/io_util.hpp"

namespace asl {

namespace {

constexpr char kMagic[8] = {'A', 'S', 'L', 'C', 'K', 'P', 'T', '1'};

size_t dtype_size(CkptDtype d) {
  switch (d) {
    case CkptDtype::kF32: return 4;
    case CkptDtype::kF64: return 8;
    case CkptDtype::kU8: return 1;
    case CkptDtype::kI64: return 8;
  }
  throw FormatError("checkpoint: bad dtype code");
}

void put_u32(std::string* out, uint32_t v) {
  char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
  out->append(b, 4);
}

}  // namespace

int64_t CkptArray::numel() const {
  int64_t n = 1;
  for (int d : dims) n *= d;
  return n;
}

Tensor CkptArray::as_f32() const {
  if (dtype != CkptDtype::kF32)
    throw FormatError("checkpoint: array '" + name + "' is not f32");
  Tensor t(dims);
  std::memcpy(t.data(), raw.data(), raw.size());
  return t;
}

int64_t CkptArray::as_i64() const {
  if (dtype != CkptDtype::kI64 || raw.size() != 8)
    throw FormatError("checkpoint: array '" + name + "' is not a scalar i64");
  int64_t v;
  std::memcpy(&v, raw.data(), 8);
  return v;
}

std::string CkptArray::as_text() const {
  if (dtype != CkptDtype::kU8)
    throw FormatError("checkpoint: array '" + name + "' is not u8 text");
  return std::string(raw.begin(), raw.end());
}

void CheckpointWriter::add_f32(const std::string& name, const Tensor& t) {
  CkptArray a;
  a.name = name;
  a.dtype = CkptDtype::kF32;
  a.dims = t.dims();
  a.raw.resize(size_t(t.numel()) * 4);
  std::memcpy(a.raw.data(), t.data(), a.raw.size());
  arrays_.push_back(std::move(a));
}

void CheckpointWriter::add_i64(const std::string& name, int64_t v) {
  CkptArray a;
  a.name = name;
  a.dtype = CkptDtype::kI64;
  a.dims = {1};
  a.raw.resize(8);
  std::memcpy(a.raw.data(), &v, 8);
  arrays_.push_back(std::move(a));
}

void CheckpointWriter::add_text(const std::string& name,
                                const std::string& text) {
  CkptArray a;
  a.name = name;
  a.dtype = CkptDtype::kU8;
  a.dims = {int(text.size())};
  a.raw.assign(text.begin(), text.end());
  arrays_.push_back(std::move(a));
}

void CheckpointWriter::write(const std::string& path) const {
  std::string out(kMagic, 8);
  for (const auto& a : arrays_) {
    put_u32(&out, uint32_t(a.name.size()));
    out += a.name;
    out += char(uint8_t(a.dtype));
    out += char(uint8_t(a.dims.size()));
    for (int d : a.dims) put_u32(&out, uint32_t(d));
    out.append(reinterpret_cast<const char*>(a.raw.data()), a.raw.size());
  }
  atomic_write_file(path, out);
}

std::map<std::string, CkptArray> read_checkpoint(const std::string& path) {
  const std::string s = read_file(path);
  if (s.size() < 8 || std::memcmp(s.data(), kMagic, 8) != 0)
    throw FormatError("checkpoint: " + path + " has a bad magic header");
  std::map<std::string, CkptArray> out;
  size_t pos = 8;
  auto need = [&](size_t n, const char* what) {
    if (pos + n > s.size())
      throw FormatError("checkpoint: " + path + " truncated while reading " +
                        what + " at byte " + std::to_string(pos));
  };
  while (pos < s.size()) {
    need(4, "name length");
    uint32_t name_len;
    std::memcpy(&name_len, s.data() + pos, 4);
    pos += 4;
    if (name_len > 4096)
      throw FormatError("checkpoint: " + path + " has an implausible name");
    need(name_len, "name");
    CkptArray a;
    a.name.assign(s.data() + pos, name_len);
    pos += name_len;
    need(2, "dtype/rank");
    const uint8_t dt = uint8_t(s[pos]);
    if (dt > 3) throw FormatError("checkpoint: bad dtype for '" + a.name + "'");
    a.dtype = CkptDtype(dt);
    const uint8_t rank = uint8_t(s[pos + 1]);
    pos += 2;
    need(size_t(rank) * 4, "dims");
    a.dims.resize(rank);
    for (int i = 0; i < rank; ++i) {
      uint32_t d;
      std::memcpy(&d, s.data() + pos, 4);
      a.dims[size_t(i)] = int(d);
      pos += 4;
    }
    const size_t bytes = size_t(a.numel()) * dtype_size(a.dtype);
    need(bytes, ("data of '" + a.name + "'").c_str());
    a.raw.assign(s.data() + pos, s.data() + pos + bytes);
    pos += bytes;
    out[a.name] = std::move(a);
  }
  return out;
}

}  // namespace asl

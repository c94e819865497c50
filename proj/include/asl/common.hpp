// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <cmath>
#include <chrono>
#include <stdexcept>
#include <string>

namespace asl {

// Base class for all library errors. Subclasses distinguish bad input data
// from bad configuration and from API misuse so callers can react.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files or byte streams (WAV, PPM, JSONL, checkpoints).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Tensor or map dimensions that do not fit an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values (RunConfig keys, camera FOV, scene specs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API misuse: calling an operation outside its stated precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double d) { return d * (kPi / 180.0); }
inline double rad_to_deg(double r) { return r * (180.0 / kPi); }

// Counter-free deterministic RNG (xoshiro256++ seeded via splitmix64).
// The standard <random> engines are avoided on purpose: their distributions
// are implementation-defined and outputs here must be reproducible
// bit-for-bit from a seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
    have_spare_ = false;
  }

  // Derives an independent stream, e.g. one per source or per parameter.
  Rng fork(uint64_t stream) const {
    uint64_t x = s_[0] ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    x ^= s_[2] + 0xbf58476d1ce4e5b9ULL;
    return Rng(x);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_;
};

// FNV-1a, used to derive per-parameter init streams from names.
inline uint64_t hash_name(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class WallTimer {
 public:
  WallTimer() : start_(clock::now()) {}
  void reset() { start_ = clock::now(); }
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_;
};

}  // namespace asl

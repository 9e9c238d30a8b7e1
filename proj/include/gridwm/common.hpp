#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridwm {

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& m) : std::runtime_error("dimension error: " + m) {}
};
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error("config error: " + m) {}
};
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& m) : std::runtime_error("contract violation: " + m) {}
};
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error("numeric error: " + m) {}
};
struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& m)
      : std::runtime_error("insufficient data: " + m) {}
};
struct IoError : std::runtime_error {
  explicit IoError(const std::string& m) : std::runtime_error("i/o error: " + m) {}
};

// Single epsilon used for log/division guards across the project.
inline constexpr double kEps = 1e-8;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Explicitly-passed randomness source. Every stochastic component takes one of
// these; nothing reads global RNG state.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : engine_(seed) {}

  double uniform() { return dist_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  uint64_t next_index(uint64_t n) {
    std::uniform_int_distribution<uint64_t> d(0, n - 1);
    return d(engine_);
  }
  uint64_t raw() { return engine_(); }
  // Derive an independent child stream.
  SeededRng fork(uint64_t stream) { return SeededRng(splitmix64(engine_() ^ splitmix64(stream))); }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> dist_{0.0, 1.0};
};

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

std::string hex64(uint64_t v);

}  // namespace gridwm

#pragma once

#include <cstdint>
#include <random>

namespace rre {

// Stream ids for the independent random streams of one simulation run.
// Derived engines are seeded by mix_seed(master, sample_id, stream_id),
// so the same master seed reproduces every run regardless of worker count.
inline constexpr std::uint64_t kStreamSwap = 1;
inline constexpr std::uint64_t kStreamDissemination = 2;
inline constexpr std::uint64_t kStreamNoise = 3;
inline constexpr std::uint64_t kStreamInit = 4;
inline constexpr std::uint64_t kStreamSelect = 5;

// SplitMix64-style mixing of up to three words into one seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform();               // [0, 1)
  double gaussian();              // N(0, 1)
  long poisson(double mean);      // mean >= 0; mean == 0 draws nothing
  int uniform_int(int n);         // {0, ..., n-1}, n >= 1

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rre

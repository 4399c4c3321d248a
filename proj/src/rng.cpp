#include "rre/rng.hpp"

#include <stdexcept>

namespace rre {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t state = a;
  std::uint64_t h = splitmix64(state);
  state ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= splitmix64(state);
  state ^= c + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= splitmix64(state);
  return h;
}

double RngStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::gaussian() { return normal_(engine_); }

long RngStream::poisson(double mean) {
  if (mean < 0.0) throw std::domain_error("poisson: negative mean");
  if (mean == 0.0) return 0;
  return std::poisson_distribution<long>(mean)(engine_);
}

int RngStream::uniform_int(int n) {
  if (n < 1) throw std::domain_error("uniform_int: n must be positive");
  return std::uniform_int_distribution<int>(0, n - 1)(engine_);
}

}  // namespace rre

#include "glassmem/random.hpp"

namespace glassmem {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

RandomSource RandomSource::split(std::uint64_t stream) const {
  return RandomSource(mix64(seed_ ^ mix64(stream + 0x632be59bd9b4e019ULL)));
}

double RandomSource::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RandomSource::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::size_t RandomSource::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

long RandomSource::integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(engine_); }

double RandomSource::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

int RandomSource::sign() { return (engine_() >> 63) ? -1 : 1; }

}  // namespace glassmem

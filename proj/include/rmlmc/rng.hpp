#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "rmlmc/errors.hpp"

namespace rmlmc {

// splitmix64 finalizer; used to turn (seed, stream path) tuples into
// well-separated engine seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// A seeded random stream addressable by (seed, id-path). Streams derived
// from distinct paths are treated as independent; the id survives so that
// consumers requiring independence can reject two handles onto the same
// stream. Gaussians use Box-Muller on explicit 53-bit uniforms, so the
// draw sequence is reproducible wherever mt19937_64 is.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
      : RngStream(derive_id(seed, path.begin(), path.end())) {}

  static RngStream from_id(std::uint64_t stream_id) { return RngStream(stream_id); }

  std::uint64_t id() const { return id_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] keeps the log finite.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  explicit RngStream(std::uint64_t stream_id) : id_(stream_id), engine_(stream_id) {}

  template <typename It>
  static std::uint64_t derive_id(std::uint64_t seed, It first, It last) {
    std::uint64_t h = mix64(seed);
    for (It it = first; it != last; ++it) h = mix64(h ^ mix64(*it));
    return h;
  }

  std::uint64_t id_;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace rmlmc

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace edt {

// splitmix64 generator. Chosen over std::mt19937_64 so that every drawn double is
// bit-reproducible across standard libraries; distribution helpers are hand-rolled
// for the same reason.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform index in [0, n). Fixed-point multiply keeps it platform-stable.
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Exponential with mean 1 (never returns inf: 1 - u > 0).
  double next_exponential() { return -std::log1p(-next_double()); }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Independent stream derived from a master seed, a purpose tag and an index.
  static Rng stream(std::uint64_t master, std::string_view tag, std::uint64_t idx = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    Rng mix(master ^ h);
    mix.next_u64();
    Rng out(mix.next_u64() ^ (0x9e3779b97f4a7c15ULL * (idx + 1)));
    out.next_u64();
    return out;
  }

 private:
  std::uint64_t state_;
};

}  // namespace edt

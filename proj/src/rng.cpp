#include "brwcap/rng.hpp"

#include <bit>
#include <cmath>

namespace brwcap {

// The engine's own 64-bit seeding is far cheaper than a seed_seq; scrambling
// first keeps nearby seeds apart.
Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

std::uint64_t Rng::below(std::uint64_t n) {
  std::uint64_t x = engine_();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = engine_();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t Rng::geometric_half() {
  std::uint64_t k = 0;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x != 0) return k + static_cast<std::uint64_t>(std::countr_zero(x));
    k += 64;
  }
}

std::uint64_t Rng::geometric(double p) {
  if (p >= 1.0) return 0;
  return static_cast<std::uint64_t>(std::floor(std::log(uniform()) / std::log1p(-p)));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng stream(std::uint64_t master, std::uint64_t experiment, std::uint64_t n,
           std::uint64_t replica) {
  const std::uint64_t a = splitmix64(master ^ splitmix64(experiment));
  const std::uint64_t b = splitmix64(a ^ splitmix64(n + 0x632be59bd9b4e019ULL));
  const std::uint64_t c = splitmix64(b ^ splitmix64(replica + 0x8cb92ba72f3d8dd7ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(experiment), static_cast<std::uint32_t>(n),
                    static_cast<std::uint32_t>(n >> 32), static_cast<std::uint32_t>(replica),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return Rng(seq);
}

}  // namespace brwcap

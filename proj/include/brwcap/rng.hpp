#pragma once

#include <cstdint>
#include <random>

namespace brwcap {

// Thin wrapper over mt19937_64 with distribution code we control, so that
// streams are bit-reproducible independent of the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x5eedULL);
  explicit Rng(std::seed_seq& seq) : engine_(seq) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), n > 0. Lemire's nearly-divisionless method.
  std::uint64_t below(std::uint64_t n);

  // Geometric on {0,1,...} with P(k) = 2^{-k-1}.
  std::uint64_t geometric_half();

  // Geometric on {0,1,...} with P(k) = p (1-p)^k.
  std::uint64_t geometric(double p);

  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic stream derivation: replica r of row n of experiment `exp`
// under the master seed. Distinct tuples give distinct seed sequences.
Rng stream(std::uint64_t master, std::uint64_t experiment, std::uint64_t n,
           std::uint64_t replica);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace brwcap

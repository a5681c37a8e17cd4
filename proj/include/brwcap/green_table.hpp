#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "brwcap/green.hpp"

namespace brwcap {

// Memoized Green's function for one (law, lambda) pair. Keys are canonical
// under the law's symmetries, so G(x) and G(-x) are the same stored value
// for symmetric laws. Lookups before freeze() are serialized; afterwards they
// are lock-free and misses raise kCacheMiss.
class GreenTable {
 public:
  GreenTable(const StepLaw& law, double lambda, GreenOptions opts = {});

  double operator()(const Point& x) const;
  double at(const Point& x) const { return (*this)(x); }

  // Evaluates and stores G at every point (and difference set helpers below).
  void precompute(const std::vector<Point>& points);
  void precompute_differences(const std::vector<Point>& a);
  void freeze();
  bool frozen() const { return frozen_; }

  const StepLaw& law() const { return eval_.law(); }
  double lambda() const { return eval_.lambda(); }
  int resolution() const { return eval_.max_coord(); }
  std::size_t size() const { return values_.size(); }
  const char* method() const { return eval_.method(); }
  GreenEvaluator& evaluator() { return eval_; }

  // Binary cache file:
  //   "BRWGREEN" | u32 version | u64 law hash | f64 lambda | i32 resolution |
  //   i32 dim | u64 count | count x (dim x i32 coords, f64 value), records
  //   sorted lexicographically by coordinates. Native little-endian.
  void save(const std::string& path) const;
  // Merges a cache file. Throws kIoError on a header mismatch.
  void load(const std::string& path);

  static constexpr std::uint32_t kVersion = 1;

 private:
  GreenEvaluator eval_;
  bool frozen_ = false;
  mutable std::unordered_map<Point, double, PointHash> values_;
  mutable std::mutex mutex_;
};

}  // namespace brwcap

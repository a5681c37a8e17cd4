#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "brwcap/green_table.hpp"
#include "brwcap/lattice.hpp"
#include "brwcap/laws.hpp"
#include "brwcap/rng.hpp"
#include "brwcap/spine_forest.hpp"

namespace brwcap {

inline constexpr std::size_t kExactCeiling = 6000;

enum class CapacityMethod { kExact, kMcEscape, kLowerBound };
const char* method_name(CapacityMethod m);
CapacityMethod parse_method(const std::string& s);

struct CapacityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  CapacityMethod method = CapacityMethod::kExact;
  std::map<std::string, double> params;
  std::string to_json() const;
};

// Solves sum_y G(x - y) e(y) = 1 on the distinct points of A and returns
// sum e. Points are taken in sorted order so translated sets give identical
// results. Throws kSizeCeiling, kSingularSystem, kInvalidLaw (asymmetric law
// or killed table).
CapacityEstimate capacity_exact(const RangeSet& A, const GreenTable& table,
                                std::size_t ceiling = kExactCeiling,
                                std::vector<double>* equilibrium = nullptr);

struct EscapeOptions {
  std::int64_t walkers = 10000;  // per start point
  // Bound on the chance that a walker that has left the ball comes back.
  double epsilon = 1e-3;
  // 0: every point of A is a start point. Otherwise this many start points
  // are drawn uniformly with replacement and the sum is rescaled by |A|.
  std::int64_t sample_points = 0;
  int max_radius = 1 << 20;
};

// Radius, measured from the centre of A's bounding box, beyond which a walk
// counts as escaped.
double escape_radius(const RangeSet& A, const StepLaw& eta, double epsilon);

CapacityEstimate capacity_mc(const RangeSet& A, const StepLaw& eta, Rng& rng, const EscapeOptions& opt = {});

// #A/(k+1) - sum_{x,y in A} G(x - y) / (k (k+1))
double capacity_lower_bound(const RangeSet& A, const GreenTable& table, std::int64_t k);

// A Z-indexed sequence of lattice points that is stationary up to
// translation, materialized on demand.
class StationaryPath {
 public:
  virtual ~StationaryPath() = default;
  virtual void extend(std::int64_t a, std::int64_t b) = 0;
  virtual Point at(std::int64_t i) const = 0;
};

// The lexicographic walk through a spine forest.
class ForestPath : public StationaryPath {
 public:
  ForestPath(const OffspringLaw& mu, const StepLaw& theta, std::uint64_t seed,
             std::int64_t ceiling = kDefaultNodeCeiling)
      : forest_(mu, theta, seed, ceiling) {}
  void extend(std::int64_t a, std::int64_t b) override { forest_.extend(a, b); }
  Point at(std::int64_t i) const override { return forest_.position(i); }
  const SpineForest& forest() const { return forest_; }

 private:
  SpineForest forest_;
};

// Two-sided random walk with steps theta, S_0 = 0.
class WalkPath : public StationaryPath {
 public:
  WalkPath(const StepLaw& theta, std::uint64_t seed);
  void extend(std::int64_t a, std::int64_t b) override;
  Point at(std::int64_t i) const override;

 private:
  const StepLaw* theta_;
  Rng rng_pos_, rng_neg_;
  std::vector<Point> pos_, neg_;
};

using PathFactory = std::function<std::unique_ptr<StationaryPath>(std::uint64_t seed)>;

struct KilledTriple {
  int I = 0;
  double E = 0.0;
  double G = 0.0;
  std::int64_t n = 0;
  std::int64_t left = 0, right = 0;  // xi^l, xi^r
};

// One replica: xi^l, xi^r ~ Geometric(1/n), window R[-xi^l, xi^r],
// I = 1{X_0 not in X_1..X_{xi^r}}, G = sum_i G^{(1-1/n)}(X_i - X_0), and E the
// fraction of `walkers` eta-walks from X_0, each run for its own
// Geometric(1/n) number of steps, that avoid the window. E is skipped (left
// at 0) when I = 0. Throws kKilledTableMissing if the table's lambda is not
// 1 - 1/n.
KilledTriple killed_triple(StationaryPath& path, const StepLaw& eta, const GreenTable& killed, std::int64_t n,
                           Rng& rng, int walkers = 256);

struct KilledSummary {
  double mean = 0.0, std_error = 0.0;
  double mean_I = 0.0, mean_G = 0.0, mean_E_given_I = 0.0;
  std::int64_t replicas = 0, n = 0;
};

// Replica r uses the path seeded by stream(master, experiment, n, r) and the
// same stream for its walkers. Results are summed in replica order.
KilledSummary killed_triple_estimator(const PathFactory& paths, const StepLaw& eta, const GreenTable& killed,
                                      std::int64_t n, std::int64_t replicas, std::uint64_t master,
                                      std::uint64_t experiment, int walkers = 256, int threads = 1);

}  // namespace brwcap

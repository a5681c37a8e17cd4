#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "brwcap/laws.hpp"
#include "brwcap/lattice.hpp"
#include "brwcap/rng.hpp"

namespace brwcap {

inline constexpr std::int64_t kDefaultNodeCeiling = 100'000'000;

// Ordered rooted tree stored by its offspring counts in depth-first
// (lexicographic) order; node 0 is the root.
class PlaneTree {
 public:
  PlaneTree() = default;
  // Throws kInvalidLaw unless `counts` is a Lukasiewicz sequence.
  explicit PlaneTree(std::vector<std::int32_t> counts);

  std::size_t size() const { return k_.size(); }
  const std::vector<std::int32_t>& offspring() const { return k_; }
  const std::vector<std::int64_t>& parent() const { return parent_; }
  std::int32_t offspring(std::size_t u) const { return k_[u]; }
  std::vector<std::int32_t> depths() const;
  // Number of nodes at each generation 0..max_h.
  std::vector<std::int64_t> generation_sizes(int max_h) const;
  // Offspring counts joined by commas, e.g. "2,0,0".
  std::string key() const;

  static bool is_lukasiewicz(const std::vector<std::int32_t>& counts);

 private:
  std::vector<std::int32_t> k_;
  std::vector<std::int64_t> parent_;
};

struct SpatialTree {
  PlaneTree tree;
  int dim = 0;
  std::vector<Point> pos;  // pos[0] = 0; pos[u] = pos[parent(u)] + Y_u
};

// Unconditioned Galton-Watson tree. Throws kCeilingExceeded (detail = nodes
// generated so far) if the tree grows past `ceiling` nodes.
PlaneTree sample_gw(const OffspringLaw& mu, Rng& rng, std::int64_t ceiling = kDefaultNodeCeiling);

// Galton-Watson tree cut at generation `max_depth`: nodes at that depth are
// kept but their offspring are not sampled.
PlaneTree sample_gw_truncated(const OffspringLaw& mu, int max_depth, Rng& rng,
                              std::int64_t ceiling = kDefaultNodeCeiling);

// Whether P(#T = n) > 0.
bool size_feasible(const OffspringLaw& mu, std::int64_t n);

// Exact draw from GW(mu) conditioned on #T = n.
PlaneTree sample_gw_conditioned(const OffspringLaw& mu, std::int64_t n, Rng& rng,
                                int rejection_budget = 10000);

// Cyclic shift of a sequence with sum(k - 1) = -1 that is a valid
// Lukasiewicz sequence (first minimum of the partial sums).
std::vector<std::int32_t> cycle_lemma_rotate(const std::vector<std::int32_t>& counts);

// P(total progeny of n independent mu-trees = m) by Kemperman's formula.
double kemperman_prob(const OffspringLaw& mu, std::int64_t n, std::int64_t m);

// P(k_1 + ... + k_m = s) for i.i.d. k_i ~ mu.
double sum_probability(const OffspringLaw& mu, std::int64_t m, std::int64_t s);

// All plane trees with n <= 9 nodes and their probabilities prod mu(k_u).
std::vector<std::pair<PlaneTree, double>> enumerate_small_trees(const OffspringLaw& mu, int n);
// Probability that n independent trees have m nodes in total, by brute-force
// enumeration of Lukasiewicz forests (m <= 9).
double enumerate_forest_probability(const OffspringLaw& mu, int n, int m);

SpatialTree embed(const PlaneTree& tree, const StepLaw& theta, Rng& rng);
RangeSet range_of(const SpatialTree& t);
std::pair<SpatialTree, RangeSet> embed_and_range(const PlaneTree& tree, const StepLaw& theta, Rng& rng);

// Text format:
//   tree <n> <d>
//   k_0 k_1 ... k_{n-1}
//   then, if d > 0, n lines of d integers (positions in DFS order).
void write_tree(std::ostream& out, const PlaneTree& tree, const std::vector<Point>* pos = nullptr, int dim = 0);
SpatialTree read_tree(std::istream& in);

}  // namespace brwcap

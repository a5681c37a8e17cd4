#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "brwcap/lattice.hpp"
#include "brwcap/laws.hpp"
#include "brwcap/rng.hpp"
#include "brwcap/trees.hpp"

namespace brwcap {

inline constexpr std::int64_t kNoIndex = std::numeric_limits<std::int64_t>::min();

struct ForestWindow {
  std::int64_t a = 0, b = 0;
  RangeSet range{1};
  std::vector<Point> positions;  // X_a .. X_b
};

// Two-sided spine forest rooted at the base point v_0 = X_0 = 0.
//
// Spine node i >= 1 is the i-th ancestor of v_0. Its children, in plane order,
// are k_minus left roots, spine node i-1, then k_plus right roots, with
// P(k_plus, k_minus) = mu(k_plus + k_minus + 1). Every hung tree is GW(mu).
//
// Nodes are indexed by their position in the lexicographic (depth-first)
// order of the whole forest: index 0 is v_0, positive indices run through the
// tree of v_0 and then the right trees of spine 1, 2, ...; negative indices
// run backwards through the left trees of spine 1 and spine 1 itself, then
// spine 2, and so on.
//
// Materialization is lazy and streams node by node from either end. The
// positive side, the negative side and the spine each draw from their own
// random stream, so the forest is a function of the seed alone and does not
// depend on the order in which indices were requested.
class SpineForest {
 public:
  SpineForest(const OffspringLaw& mu, const StepLaw& theta, std::uint64_t seed,
              std::int64_t node_ceiling = kDefaultNodeCeiling);

  // Materializes every index in [a, b]. Throws kCeilingExceeded.
  void extend(std::int64_t a, std::int64_t b);
  // Materializes the whole trees hung on spine nodes 0..n (both sides).
  void materialize_spines(int n);

  // Materialized index range.
  std::int64_t lo() const { return -static_cast<std::int64_t>(neg_.size()); }
  std::int64_t hi() const { return static_cast<std::int64_t>(pos_.size()) - 1; }

  // Node id at lexicographic index i. Throws kWindowOutOfRange.
  std::int64_t node_at(std::int64_t i) const;
  const Point& position(std::int64_t i) const { return nodes_[static_cast<std::size_t>(node_at(i))].pos; }

  std::size_t node_count() const { return nodes_.size(); }
  // -1 if the parent is not materialized yet (only for the topmost spine node).
  std::int64_t parent(std::int64_t u) const { return nodes_[static_cast<std::size_t>(u)].parent; }
  // Number of children (spine nodes count the spine child).
  std::int32_t offspring(std::int64_t u) const { return nodes_[static_cast<std::size_t>(u)].k; }
  // Spine height of u, or -1 for nodes off the spine. v_0 has height 0.
  std::int32_t spine_height(std::int64_t u) const { return nodes_[static_cast<std::size_t>(u)].spine; }
  const Point& node_position(std::int64_t u) const { return nodes_[static_cast<std::size_t>(u)].pos; }
  // kNoIndex until u has been reached by one of the two streams.
  std::int64_t lex_index(std::int64_t u) const { return nodes_[static_cast<std::size_t>(u)].lex; }
  // Materialized children of u in plane order.
  std::vector<std::int64_t> children(std::int64_t u) const;

  int spine_length() const { return static_cast<int>(spine_.size()) - 1; }
  std::int64_t spine_node(int i) const { return spine_.at(static_cast<std::size_t>(i)).node; }
  // (k_plus, k_minus) of spine node i >= 1.
  std::pair<std::int64_t, std::int64_t> spine_pair(int i) const;
  // Displacement X(spine i) - X(spine i-1).
  Point spine_step(int i) const;

  // [-zeta_minus, zeta_plus]: the indices covered by the whole trees of spine
  // nodes 0..n. Requires materialize_spines(n).
  std::pair<std::int64_t, std::int64_t> spine_window(int n) const;

  // The tree of v_0 with positions. Requires materialize_spines(0).
  SpatialTree base_subtree() const;

  const OffspringLaw& mu() const { return *mu_; }
  const StepLaw& theta() const { return *theta_; }

 private:
  struct Node {
    std::int64_t parent = -1;
    std::int64_t lex = kNoIndex;
    std::int32_t k = 0;
    std::int32_t spine = -1;
    bool mirrored = false;  // children were created right to left
    Point pos;
    std::vector<std::int64_t> kids;
  };
  struct Spine {
    std::int64_t node = 0;
    std::int64_t k_plus = 0, k_minus = 0;
    std::vector<std::int64_t> right;
  };
  struct Frame {
    std::int64_t node;
    std::int64_t remaining;
  };

  std::int64_t new_node(std::int64_t parent, std::int64_t k, const Point& pos);
  void ensure_spine(int i);
  bool step_positive(int spine_limit);
  bool step_negative(int spine_limit);

  const OffspringLaw* mu_;
  const StepLaw* theta_;
  std::int64_t ceiling_;
  Rng rng_pos_, rng_neg_, rng_spine_;

  std::vector<Node> nodes_;
  std::vector<Spine> spine_;
  std::vector<std::int64_t> pos_, neg_;  // neg_[j] is index -(j+1)
  std::vector<Frame> pstack_, nstack_;
  int pos_next_spine_ = 1, neg_next_spine_ = 1;
  // pos_done_[i]: positive count once spines 0..i are exhausted; neg_done_[i]
  // likewise (neg_done_[0] = 0).
  std::vector<std::int64_t> pos_done_, neg_done_{0};
};

SpineForest sample_spine_forest(const OffspringLaw& mu, const StepLaw& theta, int n, Rng& rng,
                                std::int64_t node_ceiling = kDefaultNodeCeiling);

// Read-only re-basing of a forest: index i of the view is index i + offset of
// the forest and positions are translated so that the view's X_0 = 0. The
// shift sigma is the view with offset + 1.
class ForestView {
 public:
  explicit ForestView(const SpineForest& f, std::int64_t offset = 0) : f_(&f), off_(offset) {}

  std::int64_t offset() const { return off_; }
  std::int64_t lo() const { return f_->lo() - off_; }
  std::int64_t hi() const { return f_->hi() - off_; }
  std::int64_t node_at(std::int64_t i) const { return f_->node_at(i + off_); }
  Point position(std::int64_t i) const { return f_->position(i + off_) - f_->position(off_); }
  const SpineForest& forest() const { return *f_; }

  // Throws kInsufficientMaterialization if index 1 is not materialized.
  ForestView shift() const;
  // Throws kWindowOutOfRange unless a <= 0 <= b and [a, b] is materialized.
  ForestWindow window(std::int64_t a, std::int64_t b) const;

 private:
  const SpineForest* f_;
  std::int64_t off_;
};

inline ForestView shift_sigma(const SpineForest& f) { return ForestView(f).shift(); }
ForestWindow window_range(const SpineForest& f, std::int64_t a, std::int64_t b);

// Local shape around the base point: the whole tree of the base's parent p,
// as offspring counts in depth-first order, and the depth-first position of
// the base inside it. `other` is set when that tree has more than
// `max_nodes` nodes or p is not materialized.
struct ForestShape {
  bool other = true;
  std::vector<std::int32_t> counts;
  int base_rank = 0;
  std::string key() const;
};
// Needs indices [-(max_nodes + 2), max_nodes + 2] of the view materialized.
ForestShape classify_shape(const ForestView& view, int max_nodes = 4);

// Product of mu(k_u) over the nodes of a finite shape.
double cylinder_probability(const OffspringLaw& mu, const PlaneTree& shape);

// Lines "index node x_1 ... x_d" for a <= index <= b.
void write_window(std::ostream& out, const ForestView& view, std::int64_t a, std::int64_t b);

}  // namespace brwcap

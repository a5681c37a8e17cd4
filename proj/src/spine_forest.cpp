#include "brwcap/spine_forest.hpp"

#include <algorithm>
#include <ostream>

#include "brwcap/error.hpp"

namespace brwcap {

SpineForest::SpineForest(const OffspringLaw& mu, const StepLaw& theta, std::uint64_t seed,
                         std::int64_t node_ceiling)
    : mu_(&mu),
      theta_(&theta),
      ceiling_(node_ceiling),
      rng_pos_(splitmix64(seed ^ 0x9e3779b97f4a7c15ULL)),
      rng_neg_(splitmix64(seed ^ 0xbf58476d1ce4e5b9ULL)),
      rng_spine_(splitmix64(seed ^ 0x94d049bb133111ebULL)) {
  if (!theta.symmetric()) throw Error(Errc::kInvalidLaw, "the spine forest needs a symmetric step law");
  const auto k0 = mu.sample(rng_pos_);
  new_node(-1, k0, Point{});
  nodes_[0].lex = 0;
  nodes_[0].spine = 0;
  pos_.push_back(0);
  pstack_.push_back({0, k0});
  spine_.push_back(Spine{0, 0, 0, {}});
}

std::int64_t SpineForest::new_node(std::int64_t parent, std::int64_t k, const Point& pos) {
  if (static_cast<std::int64_t>(nodes_.size()) >= ceiling_)
    throw Error(Errc::kCeilingExceeded, "spine forest exceeded the node ceiling",
                static_cast<std::int64_t>(nodes_.size()));
  Node n;
  n.parent = parent;
  n.k = static_cast<std::int32_t>(k);
  n.pos = pos;
  nodes_.push_back(std::move(n));
  return static_cast<std::int64_t>(nodes_.size()) - 1;
}

void SpineForest::ensure_spine(int i) {
  while (static_cast<int>(spine_.size()) <= i) {
    const auto [kp, km] = mu_->sample_spine_pair(rng_spine_);
    const auto below = spine_.back().node;
    const Point p = nodes_[static_cast<std::size_t>(below)].pos + theta_->sample(rng_spine_);
    const auto u = new_node(-1, kp + km + 1, p);
    nodes_[static_cast<std::size_t>(u)].spine = static_cast<std::int32_t>(spine_.size());
    nodes_[static_cast<std::size_t>(u)].mirrored = true;  // left roots are created right to left
    nodes_[static_cast<std::size_t>(below)].parent = u;
    spine_.push_back(Spine{u, kp, km, {}});
  }
}

bool SpineForest::step_positive(int spine_limit) {
  for (;;) {
    if (!pstack_.empty()) {
      auto& f = pstack_.back();
      if (f.remaining == 0) {
        pstack_.pop_back();
        continue;
      }
      --f.remaining;
      const auto par = f.node;
      const auto k = mu_->sample(rng_pos_);
      const Point p = nodes_[static_cast<std::size_t>(par)].pos + theta_->sample(rng_pos_);
      const auto c = new_node(par, k, p);
      const auto s = nodes_[static_cast<std::size_t>(par)].spine;
      if (s > 0)
        spine_[static_cast<std::size_t>(s)].right.push_back(c);
      else
        nodes_[static_cast<std::size_t>(par)].kids.push_back(c);
      nodes_[static_cast<std::size_t>(c)].lex = static_cast<std::int64_t>(pos_.size());
      pos_.push_back(c);
      if (k > 0) pstack_.push_back({c, k});
      return true;
    }
    // Everything hung on spines < pos_next_spine_ is exhausted.
    if (static_cast<int>(pos_done_.size()) < pos_next_spine_)
      pos_done_.push_back(static_cast<std::int64_t>(pos_.size()));
    if (pos_next_spine_ > spine_limit) return false;
    if (mu_->pmf(0) >= 1.0)
      throw Error(Errc::kWindowOutOfRange, "the positive side is empty when every node is a leaf");
    ensure_spine(pos_next_spine_);
    const auto& s = spine_[static_cast<std::size_t>(pos_next_spine_)];
    pstack_.push_back({s.node, s.k_plus});
    ++pos_next_spine_;
  }
}

bool SpineForest::step_negative(int spine_limit) {
  for (;;) {
    if (!nstack_.empty()) {
      auto& f = nstack_.back();
      if (f.remaining == 0) {
        const auto u = f.node;
        nstack_.pop_back();
        auto& n = nodes_[static_cast<std::size_t>(u)];
        neg_.push_back(u);
        n.lex = -static_cast<std::int64_t>(neg_.size());
        if (n.spine > 0) neg_done_.push_back(static_cast<std::int64_t>(neg_.size()));
        return true;
      }
      --f.remaining;
      const auto par = f.node;
      const auto k = mu_->sample(rng_neg_);
      const Point p = nodes_[static_cast<std::size_t>(par)].pos + theta_->sample(rng_neg_);
      const auto c = new_node(par, k, p);
      nodes_[static_cast<std::size_t>(par)].kids.push_back(c);
      nodes_[static_cast<std::size_t>(c)].mirrored = true;
      nstack_.push_back({c, k});
      continue;
    }
    if (neg_next_spine_ > spine_limit) return false;
    ensure_spine(neg_next_spine_);
    const auto& s = spine_[static_cast<std::size_t>(neg_next_spine_)];
    nstack_.push_back({s.node, s.k_minus});
    ++neg_next_spine_;
  }
}

void SpineForest::extend(std::int64_t a, std::int64_t b) {
  constexpr int kNoLimit = std::numeric_limits<int>::max();
  while (hi() < b) step_positive(kNoLimit);
  while (lo() > a) step_negative(kNoLimit);
}

void SpineForest::materialize_spines(int n) {
  while (step_positive(n)) {
  }
  while (static_cast<int>(neg_done_.size()) <= n && step_negative(n)) {
  }
}

std::int64_t SpineForest::node_at(std::int64_t i) const {
  if (i > hi() || i < lo())
    throw Error(Errc::kWindowOutOfRange, "index " + std::to_string(i) + " is not materialized", i);
  return i >= 0 ? pos_[static_cast<std::size_t>(i)] : neg_[static_cast<std::size_t>(-i - 1)];
}

std::vector<std::int64_t> SpineForest::children(std::int64_t u) const {
  const auto& n = nodes_[static_cast<std::size_t>(u)];
  std::vector<std::int64_t> out(n.kids.rbegin(), n.kids.rend());
  if (!n.mirrored) out.assign(n.kids.begin(), n.kids.end());
  if (n.spine > 0) {
    const auto& s = spine_[static_cast<std::size_t>(n.spine)];
    out.push_back(spine_[static_cast<std::size_t>(n.spine - 1)].node);
    out.insert(out.end(), s.right.begin(), s.right.end());
  }
  return out;
}

std::pair<std::int64_t, std::int64_t> SpineForest::spine_pair(int i) const {
  const auto& s = spine_.at(static_cast<std::size_t>(i));
  return {s.k_plus, s.k_minus};
}

Point SpineForest::spine_step(int i) const {
  return nodes_[static_cast<std::size_t>(spine_node(i))].pos - nodes_[static_cast<std::size_t>(spine_node(i - 1))].pos;
}

std::pair<std::int64_t, std::int64_t> SpineForest::spine_window(int n) const {
  if (n < 0 || static_cast<int>(pos_done_.size()) <= n || static_cast<int>(neg_done_.size()) <= n)
    throw Error(Errc::kInsufficientMaterialization, "spines up to " + std::to_string(n) + " are not complete", n);
  return {-neg_done_[static_cast<std::size_t>(n)], pos_done_[static_cast<std::size_t>(n)] - 1};
}

SpatialTree SpineForest::base_subtree() const {
  const auto hi0 = spine_window(0).second;
  std::vector<std::int32_t> k;
  SpatialTree t;
  t.dim = theta_->dim();
  for (std::int64_t i = 0; i <= hi0; ++i) {
    const auto& n = nodes_[static_cast<std::size_t>(pos_[static_cast<std::size_t>(i)])];
    k.push_back(n.k);
    t.pos.push_back(n.pos);
  }
  t.tree = PlaneTree(std::move(k));
  return t;
}

SpineForest sample_spine_forest(const OffspringLaw& mu, const StepLaw& theta, int n, Rng& rng,
                                std::int64_t node_ceiling) {
  SpineForest f(mu, theta, rng.next(), node_ceiling);
  f.materialize_spines(n);
  return f;
}

// ------------------------------------------------------------------ views

ForestView ForestView::shift() const {
  if (f_->hi() < off_ + 1) throw Error(Errc::kInsufficientMaterialization, "shift needs index 1 materialized");
  return ForestView(*f_, off_ + 1);
}

ForestWindow ForestView::window(std::int64_t a, std::int64_t b) const {
  if (a > 0 || b < 0 || a < lo() || b > hi())
    throw Error(Errc::kWindowOutOfRange, "window [" + std::to_string(a) + ", " + std::to_string(b) + "] is not available");
  ForestWindow w;
  w.a = a;
  w.b = b;
  w.range = RangeSet(f_->theta().dim());
  w.positions.reserve(static_cast<std::size_t>(b - a + 1));
  const Point base = f_->position(off_);
  for (auto i = a; i <= b; ++i) {
    w.positions.push_back(f_->position(i + off_) - base);
    w.range.add(w.positions.back());
  }
  return w;
}

ForestWindow window_range(const SpineForest& f, std::int64_t a, std::int64_t b) { return ForestView(f).window(a, b); }

std::string ForestShape::key() const {
  if (other) return "other";
  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) s += (i ? "," : "") + std::to_string(counts[i]);
  return s + "@" + std::to_string(base_rank);
}

ForestShape classify_shape(const ForestView& view, int max_nodes) {
  ForestShape shape;
  const auto& f = view.forest();
  const auto base = view.node_at(0);
  const auto p = f.parent(base);
  if (p < 0) return shape;
  const auto lp = f.lex_index(p);
  if (lp == kNoIndex) return shape;
  const auto start = lp - view.offset();
  if (start < -(max_nodes - 1)) return shape;
  // The tree of p is the depth-first block starting at p; it is complete once
  // the Lukasiewicz walk reaches -1.
  std::int64_t walk = 0;
  for (std::int64_t i = start; i < start + max_nodes; ++i) {
    const auto u = view.node_at(i);
    shape.counts.push_back(f.offspring(u));
    if (u == base) shape.base_rank = static_cast<int>(i - start);
    walk += f.offspring(u) - 1;
    if (walk == -1) {
      shape.other = false;
      return shape;
    }
  }
  shape.counts.clear();
  return shape;
}

double cylinder_probability(const OffspringLaw& mu, const PlaneTree& shape) {
  double p = 1.0;
  for (auto k : shape.offspring()) p *= mu.pmf(k);
  return p;
}

void write_window(std::ostream& out, const ForestView& view, std::int64_t a, std::int64_t b) {
  const int d = view.forest().theta().dim();
  for (auto i = a; i <= b; ++i) {
    const Point x = view.position(i);
    out << i << ' ' << view.node_at(i);
    for (int j = 0; j < d; ++j) out << ' ' << x[j];
    out << '\n';
  }
}

}  // namespace brwcap

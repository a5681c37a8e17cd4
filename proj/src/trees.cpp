#include "brwcap/trees.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "brwcap/error.hpp"

namespace brwcap {

// ----------------------------------------------------------------- PlaneTree

bool PlaneTree::is_lukasiewicz(const std::vector<std::int32_t>& counts) {
  if (counts.empty()) return false;
  std::int64_t s = 1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0 || s <= 0) return false;
    s += counts[i] - 1;
  }
  return s == 0;
}

PlaneTree::PlaneTree(std::vector<std::int32_t> counts) : k_(std::move(counts)) {
  if (!is_lukasiewicz(k_)) throw Error(Errc::kInvalidLaw, "offspring sequence is not a Lukasiewicz path");
  parent_.assign(k_.size(), -1);
  // Stack of (node, children still to attach).
  std::vector<std::pair<std::int64_t, std::int32_t>> stack;
  for (std::size_t u = 0; u < k_.size(); ++u) {
    if (!stack.empty()) {
      parent_[u] = stack.back().first;
      if (--stack.back().second == 0) stack.pop_back();
    }
    if (k_[u] > 0) stack.emplace_back(static_cast<std::int64_t>(u), k_[u]);
  }
}

std::vector<std::int32_t> PlaneTree::depths() const {
  std::vector<std::int32_t> d(k_.size(), 0);
  for (std::size_t u = 1; u < k_.size(); ++u) d[u] = d[static_cast<std::size_t>(parent_[u])] + 1;
  return d;
}

std::vector<std::int64_t> PlaneTree::generation_sizes(int max_h) const {
  std::vector<std::int64_t> g(static_cast<std::size_t>(max_h) + 1, 0);
  for (auto h : depths())
    if (h <= max_h) ++g[static_cast<std::size_t>(h)];
  return g;
}

std::string PlaneTree::key() const {
  std::string s;
  for (std::size_t i = 0; i < k_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(k_[i]);
  }
  return s;
}

// ------------------------------------------------------------------ samplers

PlaneTree sample_gw(const OffspringLaw& mu, Rng& rng, std::int64_t ceiling) {
  std::vector<std::int32_t> k;
  std::int64_t pending = 1;
  while (pending > 0) {
    if (static_cast<std::int64_t>(k.size()) >= ceiling)
      throw Error(Errc::kCeilingExceeded, "Galton-Watson tree exceeded the node ceiling",
                  static_cast<std::int64_t>(k.size()));
    const auto c = mu.sample(rng);
    k.push_back(static_cast<std::int32_t>(c));
    pending += c - 1;
  }
  return PlaneTree(std::move(k));
}

PlaneTree sample_gw_truncated(const OffspringLaw& mu, int max_depth, Rng& rng, std::int64_t ceiling) {
  std::vector<std::int32_t> k;
  // Depth-first: stack of (depth, children left to visit).
  std::vector<std::pair<int, std::int64_t>> stack;
  int depth = 0;
  for (;;) {
    if (static_cast<std::int64_t>(k.size()) >= ceiling)
      throw Error(Errc::kCeilingExceeded, "truncated tree exceeded the node ceiling",
                  static_cast<std::int64_t>(k.size()));
    const std::int64_t c = depth < max_depth ? mu.sample(rng) : 0;
    k.push_back(static_cast<std::int32_t>(c));
    if (c > 0) {
      stack.emplace_back(depth, c);
    }
    while (!stack.empty() && stack.back().second == 0) stack.pop_back();
    if (stack.empty()) break;
    --stack.back().second;
    depth = stack.back().first + 1;
  }
  return PlaneTree(std::move(k));
}

namespace {

std::vector<std::int64_t> positive_support(const OffspringLaw& mu, std::int64_t limit) {
  std::vector<std::int64_t> s;
  if (mu.bounded()) {
    for (std::int64_t k = 1; k <= mu.max_support(); ++k)
      if (mu.pmf(k) > 0.0) s.push_back(k);
  } else {
    s.push_back(1);  // closed-form families charge every k >= 0
  }
  while (!s.empty() && s.back() > limit) s.pop_back();
  return s;
}

}  // namespace

bool size_feasible(const OffspringLaw& mu, std::int64_t n) {
  if (n < 1) return false;
  if (mu.pmf(0) <= 0.0) return false;
  const std::int64_t target = n - 1;
  if (target == 0) return true;
  const auto sup = positive_support(mu, target);
  // Fewest positive parts summing to n - 1; the rest of the n parts are zeros.
  const std::int64_t inf = target + 2;
  std::vector<std::int64_t> best(static_cast<std::size_t>(target) + 1, inf);
  best[0] = 0;
  for (std::int64_t s = 1; s <= target; ++s)
    for (auto v : sup)
      if (v <= s && best[static_cast<std::size_t>(s - v)] + 1 < best[static_cast<std::size_t>(s)])
        best[static_cast<std::size_t>(s)] = best[static_cast<std::size_t>(s - v)] + 1;
  return best[static_cast<std::size_t>(target)] <= n;
}

std::vector<std::int32_t> cycle_lemma_rotate(const std::vector<std::int32_t>& counts) {
  const std::size_t n = counts.size();
  std::int64_t s = 0, best = 1;
  std::size_t arg = 0;
  for (std::size_t j = 0; j < n; ++j) {
    s += counts[j] - 1;
    if (s < best) {
      best = s;
      arg = j;
    }
  }
  if (s != -1) throw Error(Errc::kInvalidLaw, "offspring counts must sum to n - 1");
  std::vector<std::int32_t> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = counts[(arg + 1 + j) % n];
  return out;
}

PlaneTree sample_gw_conditioned(const OffspringLaw& mu, std::int64_t n, Rng& rng, int rejection_budget) {
  if (!size_feasible(mu, n))
    throw Error(Errc::kInfeasibleSize, "P(#T = " + std::to_string(n) + ") = 0 under " + mu.name());
  const auto un = static_cast<std::size_t>(n);
  std::vector<std::int32_t> k(un, 0);
  if (n == 1) return PlaneTree(std::move(k));

  if (mu.family() == OffspringLaw::Family::kGeometricHalf) {
    // The conditioned counts are a uniform weak composition of n - 1 into n
    // parts: choose n - 1 bar positions among 2n - 2 slots.
    std::int64_t slots = 2 * n - 2, bars = n - 1;
    std::size_t part = 0;
    for (std::int64_t pos = 0; pos < 2 * n - 2; ++pos, --slots) {
      if (static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(slots))) < bars) {
        --bars;
        ++part;
      } else {
        ++k[part];
      }
    }
    return PlaneTree(cycle_lemma_rotate(k));
  }

  std::vector<std::int64_t> sup;
  for (std::int64_t j = 0; mu.bounded() && j <= mu.max_support(); ++j)
    if (mu.pmf(j) > 0.0) sup.push_back(j);
  if (sup.size() == 2) {
    // Two atoms a < b: the number of b's is forced; their places are uniform.
    const std::int64_t a = sup[0], b = sup[1];
    const std::int64_t j = (n - 1 - n * a) / (b - a);
    std::int64_t need = j;
    for (std::int64_t i = 0, left = n; i < n; ++i, --left) {
      const bool pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(left))) < need;
      k[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(pick ? b : a);
      if (pick) --need;
    }
    return PlaneTree(cycle_lemma_rotate(k));
  }

  for (int attempt = 0; attempt < rejection_budget; ++attempt) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < un; ++i) {
      k[i] = static_cast<std::int32_t>(mu.sample(rng));
      total += k[i];
    }
    if (total == n - 1) return PlaneTree(cycle_lemma_rotate(k));
  }
  throw Error(Errc::kRejectionBudgetExceeded, "conditioned sampler ran out of attempts", rejection_budget);
}

// ----------------------------------------------------------------- Kemperman

double sum_probability(const OffspringLaw& mu, std::int64_t m, std::int64_t s) {
  if (m < 0 || s < 0) return 0.0;
  if (m == 0) return s == 0 ? 1.0 : 0.0;
  auto negbin = [](std::int64_t r, std::int64_t s2) {
    // C(s + r - 1, r - 1) 2^{-s-r}
    return std::exp(std::lgamma(static_cast<double>(s2 + r)) - std::lgamma(static_cast<double>(r)) -
                    std::lgamma(static_cast<double>(s2 + 1)) - static_cast<double>(s2 + r) * std::log(2.0));
  };
  switch (mu.family()) {
    case OffspringLaw::Family::kGeometricHalf: return negbin(m, s);
    case OffspringLaw::Family::kMergedGeometricHalf: return negbin(2 * m, s);
    case OffspringLaw::Family::kExplicit: break;
  }
  std::vector<double> dist{1.0};
  for (std::int64_t i = 0; i < m; ++i) {
    std::vector<double> next(std::min<std::size_t>(dist.size() + static_cast<std::size_t>(mu.max_support()),
                                                   static_cast<std::size_t>(s) + 1),
                             0.0);
    for (std::size_t a = 0; a < dist.size(); ++a) {
      if (dist[a] == 0.0) continue;
      for (std::int64_t k = 0; k <= mu.max_support() && a + static_cast<std::size_t>(k) < next.size(); ++k)
        next[a + static_cast<std::size_t>(k)] += dist[a] * mu.pmf(k);
    }
    dist.swap(next);
  }
  return static_cast<std::size_t>(s) < dist.size() ? dist[static_cast<std::size_t>(s)] : 0.0;
}

double kemperman_prob(const OffspringLaw& mu, std::int64_t n, std::int64_t m) {
  if (n < 1 || m < n) return 0.0;
  return static_cast<double>(n) / static_cast<double>(m) * sum_probability(mu, m, m - n);
}

// --------------------------------------------------------------- enumeration

namespace {

void enumerate_rec(const OffspringLaw& mu, int len, int roots, std::vector<std::int32_t>& seq,
                   std::int64_t partial, double prob,
                   const std::function<void(const std::vector<std::int32_t>&, double)>& emit) {
  const int i = static_cast<int>(seq.size());
  if (i == len) {
    if (partial == -roots) emit(seq, prob);
    return;
  }
  // partial sum must stay > -roots before the last step.
  for (int k = 0; k <= len; ++k) {
    const std::int64_t next = partial + k - 1;
    const int remaining = len - i - 1;
    if (remaining > 0 && next <= -roots) continue;
    if (next - remaining > -roots) break;  // cannot come back down in time
    const double p = mu.pmf(k);
    if (p == 0.0) continue;
    seq.push_back(k);
    enumerate_rec(mu, len, roots, seq, next, prob * p, emit);
    seq.pop_back();
  }
}

}  // namespace

std::vector<std::pair<PlaneTree, double>> enumerate_small_trees(const OffspringLaw& mu, int n) {
  if (n > 9) throw Error(Errc::kSizeTooLarge, "enumeration is limited to 9 nodes");
  std::vector<std::pair<PlaneTree, double>> out;
  if (n < 1) return out;
  std::vector<std::int32_t> seq;
  enumerate_rec(mu, n, 1, seq, 0, 1.0, [&](const std::vector<std::int32_t>& s, double p) {
    out.emplace_back(PlaneTree(s), p);
  });
  return out;
}

double enumerate_forest_probability(const OffspringLaw& mu, int n, int m) {
  if (m > 9) throw Error(Errc::kSizeTooLarge, "enumeration is limited to 9 nodes");
  if (n < 1 || m < n) return 0.0;
  double total = 0.0;
  std::vector<std::int32_t> seq;
  enumerate_rec(mu, m, n, seq, 0, 1.0, [&](const std::vector<std::int32_t>&, double p) { total += p; });
  return total;
}

// ------------------------------------------------------------------ embedding

SpatialTree embed(const PlaneTree& tree, const StepLaw& theta, Rng& rng) {
  SpatialTree t;
  t.tree = tree;
  t.dim = theta.dim();
  t.pos.resize(tree.size());
  const auto& par = tree.parent();
  for (std::size_t u = 1; u < tree.size(); ++u)
    t.pos[u] = t.pos[static_cast<std::size_t>(par[u])] + theta.sample(rng);
  return t;
}

RangeSet range_of(const SpatialTree& t) {
  RangeSet r(t.dim);
  for (const auto& p : t.pos) r.add(p);
  return r;
}

std::pair<SpatialTree, RangeSet> embed_and_range(const PlaneTree& tree, const StepLaw& theta, Rng& rng) {
  SpatialTree t = embed(tree, theta, rng);
  RangeSet r = range_of(t);
  return {std::move(t), std::move(r)};
}

// ---------------------------------------------------------------------- I/O

void write_tree(std::ostream& out, const PlaneTree& tree, const std::vector<Point>* pos, int dim) {
  const int d = pos ? dim : 0;
  out << "tree " << tree.size() << ' ' << d << '\n';
  for (std::size_t u = 0; u < tree.size(); ++u) out << (u ? " " : "") << tree.offspring(u);
  out << '\n';
  if (pos) {
    for (const auto& p : *pos) {
      for (int i = 0; i < d; ++i) out << (i ? " " : "") << p[i];
      out << '\n';
    }
  }
}

SpatialTree read_tree(std::istream& in) {
  std::string tag;
  std::size_t n = 0;
  int d = 0;
  if (!(in >> tag >> n >> d) || tag != "tree") throw Error(Errc::kIoError, "expected 'tree <n> <d>' header");
  std::vector<std::int32_t> k(n);
  for (auto& v : k)
    if (!(in >> v)) throw Error(Errc::kIoError, "truncated offspring sequence");
  SpatialTree t;
  t.tree = PlaneTree(std::move(k));
  t.dim = d;
  t.pos.assign(n, Point{});
  if (d > 0) {
    for (auto& p : t.pos)
      for (int i = 0; i < d; ++i)
        if (!(in >> p[i])) throw Error(Errc::kIoError, "truncated positions");
  }
  return t;
}

}  // namespace brwcap

#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <functional>
#include <map>
#include <limits>

#include "brwcap/error.hpp"
#include "brwcap/spine_forest.hpp"

using namespace brwcap;

namespace {

const OffspringLaw kGeo = OffspringLaw::geometric_half();
const StepLaw kSrw = StepLaw::simple(3);
constexpr std::int64_t kCeiling = 1000000;

// Depth-first order of the materialized forest, recomputed from the parent
// and children links alone: walk up from v_0 along the spine, emitting left
// trees (reversed) below index 0 and right trees above.
std::vector<std::int64_t> explicit_dfs_positive(const SpineForest& f, int spines) {
  std::vector<std::int64_t> out;
  std::function<void(std::int64_t)> visit = [&](std::int64_t u) {
    out.push_back(u);
    for (auto c : f.children(u)) visit(c);
  };
  visit(f.spine_node(0));
  for (int i = 1; i <= spines; ++i) {
    const auto kids = f.children(f.spine_node(i));
    const auto [kp, km] = f.spine_pair(i);
    for (auto j = static_cast<std::size_t>(km + 1); j < kids.size(); ++j) visit(kids[j]);
    (void)kp;
  }
  return out;
}

std::vector<std::int64_t> explicit_dfs_negative(const SpineForest& f, int spines) {
  // index -1, -2, ... : for spine i, its left trees in reverse plane order
  // (each in reverse depth-first order), then spine i itself.
  std::vector<std::int64_t> out;
  std::function<void(std::int64_t, std::vector<std::int64_t>&)> pre = [&](std::int64_t u, std::vector<std::int64_t>& acc) {
    acc.push_back(u);
    for (auto c : f.children(u)) pre(c, acc);
  };
  for (int i = 1; i <= spines; ++i) {
    const auto kids = f.children(f.spine_node(i));
    const auto km = f.spine_pair(i).second;
    for (auto j = km; j-- > 0;) {
      std::vector<std::int64_t> acc;
      pre(kids[static_cast<std::size_t>(j)], acc);
      out.insert(out.end(), acc.rbegin(), acc.rend());
    }
    out.push_back(f.spine_node(i));
  }
  return out;
}

}  // namespace

TEST_SUITE("spine_forest") {

TEST_CASE("the forest depends on the seed only") {
  SpineForest a(kGeo, kSrw, 77), b(kGeo, kSrw, 77);
  a.extend(-50, 50);
  b.extend(0, 10);
  b.extend(-50, -40);
  b.extend(-50, 50);
  for (std::int64_t i = -50; i <= 50; ++i) CHECK(a.position(i) == b.position(i));
  CHECK(a.position(0).is_zero());
}

TEST_CASE("lexicographic indices match an explicit depth-first walk") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    SpineForest f(kGeo, kSrw, seed);
    f.materialize_spines(4);
    const auto [lo, hi] = f.spine_window(4);
    const auto pos = explicit_dfs_positive(f, 4);
    REQUIRE(static_cast<std::int64_t>(pos.size()) == hi + 1);
    for (std::size_t i = 0; i < pos.size(); ++i) CHECK(f.node_at(static_cast<std::int64_t>(i)) == pos[i]);
    const auto neg = explicit_dfs_negative(f, 4);
    REQUIRE(static_cast<std::int64_t>(neg.size()) == -lo);
    for (std::size_t j = 0; j < neg.size(); ++j) CHECK(f.node_at(-static_cast<std::int64_t>(j) - 1) == neg[j]);
    for (std::int64_t i = lo; i <= hi; ++i) CHECK(f.lex_index(f.node_at(i)) == i);
  }
}

TEST_CASE("positions are sums of theta steps along the tree") {
  SpineForest f(kGeo, kSrw, 5);
  f.extend(-200, 200);
  for (std::int64_t i = -200; i <= 200; ++i) {
    const auto u = f.node_at(i);
    const auto p = f.parent(u);
    if (p >= 0) CHECK(kSrw.pmf(f.node_position(u) - f.node_position(p)) > 0.0);
  }
}

TEST_CASE("spine pairs") {
  Rng seeds(3);
  const int N = 100000;
  // Subtrees past the ceiling are rare enough (about 1e-3) to drop.
  int n = 0, zero = 0, plus2 = 0;
  for (int s = 0; s < N; ++s) {
    SpineForest f(kGeo, kSrw, seeds.next(), kCeiling);
    try {
      f.materialize_spines(1);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kCeilingExceeded);
      continue;
    }
    ++n;
    const auto [kp, km] = f.spine_pair(1);
    zero += kp == 0 && km == 0;
    plus2 += kp == 2;
    CHECK(f.offspring(f.spine_node(1)) == kp + km + 1);
  }
  CHECK(n > N * 0.99);
  auto ok = [&](int hits, double p) { return std::abs(hits / double(n) - p) <= 3 * std::sqrt(p * (1 - p) / n); };
  CHECK(ok(zero, 0.25));
  CHECK(ok(plus2, kGeo.spine_marginal(2)));
}

TEST_CASE("base subtree with no spine") {
  SpineForest f(kGeo, kSrw, 9);
  f.materialize_spines(0);
  const auto t = f.base_subtree();
  const auto [lo, hi] = f.spine_window(0);
  CHECK(lo == 0);
  CHECK(hi + 1 == static_cast<std::int64_t>(t.tree.size()));
  const auto w = window_range(f, 0, hi);
  RangeSet direct(3);
  for (const auto& p : t.pos) direct.add(p);
  CHECK(w.range.size() == direct.size());
  for (const auto& p : direct.points()) CHECK(w.range.contains(p));
}

TEST_CASE("windows") {
  SpineForest f(kGeo, kSrw, 12);
  f.extend(-100, 100);
  const auto one = window_range(f, 0, 0);
  CHECK(one.range.size() == 1);
  CHECK(one.range.contains(Point{}));
  const auto small = window_range(f, -10, 20), big = window_range(f, -40, 60);
  for (const auto& p : small.range.points()) CHECK(big.range.contains(p));
  CHECK_THROWS_AS(window_range(f, 1, 5), Error);
  CHECK_THROWS_AS(ForestView(f).window(-100, 101), Error);
}

TEST_CASE("shift re-indexing equations") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    SpineForest f(kGeo, kSrw, seed);
    f.extend(-30, 30);
    const ForestView v(f);
    const auto s = v.shift();
    CHECK(s.position(0).is_zero());
    for (std::int64_t i = -29; i <= 28; ++i) {
      CHECK(s.node_at(i) == v.node_at(i + 1));
      CHECK(s.position(i) + v.position(1) == v.position(i + 1));
    }
    CHECK(s.shift().position(0).is_zero());
  }
  SpineForest f(kGeo, kSrw, 1);
  f.extend(0, 0);
  CHECK_THROWS_AS(ForestView(f).shift(), Error);
}

TEST_CASE("degrees of v_0 and v_1 have the same law before and after the shift") {
  const int N = 100000;
  std::map<std::pair<int, int>, std::int64_t> before, after;
  Rng seeds(17);
  for (int s = 0; s < N; ++s) {
    SpineForest f(kGeo, kSrw, seeds.next());
    f.extend(-2, 2);
    const ForestView v(f), w = v.shift();
    auto deg = [&](const ForestView& x, std::int64_t i) { return std::min(f.offspring(x.node_at(i)), 4); };
    ++before[{deg(v, 0), deg(v, 1)}];
    ++after[{deg(w, 0), deg(w, 1)}];
  }
  // two-sample chi-square on the joint table
  double x2 = 0.0;
  int cells = 0;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b) {
      const double o1 = static_cast<double>(before[{a, b}]), o2 = static_cast<double>(after[{a, b}]);
      if (o1 + o2 == 0) continue;
      const double e = (o1 + o2) / 2;
      x2 += (o1 - e) * (o1 - e) / e + (o2 - e) * (o2 - e) / e;
      ++cells;
    }
  const boost::math::chi_squared dist(cells - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, x2)) > 0.001);
}

TEST_CASE("cylinder probabilities") {
  CHECK(cylinder_probability(kGeo, PlaneTree({0})) == 0.5);
  CHECK(cylinder_probability(kGeo, PlaneTree({2, 0, 0})) == doctest::Approx(0.125 * 0.5 * 0.5).epsilon(1e-15));
  // shapes that differ only in where the base sits are equally likely
  ForestShape a, b;
  a.other = b.other = false;
  a.counts = b.counts = {2, 0, 0};
  a.base_rank = 1;
  b.base_rank = 2;
  CHECK(a.key() != b.key());
  CHECK(cylinder_probability(kGeo, PlaneTree(a.counts)) == cylinder_probability(kGeo, PlaneTree(b.counts)));
}

TEST_CASE("asymmetric displacements are rejected") {
  CHECK_THROWS_AS(SpineForest(kGeo, StepLaw::parse("pmf:1;2=0.25;-1=0.5;0=0.25"), 1), Error);
}

TEST_CASE("one-sided marginal and window size are recorded") {
  // zeta_n grows like n^2 up to logarithms; only its trend is watched.
  Rng seeds(23);
  std::vector<double> med;
  for (int n : {16, 32, 64, 128, 256}) {
    std::vector<double> z;
    for (int s = 0; s < 200; ++s) {
      SpineForest f(kGeo, kSrw, seeds.next(), kCeiling);
      try {
        f.materialize_spines(n);
      } catch (const Error&) {
        z.push_back(std::numeric_limits<double>::infinity());
        continue;
      }
      const auto [lo, hi] = f.spine_window(n);
      z.push_back(static_cast<double>(hi - lo));
    }
    std::nth_element(z.begin(), z.begin() + 100, z.end());
    med.push_back(z[100]);
  }
  MESSAGE("median zeta_n for n = 16..256: " << med[0] << " " << med[1] << " " << med[2] << " " << med[3] << " "
                                             << med[4]);
  CHECK(med.back() > med.front());
}

}

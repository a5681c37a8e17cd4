#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <sstream>

#include "brwcap/error.hpp"
#include "brwcap/trees.hpp"

using namespace brwcap;

namespace {

bool within_3se(std::int64_t hits, std::int64_t n, double p) {
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
  return std::abs(static_cast<double>(hits) / static_cast<double>(n) - p) <= 3 * se;
}

double chi_square_p(const std::map<std::string, std::int64_t>& counts, const std::map<std::string, double>& probs,
                    std::int64_t n) {
  double x2 = 0.0;
  for (const auto& [k, p] : probs) {
    const auto it = counts.find(k);
    const double o = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    const double e = p * static_cast<double>(n);
    x2 += (o - e) * (o - e) / e;
  }
  if (probs.size() < 2) return 1.0;
  const boost::math::chi_squared dist(static_cast<double>(probs.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, x2));
}

double catalan(int n) {
  double c = 1.0;
  for (int i = 0; i < n; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
  return c;
}

}  // namespace

TEST_SUITE("trees") {

TEST_CASE("leaf law gives single nodes") {
  const auto leaf = OffspringLaw::from_pmf({1.0}, false);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) CHECK(sample_gw(leaf, rng).size() == 1);
}

TEST_CASE("unconditioned size law") {
  const auto mu = OffspringLaw::geometric_half();
  Rng rng(2);
  const int N = 100000;
  std::int64_t one = 0, three = 0;
  for (int i = 0; i < N; ++i) {
    try {
      const auto t = sample_gw(mu, rng, 1000);
      one += t.size() == 1;
      three += t.size() == 3;
      CHECK(PlaneTree::is_lukasiewicz(t.offspring()));
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kCeilingExceeded);
    }
  }
  CHECK(within_3se(one, N, 0.5));
  CHECK(within_3se(three, N, 1.0 / 16));
}

TEST_CASE("critical generation sizes have mean one") {
  const auto mu = OffspringLaw::geometric_half();
  Rng rng(3);
  const int N = 1000000;
  std::vector<double> s1(6), s2(6);
  for (int i = 0; i < N; ++i) {
    const auto g = sample_gw_truncated(mu, 5, rng).generation_sizes(5);
    for (std::size_t h = 0; h < 6; ++h) {
      const double v = h < g.size() ? static_cast<double>(g[h]) : 0.0;
      s1[h] += v;
      s2[h] += v * v;
    }
  }
  for (std::size_t h = 0; h < 6; ++h) {
    const double m = s1[h] / N;
    const double se = std::sqrt((s2[h] / N - m * m) / N);
    CHECK(std::abs(m - 1.0) <= 3 * se + 1e-15);
  }
}

TEST_CASE("node ceiling") {
  const auto mu = OffspringLaw::geometric_half();
  Rng rng(4);
  bool hit = false;
  for (int i = 0; i < 1000 && !hit; ++i) {
    try {
      sample_gw(mu, rng, 50);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kCeilingExceeded);
      CHECK(e.detail() == 50);
      hit = true;
    }
  }
  CHECK(hit);
}

TEST_CASE("conditioned sampler edge cases") {
  Rng rng(5);
  const auto g = OffspringLaw::geometric_half();
  CHECK(sample_gw_conditioned(g, 1, rng).size() == 1);
  try {
    sample_gw_conditioned(OffspringLaw::binary(), 2, rng);
    FAIL("binary trees have odd size");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kInfeasibleSize);
  }
  CHECK(!size_feasible(OffspringLaw::binary(), 4));
  CHECK(size_feasible(OffspringLaw::binary(), 5));
  CHECK(sample_gw_conditioned(g, 5000, rng).size() == 5000);
}

TEST_CASE("conditioned shapes match enumeration") {
  const std::vector<OffspringLaw> laws{OffspringLaw::geometric_half(), OffspringLaw::binary(),
                                       OffspringLaw::parse("0:0.25,1:0.5,2:0.25"),
                                       OffspringLaw::parse("0:0.4,1:0.4,3:0.2")};
  Rng rng(6);
  const int N = 100000;
  for (const auto& mu : laws) {
    for (int n = 1; n <= 6; ++n) {
      if (!size_feasible(mu, n)) continue;
      std::map<std::string, double> probs;
      double total = 0.0;
      for (const auto& [t, p] : enumerate_small_trees(mu, n)) {
        if (p == 0.0) continue;
        probs[t.key()] += p;
        total += p;
      }
      for (auto& [k, p] : probs) p /= total;
      std::map<std::string, std::int64_t> counts;
      for (int i = 0; i < N; ++i) {
        const auto t = sample_gw_conditioned(mu, n, rng);
        REQUIRE(t.size() == static_cast<std::size_t>(n));
        ++counts[t.key()];
      }
      for (const auto& [k, c] : counts) CHECK(probs.count(k) == 1);
      CHECK(chi_square_p(counts, probs, N) > 0.001);
    }
  }
}

TEST_CASE("enumeration") {
  const auto g = OffspringLaw::geometric_half();
  CHECK(enumerate_small_trees(g, 5).size() == 14);
  const auto three = enumerate_small_trees(g, 3);
  REQUIRE(three.size() == 2);
  for (const auto& [t, p] : three) CHECK(p == doctest::Approx(1.0 / 32).epsilon(1e-15));
  CHECK(enumerate_small_trees(g, 1).front().second == 0.5);
}

TEST_CASE("kemperman formula") {
  const auto g = OffspringLaw::geometric_half();
  CHECK(kemperman_prob(g, 1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kemperman_prob(g, 1, 3) == doctest::Approx(1.0 / 16).epsilon(1e-15));
  for (const auto& mu : {g, OffspringLaw::binary()})
    for (int n = 1; n <= 8; ++n)
      for (int m = 1; m <= 8; ++m) CHECK(std::abs(kemperman_prob(mu, n, m) - enumerate_forest_probability(mu, n, m)) <= 1e-12);
  // Two geometric trees: the law of their total is the convolution of the
  // single-tree law P(#T = m) = Catalan(m - 1) 2^{1 - 2m}.
  for (int m = 2; m <= 200; ++m) {
    double conv = 0.0;
    for (int a = 1; a < m; ++a)
      conv += catalan(a - 1) * std::pow(2.0, 1 - 2 * a) * catalan(m - a - 1) * std::pow(2.0, 1 - 2 * (m - a));
    CHECK(kemperman_prob(g, 2, m) == doctest::Approx(conv).epsilon(1e-10));
  }
}

TEST_CASE("cycle lemma") {
  Rng rng(7);
  const auto g = OffspringLaw::geometric_half();
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = sample_gw_conditioned(g, 30, rng);
    auto seq = t.offspring();
    const auto shift = static_cast<std::ptrdiff_t>(rng.below(seq.size()));
    std::rotate(seq.begin(), seq.begin() + shift, seq.end());
    const auto fixed = cycle_lemma_rotate(seq);
    CHECK(PlaneTree::is_lukasiewicz(fixed));
    CHECK(fixed == t.offspring());
  }
}

TEST_CASE("embedding") {
  Rng rng(8);
  const auto srw = StepLaw::simple(3);
  const auto single = embed_and_range(PlaneTree({0}), srw, rng);
  CHECK(single.second.size() == 1);
  CHECK(single.second.contains(Point{}));

  std::vector<std::int32_t> path(20, 1);
  path.back() = 0;
  const auto walk = embed(PlaneTree(path), srw, rng);
  for (std::size_t i = 1; i < walk.pos.size(); ++i) CHECK(srw.pmf(walk.pos[i] - walk.pos[i - 1]) > 0.0);

  const auto t = sample_gw_conditioned(OffspringLaw::geometric_half(), 300, rng);
  const auto [st, range] = embed_and_range(t, srw, rng);
  CHECK(range.size() <= t.size());
  CHECK(range.total_visits() == static_cast<std::int64_t>(t.size()));
  for (std::size_t u = 1; u < t.size(); ++u)
    CHECK(srw.pmf(st.pos[u] - st.pos[static_cast<std::size_t>(t.parent()[u])]) > 0.0);
}

TEST_CASE("tree text format round trip") {
  Rng rng(9);
  const auto t = sample_gw_conditioned(OffspringLaw::geometric_half(), 40, rng);
  const auto st = embed(t, StepLaw::simple(4), rng);
  std::stringstream io;
  write_tree(io, t, &st.pos, 4);
  const auto back = read_tree(io);
  CHECK(back.tree.offspring() == t.offspring());
  CHECK(back.dim == 4);
  CHECK(back.pos == st.pos);
  CHECK_THROWS_AS(PlaneTree({1, 1}), Error);
}

}

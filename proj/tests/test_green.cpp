#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "brwcap/error.hpp"
#include "brwcap/green.hpp"
#include "brwcap/green_table.hpp"

using namespace brwcap;

namespace {

std::vector<Point> sample_points(int d, int count, int radius, Rng& rng) {
  std::vector<Point> out;
  for (int i = 0; i < count; ++i) {
    Point p;
    for (int a = 0; a < d; ++a) p[a] = static_cast<int>(rng.below(2 * radius + 1)) - radius;
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_SUITE("green") {

TEST_CASE("no steps survive at lambda 0") {
  const auto law = StepLaw::simple(3);
  GreenEvaluator g(law, 0.0);
  CHECK(g(Point{}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(g(unit(0))) <= 1e-12);
}

TEST_CASE("series oracle by hand") {
  const auto law = StepLaw::simple(3);
  CHECK(green_series_oracle(law, Point{}, 1.0, 0).value == 1.0);
  CHECK(green_series_oracle(law, unit(1), 1.0, 0).value == 0.0);
  CHECK(green_series_oracle(law, Point{}, 1.0, 2).value == doctest::Approx(7.0 / 6.0).epsilon(1e-15));
  CHECK(green_series_oracle(law, Point{}, 1.0, 100).value >= green_series_oracle(law, Point{}, 1.0, 10).value);
}

TEST_CASE("d = 3 origin value against a long series") {
  const auto law = StepLaw::simple(3);
  const auto s = green_series_oracle(law, Point{}, 1.0, 20000);
  CHECK(std::abs(GreenEvaluator(law, 1.0)(Point{}) - (s.value + s.tail)) <= 1e-4);
}

TEST_CASE("symmetry") {
  Rng rng(3);
  const auto srw = StepLaw::simple(6);
  const auto skew = StepLaw::parse("pmf:2;1,0=0.3;-1,0=0.3;0,1=0.1;0,-1=0.1;1,1=0.1;-1,-1=0.1");
  GreenEvaluator g(srw, 1.0), h(skew, 0.9);
  for (const auto& p : sample_points(6, 20, 5, rng)) CHECK(g(p) == doctest::Approx(g(-p)).epsilon(1e-12));
  for (const auto& p : sample_points(2, 20, 5, rng)) CHECK(h(p) == doctest::Approx(h(-p)).epsilon(1e-9));
}

TEST_CASE("simple walk probabilities respect parity") {
  const auto law = StepLaw::simple(4);
  const auto p = step_probabilities(law, Point{{1, 1, 1, 0}}, 12);
  for (std::size_t k = 0; k < p.size(); k += 2) CHECK(p[k] == 0.0);
  CHECK(p[3] > 0.0);
}

TEST_CASE("asymptotic constant and scaling") {
  const auto srw = StepLaw::simple(6);
  CHECK(GaussianSurrogate(srw).green_constant() == doctest::Approx(108.0 / std::pow(std::numbers::pi, 3)).epsilon(1e-12));
  Point x{{3, 1, -2, 0, 1, 0}};
  Point x2 = x + x;
  CHECK(green_asymptotic(srw, x2) == doctest::Approx(green_asymptotic(srw, x) / 16.0).epsilon(1e-12));
  Point far;
  far[0] = 20;
  CHECK(std::abs(green_fourier(srw, far, 1.0) / green_asymptotic(srw, far) - 1.0) <= 0.02);
}

TEST_CASE("killed and plain Green's functions differ by O(1/n)") {
  // n (G - G^{1-1/n})(x) increases to sum_k k p_k(x), since 1 - (1 - 1/n)^k <= k/n.
  const auto srw = StepLaw::simple(6);
  GreenEvaluator plain(srw, 1.0);
  Rng rng(8);
  const int K = 4000;
  for (const auto& p : sample_points(6, 6, 4, rng)) {
    const auto pk = step_probabilities(srw, p, K);
    double limit = 0.0;
    for (int k = 1; k <= K; ++k) limit += k * pk[static_cast<std::size_t>(k)];
    // k p_k ~ a / k^2 past K
    limit += static_cast<double>(K) * K * 0.5 * (pk[K] + pk[K - 1]);
    double last = 0.0;
    for (double n : {1e2, 1e3, 1e4}) {
      GreenEvaluator killed(srw, 1.0 - 1.0 / n);
      const double v = n * (plain(p) - killed(p));
      CHECK(v >= last);
      CHECK(v <= limit * 1.001);
      last = v;
    }
    CHECK(last >= 0.9 * limit);
  }
}

TEST_CASE("fourier and series agree on 50 points per law") {
  Rng rng(21);
  struct Case {
    StepLaw law;
    double lambda;
    std::int64_t N;
    int radius, box;
  };
  const std::vector<Case> cases{
      {StepLaw::simple(6), 1.0, 2000, 3, 0},
      {StepLaw::lazy_simple(3, 0.5), 0.999, 8000, 3, 0},
      {StepLaw::parse("pmf:2;1,0=0.3;-1,0=0.3;0,1=0.1;0,-1=0.1;1,1=0.1;-1,-1=0.1"), 0.9, 200, 4, 200},
  };
  for (const auto& c : cases) {
    GreenEvaluator g(c.law, c.lambda);
    for (const auto& p : sample_points(c.law.dim(), 50, c.radius, rng)) {
      const auto s = green_series_oracle(c.law, p, c.lambda, c.N, c.box);
      CHECK(std::abs(g(p) - (s.value + s.tail)) <= std::max(1e-6, 3.0 * std::abs(s.tail)));
    }
  }
}

TEST_CASE("local CLT") {
  const auto lazy = StepLaw::lazy_simple(1, 0.5);
  CHECK(lclt_density(lazy, 50, Point{}) ==
        doctest::Approx(std::pow(2 * std::numbers::pi * 50, -0.5) / std::sqrt(lazy.covariance_det())).epsilon(1e-12));
  const auto exact = step_probabilities(lazy, Point{}, 400);
  const double c = 100 * std::abs(lclt_density(lazy, 100, Point{}) - exact[100]);
  for (int n : {200, 400}) CHECK(std::abs(lclt_density(lazy, n, Point{}) - exact[static_cast<std::size_t>(n)]) <= c / n);
  // total mass on the lattice
  double mass = 0.0;
  for (int x = -200; x <= 200; ++x) mass += lclt_density(lazy, 100, Point{{x}});
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("green table is pure, canonical and persistent") {
  const auto srw = StepLaw::simple(6);
  GreenTable t(srw, 1.0);
  const Point x{{2, -1, 0, 0, 3, 0}};
  const double v = t(x);
  CHECK(t(x) == v);
  CHECK(t(-x) == v);
  CHECK(t(Point{{3, 2, 1, 0, 0, 0}}) == v);

  const auto path = (std::filesystem::temp_directory_path() / "brwcap_green_test.bin").string();
  t.save(path);
  GreenTable u(srw, 1.0);
  u.load(path);
  u.freeze();
  CHECK(u(x) == v);
  try {
    u(Point{{9, 9, 9, 0, 0, 0}});
    FAIL("expected a cache miss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kCacheMiss);
  }
  GreenTable other(StepLaw::simple(5), 1.0);
  CHECK_THROWS_AS(other.load(path), Error);
  std::filesystem::remove(path);
}

}

#include <doctest.h>

#include <cmath>

#include "brwcap/error.hpp"
#include "brwcap/laws.hpp"

using namespace brwcap;

TEST_SUITE("laws") {

TEST_CASE("offspring laws are critical and normalized") {
  for (const auto& mu : {OffspringLaw::geometric_half(), OffspringLaw::binary(), OffspringLaw::parse("0:0.25,1:0.5,2:0.25"),
                         OffspringLaw::parse("{0:0.5,2:0.5}")}) {
    double total = 0.0, mean = 0.0;
    for (std::int64_t k = 0; k < 200; ++k) {
      total += mu.pmf(k);
      mean += static_cast<double>(k) * mu.pmf(k);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(std::abs(mean - 1.0) <= 1e-12);
    CHECK(mu.mean() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(OffspringLaw::geometric_half().pmf(3) == 1.0 / 16);
}

TEST_CASE("invalid offspring laws are rejected") {
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::kIoError;
  };
  CHECK(code([] { OffspringLaw::from_pmf({0.0, 1.0}); }) == Errc::kDegenerateDelta1);
  CHECK(code([] { OffspringLaw::from_pmf({0.6, 0.0, 0.4}); }) == Errc::kNotCritical);
  CHECK(code([] { OffspringLaw::from_pmf({-0.5, 1.0, 0.5}); }) == Errc::kNegativeMass);
  CHECK(code([] { OffspringLaw::from_pmf({0.5, 0.6}); }) == Errc::kInvalidLaw);
  // unchecked construction admits the degenerate leaf law
  CHECK(OffspringLaw::from_pmf({1.0}, false).pmf(0) == 1.0);
}

TEST_CASE("variance factor") {
  CHECK(OffspringLaw::geometric_half().variance_factor() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(OffspringLaw::binary().variance_factor() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(OffspringLaw::from_pmf({1.0}, false).variance_factor() == 0.0);
}

TEST_CASE("spine pair law") {
  const auto g = OffspringLaw::geometric_half();
  CHECK(g.spine_pair(0, 0) == 0.25);
  CHECK(OffspringLaw::binary().spine_pair(1, 0) == 0.5);
  for (const auto& mu : {g, OffspringLaw::binary()}) {
    double total = 0.0;
    for (int i = 0; i < 80; ++i) {
      double row = 0.0;
      for (int j = 0; j < 80; ++j) row += mu.spine_pair(i, j);
      double tail = 0.0;
      for (int k = i + 1; k < 200; ++k) tail += mu.pmf(k);
      CHECK(row == doctest::Approx(tail).epsilon(1e-12));
      CHECK(mu.spine_marginal(i) == doctest::Approx(tail).epsilon(1e-12));
      total += row;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("spine pair sampling frequencies") {
  const auto mu = OffspringLaw::geometric_half();
  Rng rng(11);
  const int N = 100000;
  int both_zero = 0, plus_one = 0;
  for (int i = 0; i < N; ++i) {
    const auto [p, m] = mu.sample_spine_pair(rng);
    both_zero += p == 0 && m == 0;
    plus_one += p == 1;
  }
  auto within = [&](int hits, double p) {
    const double se = std::sqrt(p * (1 - p) / N);
    return std::abs(static_cast<double>(hits) / N - p) <= 3 * se;
  };
  CHECK(within(both_zero, 0.25));
  CHECK(within(plus_one, mu.spine_marginal(1)));
}

TEST_CASE("merged law") {
  const auto g = OffspringLaw::geometric_half().merged();
  CHECK(g.pmf(0) == 0.25);
  for (int k = 0; k < 20; ++k) CHECK(g.pmf(k) == doctest::Approx((k + 1) * std::pow(2.0, -k - 2)).epsilon(1e-14));
  const auto b = OffspringLaw::binary().merged();
  CHECK(b.pmf(1) == 1.0);
  CHECK(b.pmf(0) == 0.0);
  for (const auto& mu : {OffspringLaw::geometric_half(), OffspringLaw::binary()}) {
    const auto m = mu.merged();
    double total = 0.0, mean = 0.0, direct = 0.0;
    for (int k = 0; k < 300; ++k) {
      total += m.pmf(k);
      mean += k * m.pmf(k);
      direct += k * (k + 1) * mu.pmf(k + 1);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(mean - direct) <= 1e-12);
  }
}

TEST_CASE("offspring sampling matches the pmf") {
  const auto mu = OffspringLaw::geometric_half();
  Rng rng(5);
  const int N = 200000;
  std::vector<int> hist(8);
  for (int i = 0; i < N; ++i) {
    const auto k = mu.sample(rng);
    if (k < 8) ++hist[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < 8; ++k) {
    const double p = mu.pmf(k);
    CHECK(std::abs(hist[static_cast<std::size_t>(k)] / double(N) - p) <= 3 * std::sqrt(p * (1 - p) / N) + 1e-12);
  }
}

TEST_CASE("simple walk") {
  const auto s = StepLaw::simple(6);
  CHECK(s.dim() == 6);
  CHECK(s.symmetric());
  CHECK(s.periodic());
  CHECK(s.covariance().isApprox(Eigen::MatrixXd::Identity(6, 6) / 6.0, 1e-15));
  CHECK(s.covariance_det() == doctest::Approx(std::pow(6.0, -6)).epsilon(1e-12));
  CHECK(StepLaw::parse("srw:6").hash() == s.hash());
  CHECK(!StepLaw::lazy_simple(3, 0.5).periodic());
}

TEST_CASE("empirical step covariance") {
  const auto law = StepLaw::parse("pmf:2;1,0=0.3;-1,0=0.3;0,1=0.1;0,-1=0.1;1,1=0.1;-1,-1=0.1");
  Rng rng(99);
  const int N = 1000000;
  Eigen::Matrix2d s2 = Eigen::Matrix2d::Zero(), s4 = Eigen::Matrix2d::Zero();
  for (int i = 0; i < N; ++i) {
    const auto x = law.sample(rng);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double v = double(x[a]) * x[b];
        s2(a, b) += v;
        s4(a, b) += v * v;
      }
  }
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double m = s2(a, b) / N;
      const double se = std::sqrt((s4(a, b) / N - m * m) / N);
      CHECK(std::abs(m - law.covariance()(a, b)) <= 3 * se);
    }
  CHECK(law.symmetric());
  CHECK(!law.separable());
}

TEST_CASE("asymmetric and malformed step laws") {
  const auto skew = StepLaw::parse("pmf:1;2=0.25;-1=0.5;0=0.25");
  CHECK(!skew.symmetric());
  CHECK_THROWS_AS(StepLaw::parse("pmf:1;1=0.5;-1=0.25;0=0.25"), Error);  // drift
  CHECK_THROWS_AS(StepLaw::parse("pmf:1;2=0.5;-2=0.5"), Error);           // sublattice
  CHECK_THROWS_AS(StepLaw::parse("walk6"), Error);
}

}

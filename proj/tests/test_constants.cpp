#include <doctest.h>

#include <cmath>
#include <numbers>

#include "brwcap/constants.hpp"
#include "brwcap/error.hpp"

using namespace brwcap;

namespace {
const double kPi3 = std::pow(std::numbers::pi, 3);
const StepLaw kSrw6 = StepLaw::simple(6);
}  // namespace

TEST_SUITE("constants") {

TEST_CASE("isotropic Brownian oracle") {
  CHECK(isotropic_bm_oracle(6, 1.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(isotropic_bm_oracle(6, 1.0 / 6) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(isotropic_bm_oracle(3, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("continuum profile") {
  const ContinuumF F(kSrw6, kSrw6);
  CHECK(F.isotropic());
  CHECK(F.kappa() == doctest::Approx(9.0 / kPi3).epsilon(1e-9));
  Point z{{20, 3, 0, 0, -1, 0}};
  CHECK(F(z) * static_cast<double>(z.norm2()) == doctest::Approx(9.0 / kPi3).epsilon(1e-9));
  // the quadrature path, forced by unequal covariances
  const ContinuumF G(kSrw6, StepLaw::lazy_simple(6, 0.3));
  const ContinuumF H(StepLaw::parse("pmf:6;1,0,0,0,0,0=0.15;-1,0,0,0,0,0=0.15;0,1,0,0,0,0=0.1;0,-1,0,0,0,0=0.1;"
                                    "0,0,1,0,0,0=0.1;0,0,-1,0,0,0=0.1;0,0,0,1,0,0=0.05;0,0,0,-1,0,0=0.05;"
                                    "0,0,0,0,1,0=0.05;0,0,0,0,-1,0=0.05;0,0,0,0,0,1=0.05;0,0,0,0,0,-1=0.05"),
                    kSrw6);
  CHECK(!H.isotropic());
  for (const auto* f : {&G, &H}) {
    const Point y{{3, -1, 2, 0, 1, 1}};
    CHECK((*f)(y + y) * 4 == doctest::Approx((*f)(y)).epsilon(1e-9));
    CHECK((*f)(y) == doctest::Approx((*f)(-y)).epsilon(1e-12));
  }
  // the prefactor agrees with the product of Green constants for any pair
  CHECK(F.prefactor() == doctest::Approx(F.green_constant_product()).epsilon(1e-12));
  CHECK(H.prefactor() == doctest::Approx(H.green_constant_product()).epsilon(1e-12));
  CHECK(F.prefactor() == doctest::Approx(11664.0 / (kPi3 * kPi3)).epsilon(1e-12));
}

TEST_CASE("lattice profile") {
  const LatticeF phi(kSrw6, kSrw6);
  for (int r : {20, 30}) {
    Point z;
    z[0] = r;
    CHECK(std::abs(phi(z) * r * r / (9.0 / kPi3) - 1.0) <= 0.02);
  }
  Point a{{10, 0, 0, 0, 0, 0}}, b{{20, 0, 0, 0, 0, 0}};
  CHECK(std::abs(phi(b) * 4 / phi(a) - 1.0) <= 0.02);
  CHECK(phi(a) == phi(-a));
}

TEST_CASE("branching walk oracle at |z| = 10") {
  const auto mu = OffspringLaw::geometric_half();
  GreenTable g(kSrw6, 1.0);
  const LatticeF phi(kSrw6, kSrw6);
  Point z;
  z[0] = 10;
  Rng rng(12);
  const auto r = brw_green_oracle(mu, kSrw6, g, z, 20000, 400, rng);
  CHECK(std::abs(r.mean - phi(z)) <= 3 * r.std_error);
  // past depth D the walk has forgotten z: sum_{h > D} E G(S_h) ~ 13.5 / (pi^3 D)
  const double far = 13.5 / (kPi3 * 400);
  CHECK(r.tail > 0.5 * far);
  CHECK(r.tail < far);
}

TEST_CASE("second moment stays of order |z|^-2") {
  const auto mu = OffspringLaw::geometric_half();
  GreenTable g(kSrw6, 1.0);
  std::vector<double> scaled;
  for (int r : {5, 10, 20, 40}) {
    Point z;
    z[0] = r;
    Rng rng(40 + static_cast<std::uint64_t>(r));
    const auto o = brw_green_oracle(mu, kSrw6, g, z, 5000, 200, rng);
    scaled.push_back(o.second_moment * r * r);
  }
  MESSAGE("second moment x |z|^2: " << scaled[0] << " " << scaled[1] << " " << scaled[2] << " " << scaled[3]);
  // an upper bound: no growth past the smallest radius
  for (double v : scaled) CHECK(v <= 2.0 * scaled[0]);
}

TEST_CASE("Brownian functional") {
  const Eigen::MatrixXd cov = kSrw6.covariance();
  const auto inv2 = [](const Eigen::VectorXd& z) { return 1.0 / z.squaredNorm(); };
  BmOptions opt;
  opt.paths = 20000;
  Rng rng(1);
  const auto r = c_f_mc(inv2, cov, rng, opt);
  CHECK(std::abs(r.value - 1.5) <= 3 * r.std_error);

  Rng zero_rng(2);
  CHECK(c_f_mc([](const Eigen::VectorXd&) { return 0.0; }, cov, zero_rng, opt).value == 0.0);

  // four times the paths, half the error
  opt.paths = 80000;
  opt.min_level = r.level - 1;
  opt.max_level = r.level;
  Rng rng2(3);
  const auto big = c_f_mc(inv2, cov, rng2, opt);
  CHECK(big.std_error / r.std_error == doctest::Approx(0.5).epsilon(0.2));

  BmOptions strict;
  strict.paths = 2000;
  strict.min_level = 2;
  strict.max_level = 3;
  strict.bias_tolerance = 1e-12;
  Rng rng3(4);
  try {
    c_f_mc(inv2, cov, rng3, strict);
    FAIL("expected a grid-bias error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kGridBiasExceedsTolerance);
  }
}

TEST_CASE("C_G") {
  const auto mu = OffspringLaw::geometric_half();
  Rng rng(5);
  const auto closed = c_g(mu, kSrw6, kSrw6, ConstantMethod::kClosedForm, rng);
  CHECK(closed.variance_factor == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(closed.c_g == doctest::Approx(27.0 / kPi3).epsilon(1e-9));
  CHECK(closed.c_g == doctest::Approx(closed.variance_factor * closed.prefactor * closed.c_f).epsilon(1e-12));
  BmOptions opt;
  opt.paths = 20000;
  const auto mc = c_g(mu, kSrw6, kSrw6, ConstantMethod::kMcBm, rng, opt);
  CHECK(std::abs(mc.c_g - closed.c_g) <= 3 * mc.std_error);
  CHECK(mc.c_g == doctest::Approx(mc.variance_factor * mc.prefactor * mc.c_f).epsilon(1e-12));
  CHECK_THROWS_AS(c_g(mu, StepLaw::simple(5), StepLaw::simple(5), ConstantMethod::kClosedForm, rng), Error);
  CHECK(parse_constant_method("mc") == ConstantMethod::kMcBm);
}

TEST_CASE("Birkhoff averages of |z|^-2 along a walk") {
  const auto f = [](const Point& x) { return 1.0 / static_cast<double>(x.norm2()); };
  const auto rows = birkhoff_check(f, kSrw6, {1 << 10, 1 << 13, 1 << 16, 1 << 18}, 1.5, 0.2, 300, 7);
  MESSAGE("Birkhoff means " << rows[0].mean << " " << rows[1].mean << " " << rows[2].mean << " " << rows[3].mean);
  MESSAGE("tail frequencies " << rows[0].tail_frequency << " " << rows[1].tail_frequency << " "
                              << rows[2].tail_frequency << " " << rows[3].tail_frequency);
  CHECK(std::abs(rows.back().mean - 1.5) < std::abs(rows.front().mean - 1.5));
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].tail_frequency <= rows[i - 1].tail_frequency);
  const auto zero = birkhoff_check([](const Point&) { return 0.0; }, kSrw6, {64}, 1.0, 0.2, 4, 1);
  CHECK(zero[0].mean == 0.0);
}

}

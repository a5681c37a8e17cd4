#include "brwcap/suites.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "brwcap/capacity.hpp"
#include "brwcap/constants.hpp"
#include "brwcap/error.hpp"
#include "brwcap/green.hpp"
#include "brwcap/green_table.hpp"
#include "brwcap/parallel.hpp"
#include "brwcap/spine_forest.hpp"
#include "brwcap/trees.hpp"

namespace brwcap {

namespace {

// Experiment ids for stream(); one per suite so no two suites share draws.
constexpr std::uint64_t kIdKilled = 0x21, kIdCross = 0x31, kIdBound = 0x41, kIdGreen = 0x51, kIdShift = 0x61,
                        kIdOracle = 0x71, kIdConstant = 0x81;

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

Point random_point(int d, double radius, Rng& rng) {
  std::vector<double> g(static_cast<std::size_t>(d));
  double s = 0.0;
  for (auto& v : g) {
    v = rng.normal();
    s += v * v;
  }
  Point p;
  for (int i = 0; i < d; ++i) p[i] = static_cast<std::int32_t>(std::lround(g[static_cast<std::size_t>(i)] * radius / std::sqrt(s)));
  return p;
}

}  // namespace

double SuiteResult::get(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  throw Error(Errc::kConfigError, "no metric " + key);
}

double c_g_candidate_small() { return 9.0 / std::pow(std::numbers::pi, 3); }
double c_g_candidate_large() { return 27.0 / std::pow(std::numbers::pi, 3); }

SuiteResult kemperman_suite(const Tolerances& tol) {
  Timer t;
  SuiteResult r;
  r.name = "kemperman";
  double worst = 0.0;
  int rows = 0;
  for (const auto& mu : {OffspringLaw::geometric_half(), OffspringLaw::binary()}) {
    for (int n = 1; n <= 8; ++n) {
      for (int m = 1; m <= 8; ++m) {
        const double err = std::abs(kemperman_prob(mu, n, m) - enumerate_forest_probability(mu, n, m));
        if (err > worst) worst = err;
        if (err > tol.kemperman)
          r.notes.push_back(mu.name() + " n=" + std::to_string(n) + " m=" + std::to_string(m) + " off by " + fmt(err));
        ++rows;
      }
    }
  }
  r.metric("rows", rows);
  r.metric("max_abs_error", worst);
  r.pass = worst <= tol.kemperman;
  r.seconds = t.seconds();
  return r;
}

SuiteResult killed_triple_suite(const ExperimentConfig& c, const Tolerances& tol) {
  Timer t;
  SuiteResult r;
  r.name = "killed_triple";
  const auto mu = OffspringLaw::geometric_half();
  const auto srw = StepLaw::simple(6);
  const PathFactory paths = [&](std::uint64_t seed) { return std::make_unique<ForestPath>(mu, srw, seed); };
  r.pass = true;
  for (const auto n : c.killed_n) {
    GreenTable killed(srw, 1.0 - 1.0 / static_cast<double>(n));
    const auto s =
        killed_triple_estimator(paths, srw, killed, n, c.killed_replicas, c.seed, kIdKilled, c.killed_walkers, c.threads);
    const double z = (s.mean - 1.0) / s.std_error;
    const auto tag = "n" + std::to_string(n) + "_";
    r.metric(tag + "mean", s.mean);
    r.metric(tag + "std_error", s.std_error);
    r.metric(tag + "z", z);
    r.metric(tag + "mean_I", s.mean_I);
    r.metric(tag + "mean_G", s.mean_G);
    r.metric(tag + "mean_E_given_I", s.mean_E_given_I);
    if (!(std::abs(z) <= tol.z)) {
      r.pass = false;
      r.notes.push_back("n=" + std::to_string(n) + ": mean " + fmt(s.mean) + " is " + fmt(z) + " SE from 1");
    }
  }
  r.seconds = t.seconds();
  return r;
}

SuiteResult capacity_cross_suite(const ExperimentConfig& c, const Tolerances& tol) {
  Timer t;
  SuiteResult r;
  r.name = "capacity_cross";
  const auto mu = OffspringLaw::geometric_half();
  r.pass = true;

  double worst_singleton = 0.0;
  for (int d : {6, 7}) {
    const auto law = StepLaw::simple(d);
    GreenTable g(law, 1.0);
    RangeSet one(d);
    one.add(Point{});
    const double err = std::abs(capacity_exact(one, g).value - 1.0 / g(Point{}));
    worst_singleton = std::max(worst_singleton, err);
  }
  r.metric("singleton_error", worst_singleton);
  if (!(worst_singleton <= tol.singleton)) {
    r.pass = false;
    r.notes.push_back("singleton capacity differs from 1/G(0) by " + fmt(worst_singleton));
  }

  constexpr std::int64_t kTreeSize = 500;  // so #A <= 500
  const auto sets = c.capacity_sets;
  std::vector<double> z(static_cast<std::size_t>(sets)), size(z.size());
  const auto laws = std::vector<StepLaw>{StepLaw::simple(6), StepLaw::simple(7)};
  GreenTable g6(laws[0], 1.0), g7(laws[1], 1.0);
  parallel_for(sets, c.threads, [&](std::int64_t i) {
    const int which = i < sets / 2 ? 0 : 1;
    const auto& law = laws[static_cast<std::size_t>(which)];
    Rng rng = stream(c.seed, kIdCross, static_cast<std::uint64_t>(law.dim()), static_cast<std::uint64_t>(i));
    const auto tree = sample_gw_conditioned(mu, kTreeSize, rng);
    const auto range = embed_and_range(tree, law, rng).second;
    const auto ex = capacity_exact(range, which == 0 ? g6 : g7);
    EscapeOptions o;
    o.walkers = c.capacity_walkers;
    o.epsilon = c.capacity_epsilon;
    const auto mc = capacity_mc(range, law, rng, o);
    z[static_cast<std::size_t>(i)] = (mc.value - ex.value) / mc.std_error;
    size[static_cast<std::size_t>(i)] = static_cast<double>(range.size());
  });
  double worst = 0.0, largest = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    worst = std::max(worst, std::abs(z[i]));
    largest = std::max(largest, size[i]);
    if (!(std::abs(z[i]) <= tol.z)) {
      r.pass = false;
      r.notes.push_back("set " + std::to_string(i) + ": |z| = " + fmt(std::abs(z[i])));
    }
  }
  r.metric("sets", static_cast<double>(sets));
  r.metric("max_abs_z", worst);
  r.metric("max_set_size", largest);
  r.seconds = t.seconds();
  return r;
}

SuiteResult lower_bound_suite(const ExperimentConfig& c, const Tolerances&) {
  Timer t;
  SuiteResult r;
  r.name = "lower_bound";
  const auto mu = OffspringLaw::geometric_half();
  const auto law = StepLaw::simple(6);
  GreenTable g(law, 1.0);
  const std::int64_t ks[] = {1, 4, 16};
  std::vector<int> violations(static_cast<std::size_t>(c.bound_sets));
  std::vector<double> slack(violations.size());
  parallel_for(c.bound_sets, c.threads, [&](std::int64_t i) {
    Rng rng = stream(c.seed, kIdBound, 0, static_cast<std::uint64_t>(i));
    const auto n = static_cast<std::int64_t>(20 + rng.below(381));
    const auto range = embed_and_range(sample_gw_conditioned(mu, n, rng), law, rng).second;
    const double exact = capacity_exact(range, g).value;
    double gap = INFINITY;
    for (auto k : ks) {
      const double lb = capacity_lower_bound(range, g, k);
      if (lb > exact) ++violations[static_cast<std::size_t>(i)];
      gap = std::min(gap, (exact - lb) / exact);
    }
    slack[static_cast<std::size_t>(i)] = gap;
  });
  int total = 0;
  double tight = INFINITY;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    total += violations[i];
    tight = std::min(tight, slack[i]);
  }
  r.metric("sets", static_cast<double>(c.bound_sets));
  r.metric("violations", total);
  r.metric("min_relative_gap", tight);
  r.pass = total == 0;
  r.seconds = t.seconds();
  return r;
}

SuiteResult green_suite(const ExperimentConfig& c, const Tolerances& tol) {
  Timer t;
  SuiteResult r;
  r.name = "green";
  const auto law = StepLaw::simple(6);
  GreenEvaluator g(law, 1.0);
  g.reserve(60);
  Rng rng = stream(c.seed, kIdGreen, 0, 0);

  double worst = 0.0;
  std::int64_t tested = 0;
  while (tested < c.green_points) {
    const auto p = random_point(6, 20.0 + 40.0 * rng.uniform(), rng);
    const double norm = std::sqrt(static_cast<double>(p.norm2()));
    if (norm < 20.0 || norm > 60.0) continue;
    worst = std::max(worst, std::abs(g(p) / green_asymptotic(law, p) - 1.0));
    ++tested;
  }
  r.metric("asymptotic_points", static_cast<double>(tested));
  r.metric("max_asymptotic_deviation", worst);
  bool ok = worst <= tol.green_ratio;

  // Near the origin, where the series converges quickly enough to be exact.
  double worst_series = 0.0;
  for (std::int64_t i = 0; i < c.series_points; ++i) {
    Point p;
    for (int a = 0; a < 6; ++a) p[a] = static_cast<std::int32_t>(rng.below(7)) - 3;
    const auto s = green_series_oracle(law, p, 1.0, 2000);
    worst_series = std::max(worst_series, std::abs(g(p) - (s.value + s.tail)));
  }
  r.metric("series_points", static_cast<double>(c.series_points));
  r.metric("max_series_difference", worst_series);
  ok = ok && worst_series <= tol.series;
  r.pass = ok;
  r.seconds = t.seconds();
  return r;
}

SuiteResult shift_suite(const ExperimentConfig& c, const Tolerances& tol) {
  Timer t;
  SuiteResult r;
  r.name = "shift";
  const auto mu = OffspringLaw::geometric_half();
  const auto law = StepLaw::simple(6);

  std::map<std::string, double> expect;
  for (int size = 2; size <= 4; ++size) {
    for (const auto& [tree, p] : enumerate_small_trees(mu, size)) {
      // every child of the root can be the base
      const auto& k = tree.offspring();
      std::size_t i = 1;
      for (int child = 0; child < k[0]; ++child) {
        ForestShape sh;
        sh.other = false;
        sh.counts = k;
        sh.base_rank = static_cast<int>(i);
        expect[sh.key()] += p;
        for (std::int64_t open = 1; open > 0; ++i) open += k[i] - 1;
      }
    }
  }
  double listed = 0.0;
  for (const auto& [key, p] : expect) listed += p;
  expect["other"] = 1.0 - listed;

  const auto samples = c.shape_samples;
  constexpr int kChunk = 4096;
  const auto chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::map<std::string, std::int64_t>> base(static_cast<std::size_t>(chunks)), shifted(base.size());
  std::vector<std::int64_t> broken(base.size());
  parallel_for(chunks, c.threads, [&](std::int64_t ch) {
    const auto u = static_cast<std::size_t>(ch);
    const auto end = std::min<std::int64_t>(samples, (ch + 1) * kChunk);
    for (std::int64_t s = ch * kChunk; s < end; ++s) {
      Rng seeder = stream(c.seed, kIdShift, 0, static_cast<std::uint64_t>(s));
      SpineForest f(mu, law, seeder.next());
      f.extend(-6, 8);
      const ForestView view(f);
      const ForestView sigma = view.shift();
      const Point x1 = view.position(1);
      for (std::int64_t i = -5; i <= 6; ++i) {
        if (sigma.node_at(i) != view.node_at(i + 1) || sigma.position(i) + x1 != view.position(i + 1)) {
          ++broken[u];
          break;
        }
      }
      ++base[u][classify_shape(view).key()];
      ++shifted[u][classify_shape(sigma).key()];
    }
  });

  std::int64_t bad = 0;
  std::map<std::string, std::int64_t> b0, b1;
  for (std::size_t u = 0; u < base.size(); ++u) {
    bad += broken[u];
    for (const auto& [k, v] : base[u]) b0[k] += v;
    for (const auto& [k, v] : shifted[u]) b1[k] += v;
  }
  auto chi = [&](std::map<std::string, std::int64_t>& counts, const char* tag) {
    double x2 = 0.0;
    for (const auto& [k, p] : expect) {
      const double e = p * static_cast<double>(samples);
      const double o = static_cast<double>(counts[k]);
      x2 += (o - e) * (o - e) / e;
    }
    for (const auto& [k, v] : counts)
      if (!expect.count(k) && v > 0) r.notes.push_back(std::string(tag) + ": impossible shape " + k);
    const boost::math::chi_squared dist(static_cast<double>(expect.size() - 1));
    const double p = boost::math::cdf(boost::math::complement(dist, x2));
    r.metric(std::string(tag) + "_chi_square", x2);
    r.metric(std::string(tag) + "_p_value", p);
    return p;
  };
  const double p0 = chi(b0, "base");
  const double p1 = chi(b1, "shift");
  r.metric("samples", static_cast<double>(samples));
  r.metric("categories", static_cast<double>(expect.size()));
  r.metric("reindexing_failures", static_cast<double>(bad));
  r.pass = bad == 0 && p0 > tol.chi_square_p && p1 > tol.chi_square_p && r.notes.empty();
  r.seconds = t.seconds();
  return r;
}

SuiteResult f_identity_suite(const ExperimentConfig& c, const Tolerances& tol) {
  Timer t;
  SuiteResult r;
  r.name = "f_identity";
  const auto mu = OffspringLaw::geometric_half();
  const auto law = StepLaw::simple(6);
  const LatticeF phi(law, law);
  const ContinuumF F(law, law);
  GreenTable g(law, 1.0);
  bool ok = true;

  for (int radius : {5, 10}) {
    Point z;
    z[0] = radius;
    Rng rng = stream(c.seed, kIdOracle, static_cast<std::uint64_t>(radius), 0);
    const auto mc = brw_green_oracle(mu, law, g, z, c.oracle_trees, c.oracle_depth, rng);
    const double lattice = phi(z);
    const double zs = (mc.mean - lattice) / mc.std_error;
    const auto tag = "r" + std::to_string(radius) + "_";
    r.metric(tag + "lattice", lattice);
    r.metric(tag + "monte_carlo", mc.mean);
    r.metric(tag + "std_error", mc.std_error);
    r.metric(tag + "z", zs);
    if (!(std::abs(zs) <= tol.z)) {
      ok = false;
      r.notes.push_back("|z| = " + std::to_string(radius) + ": Monte Carlo is " + fmt(zs) + " SE off");
    }
  }

  // Degree -2 scaling: exact for the continuum profile, approximate on the
  // lattice once |z| >= 10.
  double worst_cont = 0.0, worst_lat = 0.0;
  const std::vector<std::vector<int>> dirs{{1, 0, 0, 0, 0, 0}, {1, 1, 0, 0, 0, 0}, {1, 1, 1, 1, 0, 0}, {2, 1, 1, 0, 0, 0}};
  const auto anis = StepLaw::lazy_simple(6, 0.5);
  const ContinuumF G(law, anis);
  for (const auto& dir : dirs) {
    for (int base : {10, 12}) {
      Point z;
      double len2 = 0.0;
      for (int i = 0; i < 6; ++i) len2 += dir[static_cast<std::size_t>(i)] * dir[static_cast<std::size_t>(i)];
      const int m = static_cast<int>(std::ceil(base / std::sqrt(len2)));
      for (int i = 0; i < 6; ++i) z[i] = m * dir[static_cast<std::size_t>(i)];
      for (int lambda : {2, 3}) {
        Point lz;
        for (int i = 0; i < 6; ++i) lz[i] = lambda * z[i];
        const double l2 = lambda * lambda;
        worst_lat = std::max(worst_lat, std::abs(phi(lz) * l2 / phi(z) - 1.0));
        worst_cont = std::max(worst_cont, std::abs(F(lz) * l2 / F(z) - 1.0));
        worst_cont = std::max(worst_cont, std::abs(G(lz) * l2 / G(z) - 1.0));
      }
    }
  }
  r.metric("continuum_homogeneity_deviation", worst_cont);
  r.metric("lattice_homogeneity_deviation", worst_lat);
  ok = ok && worst_cont <= tol.homogeneity && worst_lat <= tol.homogeneity;

  // F(z) |z|^2 against 9 / pi^3 at |z| >= 20.
  const double target = 9.0 / std::pow(std::numbers::pi, 3);
  double worst_cf = 0.0, worst_lf = 0.0;
  for (const auto& dir : dirs) {
    for (int base : {20, 30, 40}) {
      double len2 = 0.0;
      for (int i = 0; i < 6; ++i) len2 += dir[static_cast<std::size_t>(i)] * dir[static_cast<std::size_t>(i)];
      const int m = static_cast<int>(std::ceil(base / std::sqrt(len2)));
      Point z;
      for (int i = 0; i < 6; ++i) z[i] = m * dir[static_cast<std::size_t>(i)];
      const double n2 = static_cast<double>(z.norm2());
      worst_cf = std::max(worst_cf, std::abs(F(z) * n2 / target - 1.0));
      worst_lf = std::max(worst_lf, std::abs(phi(z) * n2 / target - 1.0));
    }
  }
  r.metric("profile_constant", target);
  r.metric("continuum_profile_deviation", worst_cf);
  r.metric("lattice_profile_deviation", worst_lf);
  ok = ok && worst_cf <= tol.profile && worst_lf <= tol.profile;
  r.pass = ok;
  r.seconds = t.seconds();
  return r;
}

SuiteResult constant_suite(const ExperimentConfig& c, const Tolerances& tol) {
  Timer t;
  SuiteResult r;
  r.name = "constant";
  const auto law = StepLaw::simple(6);
  const auto mu = OffspringLaw::geometric_half();
  BmOptions opt;
  opt.paths = c.bm_paths;

  Rng rng = stream(c.seed, kIdConstant, 0, 0);
  const auto bm = c_f_mc([](const Eigen::VectorXd& z) { return 1.0 / z.squaredNorm(); }, law.covariance(), rng, opt);
  const double oracle = isotropic_bm_oracle(6, law.covariance()(0, 0));
  const double zb = (bm.value - oracle) / bm.std_error;
  r.metric("bm_estimate", bm.value);
  r.metric("bm_std_error", bm.std_error);
  r.metric("bm_oracle", oracle);
  r.metric("bm_z", zb);
  bool ok = std::abs(zb) <= tol.z;

  Rng rng2 = stream(c.seed, kIdConstant, 1, 0);
  const auto mc = c_g(mu, law, law, ConstantMethod::kMcBm, rng2, opt);
  Rng unused(0);
  const auto closed = c_g(mu, law, law, ConstantMethod::kClosedForm, unused, opt);
  const double small = c_g_candidate_small(), large = c_g_candidate_large();
  const bool near_large = std::abs(mc.c_g - large) < std::abs(mc.c_g - small);
  const double resolved = near_large ? large : small;
  const double zc = (mc.c_g - resolved) / mc.std_error;
  r.metric("c_g_monte_carlo", mc.c_g);
  r.metric("c_g_std_error", mc.std_error);
  r.metric("c_g_closed_form", closed.c_g);
  r.metric("candidate_9_over_pi3", small);
  r.metric("candidate_27_over_pi3", large);
  r.metric("c_g_resolved", resolved);
  r.metric("c_g_z", zc);
  r.notes.push_back("resolved C_G = " + fmt(resolved) + (near_large ? " (27/pi^3)" : " (9/pi^3)"));
  ok = ok && std::abs(zc) <= tol.z && std::abs(closed.c_g - resolved) <= 1e-6 * resolved;
  r.pass = ok;
  r.seconds = t.seconds();
  return r;
}

std::vector<SuiteResult> run_identity_suites(const ExperimentConfig& c, const Tolerances& tol) {
  std::vector<SuiteResult> out;
  out.push_back(kemperman_suite(tol));
  out.push_back(killed_triple_suite(c, tol));
  out.push_back(capacity_cross_suite(c, tol));
  out.push_back(lower_bound_suite(c, tol));
  out.push_back(green_suite(c, tol));
  out.push_back(shift_suite(c, tol));
  out.push_back(f_identity_suite(c, tol));
  out.push_back(constant_suite(c, tol));
  return out;
}

}  // namespace brwcap

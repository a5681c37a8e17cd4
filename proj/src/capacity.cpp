#include "brwcap/capacity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <json.hpp>

#include "brwcap/error.hpp"
#include "brwcap/green.hpp"
#include "brwcap/parallel.hpp"

namespace brwcap {

const char* method_name(CapacityMethod m) {
  switch (m) {
    case CapacityMethod::kExact: return "exact-equilibrium";
    case CapacityMethod::kMcEscape: return "mc-escape";
    case CapacityMethod::kLowerBound: return "lower-bound";
  }
  return "?";
}

CapacityMethod parse_method(const std::string& s) {
  if (s == "exact" || s == "exact-equilibrium") return CapacityMethod::kExact;
  if (s == "mc" || s == "mc-escape") return CapacityMethod::kMcEscape;
  if (s == "bound" || s == "lower-bound") return CapacityMethod::kLowerBound;
  throw Error(Errc::kConfigError, "unknown capacity method '" + s + "'");
}

std::string CapacityEstimate::to_json() const {
  nlohmann::ordered_json j;
  j["value"] = value;
  j["std_error"] = std_error;
  j["method"] = method_name(method);
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : params) j["params"][k] = v;
  return j.dump();
}

// ---------------------------------------------------------------- exact

CapacityEstimate capacity_exact(const RangeSet& A, const GreenTable& table, std::size_t ceiling,
                                std::vector<double>* equilibrium) {
  if (table.lambda() != 1.0) throw Error(Errc::kInvalidLaw, "exact capacity needs the unkilled Green's function");
  if (!table.law().symmetric())
    throw Error(Errc::kInvalidLaw, "exact capacity assumes a symmetric law; use the escape estimator");
  const auto pts = A.sorted_points();
  const auto n = pts.size();
  if (n > ceiling)
    throw Error(Errc::kSizeCeiling, std::to_string(n) + " points exceed the exact solver ceiling",
                static_cast<std::int64_t>(n));
  CapacityEstimate est;
  est.method = CapacityMethod::kExact;
  est.params["points"] = static_cast<double>(n);
  if (n == 0) return est;

  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = table(pts[j] - pts[i]);
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw Error(Errc::kSingularSystem, "Green matrix is not positive definite", static_cast<std::int64_t>(n));
  const Eigen::VectorXd e = llt.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
  if (!e.allFinite()) throw Error(Errc::kSingularSystem, "equilibrium solve produced non-finite values");
  const double lowest = e.minCoeff();
  if (lowest < -1e-10)
    throw Error(Errc::kSingularSystem, "negative equilibrium mass " + std::to_string(lowest));
  est.value = e.sum();
  est.params["min_equilibrium"] = lowest;
  if (equilibrium) equilibrium->assign(e.data(), e.data() + e.size());
  return est;
}

// ------------------------------------------------------------------ escape

namespace {

struct Ball {
  std::array<double, kMaxDim> centre{};
  double radius = 0.0;
};

Ball enclosing(const RangeSet& A) {
  Ball b;
  const int d = A.dim();
  const auto box = A.bounding_box();
  for (int i = 0; i < d; ++i) b.centre[static_cast<std::size_t>(i)] = 0.5 * (box.lo[i] + box.hi[i]);
  for (const auto& p : A.points()) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double t = p[i] - b.centre[static_cast<std::size_t>(i)];
      r2 += t * t;
    }
    b.radius = std::max(b.radius, std::sqrt(r2));
  }
  return b;
}

}  // namespace

double escape_radius(const RangeSet& A, const StepLaw& eta, double epsilon) {
  const int d = eta.dim();
  if (d < 3) throw Error(Errc::kInvalidLaw, "escape estimation needs a transient walk (d >= 3)");
  if (!(epsilon > 0.0)) throw Error(Errc::kConfigError, "epsilon must be positive");
  const GaussianSurrogate gs(eta);
  // G_asym(z) <= c (|z| / sqrt(lambda_max))^{2-d}; make |A| times that <= epsilon.
  const double r = std::sqrt(gs.lambda_max()) *
                   std::pow(static_cast<double>(A.size()) * gs.green_constant() / epsilon, 1.0 / (d - 2));
  return enclosing(A).radius + r;
}

CapacityEstimate capacity_mc(const RangeSet& A, const StepLaw& eta, Rng& rng, const EscapeOptions& opt) {
  const int d = eta.dim();
  if (A.dim() != d) throw Error(Errc::kInvalidLaw, "set and law dimensions differ");
  CapacityEstimate est;
  est.method = CapacityMethod::kMcEscape;
  if (A.size() == 0) return est;
  const double rho = escape_radius(A, eta, opt.epsilon);
  const Ball ball = enclosing(A);
  if (rho + eta.max_abs_step() + std::abs(ball.centre[0]) > opt.max_radius)
    throw Error(Errc::kRadiusOverflow, "escape radius " + std::to_string(rho) + " exceeds the coordinate limit");
  const double rho2 = rho * rho;
  const auto box = A.bounding_box();
  const auto& pts = A.points();
  const auto n = static_cast<std::int64_t>(pts.size());

  auto escapes = [&](const Point& start) {
    Point p = start;
    for (;;) {
      p = p + eta.sample(rng);
      if (box.contains(p, d) && A.contains(p)) return false;
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const double t = p[i] - ball.centre[static_cast<std::size_t>(i)];
        r2 += t * t;
      }
      if (r2 >= rho2) return true;
    }
  };

  const bool subsample = opt.sample_points > 0 && opt.sample_points < n;
  const std::int64_t starts = subsample ? opt.sample_points : n;
  double sum = 0.0, sum_sq = 0.0, var = 0.0;
  for (std::int64_t s = 0; s < starts; ++s) {
    const Point& x = subsample ? pts[rng.below(static_cast<std::uint64_t>(n))] : pts[static_cast<std::size_t>(s)];
    std::int64_t hits = 0;
    for (std::int64_t w = 0; w < opt.walkers; ++w) hits += escapes(x) ? 1 : 0;
    const double p = static_cast<double>(hits) / static_cast<double>(opt.walkers);
    sum += p;
    sum_sq += p * p;
    var += p * (1.0 - p) / static_cast<double>(std::max<std::int64_t>(opt.walkers - 1, 1));
  }
  if (subsample) {
    const double k = static_cast<double>(starts);
    const double mean = sum / k;
    const double sample_var = k > 1 ? (sum_sq - k * mean * mean) / (k - 1) : 0.0;
    est.value = static_cast<double>(n) * mean;
    est.std_error = static_cast<double>(n) * std::sqrt(std::max(sample_var, 0.0) / k);
  } else {
    est.value = sum;
    // One walker per point leaves no within-point spread; sum p(1-p) is then
    // bounded by n pbar (1 - pbar).
    const double pbar = sum / static_cast<double>(n);
    est.std_error = opt.walkers > 1 ? std::sqrt(var) : std::sqrt(static_cast<double>(n) * pbar * (1.0 - pbar));
  }
  est.params["walkers"] = static_cast<double>(opt.walkers);
  est.params["rho"] = rho;
  est.params["epsilon"] = opt.epsilon;
  est.params["start_points"] = static_cast<double>(starts);
  est.params["points"] = static_cast<double>(n);
  return est;
}

// ------------------------------------------------------------- lower bound

double capacity_lower_bound(const RangeSet& A, const GreenTable& table, std::int64_t k) {
  if (k < 1) throw Error(Errc::kConfigError, "lower bound needs k >= 1");
  const auto pts = A.sorted_points();
  const bool sym = table.law().symmetric();
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += table(Point{});
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      s += sym ? 2.0 * table(pts[j] - pts[i]) : table(pts[j] - pts[i]) + table(pts[i] - pts[j]);
  }
  const double kk = static_cast<double>(k);
  return static_cast<double>(pts.size()) / (kk + 1.0) - s / (kk * (kk + 1.0));
}

// ------------------------------------------------------------ killed triple

WalkPath::WalkPath(const StepLaw& theta, std::uint64_t seed)
    : theta_(&theta), rng_pos_(splitmix64(seed ^ 0x51ed270b27a5f2c3ULL)), rng_neg_(splitmix64(seed ^ 0x2545f4914f6cdd1dULL)) {
  pos_.push_back(Point{});
}

void WalkPath::extend(std::int64_t a, std::int64_t b) {
  while (static_cast<std::int64_t>(pos_.size()) <= b) pos_.push_back(pos_.back() + theta_->sample(rng_pos_));
  while (-static_cast<std::int64_t>(neg_.size()) > a)
    neg_.push_back((neg_.empty() ? pos_[0] : neg_.back()) - theta_->sample(rng_neg_));
}

Point WalkPath::at(std::int64_t i) const {
  if (i >= 0 && i < static_cast<std::int64_t>(pos_.size())) return pos_[static_cast<std::size_t>(i)];
  if (i < 0 && -i <= static_cast<std::int64_t>(neg_.size())) return neg_[static_cast<std::size_t>(-i - 1)];
  throw Error(Errc::kWindowOutOfRange, "walk index " + std::to_string(i) + " not generated", i);
}

KilledTriple killed_triple(StationaryPath& path, const StepLaw& eta, const GreenTable& killed, std::int64_t n,
                           Rng& rng, int walkers) {
  if (n < 2) throw Error(Errc::kConfigError, "killing parameter n must be at least 2");
  const double lambda = 1.0 - 1.0 / static_cast<double>(n);
  if (std::abs(killed.lambda() - lambda) > 1e-15)
    throw Error(Errc::kKilledTableMissing, "no Green table with killing 1 - 1/" + std::to_string(n));
  const double p = 1.0 / static_cast<double>(n);
  KilledTriple t;
  t.n = n;
  t.left = static_cast<std::int64_t>(rng.geometric(p));
  t.right = static_cast<std::int64_t>(rng.geometric(p));
  path.extend(-t.left, t.right);
  const Point x0 = path.at(0);

  RangeSet window(eta.dim());
  t.I = 1;
  for (auto i = -t.left; i <= t.right; ++i) {
    const Point x = path.at(i);
    if (i > 0 && x == x0) t.I = 0;
    t.G += killed(x - x0);
    window.add(x);
  }
  if (t.I == 0) return t;

  const auto box = window.bounding_box();
  const int d = eta.dim();
  int escaped = 0;
  for (int w = 0; w < walkers; ++w) {
    const auto xi = rng.geometric(p);
    Point s = x0;
    bool hit = false;
    for (std::uint64_t k = 0; k < xi; ++k) {
      s = s + eta.sample(rng);
      if (box.contains(s, d) && window.contains(s)) {
        hit = true;
        break;
      }
    }
    escaped += hit ? 0 : 1;
  }
  t.E = static_cast<double>(escaped) / walkers;
  return t;
}

KilledSummary killed_triple_estimator(const PathFactory& paths, const StepLaw& eta, const GreenTable& killed,
                                      std::int64_t n, std::int64_t replicas, std::uint64_t master,
                                      std::uint64_t experiment, int walkers, int threads) {
  std::vector<KilledTriple> out(static_cast<std::size_t>(replicas));
  parallel_for(replicas, threads, [&](std::int64_t r) {
    Rng rng = stream(master, experiment, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
    auto path = paths(rng.next());
    out[static_cast<std::size_t>(r)] = killed_triple(*path, eta, killed, n, rng, walkers);
  });
  KilledSummary s;
  s.n = n;
  s.replicas = replicas;
  double sum = 0.0, sq = 0.0, esum = 0.0;
  std::int64_t icount = 0;
  for (const auto& t : out) {
    const double v = t.E * t.G * t.I;
    sum += v;
    sq += v * v;
    s.mean_I += t.I;
    s.mean_G += t.G;
    if (t.I) {
      esum += t.E;
      ++icount;
    }
  }
  const double R = static_cast<double>(replicas);
  s.mean = sum / R;
  s.std_error = replicas > 1 ? std::sqrt(std::max(0.0, (sq - R * s.mean * s.mean) / (R - 1)) / R) : 0.0;
  s.mean_I /= R;
  s.mean_G /= R;
  s.mean_E_given_I = icount ? esum / static_cast<double>(icount) : 0.0;
  return s;
}

}  // namespace brwcap

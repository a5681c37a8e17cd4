#include "brwcap/green.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/FFT>

#include "brwcap/error.hpp"

namespace brwcap {

namespace {

using std::numbers::pi;

// Above this variance (in span units) the one-dimensional kernel is taken
// from a lattice Edgeworth expansion instead of the FFT.
constexpr double kEdgeworthVariance = 1e5;
constexpr double kTopPanel = 1.0 / 16.0;

template <int P>
void gl_nodes(std::vector<double>& x, std::vector<double>& w) {
  using Q = boost::math::quadrature::gauss<double, P>;
  const auto& a = Q::abscissa();
  const auto& wt = Q::weights();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) {
      x.push_back(0.0);
      w.push_back(wt[k]);
      continue;
    }
    x.push_back(-a[k]);
    w.push_back(wt[k]);
    x.push_back(a[k]);
    w.push_back(wt[k]);
  }
}

void reference_rule(int points, std::vector<double>& x, std::vector<double>& w) {
  switch (points) {
    case 8: gl_nodes<8>(x, w); break;
    case 10: gl_nodes<10>(x, w); break;
    case 16: gl_nodes<16>(x, w); break;
    case 20: gl_nodes<20>(x, w); break;
    default: throw Error(Errc::kInvalidLaw, "unsupported Gauss rule size");
  }
}

bool same_axis(const StepLaw::AxisLaw& a, const StepLaw::AxisLaw& b) {
  return a.weight == b.weight && a.jumps == b.jumps;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 64;
  while (p < n) p <<= 1;
  return p;
}

double edgeworth(double m, double k2, double k3, double k4) {
  const double s = std::sqrt(k2);
  const double z = m / s;
  const double z2 = z * z;
  const double he3 = z * (z2 - 3.0);
  const double he4 = z2 * z2 - 6.0 * z2 + 3.0;
  const double he6 = z2 * z2 * z2 - 15.0 * z2 * z2 + 45.0 * z2 - 15.0;
  const double corr = 1.0 + k3 / (6.0 * s * s * s) * he3 + k4 / (24.0 * k2 * k2) * he4 +
                      k3 * k3 / (72.0 * k2 * k2 * k2) * he6;
  return std::exp(-0.5 * z2) / (s * std::sqrt(2.0 * pi)) * corr;
}

std::vector<double> log_factorials(std::int64_t n) {
  std::vector<double> lf(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::int64_t k = 1; k <= n; ++k)
    lf[static_cast<std::size_t>(k)] = lf[static_cast<std::size_t>(k - 1)] + std::log(static_cast<double>(k));
  return lf;
}

}  // namespace

// --------------------------------------------------------- GaussianSurrogate

GaussianSurrogate::GaussianSurrogate(const Eigen::MatrixXd& cov) : cov_(cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw Error(Errc::kInvalidLaw, "covariance is not positive definite");
  lmin_ = es.eigenvalues().minCoeff();
  lmax_ = es.eigenvalues().maxCoeff();
  inv_ = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  det_ = es.eigenvalues().prod();
}

double GaussianSurrogate::J(const Point& x) const {
  const int d = dim();
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = x[i];
  return J(v);
}

double GaussianSurrogate::green_constant() const {
  const int d = dim();
  if (d < 3) throw Error(Errc::kDivergentAtOrigin, "no Green constant below dimension 3");
  return std::tgamma(d / 2.0) / ((d - 2) * std::pow(pi, d / 2.0) * std::sqrt(det_));
}

double GaussianSurrogate::green(const Point& x) const {
  if (x.is_zero()) throw Error(Errc::kOriginNotAllowed, "asymptotic Green's function at the origin");
  return green_constant() / std::pow(J(x), dim() - 2);
}

double GaussianSurrogate::density(double n, const Point& x) const {
  const int d = dim();
  const double j = J(x);
  return std::pow(2.0 * pi * n, -d / 2.0) / std::sqrt(det_) * std::exp(-j * j / (2.0 * n));
}

double green_asymptotic(const StepLaw& law, const Point& x) {
  return GaussianSurrogate(law).green(x);
}

double lclt_density(const StepLaw& law, std::int64_t n, const Point& x) {
  if (n < 1) throw Error(Errc::kInvalidLaw, "local CLT needs n >= 1");
  return GaussianSurrogate(law).density(static_cast<double>(n), x);
}

// ------------------------------------------------------- 1-D kernel tables

namespace {

// One-dimensional kernel P(Z(a) - Z'(b) = m), |m| <= M. Small total rates use
// the Poisson mixture of exact convolution powers (all terms positive, so
// far tails keep full relative accuracy); moderate rates use an FFT on the
// circle sized to make aliasing negligible; huge rates use a lattice
// Edgeworth expansion.
class AxisKernel {
 public:
  AxisKernel(const StepLaw::AxisLaw& eta, const StepLaw::AxisLaw* theta, int M)
      : eta_(eta), theta_(theta), M_(M) {
    direct_limit_ = std::max(1000.0, M * M / 8.0);
    nmax_ = static_cast<int>(direct_limit_ + 12.0 * std::sqrt(direct_limit_) + 40.0);
    lf_ = log_factorials(nmax_);
  }

  std::vector<double> pmf(double a, double b) {
    if (!theta_) b = 0.0;
    const double rate = a + b;
    std::vector<double> out(static_cast<std::size_t>(2 * M_ + 1), 0.0);
    if (rate == 0.0) {
      out[static_cast<std::size_t>(M_)] = 1.0;
      return out;
    }
    if (rate <= direct_limit_) {
      const auto& C = powers(b / rate);
      const std::size_t width = out.size();
      const double sd = std::sqrt(rate);
      const int lo = std::max(0, static_cast<int>(rate - 12.0 * sd - 40.0));
      const int hi = std::min(nmax_, static_cast<int>(rate + 12.0 * sd + 40.0));
      const double lr = std::log(rate);
      for (int n = lo; n <= hi; ++n) {
        const double w = std::exp(-rate + n * lr - lf_[static_cast<std::size_t>(n)]);
        const double* row = C.data() + static_cast<std::size_t>(n) * width;
        for (std::size_t m = 0; m < width; ++m) out[m] += w * row[m];
      }
      return out;
    }
    return spectral(a, b);
  }

 private:
  // Convolution powers nu^{*n}(m), n <= nmax, of the jump law of Z - Z' with
  // mixing weight `mix` on the reversed theta jumps.
  const std::vector<double>& powers(double mix) {
    auto it = cache_.find(mix);
    if (it != cache_.end()) return it->second;
    std::vector<std::pair<int, double>> jumps;
    for (const auto& [j, p] : eta_.jumps) jumps.emplace_back(j, (1.0 - mix) * p);
    if (theta_ && mix > 0.0)
      for (const auto& [j, p] : theta_->jumps) jumps.emplace_back(-j, mix * p);
    int r = 0;
    for (const auto& jp : jumps) r = std::max(r, std::abs(jp.first));
    const std::int64_t R = static_cast<std::int64_t>(r) * nmax_ + M_;
    const std::size_t width = static_cast<std::size_t>(2 * M_ + 1);
    std::vector<double> table(static_cast<std::size_t>(nmax_ + 1) * width, 0.0);
    std::vector<double> cur(static_cast<std::size_t>(2 * R + 1), 0.0), nxt(cur.size());
    cur[static_cast<std::size_t>(R)] = 1.0;
    for (int n = 0;; ++n) {
      for (int m = -M_; m <= M_; ++m)
        table[static_cast<std::size_t>(n) * width + static_cast<std::size_t>(m + M_)] =
            cur[static_cast<std::size_t>(m + R)];
      if (n == nmax_) break;
      std::fill(nxt.begin(), nxt.end(), 0.0);
      const std::int64_t reach = static_cast<std::int64_t>(r) * n;
      for (std::int64_t y = -reach; y <= reach; ++y) {
        const double v = cur[static_cast<std::size_t>(y + R)];
        if (v == 0.0) continue;
        for (const auto& [j, p] : jumps) nxt[static_cast<std::size_t>(y + j + R)] += v * p;
      }
      cur.swap(nxt);
    }
    return cache_.emplace(mix, std::move(table)).first->second;
  }

  std::vector<double> spectral(double a, double b) const {
    const int M = M_;
    std::vector<double> out(static_cast<std::size_t>(2 * M + 1), 0.0);
    const StepLaw::AxisLaw* theta = b > 0.0 ? theta_ : nullptr;
    int g = eta_.span;
    if (theta) g = std::gcd(g, theta->span);
    const double gd = g;
    double k2 = 0.0, k3 = 0.0, k4 = 0.0, rmax = 0.0;
    auto acc = [&](const StepLaw::AxisLaw& ax, double rate, double sign) {
      for (const auto& [j, p] : ax.jumps) {
        const double s = sign * j / gd;
        k2 += rate * p * s * s;
        k3 += rate * p * s * s * s;
        k4 += rate * p * s * s * s * s;
        rmax = std::max(rmax, std::abs(s));
      }
    };
    acc(eta_, a, 1.0);
    if (theta) acc(*theta, b, -1.0);
    const int Ms = M / g;
    if (k2 > kEdgeworthVariance) {
      for (int m = -Ms; m <= Ms; ++m)
        out[static_cast<std::size_t>(m * g + M)] = std::max(0.0, edgeworth(m, k2, k3, k4));
      return out;
    }
    const std::size_t N =
        next_pow2(static_cast<std::size_t>(2.0 * (Ms + rmax * (12.0 * std::sqrt(k2) + 40.0))) + 1);
    std::vector<std::complex<double>> f(N), F;
    for (std::size_t k = 0; k < N; ++k) {
      const double t = 2.0 * pi * static_cast<double>(k) / static_cast<double>(N);
      std::complex<double> e = 0.0;
      for (const auto& [j, p] : eta_.jumps) e += a * p * (1.0 - std::polar(1.0, j / gd * t));
      if (theta)
        for (const auto& [j, p] : theta->jumps) e += b * p * (1.0 - std::polar(1.0, -j / gd * t));
      f[k] = std::exp(-e);
    }
    Eigen::FFT<double> fft;
    fft.fwd(F, f);
    const double inv = 1.0 / static_cast<double>(N);
    const long n = static_cast<long>(N);
    for (int m = -Ms; m <= Ms; ++m) {
      const auto idx = static_cast<std::size_t>(((m % n) + n) % n);
      out[static_cast<std::size_t>(m * g + M)] = std::max(0.0, F[idx].real() * inv);
    }
    return out;
  }

  StepLaw::AxisLaw eta_;
  const StepLaw::AxisLaw* theta_;
  int M_;
  double direct_limit_;
  int nmax_;
  std::vector<double> lf_;
  std::map<double, std::vector<double>> cache_;
};

}  // namespace

std::vector<double> compound_poisson_pmf(const StepLaw::AxisLaw& eta, double a,
                                         const StepLaw::AxisLaw* theta, double b, int M) {
  AxisKernel k(eta, theta, M);
  return k.pmf(a, b);
}

OuterRule outer_rule(double U, int points, bool tail) {
  std::vector<double> gx, gw;
  reference_rule(points, gx, gw);
  OuterRule r;
  auto panel = [&](double lo, double hi) {
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    for (std::size_t k = 0; k < gx.size(); ++k) {
      r.x.push_back(c + h * gx[k]);
      r.w.push_back(h * gw[k]);
    }
  };
  double lo = 0.0, hi = kTopPanel;
  panel(lo, hi);
  while (hi < U) {
    lo = hi;
    hi *= 2.0;
    panel(lo, hi);
  }
  if (tail) {
    // u = hi / s^2 on s in (0, 1]; du = 2 hi s^{-3} ds.
    for (std::size_t k = 0; k < gx.size(); ++k) {
      const double s = 0.5 * (1.0 + gx[k]);
      r.x.push_back(hi / (s * s));
      r.w.push_back(0.5 * gw[k] * 2.0 * hi / (s * s * s));
    }
  }
  return r;
}

// ----------------------------------------------------------- SeparableKernel

SeparableKernel::SeparableKernel(const StepLaw& eta, const StepLaw* theta, double eta_scale,
                                 std::vector<Node> nodes, int max_coord)
    : dim_(eta.dim()), max_coord_(max_coord), eta_scale_(eta_scale), nodes_(std::move(nodes)) {
  if (!eta.separable() || (theta && !theta->separable()))
    throw Error(Errc::kInvalidLaw, "separable kernel needs axis-separable laws");
  if (theta && theta->dim() != dim_) throw Error(Errc::kInvalidLaw, "dimension mismatch");
  for (int i = 0; i < dim_; ++i) {
    const auto& ea = eta.axes()[static_cast<std::size_t>(i)];
    const StepLaw::AxisLaw* ta = theta ? &theta->axes()[static_cast<std::size_t>(i)] : nullptr;
    int found = -1;
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      const auto& grp = groups_[k];
      if (same_axis(grp.eta, ea) && grp.has_theta == (ta != nullptr) && (!ta || same_axis(grp.theta, *ta))) {
        found = static_cast<int>(k);
        break;
      }
    }
    if (found < 0) {
      Group grp;
      grp.eta = ea;
      if (ta) {
        grp.theta = *ta;
        grp.has_theta = true;
      }
      groups_.push_back(std::move(grp));
      found = static_cast<int>(groups_.size()) - 1;
    }
    group_of_axis_.push_back(found);
  }
  for (auto& grp : groups_) build(grp);
}

void SeparableKernel::build(Group& g) const {
  const std::size_t width = static_cast<std::size_t>(2 * max_coord_ + 1);
  g.table.assign(nodes_.size() * width, 0.0);
  AxisKernel kernel(g.eta, g.has_theta ? &g.theta : nullptr, max_coord_);
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    const double a = eta_scale_ * g.eta.weight * nodes_[n].u;
    const double b = g.has_theta ? g.theta.weight * nodes_[n].v : 0.0;
    const auto p = kernel.pmf(a, b);
    std::copy(p.begin(), p.end(), g.table.begin() + static_cast<std::ptrdiff_t>(n * width));
  }
}

double SeparableKernel::operator()(const Point& x) const {
  const std::size_t width = static_cast<std::size_t>(2 * max_coord_ + 1);
  std::array<const double*, kMaxDim> col{};
  for (int i = 0; i < dim_; ++i) {
    if (std::abs(x[i]) > max_coord_) throw Error(Errc::kCacheMiss, "coordinate outside kernel tables");
    col[static_cast<std::size_t>(i)] =
        groups_[static_cast<std::size_t>(group_of_axis_[static_cast<std::size_t>(i)])].table.data() +
        (x[i] + max_coord_);
  }
  double s = 0.0;
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    const std::size_t off = n * width;
    double p = nodes_[n].weight;
    for (int i = 0; i < dim_; ++i) p *= col[static_cast<std::size_t>(i)][off];
    s += p;
  }
  return s;
}

// ------------------------------------------------------------ GreenEvaluator

namespace {

std::vector<SeparableKernel::Node> green_nodes(double lambda, int points) {
  const double decay = 1.0 - lambda;
  double U = 1e6;
  bool tail = lambda >= 1.0;
  if (decay > 0.0) {
    const double cut = 60.0 / decay;
    if (cut < U) U = cut;
    else tail = true;
  }
  const OuterRule r = outer_rule(U, points, tail);
  std::vector<SeparableKernel::Node> nodes;
  for (std::size_t k = 0; k < r.x.size(); ++k) {
    const double w = r.w[k] * std::exp(-r.x[k] * decay);
    if (w > 0.0) nodes.push_back({w, r.x[k], 0.0});
  }
  return nodes;
}

}  // namespace

GreenEvaluator::GreenEvaluator(const StepLaw& law, double lambda, GreenOptions opts)
    : law_(law), lambda_(lambda), opts_(opts) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::kInvalidLaw, "killing parameter outside [0,1]");
  if (lambda == 1.0 && law.dim() < 3)
    throw Error(Errc::kDivergentAtOrigin, "Green's function diverges for d < 3");
  build(std::max(1, opts.max_coord));
}

void GreenEvaluator::build(int max_coord) const {
  max_coord_ = max_coord;
  if (!law_.separable()) return;
  kernel_ = std::make_unique<SeparableKernel>(law_, nullptr, lambda_, green_nodes(lambda_, 20), max_coord);
  // Resolution check: a coarser outer rule on the same panels must agree.
  SeparableKernel coarse(law_, nullptr, lambda_, green_nodes(lambda_, 10), max_coord);
  const int d = law_.dim();
  std::vector<Point> probes{Point{}, unit(0), unit(d - 1)};
  Point diag, far, mid;
  for (int i = 0; i < d; ++i) {
    diag[i] = std::min(max_coord, 3);
    mid[i] = max_coord / 2;
  }
  far[0] = max_coord;
  probes.push_back(diag);
  probes.push_back(mid);
  probes.push_back(far);
  for (const auto& p : probes) {
    const double fine = (*kernel_)(p), c = coarse(p);
    if (std::abs(fine - c) > opts_.tolerance * std::abs(fine) + 1e-300)
      throw Error(Errc::kQuadratureNotConverged,
                  "outer rules disagree at " + format_point(p, d) + ": " + std::to_string(fine) +
                      " vs " + std::to_string(c));
  }
}

void GreenEvaluator::reserve(int m) {
  if (m <= max_coord_) return;
  if (frozen_) throw Error(Errc::kCacheMiss, "evaluator is frozen");
  build(m);
}

double GreenEvaluator::operator()(const Point& x) const {
  const Point c = law_.canonical(x);
  if (!law_.separable()) return generic(c);
  const int m = c.max_abs();
  if (m > max_coord_) {
    if (frozen_) throw Error(Errc::kCacheMiss, "point " + format_point(x, law_.dim()) + " outside frozen tables");
    std::lock_guard<std::mutex> lock(mu_);
    if (m > max_coord_) build(std::max(m, 2 * max_coord_));
  }
  return (*kernel_)(c);
}

// Midpoint rule on the torus, doubled until stable. The lambda = 1
// singularity at t = 0 leaves an O(h^{d-2}) error, removed by Richardson
// extrapolation.
double GreenEvaluator::generic(const Point& x) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = generic_cache_.find(x);
    if (it != generic_cache_.end()) return it->second;
  }
  if (frozen_) throw Error(Errc::kCacheMiss, "point not cached in frozen evaluator");
  const int d = law_.dim();
  const bool singular = lambda_ >= 1.0;
  const double ratio = std::pow(2.0, d - 2);
  auto integrate = [&](std::int64_t n) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    double t[kMaxDim];
    const double h = 2.0 * pi / static_cast<double>(n);
    double sum = 0.0;
    for (;;) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) {
        t[i] = -pi + (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 0.5) * h;
        dot += t[i] * x[i];
      }
      const auto phi = law_.characteristic(t);
      const std::complex<double> val = std::polar(1.0, -dot) / (1.0 - lambda_ * phi);
      sum += val.real();
      int i = 0;
      while (i < d && ++idx[static_cast<std::size_t>(i)] == n) idx[static_cast<std::size_t>(i++)] = 0;
      if (i == d) break;
    }
    return sum / std::pow(static_cast<double>(n), d);
  };
  double prev = integrate(8), prev_ex = prev;
  double result = 0.0;
  bool ok = false;
  for (std::int64_t n = 16; std::pow(static_cast<double>(n), d) <= 16777216.0; n *= 2) {
    const double cur = integrate(n);
    const double ex = singular ? (ratio * cur - prev) / (ratio - 1.0) : cur;
    if (std::abs(ex - prev_ex) <= opts_.tolerance * std::abs(ex)) {
      result = ex;
      ok = true;
      break;
    }
    prev = cur;
    prev_ex = ex;
  }
  if (!ok)
    throw Error(Errc::kQuadratureNotConverged,
                "torus quadrature did not settle within the grid budget for " + law_.name());
  std::lock_guard<std::mutex> lock(mu_);
  generic_cache_[x] = result;
  return result;
}

double green_fourier(const StepLaw& law, const Point& x, double lambda) {
  GreenOptions opts;
  opts.max_coord = std::max(1, x.max_abs());
  GreenEvaluator g(law, lambda, opts);
  return g(x);
}

// ------------------------------------------------------------- series oracle

namespace {

// r-fold convolution of the axis law evaluated at m, for r = 0..N.
std::vector<double> axis_power(const StepLaw::AxisLaw& ax, int m, std::int64_t N,
                               const std::vector<double>& lf) {
  std::vector<double> out(static_cast<std::size_t>(N) + 1, 0.0);
  const bool fair_pm1 = ax.jumps.size() == 2 && ax.jumps[0].first == -1 && ax.jumps[1].first == 1 &&
                        ax.jumps[0].second == 0.5 && ax.jumps[1].second == 0.5;
  if (fair_pm1) {
    const std::int64_t am = std::abs(m);
    for (std::int64_t r = am; r <= N; r += 2) {
      const std::int64_t up = (r + am) / 2;
      out[static_cast<std::size_t>(r)] =
          std::exp(lf[static_cast<std::size_t>(r)] - lf[static_cast<std::size_t>(up)] -
                   lf[static_cast<std::size_t>(r - up)] - static_cast<double>(r) * std::log(2.0));
    }
    return out;
  }
  const std::int64_t J = ax.max_jump;
  const std::int64_t W = J * N;
  std::vector<double> cur(static_cast<std::size_t>(2 * W + 1), 0.0), nxt(cur.size());
  cur[static_cast<std::size_t>(W)] = 1.0;
  auto at = [&](const std::vector<double>& v) {
    const std::int64_t k = m + W;
    return (k >= 0 && k < static_cast<std::int64_t>(v.size())) ? v[static_cast<std::size_t>(k)] : 0.0;
  };
  out[0] = at(cur);
  for (std::int64_t r = 1; r <= N; ++r) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    const std::int64_t reach = J * (r - 1);
    for (std::int64_t y = -reach; y <= reach; ++y) {
      const double v = cur[static_cast<std::size_t>(y + W)];
      if (v == 0.0) continue;
      for (const auto& [j, p] : ax.jumps) nxt[static_cast<std::size_t>(y + j + W)] += v * p;
    }
    cur.swap(nxt);
    out[static_cast<std::size_t>(r)] = at(cur);
  }
  return out;
}

double lclt_tail(const StepLaw& law, const Point& x, double lambda, std::int64_t N) {
  const GaussianSurrogate gs(law);
  const int d = law.dim();
  double tail = 0.0;
  const std::int64_t K = 200 * (N + 1);
  double lk = std::pow(lambda, static_cast<double>(N + 1));
  for (std::int64_t k = N + 1; k <= K; ++k) {
    tail += lk * gs.density(static_cast<double>(k), x);
    lk *= lambda;
    if (lk < 1e-300) return tail;
  }
  if (lambda >= 1.0 && d > 2) {
    // Remaining sum of (2 pi k)^{-d/2} det^{-1/2}, exponent ~ 1 beyond K.
    const double c = std::pow(2.0 * pi, -d / 2.0) / std::sqrt(gs.det());
    tail += c * std::pow(static_cast<double>(K) + 0.5, 1.0 - d / 2.0) / (d / 2.0 - 1.0);
  }
  return tail;
}

std::vector<double> dense_probabilities(const StepLaw& law, const Point& x, std::int64_t N, int box) {
  const int d = law.dim();
  const std::int64_t B =
      box > 0 ? box : static_cast<std::int64_t>(law.max_abs_step()) * std::max<std::int64_t>(N, 1);
  const std::int64_t side = 2 * B + 1;
  if (std::pow(static_cast<double>(side), d) > 1.4e8)
    throw Error(Errc::kBoxTooSmall, "convolution box does not fit in memory");
  std::vector<double> out;
  if (x.max_abs() > B) {
    out.assign(static_cast<std::size_t>(N) + 1, 0.0);
    return out;
  }
  std::vector<double> cur(static_cast<std::size_t>(std::pow(static_cast<double>(side), d)), 0.0), nxt(cur.size());
  std::vector<std::int64_t> stride(static_cast<std::size_t>(d));
  std::int64_t st = 1;
  for (int i = 0; i < d; ++i) {
    stride[static_cast<std::size_t>(i)] = st;
    st *= side;
  }
  auto index = [&](const Point& p) {
    std::int64_t id = 0;
    for (int i = 0; i < d; ++i) id += (p[i] + B) * stride[static_cast<std::size_t>(i)];
    return static_cast<std::size_t>(id);
  };
  cur[index(Point{})] = 1.0;
  const std::size_t target = index(x);
  const auto& sup = law.support();
  const auto& pr = law.probs();
  out.push_back(cur[target]);
  for (std::int64_t k = 1; k <= N; ++k) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    double leaked = 0.0;
    std::vector<std::int64_t> c(static_cast<std::size_t>(d), -B);
    for (std::size_t id = 0; id < cur.size(); ++id) {
      const double v = cur[id];
      if (v != 0.0) {
        for (std::size_t s = 0; s < sup.size(); ++s) {
          bool ok = true;
          std::int64_t off = 0;
          for (int i = 0; i < d; ++i) {
            const std::int64_t y = c[static_cast<std::size_t>(i)] + sup[s][i];
            if (y < -B || y > B) {
              ok = false;
              break;
            }
            off += sup[s][i] * stride[static_cast<std::size_t>(i)];
          }
          if (ok)
            nxt[static_cast<std::size_t>(static_cast<std::int64_t>(id) + off)] += v * pr[s];
          else
            leaked += v * pr[s];
        }
      }
      for (int i = 0; i < d; ++i) {
        if (++c[static_cast<std::size_t>(i)] <= B) break;
        c[static_cast<std::size_t>(i)] = -B;
      }
    }
    if (leaked > 1e-12) throw Error(Errc::kBoxTooSmall, "mass leaked from the convolution box", k);
    cur.swap(nxt);
    out.push_back(cur[target]);
  }
  return out;
}

}  // namespace

std::vector<double> step_probabilities(const StepLaw& law, const Point& x, std::int64_t N) {
  if (N < 0) throw Error(Errc::kInvalidLaw, "negative step count");
  if (!law.separable()) return dense_probabilities(law, x, N, 0);

  const int d = law.dim();
  const auto lf = log_factorials(N + 1);
  std::vector<double> A(static_cast<std::size_t>(N) + 1, 1.0), next(A.size());
  double W = law.hold();
  for (int j = 0; j < d; ++j) {
    const auto& ax = law.axes()[static_cast<std::size_t>(j)];
    const auto p = axis_power(ax, x[j], N, lf);
    W += ax.weight;
    const double q = std::min(1.0, ax.weight / W);
    const double lq = std::log(q), l1q = q < 1.0 ? std::log1p(-q) : 0.0;
    for (std::int64_t k = 0; k <= N; ++k) {
      double s = 0.0;
      if (q >= 1.0) {
        s = p[static_cast<std::size_t>(k)] * A[0];
      } else {
        const double mean = static_cast<double>(k) * q;
        const double sd = std::sqrt(mean * (1.0 - q));
        const std::int64_t lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(mean - 15.0 * sd - 20.0));
        const std::int64_t hi = std::min<std::int64_t>(k, static_cast<std::int64_t>(mean + 15.0 * sd + 20.0));
        for (std::int64_t r = lo; r <= hi; ++r) {
          const double pr = p[static_cast<std::size_t>(r)];
          if (pr == 0.0) continue;
          const double lb = lf[static_cast<std::size_t>(k)] - lf[static_cast<std::size_t>(r)] -
                            lf[static_cast<std::size_t>(k - r)] + static_cast<double>(r) * lq +
                            static_cast<double>(k - r) * l1q;
          s += std::exp(lb) * pr * A[static_cast<std::size_t>(k - r)];
        }
      }
      next[static_cast<std::size_t>(k)] = s;
    }
    A.swap(next);
  }
  return A;
}

SeriesResult green_series_oracle(const StepLaw& law, const Point& x, double lambda, std::int64_t N,
                                 int box) {
  if (!law.separable()) return green_series_dense(law, x, lambda, N, box);
  const auto probs = step_probabilities(law, x, N);
  double v = 0.0, lk = 1.0;
  for (double p : probs) {
    v += lk * p;
    lk *= lambda;
  }
  return {v, lclt_tail(law, x, lambda, N)};
}

SeriesResult green_series_dense(const StepLaw& law, const Point& x, double lambda, std::int64_t N, int box) {
  const auto probs = dense_probabilities(law, x, N, box);
  double v = 0.0, lk = 1.0;
  for (double p : probs) {
    v += lk * p;
    lk *= lambda;
  }
  return {v, lclt_tail(law, x, lambda, N)};
}

}  // namespace brwcap

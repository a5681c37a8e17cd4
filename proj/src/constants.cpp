#include "brwcap/constants.hpp"

#include <Eigen/Cholesky>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <complex>
#include <json.hpp>

#include "brwcap/error.hpp"
#include "brwcap/parallel.hpp"
#include "brwcap/trees.hpp"

namespace brwcap {

namespace {

constexpr double pi = 3.14159265358979323846;

// Gauss-Legendre rule mapped to [0, 1].
template <int N>
void unit_rule(std::vector<double>& x, std::vector<double>& w) {
  using G = boost::math::quadrature::gauss<double, N>;
  x.clear();
  w.clear();
  const auto& a = G::abscissa();
  const auto& b = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i], bi = b[i];
    if (ai == 0.0) {
      x.push_back(0.5);
      w.push_back(0.5 * bi);
      continue;
    }
    x.push_back(0.5 * (1.0 - ai));
    w.push_back(0.5 * bi);
    x.push_back(0.5 * (1.0 + ai));
    w.push_back(0.5 * bi);
  }
}

bool is_scalar_matrix(const Eigen::MatrixXd& m) {
  const double s = m(0, 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double want = i == j ? s : 0.0;
      if (std::abs(m(i, j) - want) > 1e-14 * std::abs(s)) return false;
    }
  return true;
}

Eigen::VectorXd to_vector(const Point& z, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = z[i];
  return v;
}

}  // namespace

// ------------------------------------------------------------- ContinuumF

ContinuumF::ContinuumF(const StepLaw& eta, const StepLaw& theta) : dim_(eta.dim()) {
  if (theta.dim() != dim_) throw Error(Errc::kInvalidLaw, "dimension mismatch");
  if (dim_ < 5) throw Error(Errc::kInvalidLaw, "the profile integral diverges below dimension 5");
  const Eigen::MatrixXd& ge = eta.covariance();
  const Eigen::MatrixXd& gt = theta.covariance();
  det_eta_ = eta.covariance_det();
  det_theta_ = theta.covariance_det();
  c_eta_ = GaussianSurrogate(ge).green_constant();
  c_theta_ = GaussianSurrogate(gt).green_constant();
  const double h = dim_ / 2.0;
  norm_ = std::pow(2.0 * pi, -h) * std::pow(2.0, h - 2.0) * std::tgamma(h - 2.0);
  std::vector<double> r;
  unit_rule<32>(r, w_);
  for (double rk : r) {
    const Eigen::MatrixXd m = rk * ge + (1.0 - rk) * gt;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    root_det_.push_back(1.0 / llt.matrixLLT().diagonal().prod());
    inv_.push_back(llt.solve(Eigen::MatrixXd::Identity(dim_, dim_)));
  }
  if (is_scalar_matrix(ge) && is_scalar_matrix(gt)) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim_);
    e(0) = 1.0;
    kappa_ = norm_ * integral(e);
    isotropic_ = true;
  }
}

double ContinuumF::integral(const Eigen::VectorXd& z) const {
  const double power = 2.0 - dim_ / 2.0;
  double s = 0.0;
  for (std::size_t k = 0; k < w_.size(); ++k) s += w_[k] * root_det_[k] * std::pow(z.dot(inv_[k] * z), power);
  return s;
}

double ContinuumF::operator()(const Eigen::VectorXd& z) const {
  if (isotropic_) return kappa_ * std::pow(z.squaredNorm(), 2.0 - dim_ / 2.0);
  return norm_ * integral(z);
}

double ContinuumF::operator()(const Point& z) const { return (*this)(to_vector(z, dim_)); }

double ContinuumF::prefactor() const { return 1.0 / (4.0 * std::pow(pi, 6) * std::sqrt(det_eta_ * det_theta_)); }

double ContinuumF::green_constant_product() const { return c_eta_ * c_theta_; }

// --------------------------------------------------------------- LatticeF

LatticeF::LatticeF(const StepLaw& eta, const StepLaw& theta, int max_coord, double tolerance)
    : eta_(eta), theta_(theta), tol_(tolerance) {
  if (eta.dim() != theta.dim()) throw Error(Errc::kInvalidLaw, "dimension mismatch");
  if (eta.dim() < 5) throw Error(Errc::kDivergentSum, "the lattice sum diverges below dimension 5");
  same_ = eta.hash() == theta.hash() && eta.symmetric();
  separable_ = eta.separable() && theta.separable();
  if (separable_) build(std::max(1, max_coord));
}

void LatticeF::build(int max_coord) const {
  max_coord_ = max_coord;
  auto nodes = [&](int outer, bool fine) {
    const OuterRule s = outer_rule(1e6, outer, true);
    std::vector<SeparableKernel::Node> out;
    if (same_) {
      // u + v = s has density s ds for the sum of the two clocks.
      for (std::size_t k = 0; k < s.x.size(); ++k) out.push_back({s.w[k] * s.x[k], s.x[k], 0.0});
      return out;
    }
    std::vector<double> rx, rw;
    if (fine)
      unit_rule<16>(rx, rw);
    else
      unit_rule<8>(rx, rw);
    for (std::size_t k = 0; k < s.x.size(); ++k)
      for (std::size_t j = 0; j < rx.size(); ++j)
        out.push_back({s.w[k] * rw[j] * s.x[k], rx[j] * s.x[k], (1.0 - rx[j]) * s.x[k]});
    return out;
  };
  const StepLaw* th = same_ ? nullptr : &theta_;
  fine_ = std::make_unique<SeparableKernel>(eta_, th, 1.0, nodes(20, true), max_coord);
  coarse_ = std::make_unique<SeparableKernel>(eta_, th, 1.0, nodes(10, false), max_coord);
}

double LatticeF::operator()(const Point& z) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(z);
  if (it != cache_.end()) return it->second;
  double v;
  if (separable_) {
    const int m = z.max_abs();
    if (m > max_coord_) build(std::max(m, 2 * max_coord_));
    v = (*fine_)(z);
    const double c = (*coarse_)(z);
    if (!(std::abs(v - c) <= tol_ * std::abs(v)))
      throw Error(Errc::kTailNotConverged, "lattice sum at " + format_point(z, eta_.dim()) +
                                               " differs between rules by " + std::to_string(std::abs(v - c) / v));
  } else {
    v = torus(z);
  }
  cache_.emplace(z, v);
  return v;
}

double LatticeF::torus(const Point& z) const {
  const int d = eta_.dim();
  const double ratio = std::pow(2.0, d - 4);
  auto integrate = [&](std::int64_t n) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    double t[kMaxDim], mt[kMaxDim];
    const double h = 2.0 * pi / static_cast<double>(n);
    double sum = 0.0;
    for (;;) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) {
        t[i] = -pi + (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 0.5) * h;
        mt[i] = -t[i];
        dot += t[i] * z[i];
      }
      const auto val = std::polar(1.0, -dot) / ((1.0 - eta_.characteristic(t)) * (1.0 - theta_.characteristic(mt)));
      sum += val.real();
      int i = 0;
      while (i < d && ++idx[static_cast<std::size_t>(i)] == n) idx[static_cast<std::size_t>(i++)] = 0;
      if (i == d) break;
    }
    return sum / std::pow(static_cast<double>(n), d);
  };
  double prev = integrate(4), prev_ex = prev;
  for (std::int64_t n = 8; std::pow(static_cast<double>(n), d) <= 16777216.0; n *= 2) {
    const double cur = integrate(n);
    const double ex = (ratio * cur - prev) / (ratio - 1.0);
    if (std::abs(ex - prev_ex) <= tol_ * std::abs(ex)) return ex;
    prev = cur;
    prev_ex = ex;
  }
  throw Error(Errc::kQuadratureNotConverged, "torus quadrature for the lattice sum did not settle");
}

double HomogeneousProfile::operator()(const Eigen::VectorXd& z) const {
  const double r = z.norm();
  Point p;
  for (Eigen::Index i = 0; i < z.size(); ++i) p[static_cast<int>(i)] = static_cast<std::int32_t>(std::lround(radius_ * z(i) / r));
  double v;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(p);
    if (it != cache_.end()) {
      v = it->second;
    } else {
      v = (*phi_)(p) * static_cast<double>(p.norm2());
      cache_.emplace(p, v);
    }
  }
  return v / (r * r);
}

// ------------------------------------------------------------- BRW oracle

double brw_tail_correction(const StepLaw& eta, const StepLaw& theta, const Point& z, int depth) {
  const int d = eta.dim();
  const Eigen::VectorXd zv = to_vector(z, d);
  const Eigen::MatrixXd& ge = eta.covariance();
  const Eigen::MatrixXd& gt = theta.covariance();
  auto density = [&](double h, double u) {
    const Eigen::MatrixXd m = h * gt + u * ge;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    const double det = std::pow(llt.matrixLLT().diagonal().prod(), 2);
    const double q = zv.dot(llt.solve(zv));
    return std::pow(2.0 * pi, -d / 2.0) / std::sqrt(det) * std::exp(-0.5 * q);
  };
  boost::math::quadrature::exp_sinh<double> inner_rule, outer_rule_h;
  auto inner = [&](double h) { return inner_rule.integrate([&](double u) { return density(h, u); }, 0.0, INFINITY); };
  return outer_rule_h.integrate(inner, depth + 0.5, INFINITY);
}

BrwOracleResult brw_green_oracle(const OffspringLaw& mu, const StepLaw& theta, const GreenTable& eta_green,
                                 const Point& z, std::int64_t trees, int depth, Rng& rng) {
  BrwOracleResult res;
  res.trees = trees;
  res.depth = depth;
  struct Item {
    Point x;
    int h;
  };
  std::vector<Item> stack;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (std::int64_t t = 0; t < trees; ++t) {
    double sum = 0.0;
    stack.clear();
    stack.push_back({Point{}, 0});
    std::int64_t count = 0;
    while (!stack.empty()) {
      const Item it = stack.back();
      stack.pop_back();
      sum += eta_green(z + it.x);
      if (++count > kDefaultNodeCeiling) throw Error(Errc::kCeilingExceeded, "oracle tree too large", count);
      if (it.h >= depth) continue;
      const auto k = mu.sample(rng);
      for (std::int64_t c = 0; c < k; ++c) stack.push_back({it.x + theta.sample(rng), it.h + 1});
    }
    res.nodes += count;
    s1 += sum;
    s2 += sum * sum;
    s4 += sum * sum * sum * sum;
  }
  const double n = static_cast<double>(trees);
  const double m1 = s1 / n, m2 = s2 / n, m4 = s4 / n;
  res.tail = brw_tail_correction(eta_green.law(), theta, z, depth);
  res.mean = m1 + res.tail;
  res.std_error = trees > 1 ? std::sqrt(std::max(0.0, (m2 - m1 * m1) * n / (n - 1)) / n) : 0.0;
  res.second_moment = m2;
  res.second_moment_se = trees > 1 ? std::sqrt(std::max(0.0, (m4 - m2 * m2) * n / (n - 1)) / n) : 0.0;
  return res;
}

// --------------------------------------------------------- Brownian part

double isotropic_bm_oracle(int d, double sigma2) {
  if (d <= 2) throw Error(Errc::kInvalidLaw, "needs d > 2");
  // E|B_t|^{-2} = 1 / (sigma2 t (d - 2)); integrate dt / t over [1, e].
  return 1.0 / (sigma2 * (d - 2));
}

BmResult c_f_mc(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::MatrixXd& cov, Rng& rng,
                const BmOptions& opt) {
  if (opt.min_level < 1 || opt.max_level <= opt.min_level)
    throw Error(Errc::kConfigError, "need 1 <= min_level < max_level");
  const int d = static_cast<int>(cov.rows());
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  const int top = opt.max_level;
  const std::int64_t K = std::int64_t{1} << top;
  std::vector<double> t(static_cast<std::size_t>(K) + 1);
  for (std::int64_t j = 0; j <= K; ++j) t[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(j) / K);

  const int levels = top - opt.min_level + 1;
  std::vector<double> sum_i(levels, 0.0), sum_d(levels, 0.0), sum_r(levels, 0.0), sq_r(levels, 0.0);
  std::vector<double> fv(static_cast<std::size_t>(K) + 1), integ(levels);
  Eigen::VectorXd b(d), g(d);
  for (std::int64_t p = 0; p < opt.paths; ++p) {
    for (int i = 0; i < d; ++i) g(i) = rng.normal();
    b = L * g;  // B_1
    fv[0] = f(b);
    for (std::int64_t j = 0; j < K; ++j) {
      const double dt = t[static_cast<std::size_t>(j + 1)] - t[static_cast<std::size_t>(j)];
      for (int i = 0; i < d; ++i) g(i) = rng.normal();
      b.noalias() += std::sqrt(dt) * (L * g);
      fv[static_cast<std::size_t>(j + 1)] = f(b);
    }
    for (int l = 0; l < levels; ++l) {
      const std::int64_t stride = std::int64_t{1} << (top - (opt.min_level + l));
      double s = 0.0;
      for (std::int64_t j = 0; j < K; j += stride) {
        const auto a = static_cast<std::size_t>(j), c = static_cast<std::size_t>(j + stride);
        s += 0.5 * (t[c] - t[a]) * (fv[a] + fv[c]);
      }
      integ[static_cast<std::size_t>(l)] = s;
    }
    for (int l = 1; l < levels; ++l) {
      const double cur = integ[static_cast<std::size_t>(l)], prev = integ[static_cast<std::size_t>(l - 1)];
      const double rich = cur + (cur - prev) / 3.0;
      sum_i[l] += cur;
      sum_d[l] += cur - prev;
      sum_r[l] += rich;
      sq_r[l] += rich * rich;
    }
  }
  const double n = static_cast<double>(opt.paths);
  for (int l = 1; l < levels; ++l) {
    const double mean_i = sum_i[l] / n;
    const double bias = std::abs(sum_d[l] / n) / 3.0;
    if (bias <= opt.bias_tolerance * std::abs(mean_i) || (bias == 0.0 && mean_i == 0.0)) {
      BmResult r;
      r.level = opt.min_level + l;
      r.paths = opt.paths;
      r.bias = bias;
      r.value = sum_r[l] / n;
      r.std_error = opt.paths > 1 ? std::sqrt(std::max(0.0, (sq_r[l] / n - r.value * r.value) * n / (n - 1)) / n) : 0.0;
      return r;
    }
  }
  throw Error(Errc::kGridBiasExceedsTolerance, "time grid bias above tolerance at level " + std::to_string(top));
}

// ----------------------------------------------------------------- C_G

const char* constant_method_name(ConstantMethod m) {
  switch (m) {
    case ConstantMethod::kClosedForm: return "closed-form";
    case ConstantMethod::kMcBm: return "mc-bm";
    case ConstantMethod::kLatticeSum: return "lattice-sum";
  }
  return "?";
}

ConstantMethod parse_constant_method(const std::string& s) {
  if (s == "closed" || s == "closed-form") return ConstantMethod::kClosedForm;
  if (s == "mc" || s == "mc-bm") return ConstantMethod::kMcBm;
  if (s == "lattice" || s == "lattice-sum") return ConstantMethod::kLatticeSum;
  throw Error(Errc::kConfigError, "unknown constant method '" + s + "'");
}

std::string ConstantReport::to_json() const {
  nlohmann::ordered_json j;
  j["c_g"] = c_g;
  j["std_error"] = std_error;
  j["method"] = constant_method_name(method);
  j["components"] = {{"variance_factor", variance_factor},
                     {"c_f", c_f},
                     {"c_f_std_error", c_f_se},
                     {"prefactor", prefactor}};
  j["green_constant_product"] = green_constant_product;
  j["grid_level"] = grid_level;
  return j.dump();
}

ConstantReport c_g(const OffspringLaw& mu, const StepLaw& eta, const StepLaw& theta, ConstantMethod method,
                   Rng& rng, const BmOptions& opt) {
  if (eta.dim() != 6 || theta.dim() != 6) throw Error(Errc::kInvalidLaw, "the constant is defined in dimension 6");
  ConstantReport rep;
  rep.method = method;
  rep.variance_factor = mu.variance_factor();
  const ContinuumF F(eta, theta);
  rep.prefactor = F.prefactor();
  rep.green_constant_product = F.green_constant_product();
  const Eigen::MatrixXd& gt = theta.covariance();
  switch (method) {
    case ConstantMethod::kClosedForm: {
      if (!F.isotropic())
        throw Error(Errc::kInvalidLaw, "closed form needs covariances proportional to the identity");
      rep.c_f = F.kappa() * isotropic_bm_oracle(6, gt(0, 0)) / rep.prefactor;
      break;
    }
    case ConstantMethod::kMcBm: {
      const auto r = c_f_mc([&](const Eigen::VectorXd& z) { return F(z); }, gt, rng, opt);
      rep.c_f = r.value / rep.prefactor;
      rep.c_f_se = r.std_error / rep.prefactor;
      rep.grid_level = r.level;
      break;
    }
    case ConstantMethod::kLatticeSum: {
      const LatticeF phi(eta, theta);
      const HomogeneousProfile prof(phi, 16.0);
      const auto r = c_f_mc([&](const Eigen::VectorXd& z) { return prof(z); }, gt, rng, opt);
      rep.c_f = r.value / rep.prefactor;
      rep.c_f_se = r.std_error / rep.prefactor;
      rep.grid_level = r.level;
      break;
    }
  }
  rep.c_g = rep.variance_factor * rep.prefactor * rep.c_f;
  rep.std_error = rep.variance_factor * rep.prefactor * rep.c_f_se;
  return rep;
}

// ------------------------------------------------------------- Birkhoff

std::vector<BirkhoffRow> birkhoff_check(const std::function<double(const Point&)>& f, const StepLaw& eta,
                                        const std::vector<std::int64_t>& grid, double limit, double eps,
                                        std::int64_t replicas, std::uint64_t master, int threads) {
  std::vector<BirkhoffRow> rows;
  for (const auto n : grid) {
    std::vector<double> v(static_cast<std::size_t>(replicas));
    parallel_for(replicas, threads, [&](std::int64_t r) {
      Rng rng = stream(master, 0xb1, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
      Point s;
      double acc = 0.0;
      for (std::int64_t i = 1; i <= n; ++i) {
        s = s + eta.sample(rng);
        if (!s.is_zero()) acc += f(s);
      }
      v[static_cast<std::size_t>(r)] = acc / std::log(static_cast<double>(n));
    });
    BirkhoffRow row;
    row.n = n;
    row.replicas = replicas;
    double s1 = 0.0, s2 = 0.0;
    std::int64_t off = 0;
    for (double x : v) {
      s1 += x;
      s2 += x * x;
      if (std::abs(x - limit) > eps * std::abs(limit)) ++off;
    }
    const double R = static_cast<double>(replicas);
    row.mean = s1 / R;
    row.std_error = replicas > 1 ? std::sqrt(std::max(0.0, (s2 / R - row.mean * row.mean) * R / (R - 1)) / R) : 0.0;
    row.tail_frequency = static_cast<double>(off) / R;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace brwcap

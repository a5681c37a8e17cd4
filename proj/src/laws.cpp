#include "brwcap/laws.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "brwcap/error.hpp"

namespace brwcap {

namespace {

constexpr double kClosedTol = 1e-12;
constexpr double kExplicitTol = 1e-9;

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::kConfigError, "not a number: '" + s + "'");
  }
}

long long to_int(const std::string& s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(Errc::kConfigError, "not an integer: '" + s + "'");
  return v;
}

std::uint64_t fnv(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------- AliasTable

AliasTable::AliasTable(const std::vector<double>& weights) {
  const std::size_t n = weights.size();
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) prob_[i] = 1.0;
  for (auto i : small) prob_[i] = 1.0;
}

std::size_t AliasTable::sample(Rng& rng) const {
  const std::size_t i = rng.below(prob_.size());
  return rng.uniform() < prob_[i] ? i : alias_[i];
}

// -------------------------------------------------------------- OffspringLaw

OffspringLaw OffspringLaw::geometric_half() {
  OffspringLaw m;
  m.family_ = Family::kGeometricHalf;
  m.name_ = "geometric";
  return m;
}

OffspringLaw OffspringLaw::binary() { return from_pmf({0.5, 0.0, 0.5}, true, "binary"); }

OffspringLaw OffspringLaw::from_pmf(std::vector<double> pmf, bool check, std::string name) {
  for (double p : pmf)
    if (p < 0.0 || !std::isfinite(p)) throw Error(Errc::kNegativeMass, "offspring pmf has a negative entry");
  while (!pmf.empty() && pmf.back() == 0.0) pmf.pop_back();
  if (pmf.empty()) throw Error(Errc::kInvalidLaw, "offspring pmf is empty");
  double total = 0.0, mean = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    total += pmf[k];
    mean += static_cast<double>(k) * pmf[k];
  }
  if (check) {
    if (std::abs(total - 1.0) > kExplicitTol)
      throw Error(Errc::kInvalidLaw, "offspring pmf sums to " + std::to_string(total));
    if (pmf.size() == 2 && pmf[0] == 0.0)
      throw Error(Errc::kDegenerateDelta1, "offspring law is the point mass at 1");
    if (std::abs(mean - 1.0) > kExplicitTol)
      throw Error(Errc::kNotCritical, "offspring mean is " + std::to_string(mean));
  }
  OffspringLaw m;
  m.family_ = Family::kExplicit;
  m.name_ = std::move(name);
  m.pmf_ = std::move(pmf);
  m.alias_ = AliasTable(m.pmf_);
  return m;
}

OffspringLaw OffspringLaw::parse(std::string_view text) {
  std::string s = trim(text);
  if (s == "geometric" || s == "geometric(1/2)" || s == "geometric:0.5") return geometric_half();
  if (s == "binary") return binary();
  if (s == "delta0") return from_pmf({1.0}, false, "delta0");
  if (!s.empty() && s.front() == '{' && s.back() == '}') s = s.substr(1, s.size() - 2);
  if (s.find(':') == std::string::npos)
    throw Error(Errc::kConfigError, "unknown offspring law '" + std::string(text) + "'");
  std::vector<double> pmf;
  for (const auto& item : split(s, ',')) {
    const auto kv = split(item, ':');
    if (kv.size() != 2) throw Error(Errc::kConfigError, "bad pmf entry '" + item + "'");
    const long long k = to_int(kv[0]);
    if (k < 0) throw Error(Errc::kInvalidLaw, "negative offspring count");
    if (pmf.size() <= static_cast<std::size_t>(k)) pmf.resize(static_cast<std::size_t>(k) + 1, 0.0);
    pmf[static_cast<std::size_t>(k)] += to_double(kv[1]);
  }
  // A lone atom at 0 is only useful for degenerate experiments.
  const bool degenerate = pmf.size() == 1;
  return from_pmf(std::move(pmf), !degenerate, "{" + s + "}");
}

std::int64_t OffspringLaw::max_support() const {
  if (family_ != Family::kExplicit) return -1;
  return static_cast<std::int64_t>(pmf_.size()) - 1;
}

double OffspringLaw::pmf(std::int64_t k) const {
  if (k < 0) return 0.0;
  switch (family_) {
    case Family::kGeometricHalf:
      return std::ldexp(1.0, static_cast<int>(-std::min<std::int64_t>(k, 2000) - 1));
    case Family::kMergedGeometricHalf:
      return static_cast<double>(k + 1) * std::ldexp(1.0, static_cast<int>(-std::min<std::int64_t>(k, 2000) - 2));
    case Family::kExplicit:
      return static_cast<std::size_t>(k) < pmf_.size() ? pmf_[static_cast<std::size_t>(k)] : 0.0;
  }
  return 0.0;
}

double OffspringLaw::mean() const {
  switch (family_) {
    case Family::kGeometricHalf: return 1.0;
    case Family::kMergedGeometricHalf: return 2.0;
    case Family::kExplicit: break;
  }
  double m = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) m += static_cast<double>(k) * pmf_[k];
  return m;
}

double OffspringLaw::variance_factor() const {
  switch (family_) {
    case Family::kGeometricHalf: return 2.0;
    // E[K(K-1)] for the negative binomial NB(2, 1/2): Var + mean^2 - mean = 4 + 4 - 2.
    case Family::kMergedGeometricHalf: return 6.0;
    case Family::kExplicit: break;
  }
  double v = 0.0;
  for (std::size_t k = 2; k < pmf_.size(); ++k)
    v += static_cast<double>(k - 1) * static_cast<double>(k) * pmf_[k];
  return v;
}

std::int64_t OffspringLaw::sample(Rng& rng) const {
  switch (family_) {
    case Family::kGeometricHalf:
      return static_cast<std::int64_t>(rng.geometric_half());
    case Family::kMergedGeometricHalf:
      return static_cast<std::int64_t>(rng.geometric_half() + rng.geometric_half());
    case Family::kExplicit:
      break;
  }
  return static_cast<std::int64_t>(alias_.sample(rng));
}

double OffspringLaw::spine_marginal(std::int64_t i) const {
  if (family_ == Family::kGeometricHalf) return std::ldexp(1.0, static_cast<int>(-std::min<std::int64_t>(i, 2000) - 1));
  if (family_ == Family::kMergedGeometricHalf) {
    // sum_{k>i} (k+1) 2^{-k-2} = (i + 3) 2^{-i-2}
    return static_cast<double>(i + 3) * std::ldexp(1.0, static_cast<int>(-std::min<std::int64_t>(i, 2000) - 2));
  }
  double s = 0.0;
  for (std::size_t k = static_cast<std::size_t>(i + 1); k < pmf_.size(); ++k) s += pmf_[k];
  return s;
}

std::pair<std::int64_t, std::int64_t> OffspringLaw::sample_spine_pair(Rng& rng) const {
  std::int64_t m;
  if (family_ == Family::kGeometricHalf) {
    m = static_cast<std::int64_t>(rng.geometric_half() + rng.geometric_half());
  } else {
    // Size-biased draw: P(m) = (m+1) mu(m+1), then a uniform split.
    if (family_ != Family::kExplicit)
      throw Error(Errc::kInvalidLaw, "spine pairs need a critical offspring law");
    std::vector<double> w(pmf_.size() > 1 ? pmf_.size() - 1 : 1, 0.0);
    for (std::size_t k = 1; k < pmf_.size(); ++k) w[k - 1] = static_cast<double>(k) * pmf_[k];
    double u = rng.uniform() * std::accumulate(w.begin(), w.end(), 0.0);
    m = 0;
    while (m + 1 < static_cast<std::int64_t>(w.size()) && u >= w[static_cast<std::size_t>(m)]) {
      u -= w[static_cast<std::size_t>(m)];
      ++m;
    }
  }
  const auto kp = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m + 1)));
  return {kp, m - kp};
}

OffspringLaw OffspringLaw::merged() const {
  if (family_ == Family::kGeometricHalf) {
    OffspringLaw m;
    m.family_ = Family::kMergedGeometricHalf;
    m.name_ = "merged(geometric)";
    return m;
  }
  if (family_ != Family::kExplicit) throw Error(Errc::kInvalidLaw, "merged law of a merged law");
  std::vector<double> w(pmf_.size() > 1 ? pmf_.size() - 1 : 1, 0.0);
  for (std::size_t k = 1; k < pmf_.size(); ++k) w[k - 1] = static_cast<double>(k) * pmf_[k];
  return from_pmf(std::move(w), false, "merged(" + name_ + ")");
}

std::vector<double> OffspringLaw::pmf_table(double tail_tol) const {
  if (family_ == Family::kExplicit) return pmf_;
  std::vector<double> t;
  double tail = 1.0;
  for (std::int64_t k = 0; tail > tail_tol; ++k) {
    t.push_back(pmf(k));
    tail -= t.back();
    if (k > 4000) break;
  }
  return t;
}

// ------------------------------------------------------------------- lattice

std::int64_t lattice_index(const std::vector<Point>& gens, int d) {
  std::vector<std::array<std::int64_t, kMaxDim>> rows;
  for (const auto& g : gens) {
    std::array<std::int64_t, kMaxDim> r{};
    for (int i = 0; i < d; ++i) r[static_cast<std::size_t>(i)] = g[i];
    rows.push_back(r);
  }
  std::int64_t index = 1;
  std::size_t top = 0;
  for (int c = 0; c < d; ++c) {
    // Euclid on column c over rows top..end until one nonzero remains.
    for (;;) {
      std::size_t piv = rows.size();
      for (std::size_t r = top; r < rows.size(); ++r)
        if (rows[r][c] != 0 && (piv == rows.size() || std::abs(rows[r][c]) < std::abs(rows[piv][c])))
          piv = r;
      if (piv == rows.size()) return 0;
      std::swap(rows[top], rows[piv]);
      bool done = true;
      for (std::size_t r = top + 1; r < rows.size(); ++r) {
        if (rows[r][c] == 0) continue;
        const std::int64_t q = rows[r][c] / rows[top][c];
        for (int j = c; j < d; ++j) rows[r][j] -= q * rows[top][j];
        if (rows[r][c] != 0) done = false;
      }
      if (done) break;
    }
    index *= std::abs(rows[top][c]);
    ++top;
  }
  return index;
}

// ------------------------------------------------------------------- StepLaw

StepLaw StepLaw::simple(int d) {
  std::vector<std::pair<Point, double>> pmf;
  for (int i = 0; i < d; ++i) {
    pmf.emplace_back(unit(i, 1), 1.0 / (2 * d));
    pmf.emplace_back(unit(i, -1), 1.0 / (2 * d));
  }
  StepLaw s = from_pmf(d, pmf, "srw" + std::to_string(d));
  s.simple_ = true;
  return s;
}

StepLaw StepLaw::lazy_simple(int d, double hold) {
  if (!(hold > 0.0 && hold < 1.0)) throw Error(Errc::kInvalidLaw, "hold probability must be in (0,1)");
  std::vector<std::pair<Point, double>> pmf{{Point{}, hold}};
  for (int i = 0; i < d; ++i) {
    pmf.emplace_back(unit(i, 1), (1.0 - hold) / (2 * d));
    pmf.emplace_back(unit(i, -1), (1.0 - hold) / (2 * d));
  }
  return from_pmf(d, pmf, "lazy" + std::to_string(d));
}

StepLaw StepLaw::from_pmf(int d, const std::vector<std::pair<Point, double>>& pmf, std::string name) {
  if (d < 1 || d > kMaxDim) throw Error(Errc::kInvalidLaw, "dimension out of range");
  std::map<Point, double> merged;
  for (const auto& [x, p] : pmf) {
    if (p < 0.0 || !std::isfinite(p)) throw Error(Errc::kNegativeMass, "step pmf has a negative entry");
    for (int i = d; i < kMaxDim; ++i)
      if (x[i] != 0) throw Error(Errc::kInvalidLaw, "step outside dimension");
    if (p > 0.0) merged[x] += p;
  }
  StepLaw s;
  s.dim_ = d;
  s.name_ = std::move(name);
  for (const auto& [x, p] : merged) {
    s.support_.push_back(x);
    s.probs_.push_back(p);
  }
  s.finalize();
  return s;
}

void StepLaw::finalize() {
  const int d = dim_;
  if (support_.empty()) throw Error(Errc::kInvalidLaw, "empty step law");
  double total = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < support_.size(); ++k) {
    total += probs_[k];
    for (int i = 0; i < d; ++i) mean(i) += probs_[k] * support_[k][i];
  }
  if (std::abs(total - 1.0) > kClosedTol)
    throw Error(Errc::kInvalidLaw, "step pmf sums to " + std::to_string(total));
  if (mean.cwiseAbs().maxCoeff() > kClosedTol) throw Error(Errc::kInvalidLaw, "step law has nonzero mean");

  cov_ = Eigen::MatrixXd::Zero(d, d);
  max_abs_ = 0;
  for (std::size_t k = 0; k < support_.size(); ++k) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) cov_(i, j) += probs_[k] * support_[k][i] * support_[k][j];
    max_abs_ = std::max(max_abs_, support_[k].max_abs());
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) throw Error(Errc::kInvalidLaw, "covariance is not positive definite");
  cov_inv_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
  cov_det_ = cov_.determinant();

  if (lattice_index(support_, d) != 1) throw Error(Errc::kInvalidLaw, "step law is not irreducible");
  std::vector<Point> diffs;
  for (const auto& x : support_) diffs.push_back(x - support_.front());
  periodic_ = lattice_index(diffs, d) != 1;

  symmetric_ = true;
  for (std::size_t k = 0; k < support_.size(); ++k)
    if (pmf(-support_[k]) != probs_[k]) symmetric_ = false;

  reflect_.assign(static_cast<std::size_t>(kMaxDim), false);
  for (int a = 0; a < d; ++a) {
    bool ok = true;
    for (std::size_t k = 0; k < support_.size() && ok; ++k) {
      Point y = support_[k];
      y[a] = -y[a];
      ok = pmf(y) == probs_[k];
    }
    reflect_[static_cast<std::size_t>(a)] = ok;
  }
  permute_ = true;
  for (int a = 0; a + 1 < d && permute_; ++a) {
    for (std::size_t k = 0; k < support_.size() && permute_; ++k) {
      Point y = support_[k];
      std::swap(y[a], y[a + 1]);
      permute_ = pmf(y) == probs_[k];
    }
  }

  separable_ = true;
  hold_ = 0.0;
  axes_.assign(static_cast<std::size_t>(d), AxisLaw{});
  for (std::size_t k = 0; k < support_.size(); ++k) {
    int nz = 0, axis = -1;
    for (int i = 0; i < d; ++i)
      if (support_[k][i] != 0) {
        ++nz;
        axis = i;
      }
    if (nz == 0) {
      hold_ += probs_[k];
    } else if (nz == 1) {
      auto& ax = axes_[static_cast<std::size_t>(axis)];
      ax.weight += probs_[k];
      ax.jumps.emplace_back(support_[k][axis], probs_[k]);
    } else {
      separable_ = false;
    }
  }
  if (separable_) {
    for (auto& ax : axes_) {
      int g = 0;
      for (auto& [j, p] : ax.jumps) {
        p /= ax.weight;
        g = std::gcd(g, std::abs(j));
        ax.max_jump = std::max(ax.max_jump, std::abs(j));
        ax.second_moment += p * j * j;
      }
      ax.span = g;
    }
  } else {
    axes_.clear();
  }
  alias_ = AliasTable(probs_);
}

StepLaw StepLaw::parse(std::string_view text) {
  const std::string s = trim(text);
  auto dim_from = [&](const std::string& t) {
    const long long d = to_int(t);
    if (d < 1 || d > kMaxDim) throw Error(Errc::kConfigError, "dimension out of range in '" + s + "'");
    return static_cast<int>(d);
  };
  if (s.rfind("srw:", 0) == 0) return simple(dim_from(s.substr(4)));
  if (s.rfind("srw", 0) == 0 && s.size() > 3) return simple(dim_from(s.substr(3)));
  if (s.rfind("lazy:", 0) == 0) {
    const auto parts = split(s.substr(5), ':');
    if (parts.size() != 2) throw Error(Errc::kConfigError, "lazy law needs lazy:<d>:<hold>");
    return lazy_simple(dim_from(parts[0]), to_double(parts[1]));
  }
  if (s.rfind("pmf:", 0) == 0) {
    const auto parts = split(s.substr(4), ';');
    const int d = dim_from(parts.at(0));
    std::vector<std::pair<Point, double>> pmf;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      if (parts[i].empty()) continue;
      const auto kv = split(parts[i], '=');
      if (kv.size() != 2) throw Error(Errc::kConfigError, "bad step entry '" + parts[i] + "'");
      pmf.emplace_back(parse_point(kv[0], d), to_double(kv[1]));
    }
    return from_pmf(d, pmf, s);
  }
  throw Error(Errc::kConfigError, "unknown step law '" + s + "'");
}

double StepLaw::pmf(const Point& x) const {
  auto it = std::lower_bound(support_.begin(), support_.end(), x);
  if (it == support_.end() || *it != x) return 0.0;
  return probs_[static_cast<std::size_t>(it - support_.begin())];
}

Point StepLaw::canonical(const Point& x) const {
  Point y = x;
  for (int i = 0; i < dim_; ++i)
    if (reflect_[static_cast<std::size_t>(i)] && y[i] < 0) y[i] = -y[i];
  if (permute_) std::sort(y.c.begin(), y.c.begin() + dim_, std::greater<>());
  return y;
}

std::complex<double> StepLaw::characteristic(const double* t) const {
  std::complex<double> phi = 0.0;
  for (std::size_t k = 0; k < support_.size(); ++k) {
    double dot = 0.0;
    for (int i = 0; i < dim_; ++i) dot += t[i] * support_[k][i];
    phi += probs_[k] * std::complex<double>(std::cos(dot), std::sin(dot));
  }
  return phi;
}

Point StepLaw::sample(Rng& rng) const {
  if (simple_) {
    const auto r = rng.below(static_cast<std::uint64_t>(2 * dim_));
    return unit(static_cast<int>(r >> 1), (r & 1) ? -1 : 1);
  }
  return support_[alias_.sample(rng)];
}

StepLaw StepLaw::reversed() const {
  std::vector<std::pair<Point, double>> pmf;
  for (std::size_t k = 0; k < support_.size(); ++k) pmf.emplace_back(-support_[k], probs_[k]);
  StepLaw r = from_pmf(dim_, pmf, "-" + name_);
  r.simple_ = simple_;
  return r;
}

std::uint64_t StepLaw::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv(h, &dim_, sizeof dim_);
  for (std::size_t k = 0; k < support_.size(); ++k) {
    h = fnv(h, support_[k].c.data(), sizeof(std::int32_t) * static_cast<std::size_t>(dim_));
    h = fnv(h, &probs_[k], sizeof(double));
  }
  return h;
}

}  // namespace brwcap

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "brwcap/laws.hpp"
#include "brwcap/lattice.hpp"

namespace brwcap {

// Gaussian stand-in for a step law with covariance Gamma: the anisotropic
// norm J(x) = sqrt(x . Gamma^{-1} x), the continuum Green constant, and the
// local CLT density.
class GaussianSurrogate {
 public:
  explicit GaussianSurrogate(const Eigen::MatrixXd& cov);
  explicit GaussianSurrogate(const StepLaw& law) : GaussianSurrogate(law.covariance()) {}

  int dim() const { return static_cast<int>(cov_.rows()); }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& inverse() const { return inv_; }
  double det() const { return det_; }
  double lambda_max() const { return lmax_; }
  double lambda_min() const { return lmin_; }

  double J(const Point& x) const;
  double J(const Eigen::VectorXd& x) const { return std::sqrt(x.dot(inv_ * x)); }
  // Gamma(d/2) / ((d-2) pi^{d/2} sqrt(det Gamma)), d >= 3.
  double green_constant() const;
  double green(const Point& x) const;
  double density(double n, const Point& x) const;

 private:
  Eigen::MatrixXd cov_, inv_;
  double det_ = 0.0, lmax_ = 0.0, lmin_ = 0.0;
};

double green_asymptotic(const StepLaw& law, const Point& x);
double lclt_density(const StepLaw& law, std::int64_t n, const Point& x);

struct GreenOptions {
  int max_coord = 32;       // tables cover |x_i| <= max_coord; grown on demand until frozen
  double tolerance = 1e-8;  // relative agreement between the two outer rules
};

// Sum over quadrature nodes of products of one-dimensional lattice kernels:
//   K(x) = sum_n w_n prod_i P(Z_i(a_{n,i}) - Z'_i(b_{n,i}) = x_i)
// where Z_i, Z'_i are compound Poisson processes with the axis jump laws of
// eta and theta. Both the Green's function and the lattice convolution
// sum_x G_eta(z+x) G_theta(x) are integrals of this form.
class SeparableKernel {
 public:
  struct Node {
    double weight;
    double u;  // time for the eta component
    double v;  // time for the theta component
  };

  SeparableKernel(const StepLaw& eta, const StepLaw* theta, double eta_scale,
                  std::vector<Node> nodes, int max_coord);

  double operator()(const Point& x) const;
  int max_coord() const { return max_coord_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Group {
    StepLaw::AxisLaw eta, theta;
    bool has_theta = false;
    std::vector<double> table;  // [node][m + M]
  };
  void build(Group& g) const;

  int dim_;
  int max_coord_;
  double eta_scale_;
  std::vector<Node> nodes_;
  std::vector<Group> groups_;
  std::vector<int> group_of_axis_;
};

// P(Z(a) - Z'(b) = m) for m in [-M, M], with Z, Z' compound Poisson with the
// given jump laws (unit rate). Exposed for tests.
std::vector<double> compound_poisson_pmf(const StepLaw::AxisLaw& eta, double a,
                                         const StepLaw::AxisLaw* theta, double b, int M);

// Outer rule on [0, inf): octave panels with `points` Gauss-Legendre nodes each,
// a first panel [0, 1/16], and (when `tail` is set) a mapped panel for [U, inf).
struct OuterRule {
  std::vector<double> x, w;
};
OuterRule outer_rule(double U, int points, bool tail);

// G^lambda(x) = sum_k lambda^k P(S_k = x).
class GreenEvaluator {
 public:
  GreenEvaluator(const StepLaw& law, double lambda, GreenOptions opts = {});

  double operator()(const Point& x) const;
  double lambda() const { return lambda_; }
  const StepLaw& law() const { return law_; }
  int max_coord() const { return max_coord_; }
  // Make sure all |x_i| <= m are served from tables. Not thread-safe; call
  // before sharing the evaluator.
  void reserve(int m);
  // After freezing, queries outside the tables raise kCacheMiss.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  const char* method() const { return law_.separable() ? "heat-kernel" : "fourier"; }

 private:
  void build(int max_coord) const;
  double generic(const Point& x) const;

  StepLaw law_;
  double lambda_;
  GreenOptions opts_;
  mutable int max_coord_ = 0;
  bool frozen_ = false;
  mutable std::unique_ptr<SeparableKernel> kernel_;
  mutable std::mutex mu_;
  mutable std::unordered_map<Point, double, PointHash> generic_cache_;
};

// One-shot evaluation.
double green_fourier(const StepLaw& law, const Point& x, double lambda);

struct SeriesResult {
  double value;  // sum_{k <= N} lambda^k P(S_k = x)
  double tail;   // local-CLT estimate of the remaining terms
};

// Exact partial sums. Separable laws use an exact split of the steps among
// axes; other laws use dense convolution on a box of half-width `box`
// (0 means N * max step), raising kBoxTooSmall if mass leaks out.
SeriesResult green_series_oracle(const StepLaw& law, const Point& x, double lambda, std::int64_t N,
                                 int box = 0);
// Dense convolution regardless of separability.
SeriesResult green_series_dense(const StepLaw& law, const Point& x, double lambda, std::int64_t N,
                                int box = 0);

// Exact n-step probabilities P(S_n = x) for n = 0..N at a fixed point.
std::vector<double> step_probabilities(const StepLaw& law, const Point& x, std::int64_t N);

}  // namespace brwcap

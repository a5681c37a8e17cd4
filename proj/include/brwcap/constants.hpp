#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "brwcap/green.hpp"
#include "brwcap/green_table.hpp"
#include "brwcap/laws.hpp"
#include "brwcap/rng.hpp"

namespace brwcap {

// Continuum profile
//   F(z) = C_eta C_theta int J_eta(z + x)^{2-d} J_theta(x)^{2-d} dx,
// evaluated through its one-dimensional Gaussian representation
//   F(z) = (2 pi)^{-d/2} 2^{d/2-2} Gamma(d/2-2) int_0^1 det M(r)^{-1/2} q_r(z)^{2-d/2} dr
// with M(r) = r Gamma_eta + (1-r) Gamma_theta and q_r(z) = z . M(r)^{-1} z.
// Homogeneous of degree 4 - d. Needs d >= 5.
class ContinuumF {
 public:
  ContinuumF(const StepLaw& eta, const StepLaw& theta);

  double operator()(const Eigen::VectorXd& z) const;
  double operator()(const Point& z) const;
  int dim() const { return dim_; }
  // Both covariances are multiples of the identity, so F(z) = kappa |z|^{4-d}.
  bool isotropic() const { return isotropic_; }
  double kappa() const { return kappa_; }
  // 1 / (4 pi^6 sqrt(det Gamma_eta det Gamma_theta)) in d = 6.
  double prefactor() const;
  // C_{d,eta} C_{d,theta}
  double green_constant_product() const;

 private:
  double integral(const Eigen::VectorXd& z) const;

  int dim_;
  double det_eta_, det_theta_, c_eta_, c_theta_;
  double norm_;
  bool isotropic_ = false;
  double kappa_ = 0.0;
  std::vector<double> w_;
  std::vector<double> root_det_;  // det M(r_k)^{-1/2}
  std::vector<Eigen::MatrixXd> inv_;
};

// Phi(z) = sum_x G_eta(z + x) G_theta(x), the mean Green sum of a critical
// branching random walk seen from -z. Separable laws use the heat-kernel
// representation int int P(Z_eta(u) - Z_theta(v) = z) du dv, checked against
// a coarser rule on every call (kTailNotConverged when they disagree). Other
// laws fall back to a torus quadrature of 1/((1 - phi_eta)(1 - phi_theta)).
class LatticeF {
 public:
  LatticeF(const StepLaw& eta, const StepLaw& theta, int max_coord = 32, double tolerance = 1e-7);

  double operator()(const Point& z) const;
  const char* method() const { return separable_ ? "heat-kernel" : "fourier"; }
  int max_coord() const { return max_coord_; }

 private:
  void build(int max_coord) const;
  double torus(const Point& z) const;

  StepLaw eta_, theta_;
  bool same_, separable_;
  double tol_;
  mutable int max_coord_ = 0;
  mutable std::unique_ptr<SeparableKernel> fine_, coarse_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<Point, double, PointHash> cache_;
};

// Degree -2 extension of a lattice profile from a reference radius:
// F(z) ~ Phi(p) |p|^2 / |z|^2 with p the lattice point nearest R z / |z|.
class HomogeneousProfile {
 public:
  HomogeneousProfile(const LatticeF& phi, double radius) : phi_(&phi), radius_(radius) {}
  double operator()(const Eigen::VectorXd& z) const;

 private:
  const LatticeF* phi_;
  double radius_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<Point, double, PointHash> cache_;
};

// Sum_h E G_eta(z + S_h) over h > depth, by the Gaussian surrogate
// int_{depth+1/2}^inf dh int_0^inf du N(0, h Gamma_theta + u Gamma_eta)(z).
double brw_tail_correction(const StepLaw& eta, const StepLaw& theta, const Point& z, int depth);

struct BrwOracleResult {
  double mean = 0.0, std_error = 0.0;
  double second_moment = 0.0, second_moment_se = 0.0;
  double tail = 0.0;  // added to mean
  std::int64_t trees = 0, nodes = 0;
  int depth = 0;
};

// Monte Carlo of E[sum_u G_eta(z + X_u)] over unconditioned GW(mu) trees with
// theta displacements, cut at generation `depth`, plus brw_tail_correction.
// The second moment is of the truncated sum.
BrwOracleResult brw_green_oracle(const OffspringLaw& mu, const StepLaw& theta, const GreenTable& eta_green,
                                 const Point& z, std::int64_t trees, int depth, Rng& rng);

// E int_1^e |B_t|^{-2} dt for B with covariance sigma2 I_d.
double isotropic_bm_oracle(int d, double sigma2);

struct BmOptions {
  std::int64_t paths = 100000;
  int min_level = 3;   // 2^level grid intervals on [1, e] in log time
  int max_level = 8;
  double bias_tolerance = 1e-3;  // relative, estimated by step halving
};

struct BmResult {
  double value = 0.0, std_error = 0.0;
  double bias = 0.0;  // |I_l - I_{l-1}| / 3 at the chosen level
  int level = 0;
  std::int64_t paths = 0;
};

// E int_1^e f(B_t) dt for B with covariance `cov`, B_0 = 0. Trapezoid rule on
// a geometric grid, Richardson-extrapolated from the chosen level and its
// half. Throws kGridBiasExceedsTolerance.
BmResult c_f_mc(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::MatrixXd& cov, Rng& rng,
                const BmOptions& opt = {});

enum class ConstantMethod { kClosedForm, kMcBm, kLatticeSum };
const char* constant_method_name(ConstantMethod m);
ConstantMethod parse_constant_method(const std::string& s);

struct ConstantReport {
  double c_g = 0.0, std_error = 0.0;
  double variance_factor = 0.0;  // sum (k-1) k mu(k)
  double c_f = 0.0, c_f_se = 0.0;
  double prefactor = 0.0;
  double green_constant_product = 0.0;
  ConstantMethod method = ConstantMethod::kClosedForm;
  int grid_level = 0;
  std::string to_json() const;
};

// C_G = variance factor x prefactor x C_f. Needs d = 6.
ConstantReport c_g(const OffspringLaw& mu, const StepLaw& eta, const StepLaw& theta, ConstantMethod method,
                   Rng& rng, const BmOptions& opt = {});

struct BirkhoffRow {
  std::int64_t n = 0;
  double mean = 0.0, std_error = 0.0;
  double tail_frequency = 0.0;  // fraction of replicas off the limit by more than eps * limit
  std::int64_t replicas = 0;
};

// (1 / log n) sum_{i=1}^n f(S_i) for eta-walks, over replicas. f is not
// evaluated at the origin (a visit there contributes 0).
std::vector<BirkhoffRow> birkhoff_check(const std::function<double(const Point&)>& f, const StepLaw& eta,
                                        const std::vector<std::int64_t>& grid, double limit, double eps,
                                        std::int64_t replicas, std::uint64_t master, int threads = 1);

}  // namespace brwcap

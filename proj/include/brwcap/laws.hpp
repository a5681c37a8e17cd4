#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "brwcap/lattice.hpp"
#include "brwcap/rng.hpp"

namespace brwcap {

// Walker/Vose alias table over indices 0..n-1.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights);
  std::size_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

// Offspring distribution on {0,1,2,...}.
class OffspringLaw {
 public:
  enum class Family { kGeometricHalf, kMergedGeometricHalf, kExplicit };

  // mu(k) = 2^{-k-1}
  static OffspringLaw geometric_half();
  // mu(0) = mu(2) = 1/2
  static OffspringLaw binary();
  // pmf[k] = mu(k). Validated for criticality unless `check` is false, which
  // admits degenerate inputs such as {0:1} for boundary experiments.
  static OffspringLaw from_pmf(std::vector<double> pmf, bool check = true,
                               std::string name = "explicit");
  // "geometric", "binary", "{0:0.5,2:0.5}" / "0:0.5,2:0.5", "delta0".
  static OffspringLaw parse(std::string_view text);

  Family family() const { return family_; }
  const std::string& name() const { return name_; }
  bool bounded() const { return family_ == Family::kExplicit; }
  // Largest k with mu(k) > 0, or -1 for unbounded families.
  std::int64_t max_support() const;

  double pmf(std::int64_t k) const;
  double mean() const;
  // sum_k (k-1) k mu(k)
  double variance_factor() const;

  std::int64_t sample(Rng& rng) const;

  // mu(i + j + 1)
  double spine_pair(std::int64_t i, std::int64_t j) const { return pmf(i + j + 1); }
  // sum_j mu(i + j + 1) = mu[i+1, inf)
  double spine_marginal(std::int64_t i) const;
  // Draws (k_plus, k_minus) with probability mu(k_plus + k_minus + 1).
  std::pair<std::int64_t, std::int64_t> sample_spine_pair(Rng& rng) const;

  // mu*(k) = (k+1) mu(k+1)
  OffspringLaw merged() const;

  // Finite pmf vector up to max_support (bounded) or until the tail is
  // below `tail_tol` (unbounded).
  std::vector<double> pmf_table(double tail_tol = 1e-17) const;

 private:
  OffspringLaw() = default;
  Family family_ = Family::kExplicit;
  std::string name_;
  std::vector<double> pmf_;
  AliasTable alias_;
};

// Finite-support step law on Z^d.
class StepLaw {
 public:
  // Conditional jump law along one axis, used when the law moves along a
  // single coordinate per step.
  struct AxisLaw {
    double weight = 0.0;                       // P(step moves along this axis)
    std::vector<std::pair<int, double>> jumps;  // (jump, conditional prob), jump != 0
    int span = 1;                               // gcd of jump sizes
    int max_jump = 0;
    double second_moment = 0.0;                 // E[jump^2] under the conditional law
  };

  static StepLaw simple(int d);
  // Holds with probability `hold`, otherwise a simple-walk step.
  static StepLaw lazy_simple(int d, double hold);
  static StepLaw from_pmf(int d, const std::vector<std::pair<Point, double>>& pmf,
                          std::string name = "explicit");
  // "srw6", "srw:6", "lazy:1:0.5", "pmf:3;1,0,0=0.25;-1,0,0=0.25;..."
  static StepLaw parse(std::string_view text);

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  const std::vector<Point>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  double pmf(const Point& x) const;

  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& covariance_inverse() const { return cov_inv_; }
  double covariance_det() const { return cov_det_; }

  bool symmetric() const { return symmetric_; }
  bool periodic() const { return periodic_; }
  bool is_simple() const { return simple_; }
  // Reflection symmetry of axis i, and full invariance under coordinate
  // permutations. Used to canonicalize Green-function keys.
  bool reflection_symmetric(int axis) const { return reflect_[static_cast<std::size_t>(axis)]; }
  bool permutation_symmetric() const { return permute_; }
  Point canonical(const Point& x) const;

  // Axis-separable view: P(stay) plus one AxisLaw per coordinate.
  bool separable() const { return separable_; }
  double hold() const { return hold_; }
  const std::vector<AxisLaw>& axes() const { return axes_; }

  std::complex<double> characteristic(const double* t) const;
  Point sample(Rng& rng) const;
  // Law of -X.
  StepLaw reversed() const;
  std::uint64_t hash() const;
  int max_abs_step() const { return max_abs_; }

 private:
  StepLaw() = default;
  void finalize();

  int dim_ = 0;
  std::string name_;
  std::vector<Point> support_;
  std::vector<double> probs_;
  Eigen::MatrixXd cov_, cov_inv_;
  double cov_det_ = 0.0;
  bool symmetric_ = false, periodic_ = false, simple_ = false;
  bool separable_ = false, permute_ = false;
  std::vector<bool> reflect_;
  double hold_ = 0.0;
  std::vector<AxisLaw> axes_;
  AliasTable alias_;
  int max_abs_ = 0;
};

// Index of the subgroup of Z^d generated by `gens` (0 if rank < d).
std::int64_t lattice_index(const std::vector<Point>& gens, int d);

}  // namespace brwcap

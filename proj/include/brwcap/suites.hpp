#pragma once

#include <string>
#include <utility>
#include <vector>

#include "brwcap/config.hpp"

namespace brwcap {

// Outcome of one invariant suite. Failures are data: suites only throw on
// misconfiguration.
struct SuiteResult {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> metrics;  // in insertion order
  std::vector<std::string> notes;
  double seconds = 0.0;

  void metric(const std::string& key, double v) { metrics.emplace_back(key, v); }
  double get(const std::string& key) const;
};

struct Tolerances {
  double kemperman = 1e-12;
  double z = 3.0;  // standard errors
  double singleton = 1e-8;
  double green_ratio = 0.02;
  double series = 1e-6;
  double chi_square_p = 1e-3;
  double homogeneity = 0.02;
  double profile = 0.02;
};

// kemperman_prob against brute-force forest enumeration, n, m <= 8, for the
// geometric and binary laws.
SuiteResult kemperman_suite(const Tolerances& tol = {});
// E * G * I has mean 1 for every n in c.killed_n (d = 6 forest, simple walks).
SuiteResult killed_triple_suite(const ExperimentConfig& c, const Tolerances& tol = {});
// Exact equilibrium solve against escape Monte Carlo on conditioned-tree
// ranges in d = 6 and 7, plus the singleton.
SuiteResult capacity_cross_suite(const ExperimentConfig& c, const Tolerances& tol = {});
// capacity_lower_bound <= capacity_exact for k in {1, 4, 16}.
SuiteResult lower_bound_suite(const ExperimentConfig& c, const Tolerances& tol = {});
// Green's function against its asymptotic on |x| in [20, 60] and against the
// series oracle near the origin.
SuiteResult green_suite(const ExperimentConfig& c, const Tolerances& tol = {});
// Re-indexing equations for the shifted forest and local-shape frequencies
// against cylinder probabilities, for the base and its shift.
SuiteResult shift_suite(const ExperimentConfig& c, const Tolerances& tol = {});
// Lattice profile against the branching-walk Monte Carlo, homogeneity, and
// the simple-walk profile constant.
SuiteResult f_identity_suite(const ExperimentConfig& c, const Tolerances& tol = {});
// Brownian functional against its closed form, then C_G from the Monte Carlo
// route set beside both candidate closed forms.
SuiteResult constant_suite(const ExperimentConfig& c, const Tolerances& tol = {});

std::vector<SuiteResult> run_identity_suites(const ExperimentConfig& c, const Tolerances& tol = {});

// The two candidate closed forms for C_G with simple walks in d = 6.
double c_g_candidate_small();  // 9 / pi^3
double c_g_candidate_large();  // 27 / pi^3

}  // namespace brwcap

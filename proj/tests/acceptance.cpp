// Acceptance checks. Usage: acceptance [criterion ...]; with no arguments all
// eleven run. Each prints one line "criterion N: PASS|FAIL ..." and the exit
// status is non-zero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "brwcap/constants.hpp"
#include "brwcap/experiments.hpp"
#include "brwcap/suites.hpp"

using namespace brwcap;

namespace {

// Pinned gates.
constexpr double kKempermanTol = 1e-12;
constexpr double kSigmas = 3.0;
constexpr double kSingletonTol = 1e-8;
constexpr double kGreenRatioTol = 0.02;
constexpr double kSeriesTol = 1e-6;
constexpr double kChiSquareP = 1e-3;
constexpr double kHomogeneityTol = 0.02;
constexpr double kProfileTol = 0.02;
constexpr double kD6Deviation = 0.15;
constexpr double kRatioLow = 0.9, kRatioHigh = 1.1;
constexpr std::int64_t kRatioFrom = 1 << 13;

Tolerances pinned() {
  Tolerances t;
  t.kemperman = kKempermanTol;
  t.z = kSigmas;
  t.singleton = kSingletonTol;
  t.green_ratio = kGreenRatioTol;
  t.series = kSeriesTol;
  t.chi_square_p = kChiSquareP;
  t.homogeneity = kHomogeneityTol;
  t.profile = kProfileTol;
  return t;
}

ExperimentConfig budgets() {
  auto c = default_config("identities");
  c.killed_n = {64, 256, 1024};
  c.killed_replicas = 10000;
  c.capacity_sets = 20;
  c.bound_sets = 100;
  c.series_points = 50;
  c.shape_samples = 1000000;
  c.oracle_trees = 100000;
  return c;
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream o;
  o.precision(precision);
  o << v;
  return o.str();
}

Outcome from_suite(const SuiteResult& s, const std::vector<std::string>& keys) {
  std::string d;
  for (const auto& k : keys) d += k + "=" + fmt(s.get(k)) + " ";
  for (const auto& n : s.notes) d += "[" + n + "] ";
  return {s.pass, d};
}

Outcome criterion1() {
  return from_suite(kemperman_suite(pinned()), {"rows", "max_abs_error"});
}

Outcome criterion2() {
  return from_suite(killed_triple_suite(budgets(), pinned()),
                    {"n64_mean", "n64_z", "n256_mean", "n256_z", "n1024_mean", "n1024_z"});
}

Outcome criterion3() {
  return from_suite(capacity_cross_suite(budgets(), pinned()), {"sets", "max_abs_z", "max_set_size", "singleton_error"});
}

Outcome criterion4() {
  return from_suite(lower_bound_suite(budgets(), pinned()), {"sets", "violations", "min_relative_gap"});
}

Outcome criterion5() {
  return from_suite(green_suite(budgets(), pinned()),
                    {"asymptotic_points", "max_asymptotic_deviation", "series_points", "max_series_difference"});
}

Outcome criterion6() {
  return from_suite(shift_suite(budgets(), pinned()),
                    {"samples", "reindexing_failures", "base_p_value", "shift_p_value"});
}

Outcome criterion7() {
  return from_suite(f_identity_suite(budgets(), pinned()),
                    {"r5_z", "r10_z", "lattice_homogeneity_deviation", "continuum_homogeneity_deviation",
                     "lattice_profile_deviation", "continuum_profile_deviation"});
}

Outcome criterion8() {
  return from_suite(constant_suite(budgets(), pinned()),
                    {"bm_estimate", "bm_oracle", "bm_z", "c_g_monte_carlo", "c_g_std_error", "candidate_9_over_pi3",
                     "candidate_27_over_pi3", "c_g_resolved"});
}

ConstantReport resolved_constant() {
  Rng rng(1);
  return c_g(OffspringLaw::geometric_half(), StepLaw::simple(6), StepLaw::simple(6), ConstantMethod::kClosedForm, rng);
}

Outcome criterion9() {
  auto c = default_config("d6");
  c.replicas = 50;
  c.max_deviation = kD6Deviation;
  const auto k = resolved_constant();
  const auto r = run_d6_experiment(c, k);
  std::string d = "C_G=" + fmt(k.c_g) + " target=" + fmt(2.0 / k.c_g) + " deviations:";
  for (const auto& row : r.rows) d += " " + fmt(row.extra[3], 3);
  d += " slope=" + fmt(r.summary["deviation_slope_per_log_n"].get<double>(), 3);
  d += " max_model_z=" + fmt(r.summary["max_model_z"].get<double>(), 3);
  return {r.pass, d};
}

Outcome criterion10() {
  auto c = default_config("d7");
  c.replicas = 50;
  c.ratio_from = kRatioFrom;
  c.ratio_low = kRatioLow;
  c.ratio_high = kRatioHigh;
  const auto r = run_d7_experiment(c);
  std::string d = "cap/n:";
  for (const auto& row : r.rows) d += " " + fmt(row.mean, 4);
  d += " ratios:";
  for (const auto& row : r.rows)
    if (!std::isnan(row.extra[3])) d += " " + fmt(row.extra[3], 4);
  return {r.pass, d};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion11() {
  const auto root = std::filesystem::temp_directory_path() / ("brwcap_determinism_" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  auto d7 = default_config("d7");
  d7.grid = {256, 512, 1024};
  d7.replicas = 8;
  auto d6 = default_config("d6");
  d6.grid = {256, 512, 1024};
  d6.replicas = 8;
  auto ids = default_config("identities");
  ids.bound_sets = 10;
  const auto k = resolved_constant();

  int compared = 0, differ = 0;
  for (int run = 0; run < 2; ++run) {
    const auto dir = root / std::to_string(run);
    d7.threads = d6.threads = ids.threads = 1 + 2 * run;
    write_outputs(run_d7_experiment(d7), dir.string());
    write_outputs(run_d6_experiment(d6, k), dir.string());
    write_suites({kemperman_suite(), lower_bound_suite(ids)}, ids, dir.string());
  }
  for (const char* f : {"d7.csv", "d7.json", "d7.plot", "d6.csv", "d6.json", "d6.plot", "identities.csv",
                        "identities.json"}) {
    ++compared;
    if (slurp(root / "0" / f) != slurp(root / "1" / f)) ++differ;
  }
  std::filesystem::remove_all(root);
  return {differ == 0, "files compared=" + std::to_string(compared) + " differing=" + std::to_string(differ)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> all{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},   {5, criterion5},   {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}, {11, criterion11},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));
  if (selected.empty())
    for (const auto& [k, f] : all) selected.push_back(k);

  bool ok = true;
  for (int k : selected) {
    const auto it = all.find(k);
    if (it == all.end()) {
      std::cout << "criterion " << k << ": FAIL unknown criterion\n";
      ok = false;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fmt(s, 3) << " s) " << o.detail
              << std::endl;
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}

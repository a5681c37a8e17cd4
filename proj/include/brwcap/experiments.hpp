#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "brwcap/config.hpp"
#include "brwcap/constants.hpp"
#include "brwcap/suites.hpp"
#include "json.hpp"

namespace brwcap {

// Bumped whenever a column is added, removed or reordered.
inline constexpr int kCsvSchemaVersion = 1;

struct ExperimentRow {
  std::int64_t n = 0;
  std::int64_t replicas = 0;
  double mean = 0.0, std_error = 0.0;
  std::vector<double> extra;  // aligned with ExperimentResult::extra_columns
  double seconds = 0.0;
};

struct ExperimentResult {
  std::string name;
  ExperimentConfig config;
  std::string build_id;
  std::string statistic;  // what `mean` averages
  std::vector<std::string> extra_columns;
  std::vector<ExperimentRow> rows;
  nlohmann::ordered_json summary;  // gates and derived quantities
  bool pass = false;
};

// Identifies the binary that produced an output: the source revision when the
// build knew it, else "unknown".
std::string build_id();

// cap(R) / n for conditioned trees of n nodes. Reports the ratio between
// successive grid points and the coefficient of variation; passes when every
// ratio from c.ratio_from on lies in [c.ratio_low, c.ratio_high].
ExperimentResult run_d7_experiment(const ExperimentConfig& c);

// cap(R) log n / n against 2 / C_G, with C_G taken from `constant`. With
// c.infinite_model the same statistic is measured on the window R[0, n - 1]
// of the spine forest. Passes when the relative deviation trends down and
// ends at most c.max_deviation.
ExperimentResult run_d6_experiment(const ExperimentConfig& c, const ConstantReport& constant);

// Exploratory: capacity and its best pairwise lower bound for d = 5, with
// fitted log-log growth exponents. Has no gate.
ExperimentResult run_d5_lower_bound(const ExperimentConfig& c);

// Writes <dir>/<name>.csv, <name>.json, <name>.plot and <name>.timing.csv.
// Only the last holds wall times.
void write_outputs(const ExperimentResult& r, const std::string& dir);

std::string to_csv(const ExperimentResult& r);
nlohmann::ordered_json to_json(const ExperimentResult& r);
// "x y yerr" lines: n, mean, std_error.
std::string to_plot(const ExperimentResult& r);

// Pass/fail matrix for the identity suites.
nlohmann::ordered_json suites_json(const std::vector<SuiteResult>& suites, const ExperimentConfig& c);
std::string suites_csv(const std::vector<SuiteResult>& suites);
void write_suites(const std::vector<SuiteResult>& suites, const ExperimentConfig& c, const std::string& dir);

}  // namespace brwcap

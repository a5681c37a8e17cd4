#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace brwcap {

// One experiment section. Keys absent from a section keep these defaults.
struct ExperimentConfig {
  std::string name;  // d6 | d7 | d5 | identities
  int dim = 6;
  std::string mu = "geometric";
  std::string theta = "srw6";
  std::string eta = "srw6";
  std::vector<std::int64_t> grid;
  std::int64_t replicas = 50;
  std::uint64_t seed = 20240611;
  std::string capacity = "mc";  // exact | mc
  std::string output_dir = "results";
  int threads = 1;

  // escape estimator
  double epsilon = 1e-3;
  std::int64_t walkers = 1;
  std::int64_t start_points = 2000;

  // d6: also measure windows R[0, n-1] of the spine forest
  bool infinite_model = true;
  // gates
  double max_deviation = 0.15;
  std::int64_t ratio_from = 8192;
  double ratio_low = 0.9, ratio_high = 1.1;

  // identity suite budgets
  std::vector<std::int64_t> killed_n{64, 256, 1024};
  std::int64_t killed_replicas = 10000;
  int killed_walkers = 256;
  std::int64_t capacity_sets = 20;
  std::int64_t capacity_walkers = 200;
  double capacity_epsilon = 1e-4;
  std::int64_t bound_sets = 100;
  std::int64_t green_points = 200;
  std::int64_t series_points = 50;
  std::int64_t shape_samples = 1000000;
  std::int64_t oracle_trees = 100000;
  int oracle_depth = 500;
  std::int64_t bm_paths = 100000;
};

struct RunConfig {
  std::map<std::string, ExperimentConfig> experiments;
};

// Key-value file with [sections]:
//
//   [run]          seed, threads, output_dir (defaults for every section)
//   [d6] [d7] [d5] [identities]
//                  any ExperimentConfig field by name
//
// Lists are comma separated; "2^10..2^17" expands to the powers of two in
// that range. '#' and ';' start comments. Unknown sections or keys, bad
// values, and non-increasing grids raise kConfigError.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

// Built-in defaults for a named experiment.
ExperimentConfig default_config(const std::string& name);

// Grid syntax described above.
std::vector<std::int64_t> parse_grid(const std::string& s);

// Deterministic "key = value" echo of every field.
std::string echo(const ExperimentConfig& c);

}  // namespace brwcap

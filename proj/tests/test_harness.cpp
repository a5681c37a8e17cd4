#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "brwcap/experiments.hpp"

using namespace brwcap;

namespace {

ExperimentConfig small_d7() {
  auto c = default_config("d7");
  c.grid = {64, 128, 256};
  c.replicas = 6;
  c.start_points = 100;
  c.ratio_from = 128;
  c.ratio_low = 0.0;
  c.ratio_high = 10.0;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("rows cover the grid with finite errors") {
  const auto r = run_d7_experiment(small_d7());
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    CHECK(std::isfinite(row.std_error));
    CHECK(row.mean > 0.0);
    CHECK(row.mean <= 1.0);
    CHECK(row.extra.size() == r.extra_columns.size());
  }
  CHECK(r.pass);
  CHECK(!r.build_id.empty());
}

TEST_CASE("outputs do not depend on threads or reruns") {
  auto c = small_d7();
  const auto base = std::filesystem::temp_directory_path() / "brwcap_harness_test";
  std::filesystem::remove_all(base);
  write_outputs(run_d7_experiment(c), (base / "a").string());
  c.threads = 3;
  write_outputs(run_d7_experiment(c), (base / "b").string());
  for (const char* f : {"d7.csv", "d7.json", "d7.plot"}) CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));
  CHECK(std::filesystem::exists(base / "a" / "d7.timing.csv"));
  c.seed += 1;
  write_outputs(run_d7_experiment(c), (base / "c").string());
  CHECK(slurp(base / "a" / "d7.csv") != slurp(base / "c" / "d7.csv"));
  std::filesystem::remove_all(base);
}

TEST_CASE("csv schema") {
  const auto csv = to_csv(run_d7_experiment(small_d7()));
  CHECK(csv.rfind("# schema 1 d7\nn,replicas,mean,std_error,sd,mean_range_size,cv,ratio\n", 0) == 0);
  const auto plot = to_plot(run_d7_experiment(small_d7()));
  CHECK(plot.find("\n64 ") != std::string::npos);
}

TEST_CASE("leaf law gives a single point") {
  auto c = small_d7();
  c.mu = "delta0";
  CHECK_THROWS(run_d7_experiment(c));  // only n = 1 is feasible
  c.grid = {1};
  const auto r = run_d7_experiment(c);
  CHECK(r.rows[0].extra[1] == 1.0);
}

TEST_CASE("four times the replicas halve the error") {
  auto c = small_d7();
  c.grid = {256};
  c.replicas = 100;
  const double a = run_d7_experiment(c).rows[0].std_error;
  c.replicas = 400;
  c.seed = 99;
  const double b = run_d7_experiment(c).rows[0].std_error;
  CHECK(b / a == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("d6 statistic is positive and below log n") {
  auto c = default_config("d6");
  c.grid = {128, 256};
  c.replicas = 4;
  c.start_points = 100;
  ConstantReport k;
  k.c_g = 27.0 / std::pow(M_PI, 3);
  const auto r = run_d6_experiment(c, k);
  for (const auto& row : r.rows) {
    CHECK(row.mean > 0.0);
    CHECK(row.mean <= std::log(static_cast<double>(row.n)));
    CHECK(std::isfinite(row.extra[7]));
  }
  CHECK(r.summary.contains("final_deviation"));
}

TEST_CASE("identity matrix") {
  SuiteResult s;
  s.name = "x";
  s.pass = true;
  s.metric("a", 1.5);
  const auto j = suites_json({s}, default_config("identities"));
  CHECK(j["pass"] == true);
  CHECK(j["suites"][0]["metrics"]["a"] == 1.5);
  CHECK(suites_csv({s}).find("x,1,a,1.5") != std::string::npos);
}

}

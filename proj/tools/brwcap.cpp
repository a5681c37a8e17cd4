// brwcap: sample trees and forests, evaluate Green's functions, capacities and
// constants, and run the experiments.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "brwcap/capacity.hpp"
#include "brwcap/config.hpp"
#include "brwcap/constants.hpp"
#include "brwcap/error.hpp"
#include "brwcap/experiments.hpp"
#include "brwcap/green.hpp"
#include "brwcap/spine_forest.hpp"
#include "brwcap/suites.hpp"
#include "brwcap/trees.hpp"
#include "json.hpp"

using namespace brwcap;

namespace {

// Either the tree text format or one point per line ('#' comments).
RangeSet read_range(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path);
  std::string first;
  in >> first;
  in.seekg(0);
  RangeSet A(d);
  if (first == "tree") {
    const auto t = read_tree(in);
    if (t.dim != d) throw Error(Errc::kIoError, "tree dimension does not match the law");
    for (const auto& p : t.pos) A.add(p);
    return A;
  }
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    A.add(parse_point(line, d));
  }
  if (A.size() == 0) throw Error(Errc::kIoError, "no points in " + path);
  return A;
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw Error(Errc::kIoError, "cannot write " + path);
  return file;
}

ConstantReport default_constant(const ExperimentConfig& c, const std::string& method) {
  const auto mu = OffspringLaw::parse(c.mu);
  const auto eta = StepLaw::parse(c.eta), theta = StepLaw::parse(c.theta);
  Rng rng = stream(c.seed, 0xc6, 0, 0);
  if (method == "auto") {
    const bool iso = ContinuumF(eta, theta).isotropic();
    return c_g(mu, eta, theta, iso ? ConstantMethod::kClosedForm : ConstantMethod::kMcBm, rng);
  }
  return c_g(mu, eta, theta, parse_constant_method(method), rng);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity of branching random walk ranges"};
  app.require_subcommand(1);

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a tree or a spine-forest window");
  sample->require_subcommand(1);
  std::string mu = "geometric", theta = "srw6", out;
  std::uint64_t seed = 1;
  std::int64_t n = 100;
  bool unconditioned = false;
  auto* tree = sample->add_subcommand("tree", "Galton-Watson tree, embedded");
  tree->add_option("--mu", mu, "offspring law")->capture_default_str();
  tree->add_option("--theta", theta, "displacement law")->capture_default_str();
  tree->add_option("--n", n, "number of nodes (conditioned)")->capture_default_str();
  tree->add_flag("--unconditioned", unconditioned, "ignore --n and draw a free tree");
  tree->add_option("--seed", seed)->capture_default_str();
  tree->add_option("-o,--out", out, "output file (default stdout)");
  std::int64_t from = -10, to = 10;
  auto* forest = sample->add_subcommand("forest", "Window of the two-sided spine forest");
  forest->add_option("--mu", mu)->capture_default_str();
  forest->add_option("--theta", theta)->capture_default_str();
  forest->add_option("--from", from)->capture_default_str();
  forest->add_option("--to", to)->capture_default_str();
  forest->add_option("--seed", seed)->capture_default_str();
  forest->add_option("-o,--out", out);

  // green
  auto* green = app.add_subcommand("green", "Green's function");
  green->require_subcommand(1);
  std::string law = "srw6", point, gmethod = "evaluator";
  double lambda = 1.0;
  std::int64_t steps = 2000;
  auto* eval = green->add_subcommand("eval", "G^lambda at a point");
  eval->add_option("--law", law)->capture_default_str();
  eval->add_option("--point", point, "comma-separated coordinates")->required();
  eval->add_option("--lambda", lambda)->capture_default_str();
  eval->add_option("--method", gmethod, "evaluator | series | asymptotic")->capture_default_str();
  eval->add_option("--steps", steps, "series length")->capture_default_str();

  // capacity
  auto* cap = app.add_subcommand("capacity", "Capacity of a finite set");
  std::string cmethod = "exact", input;
  std::int64_t k = 4, walkers = 10000, start_points = 0;
  double epsilon = 1e-3;
  cap->add_option("--method", cmethod, "exact | mc | bound")->capture_default_str();
  cap->add_option("--input", input, "range file")->required();
  cap->add_option("--law", law, "walk law eta")->capture_default_str();
  cap->add_option("--k", k, "lower-bound parameter")->capture_default_str();
  cap->add_option("--walkers", walkers)->capture_default_str();
  cap->add_option("--epsilon", epsilon)->capture_default_str();
  cap->add_option("--start-points", start_points, "0 = all points")->capture_default_str();
  cap->add_option("--seed", seed)->capture_default_str();

  // constants
  auto* constants = app.add_subcommand("constants", "Limit constants");
  constants->require_subcommand(1);
  std::string eta = "srw6", kmethod = "closed";
  std::int64_t paths = 100000;
  auto* cg = constants->add_subcommand("c-g", "C_G in dimension 6");
  cg->add_option("--mu", mu)->capture_default_str();
  cg->add_option("--theta", theta)->capture_default_str();
  cg->add_option("--eta", eta)->capture_default_str();
  cg->add_option("--method", kmethod, "closed | mc | lattice")->capture_default_str();
  cg->add_option("--paths", paths, "Brownian paths")->capture_default_str();
  cg->add_option("--seed", seed)->capture_default_str();

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run an experiment from a config file");
  std::string which, config, outdir, constant_method = "auto";
  int threads = 0;
  bool d5 = false;
  exp->add_option("name", which, "d6 | d7 | identities")->required()->check(CLI::IsMember({"d6", "d7", "identities"}));
  exp->add_option("--config", config, "config file (built-in defaults if omitted)");
  exp->add_option("--out", outdir, "output directory (overrides the config)");
  exp->add_option("--threads", threads, "worker threads (overrides the config)");
  exp->add_option("--c-g-method", constant_method, "auto | closed | mc | lattice")->capture_default_str();
  exp->add_flag("--d5-lower-bound", d5, "also run the exploratory d = 5 growth measurement");

  CLI11_PARSE(app, argc, argv);

  try {
    if (tree->parsed()) {
      const auto m = OffspringLaw::parse(mu);
      const auto th = StepLaw::parse(theta);
      Rng rng(seed);
      const auto t = unconditioned ? sample_gw(m, rng) : sample_gw_conditioned(m, n, rng);
      const auto st = embed(t, th, rng);
      std::ofstream f;
      write_tree(output(out, f), t, &st.pos, th.dim());
    } else if (forest->parsed()) {
      const auto m = OffspringLaw::parse(mu);
      const auto th = StepLaw::parse(theta);
      SpineForest sf(m, th, seed);
      sf.extend(from, to);
      std::ofstream f;
      write_window(output(out, f), ForestView(sf), from, to);
    } else if (eval->parsed()) {
      const auto l = StepLaw::parse(law);
      const auto x = parse_point(point, l.dim());
      nlohmann::ordered_json j;
      j["law"] = l.name();
      j["point"] = format_point(x, l.dim());
      j["lambda"] = lambda;
      j["method"] = gmethod;
      if (gmethod == "evaluator") {
        GreenEvaluator g(l, lambda);
        j["value"] = g(x);
        j["route"] = g.method();
      } else if (gmethod == "series") {
        const auto s = green_series_oracle(l, x, lambda, steps);
        j["value"] = s.value + s.tail;
        j["partial_sum"] = s.value;
        j["tail"] = s.tail;
      } else if (gmethod == "asymptotic") {
        j["value"] = green_asymptotic(l, x);
      } else {
        throw Error(Errc::kConfigError, "unknown Green method '" + gmethod + "'");
      }
      std::cout << j.dump() << '\n';
    } else if (cap->parsed()) {
      const auto l = StepLaw::parse(law);
      const auto A = read_range(input, l.dim());
      const auto method = parse_method(cmethod);
      CapacityEstimate e;
      if (method == CapacityMethod::kMcEscape) {
        Rng rng(seed);
        EscapeOptions o;
        o.walkers = walkers;
        o.epsilon = epsilon;
        o.sample_points = start_points;
        e = capacity_mc(A, l, rng, o);
      } else {
        GreenTable g(l, 1.0);
        if (method == CapacityMethod::kExact) {
          e = capacity_exact(A, g);
        } else {
          e.method = CapacityMethod::kLowerBound;
          e.value = capacity_lower_bound(A, g, k);
          e.params["k"] = static_cast<double>(k);
          e.params["points"] = static_cast<double>(A.size());
        }
      }
      std::cout << e.to_json() << '\n';
    } else if (cg->parsed()) {
      Rng rng(seed);
      BmOptions o;
      o.paths = paths;
      const auto r = c_g(OffspringLaw::parse(mu), StepLaw::parse(eta), StepLaw::parse(theta),
                         parse_constant_method(kmethod), rng, o);
      std::cout << r.to_json() << '\n';
    } else if (exp->parsed()) {
      RunConfig rc;
      if (!config.empty()) rc = load_config(config);
      auto section = [&](const std::string& name) {
        auto it = rc.experiments.find(name);
        auto c = it == rc.experiments.end() ? default_config(name) : it->second;
        if (!outdir.empty()) c.output_dir = outdir;
        if (threads > 0) c.threads = threads;
        return c;
      };
      const auto c = section(which);
      bool pass = true;
      if (which == "identities") {
        const auto suites = run_identity_suites(c);
        write_suites(suites, c, c.output_dir);
        for (const auto& s : suites) {
          std::cout << (s.pass ? "PASS " : "FAIL ") << s.name << " (" << s.seconds << " s)\n";
          pass = pass && s.pass;
        }
      } else {
        ExperimentResult r;
        if (which == "d6") {
          const auto constant = default_constant(c, constant_method);
          std::cerr << "C_G = " << constant.c_g << " (" << constant_method_name(constant.method) << ")\n";
          r = run_d6_experiment(c, constant);
        } else {
          r = run_d7_experiment(c);
        }
        write_outputs(r, c.output_dir);
        std::cout << to_csv(r);
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << '\n';
        pass = r.pass;
      }
      if (d5) {
        const auto c5 = section("d5");
        const auto r = run_d5_lower_bound(c5);
        write_outputs(r, c5.output_dir);
        std::cout << "exploratory d=5:\n" << to_csv(r) << "capacity exponent " << r.summary["capacity_exponent"]
                  << ", bound exponent " << r.summary["bound_exponent"] << '\n';
      }
      return pass ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

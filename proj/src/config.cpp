#include "brwcap/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "brwcap/error.hpp"

namespace brwcap {

namespace {

[[noreturn]] void fail(const std::string& what, const std::string& value) {
  throw Error(Errc::kConfigError, what + ": " + value);
}

const std::set<std::string> kSections{"run", "d6", "d7", "d5", "identities"};
const std::set<std::string> kRunKeys{"seed", "threads", "output_dir"};

template <class T>
T number(const std::string& key, const std::string& v) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(v));
  } catch (const boost::bad_lexical_cast&) {
    fail("bad value for " + key, v);
  }
}

bool boolean(const std::string& key, const std::string& v) {
  const auto s = boost::to_lower_copy(boost::trim_copy(v));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail("bad value for " + key, v);
}

std::int64_t power_or_int(const std::string& s) {
  const auto t = boost::trim_copy(s);
  if (auto caret = t.find('^'); caret != std::string::npos) {
    const auto base = number<std::int64_t>("grid", t.substr(0, caret));
    const auto e = number<int>("grid", t.substr(caret + 1));
    if (base != 2 || e < 0 || e > 40) fail("grid powers must be 2^k", t);
    return std::int64_t{1} << e;
  }
  return number<std::int64_t>("grid", t);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = [] {
    std::map<std::string, Setter> s;
    auto str = [&](const char* k, std::string ExperimentConfig::*f) {
      s[k] = [f](ExperimentConfig& c, const std::string& v) { c.*f = boost::trim_copy(v); };
    };
    auto i64 = [&](const char* k, std::int64_t ExperimentConfig::*f) {
      s[k] = [f, k](ExperimentConfig& c, const std::string& v) { c.*f = number<std::int64_t>(k, v); };
    };
    auto i32 = [&](const char* k, int ExperimentConfig::*f) {
      s[k] = [f, k](ExperimentConfig& c, const std::string& v) { c.*f = number<int>(k, v); };
    };
    auto dbl = [&](const char* k, double ExperimentConfig::*f) {
      s[k] = [f, k](ExperimentConfig& c, const std::string& v) { c.*f = number<double>(k, v); };
    };
    auto list = [&](const char* k, std::vector<std::int64_t> ExperimentConfig::*f) {
      s[k] = [f](ExperimentConfig& c, const std::string& v) { c.*f = parse_grid(v); };
    };
    i32("dim", &ExperimentConfig::dim);
    str("mu", &ExperimentConfig::mu);
    str("theta", &ExperimentConfig::theta);
    str("eta", &ExperimentConfig::eta);
    list("grid", &ExperimentConfig::grid);
    i64("replicas", &ExperimentConfig::replicas);
    s["seed"] = [](ExperimentConfig& c, const std::string& v) { c.seed = number<std::uint64_t>("seed", v); };
    str("capacity", &ExperimentConfig::capacity);
    str("output_dir", &ExperimentConfig::output_dir);
    i32("threads", &ExperimentConfig::threads);
    dbl("epsilon", &ExperimentConfig::epsilon);
    i64("walkers", &ExperimentConfig::walkers);
    i64("start_points", &ExperimentConfig::start_points);
    s["infinite_model"] = [](ExperimentConfig& c, const std::string& v) {
      c.infinite_model = boolean("infinite_model", v);
    };
    dbl("max_deviation", &ExperimentConfig::max_deviation);
    i64("ratio_from", &ExperimentConfig::ratio_from);
    dbl("ratio_low", &ExperimentConfig::ratio_low);
    dbl("ratio_high", &ExperimentConfig::ratio_high);
    list("killed_n", &ExperimentConfig::killed_n);
    i64("killed_replicas", &ExperimentConfig::killed_replicas);
    i32("killed_walkers", &ExperimentConfig::killed_walkers);
    i64("capacity_sets", &ExperimentConfig::capacity_sets);
    i64("capacity_walkers", &ExperimentConfig::capacity_walkers);
    dbl("capacity_epsilon", &ExperimentConfig::capacity_epsilon);
    i64("bound_sets", &ExperimentConfig::bound_sets);
    i64("green_points", &ExperimentConfig::green_points);
    i64("series_points", &ExperimentConfig::series_points);
    i64("shape_samples", &ExperimentConfig::shape_samples);
    i64("oracle_trees", &ExperimentConfig::oracle_trees);
    i32("oracle_depth", &ExperimentConfig::oracle_depth);
    i64("bm_paths", &ExperimentConfig::bm_paths);
    return s;
  }();
  return m;
}

void validate(const ExperimentConfig& c) {
  auto bad = [&](const std::string& what) { throw Error(Errc::kConfigError, "[" + c.name + "] " + what); };
  if (c.name != "identities" && (c.dim < 5 || c.dim > 9)) bad("dim must lie in 5..9");
  if (c.name == "d6" && c.dim != 6) bad("the d6 experiment needs dim = 6");
  if (c.name == "d7" && c.dim < 7) bad("the d7 experiment needs dim >= 7");
  if (c.replicas < 2) bad("replicas must be at least 2");
  if (c.threads < 1) bad("threads must be positive");
  if (c.capacity != "exact" && c.capacity != "mc") bad("capacity must be exact or mc");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) bad("epsilon must lie in (0, 1)");
  if (c.walkers < 1 || c.start_points < 0) bad("walkers must be positive");
  if (c.grid.empty() && c.name != "identities") bad("grid is empty");
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    if (c.grid[i] < 1) bad("grid values must be positive");
    if (i > 0 && c.grid[i] <= c.grid[i - 1]) bad("grid must be strictly increasing");
  }
  for (std::size_t i = 1; i < c.killed_n.size(); ++i)
    if (c.killed_n[i] <= c.killed_n[i - 1]) bad("killed_n must be strictly increasing");
  if (c.killed_replicas < 2) bad("killed_replicas must be at least 2");
}

}  // namespace

std::vector<std::int64_t> parse_grid(const std::string& s) {
  std::vector<std::int64_t> out;
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  for (const auto& raw : parts) {
    const auto p = boost::trim_copy(raw);
    if (p.empty()) fail("empty grid entry", s);
    if (auto dots = p.find(".."); dots != std::string::npos) {
      auto lo = power_or_int(p.substr(0, dots));
      const auto hi = power_or_int(p.substr(dots + 2));
      if (p.find('^') == std::string::npos) fail("ranges take 2^a..2^b", p);
      for (; lo <= hi; lo *= 2) out.push_back(lo);
    } else {
      out.push_back(power_or_int(p));
    }
  }
  return out;
}

ExperimentConfig default_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "d6") {
    c.grid = parse_grid("2^10..2^17");
  } else if (name == "d7") {
    c.dim = 7;
    c.theta = c.eta = "srw7";
    c.grid = parse_grid("2^10..2^17");
    c.infinite_model = false;
  } else if (name == "d5") {
    c.dim = 5;
    c.theta = c.eta = "srw5";
    c.grid = parse_grid("2^8..2^13");
    c.replicas = 10;
    c.infinite_model = false;
  } else if (name != "identities") {
    fail("unknown experiment", name);
  }
  return c;
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail("unreadable config", e.what());
  }

  // read_ini drops empty sections, so headers are checked on the raw text.
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const auto a = line.find_first_not_of(" \t");
    if (a == std::string::npos || line[a] != '[') continue;
    const auto b = line.find(']', a);
    const auto name = line.substr(a + 1, b == std::string::npos ? std::string::npos : b - a - 1);
    if (!kSections.count(name)) fail("unknown section", name);
  }

  std::map<std::string, std::string> run;
  for (const auto& [section, body] : tree) {
    if (!kSections.count(section)) fail("unknown section", section);
    if (body.empty() && !body.data().empty()) fail("key outside a section", section);
    if (section != "run") continue;
    for (const auto& [key, v] : body) {
      if (!kRunKeys.count(key)) fail("unknown key in [run]", key);
      run[key] = v.data();
    }
  }

  RunConfig out;
  for (const auto& [section, body] : tree) {
    if (section == "run") continue;
    auto c = default_config(section);
    for (const auto& [key, v] : run) setters().at(key)(c, v);
    for (const auto& [key, v] : body) {
      auto it = setters().find(key);
      if (it == setters().end()) fail("unknown key in [" + section + "]", key);
      it->second(c, v.data());
    }
    validate(c);
    out.experiments[section] = c;
  }
  return out;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string echo(const ExperimentConfig& c) {
  std::ostringstream o;
  o.precision(17);
  auto list = [](const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  o << "name = " << c.name << "\n"
    << "dim = " << c.dim << "\n"
    << "mu = " << c.mu << "\n"
    << "theta = " << c.theta << "\n"
    << "eta = " << c.eta << "\n"
    << "grid = " << list(c.grid) << "\n"
    << "replicas = " << c.replicas << "\n"
    << "seed = " << c.seed << "\n"
    << "capacity = " << c.capacity << "\n"
    << "epsilon = " << c.epsilon << "\n"
    << "walkers = " << c.walkers << "\n"
    << "start_points = " << c.start_points << "\n"
    << "infinite_model = " << (c.infinite_model ? "true" : "false") << "\n"
    << "max_deviation = " << c.max_deviation << "\n"
    << "ratio_from = " << c.ratio_from << "\n"
    << "ratio_low = " << c.ratio_low << "\n"
    << "ratio_high = " << c.ratio_high << "\n"
    << "killed_n = " << list(c.killed_n) << "\n"
    << "killed_replicas = " << c.killed_replicas << "\n"
    << "killed_walkers = " << c.killed_walkers << "\n"
    << "capacity_sets = " << c.capacity_sets << "\n"
    << "capacity_walkers = " << c.capacity_walkers << "\n"
    << "capacity_epsilon = " << c.capacity_epsilon << "\n"
    << "bound_sets = " << c.bound_sets << "\n"
    << "green_points = " << c.green_points << "\n"
    << "series_points = " << c.series_points << "\n"
    << "shape_samples = " << c.shape_samples << "\n"
    << "oracle_trees = " << c.oracle_trees << "\n"
    << "oracle_depth = " << c.oracle_depth << "\n"
    << "bm_paths = " << c.bm_paths << "\n";
  return o.str();
}

}  // namespace brwcap

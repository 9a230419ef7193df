// Batch runner behind the surface-shift executable: JSON configuration,
// experiment dispatch, JSON-lines and CSV output.
#ifndef SURFSHIFT_CLI_HPP
#define SURFSHIFT_CLI_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "addition.hpp"
#include "campaign.hpp"
#include "experiments.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "potential.hpp"
#include "sampler.hpp"
#include "stats.hpp"
#include "tau.hpp"

namespace surfshift {

/// Invalid configuration; the message starts with the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what) : std::invalid_argument(field + ": " + what) {}
};

inline const std::vector<std::string>& experiment_tags() {
  static const std::vector<std::string> tags{"shift", "sample",    "variance",   "small_ball",     "tail",
                                             "max",   "gradients", "chessboard", "verify_addition"};
  return tags;
}

struct PotentialSpec {
  std::string kind = "hammock";
  double k = 1.0;
  double a = 1.0;
  double b = 0.0;
  double depth = 1.0;
  double width = 1.0;
  bool closed = true;
};

struct PlanSpec {
  std::string kind = "tau_log";  // tau_log | eta | constant | file
  std::optional<Coord> target;   // eta; default (n, n)
  double c = 0.0;                // constant
  std::string path;              // file
  double scale = 1.0;
};

struct BlockSpec {
  std::string f = "steep_horizontal";  // constant | steep_horizontal | steep_vertical | flat_horizontal
  double level = 0.9;
  double c = 1.0;
  Coord t{0, 0};
};

struct ExperimentConfig {
  std::string experiment;
  std::vector<int> n{4};
  bool n_given = false;
  PotentialSpec potential;
  PlanSpec plan;
  double eps = 0.5;
  int chains = 4;
  std::optional<std::uint64_t> sweeps;  // burn-in; default 200 (2n)^2
  std::uint64_t samples = 1000;
  std::uint64_t thin = 1;
  int batches = 20;
  int overrelax = 0;
  std::string method = "heat_bath";
  int max_epochs = 40;
  std::uint64_t seed = 1;
  std::string output = "results";
  int threads = 0;
  std::optional<Coord> vertex;
  std::vector<double> radii{1.0, 2.0, 4.0};
  std::vector<double> levels{1.0, 1.5};
  double level = 0.9;
  int k_max = 3;
  int instances = 1000;
  double a = 1.0;
  double s = 0.5;
  std::vector<BlockSpec> blocks{BlockSpec{}};
  std::string grid = "binary";  // binary | csv | both
};

namespace detail {

inline void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where.empty() ? "config" : where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}


inline double read_number(const Json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field, "must be finite");
  return x;
}

inline std::int64_t read_integer(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::uint64_t read_unsigned(const Json& v, const std::string& field) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(field, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline int read_int_in(const Json& v, const std::string& field, std::int64_t lo, std::int64_t hi) {
  const auto x = read_integer(v, field);
  if (x < lo || x > hi)
    throw ConfigError(field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(x);
}

inline std::string read_string(const Json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected a string");
  return v.get<std::string>();
}

inline Coord read_coord(const Json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(field, "expected [x, y]");
  return {static_cast<int>(read_integer(v[0], field + "[0]")), static_cast<int>(read_integer(v[1], field + "[1]"))};
}

inline std::vector<double> read_numbers(const Json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field, "expected a non-empty list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline void require_choice(const std::string& value, const std::string& field, const std::vector<std::string>& choices) {
  if (std::find(choices.begin(), choices.end(), value) != choices.end()) return;
  std::string list;
  for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
  throw ConfigError(field, "'" + value + "' is not one of " + list);
}

inline PotentialSpec parse_potential(const Json& j) {
  check_keys(j, "potential", {"kind", "K", "a", "b", "depth", "width", "closed"});
  PotentialSpec p;
  if (j.contains("kind")) p.kind = read_string(j["kind"], "potential.kind");
  require_choice(p.kind, "potential.kind", {"hammock", "quadratic", "double_well", "smooth_interval", "smooth_line"});
  if (j.contains("K")) p.k = read_number(j["K"], "potential.K");
  if (j.contains("a")) p.a = read_number(j["a"], "potential.a");
  if (j.contains("b")) p.b = read_number(j["b"], "potential.b");
  if (j.contains("depth")) p.depth = read_number(j["depth"], "potential.depth");
  if (j.contains("width")) p.width = read_number(j["width"], "potential.width");
  if (j.contains("closed")) {
    if (!j["closed"].is_boolean()) throw ConfigError("potential.closed", "expected true or false");
    p.closed = j["closed"].get<bool>();
  }
  if (p.kind == "smooth_interval" && !j.contains("a")) p.a = 0.0;
  return p;
}

inline PlanSpec parse_plan(const Json& j) {
  check_keys(j, "plan", {"kind", "target", "c", "path", "scale"});
  PlanSpec p;
  if (j.contains("kind")) p.kind = read_string(j["kind"], "plan.kind");
  require_choice(p.kind, "plan.kind", {"tau_log", "eta", "constant", "file"});
  if (j.contains("target")) p.target = read_coord(j["target"], "plan.target");
  if (j.contains("c")) p.c = read_number(j["c"], "plan.c");
  if (j.contains("path")) p.path = read_string(j["path"], "plan.path");
  if (j.contains("scale")) p.scale = read_number(j["scale"], "plan.scale");
  if (p.kind == "constant" && !(p.c >= 0.0)) throw ConfigError("plan.c", "must be >= 0");
  if (p.kind == "file" && p.path.empty()) throw ConfigError("plan.path", "required when plan.kind is file");
  if (!(p.scale >= 0.0)) throw ConfigError("plan.scale", "must be >= 0");
  return p;
}

inline std::vector<BlockSpec> parse_blocks(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("blocks", "expected a non-empty list");
  std::vector<BlockSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "blocks[" + std::to_string(i) + "]";
    check_keys(j[i], where, {"f", "level", "c", "t"});
    BlockSpec b;
    if (j[i].contains("f")) b.f = read_string(j[i]["f"], where + ".f");
    require_choice(b.f, where + ".f", {"constant", "steep_horizontal", "steep_vertical", "flat_horizontal"});
    if (j[i].contains("level")) b.level = read_number(j[i]["level"], where + ".level");
    if (j[i].contains("c")) b.c = read_number(j[i]["c"], where + ".c");
    if (j[i].contains("t")) b.t = read_coord(j[i]["t"], where + ".t");
    out.push_back(b);
  }
  return out;
}

}  // namespace detail

/// Reads a configuration object. Every key is optional; unknown keys are
/// rejected with the key's name. `experiment` may come from the command line.
inline ExperimentConfig parse_config(const Json& j, const std::string& experiment = "") {
  using namespace detail;
  check_keys(j, "", {"experiment", "n",      "potential", "plan",    "eps",   "chains", "sweeps",
                     "samples",    "thin",   "batches",   "overrelax", "method", "max_epochs", "seed",
                     "output",     "threads", "vertex",   "radii",   "levels", "level",  "k_max",
                     "instances",  "a",      "s",         "blocks",  "grid"});
  ExperimentConfig c;
  c.experiment = experiment;
  if (j.contains("experiment")) {
    const auto e = read_string(j["experiment"], "experiment");
    if (!experiment.empty() && e != experiment)
      throw ConfigError("experiment", "config names '" + e + "' but the command line asks for '" + experiment + "'");
    c.experiment = e;
  }
  if (c.experiment.empty()) throw ConfigError("experiment", "missing");
  require_choice(c.experiment, "experiment", experiment_tags());

  if (j.contains("n")) {
    c.n_given = true;
    c.n.clear();
    if (j["n"].is_array()) {
      if (j["n"].empty()) throw ConfigError("n", "expected an integer or a non-empty list");
      for (std::size_t i = 0; i < j["n"].size(); ++i) c.n.push_back(static_cast<int>(read_integer(j["n"][i], "n")));
    } else {
      c.n.push_back(static_cast<int>(read_integer(j["n"], "n")));
    }
    for (int n : c.n)
      if (n < 2 || n > 4096) throw ConfigError("n", "torus side must lie in [2, 4096], got " + std::to_string(n));
  }
  if (j.contains("potential")) c.potential = parse_potential(j["potential"]);
  if (j.contains("plan")) c.plan = parse_plan(j["plan"]);
  if (j.contains("eps")) {
    c.eps = read_number(j["eps"], "eps");
    if (!(c.eps > 0.0 && c.eps < 1.0)) throw ConfigError("eps", "must lie in (0, 1)");
  }
  if (j.contains("chains")) c.chains = read_int_in(j["chains"], "chains", 1, 1 << 20);
  if (j.contains("sweeps")) c.sweeps = read_unsigned(j["sweeps"], "sweeps");
  if (j.contains("samples")) c.samples = read_unsigned(j["samples"], "samples");
  if (c.samples < 1) throw ConfigError("samples", "must be >= 1");
  if (j.contains("thin")) c.thin = read_unsigned(j["thin"], "thin");
  if (c.thin < 1) throw ConfigError("thin", "must be >= 1");
  if (j.contains("batches")) c.batches = read_int_in(j["batches"], "batches", 2, 1 << 20);
  if (j.contains("overrelax")) c.overrelax = read_int_in(j["overrelax"], "overrelax", 0, 64);
  if (j.contains("method")) c.method = read_string(j["method"], "method");
  require_choice(c.method, "method", {"heat_bath", "cftp"});
  if (c.method == "cftp" && c.potential.kind != "hammock")
    throw ConfigError("method", "cftp requires potential.kind = hammock");
  if (j.contains("max_epochs")) c.max_epochs = read_int_in(j["max_epochs"], "max_epochs", 1, 62);
  if (j.contains("seed")) c.seed = read_unsigned(j["seed"], "seed");
  if (j.contains("output")) c.output = read_string(j["output"], "output");
  if (j.contains("threads")) c.threads = read_int_in(j["threads"], "threads", 0, 1024);
  if (j.contains("vertex")) c.vertex = read_coord(j["vertex"], "vertex");
  if (j.contains("radii")) c.radii = read_numbers(j["radii"], "radii");
  for (double r : c.radii)
    if (!(r >= 1.0)) throw ConfigError("radii", "small-ball radii must be >= 1");
  if (j.contains("levels")) c.levels = read_numbers(j["levels"], "levels");
  for (double t : c.levels)
    if (!(t >= 1.0)) throw ConfigError("levels", "tail levels must be >= 1");
  if (j.contains("level")) c.level = read_number(j["level"], "level");
  if (!(c.level > 0.0)) throw ConfigError("level", "must be > 0");
  if (j.contains("k_max")) c.k_max = read_int_in(j["k_max"], "k_max", 1, 3);
  if (j.contains("instances")) c.instances = read_int_in(j["instances"], "instances", 1, 100000000);
  if (j.contains("a")) c.a = read_number(j["a"], "a");
  if (!(c.a >= 0.0)) throw ConfigError("a", "must be >= 0");
  if (j.contains("s")) c.s = read_number(j["s"], "s");
  if (!(c.s > 0.0)) throw ConfigError("s", "must be > 0");
  if (j.contains("blocks")) c.blocks = parse_blocks(j["blocks"]);
  if (j.contains("grid")) c.grid = read_string(j["grid"], "grid");
  require_choice(c.grid, "grid", {"binary", "csv", "both"});
  return c;
}

inline Json to_json(const PotentialSpec& p) {
  Json j{{"kind", p.kind}};
  if (p.kind == "hammock") j["K"] = p.k;
  if (p.kind == "quadratic") j["a"] = p.a;
  if (p.kind == "double_well") {
    j["depth"] = p.depth;
    j["width"] = p.width;
  }
  if (p.kind == "smooth_interval") {
    j["K"] = p.k;
    j["a"] = p.a;
    j["closed"] = p.closed;
  }
  if (p.kind == "smooth_line") {
    j["a"] = p.a;
    j["b"] = p.b;
  }
  return j;
}

inline Json to_json(const PlanSpec& p) {
  Json j{{"kind", p.kind}, {"scale", p.scale}};
  if (p.kind == "eta" && p.target) j["target"] = {p.target->x, p.target->y};
  if (p.kind == "constant") j["c"] = p.c;
  if (p.kind == "file") j["path"] = p.path;
  return j;
}

/// The resolved configuration; with the seed it reproduces every record.
inline Json to_json(const ExperimentConfig& c) {
  Json blocks = Json::array();
  for (const auto& b : c.blocks) blocks.push_back({{"f", b.f}, {"level", b.level}, {"c", b.c}, {"t", {b.t.x, b.t.y}}});
  Json j{{"experiment", c.experiment},
         {"n", c.n},
         {"potential", to_json(c.potential)},
         {"plan", to_json(c.plan)},
         {"eps", c.eps},
         {"chains", c.chains},
         {"samples", c.samples},
         {"thin", c.thin},
         {"batches", c.batches},
         {"overrelax", c.overrelax},
         {"method", c.method},
         {"max_epochs", c.max_epochs},
         {"seed", c.seed},
         {"radii", c.radii},
         {"levels", c.levels},
         {"level", c.level},
         {"k_max", c.k_max},
         {"instances", c.instances},
         {"a", c.a},
         {"s", c.s},
         {"blocks", blocks},
         {"grid", c.grid}};
  if (c.sweeps) j["sweeps"] = *c.sweeps;
  if (c.vertex) j["vertex"] = {c.vertex->x, c.vertex->y};
  return j;
}

inline Potential make_potential(const PotentialSpec& p) {
  try {
    if (p.kind == "hammock") return Potential::hammock(p.k);
    if (p.kind == "quadratic") return Potential::quadratic(p.a);
    if (p.kind == "double_well") return Potential::double_well(p.depth, p.width);
    if (p.kind == "smooth_interval") return Potential::smooth_interval(p.k, p.a, p.closed);
    return Potential::smooth_line(p.a, p.b);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("potential", e.what());
  }
}

/// tau on torus(n): tau_log, eta towards the target, a constant, or a JSON
/// file holding (2n)^2 numbers in the row-major grid order; times plan.scale.
inline std::vector<double> make_tau(const Graph& g, const PlanSpec& p) {
  std::vector<double> tau;
  if (p.kind == "tau_log") {
    tau = tau_log_field(g);
  } else if (p.kind == "eta") {
    const Coord t = p.target.value_or(Coord{g.side(), g.side()});
    tau = EtaProfile(g, g.at(t)).field();
  } else if (p.kind == "constant") {
    tau.assign(g.vertex_count(), p.c);
  } else {
    std::ifstream in(p.path);
    if (!in) throw ConfigError("plan.path", "cannot open '" + p.path + "'");
    Json arr;
    try {
      in >> arr;
    } catch (const Json::exception& e) {
      throw ConfigError("plan.path", std::string("not valid JSON: ") + e.what());
    }
    const auto grid = detail::read_numbers(arr, "plan.path");
    const std::size_t m = 2 * static_cast<std::size_t>(g.side());
    if (grid.size() != m * m)
      throw ConfigError("plan.path", "expected " + std::to_string(m * m) + " values, found " + std::to_string(grid.size()));
    tau = from_grid(g, grid);
  }
  for (double& t : tau) {
    t *= p.scale;
    if (!(t >= 0.0)) throw ConfigError("plan", "tau must be >= 0 everywhere");
  }
  return tau;
}

inline BlockFunction make_block(const BlockSpec& b) {
  if (b.f == "constant") return BlockFunction::constant(b.c);
  if (b.f == "steep_horizontal") return BlockFunction::steep_horizontal(b.level);
  if (b.f == "steep_vertical") return BlockFunction::steep_vertical(b.level);
  return BlockFunction::flat_horizontal(b.level);
}

inline ChainPlan make_chain_plan(const ExperimentConfig& c, const Graph& g) {
  ChainPlan p;
  p.chains = c.chains;
  p.burn_in = c.sweeps.value_or(default_burn_in(g));
  p.samples = c.samples;
  p.thin = c.thin;
  p.batches = c.batches;
  p.threads = c.threads;
  p.sweep.overrelax = c.overrelax;
  p.method = c.method == "cftp" ? SamplerMethod::cftp : SamplerMethod::heat_bath;
  p.cftp.max_epochs = c.max_epochs;
  return p;
}

// ---------------------------------------------------------------------------
// Experiments

/// Records plus side files (grids, transcripts) produced by one run.
struct RunOutput {
  std::vector<ResultRecord> records;
  std::vector<std::string> files;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::string coord_text(const Graph& g, Vertex v) {
  const Coord c = g.coord(v);
  return std::to_string(c.x) + "," + std::to_string(c.y);
}

inline ResultRecord base_record(const ExperimentConfig& c, int n, const std::string& estimator, Json params = {}) {
  ResultRecord r;
  r.experiment = c.experiment;
  r.estimator = estimator;
  r.params = to_json(c);
  r.params["n"] = n;
  if (!params.is_null())
    for (auto it = params.begin(); it != params.end(); ++it) r.params[it.key()] = it.value();
  r.n = n;
  r.seed = c.seed;
  return r;
}

inline void set_estimate(ResultRecord& r, const EstimateWithError& e) {
  r.value = e.value;
  r.std_error = e.std_error;
  r.n_samples = e.n_samples;
}

inline Vertex target_vertex(const ExperimentConfig& c, const Graph& g) {
  const Vertex v = g.at(c.vertex.value_or(Coord{g.side(), g.side()}));
  if (v == g.origin()) throw ConfigError("vertex", "must differ from the pinned origin");
  return v;
}

/// Slope of the estimates against log n, over the n values of the run.
inline ResultRecord trend_record(const ExperimentConfig& c, const std::string& what, const std::vector<int>& ns,
                                 const std::vector<double>& y, const std::vector<double>& err, double wall) {
  std::vector<double> x;
  for (int n : ns) x.push_back(std::log(static_cast<double>(n)));
  const LineFit f = fit_line(x, y, err);
  bool increasing = true;
  for (std::size_t i = 1; i < y.size(); ++i) increasing = increasing && y[i] > y[i - 1];
  ResultRecord r = base_record(c, ns.back(), what + "_slope_vs_log_n");
  r.value = f.slope;
  r.std_error = f.slope_error;
  r.n_samples = static_cast<std::int64_t>(ns.size());
  r.wall_time = wall;
  r.extra = {{"t_statistic", f.t_statistic}, {"intercept", f.intercept}, {"strictly_increasing", increasing},
             {"n_values", ns}, {"estimates", y}};
  return r;
}

inline std::string threshold_text(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

}  // namespace detail

inline RunOutput run_survey_experiment(const ExperimentConfig& c) {
  RunOutput out;
  const Potential u = make_potential(c.potential);
  std::vector<double> trend_y, trend_err;
  const auto t_all = detail::Clock::now();
  for (int n : c.n) {
    const auto t0 = detail::Clock::now();
    const Graph g = Graph::torus(n);
    const ChainPlan plan = make_chain_plan(c, g);
    SurveyOptions opts;
    if (c.experiment == "small_ball") opts.radii = c.radii;
    if (c.experiment == "tail") opts.levels = c.levels;
    SurveyReport rep;
    if (c.experiment == "max") {
      rep = estimate_max(g, u, plan, c.seed);
    } else {
      rep = survey_heights(g, u, detail::target_vertex(c, g), plan, c.seed, opts);
    }
    const double wall = detail::seconds_since(t0);
    const std::string vtext = detail::coord_text(g, rep.v);
    auto add = [&](ResultRecord r) {
      r.vertex = vtext;
      r.wall_time = wall;
      out.records.push_back(std::move(r));
    };
    if (c.experiment == "variance") {
      ResultRecord r = detail::base_record(c, n, "variance");
      detail::set_estimate(r, rep.variance);
      r.extra = {{"mean", rep.mean.value},          {"mean_stderr", rep.mean.std_error},
                 {"first_half", rep.first_half},    {"second_half", rep.second_half},
                 {"tau_int", rep.tau_int},          {"effective_samples", rep.effective_samples},
                 {"norm", rep.norm},                {"regime", rep.regime},
                 {"log1p_norm", std::log1p(static_cast<double>(rep.norm))}};
      trend_y.push_back(rep.variance.value);
      trend_err.push_back(rep.variance.std_error);
      add(std::move(r));
    } else if (c.experiment == "max") {
      ResultRecord r = detail::base_record(c, n, "median_max");
      detail::set_estimate(r, rep.max_median);
      r.extra = {{"mean_max", rep.max_mean}, {"ceiling_violations", rep.ceiling_violations},
                 {"phi_v_variance", rep.variance.value}};
      trend_y.push_back(rep.max_median.value);
      trend_err.push_back(rep.max_median.std_error);
      add(std::move(r));
    } else {
      const auto& list = c.experiment == "small_ball" ? rep.small_ball : rep.tail;
      const char* name = c.experiment == "small_ball" ? "small_ball" : "tail";
      const char* key = c.experiment == "small_ball" ? "r" : "t";
      for (const auto& p : list) {
        ResultRecord r = detail::base_record(c, n, std::string(name) + "[" + key + "=" + detail::threshold_text(p.threshold) + "]",
                                             Json{{key, p.threshold}});
        detail::set_estimate(r, p.estimate);
        r.extra = {{"cutoff", p.cutoff}, {"in_regime", p.in_regime}, {"norm", rep.norm}};
        add(std::move(r));
      }
    }
  }
  if ((c.experiment == "variance" || c.experiment == "max") && c.n.size() >= 2)
    out.records.push_back(detail::trend_record(c, c.experiment == "variance" ? "variance" : "median_max", c.n, trend_y,
                                               trend_err, detail::seconds_since(t_all)));
  return out;
}

inline RunOutput run_sample_experiment(const ExperimentConfig& c, const std::filesystem::path& dir) {
  RunOutput out;
  const Potential u = make_potential(c.potential);
  for (int n : c.n) {
    const auto t0 = detail::Clock::now();
    const Graph g = Graph::torus(n);
    const ChainPlan plan = make_chain_plan(c, g);
    Configuration phi;
    Json info;
    if (plan.method == SamplerMethod::cftp) {
      CftpOptions o = plan.cftp;
      const auto r = cftp_hammock(g, u.radius(), c.seed, o);
      phi = r.config;
      info = {{"sampler", "cftp"}, {"epochs", r.epochs}, {"start_time", r.start_time}};
    } else {
      phi = sample_surface(g, u, plan.burn_in, c.seed, 0, plan.sweep);
      info = {{"sampler", "heat_bath"}, {"sweeps", plan.burn_in}};
    }
    const double wall = detail::seconds_since(t0);
    const GridHeader header{n, to_json(c.potential).dump(), c.seed};
    const std::string stem = "sample_n" + std::to_string(n);
    if (c.grid != "csv") {
      std::ofstream f(dir / (stem + ".bin"), std::ios::binary);
      write_grid_binary(f, g, phi.heights, header);
      out.files.push_back(stem + ".bin");
    }
    if (c.grid != "binary") {
      std::ofstream f(dir / (stem + ".csv"));
      write_grid_csv(f, g, phi.heights, header);
      out.files.push_back(stem + ".csv");
    }
    const Vertex v = detail::target_vertex(c, g);
    double mx = 0.0;
    for (double h : phi.heights) mx = std::max(mx, std::abs(h));
    ResultRecord r = detail::base_record(c, n, "phi_v");
    r.value = phi[v];
    r.n_samples = 1;
    r.vertex = detail::coord_text(g, v);
    r.wall_time = wall;
    r.extra = info;
    out.records.push_back(r);
    r.estimator = "max_abs";
    r.value = mx;
    r.vertex = "";
    out.records.push_back(r);
  }
  return out;
}

inline RunOutput run_shift_experiment(const ExperimentConfig& c, const std::filesystem::path& dir) {
  RunOutput out;
  const Potential u = make_potential(c.potential);
  for (int n : c.n) {
    const auto t0 = detail::Clock::now();
    const Graph g = Graph::torus(n);
    const AdditionPlan plan(g, make_tau(g, c.plan), c.eps);
    try {
      plan.require_zero_at_origin();
    } catch (const std::invalid_argument&) {
      throw ConfigError("plan", "tau must vanish at the origin");
    }
    const ChainPlan chains = make_chain_plan(c, g);
    const Vertex v = detail::target_vertex(c, g);
    const auto rep = shifted_config_experiment(u, plan, v, c.a, c.s, chains, c.seed);

    // One sampled configuration with its full transcript.
    const Configuration phi = sample_surface(g, u, chains.burn_in, c.seed, 0, chains.sweep);
    const auto tr = run_addition(plan, phi);
    const std::string name = "shift_transcript_n" + std::to_string(n) + ".json";
    {
      std::ofstream f(dir / name);
      f << Json{{"n", n}, {"seed", c.seed}, {"potential", to_json(c.potential)}, {"plan", to_json(c.plan)},
                {"eps", c.eps}, {"transcript", to_json(tr)}}
               .dump(1)
        << "\n";
    }
    out.files.push_back(name);
    const double wall = detail::seconds_since(t0);
    const std::pair<const char*, const EstimateWithError*> rows[] = {
        {"p_small", &rep.p_small},         {"p_plus", &rep.p_plus},           {"p_minus", &rep.p_minus},
        {"p_jacobian", &rep.p_jacobian},   {"p_big_m", &rep.p_big_m},         {"union_bound", &rep.union_bound},
        {"image_plus", &rep.image_plus},   {"image_minus", &rep.image_minus}};
    for (const auto& [name_, est] : rows) {
      ResultRecord r = detail::base_record(c, n, name_);
      detail::set_estimate(r, *est);
      r.vertex = detail::coord_text(g, v);
      r.wall_time = wall;
      r.extra = {{"capital_l", rep.capital_l},
                 {"tau_u", plan.tau(v)},
                 {"shift_bound_violations", rep.shift_bound_violations},
                 {"image_violations", rep.image_violations},
                 {"union_bound_violations", rep.union_bound_violations},
                 {"max_identity_gap", rep.max_identity_gap}};
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

inline RunOutput run_gradients_experiment(const ExperimentConfig& c) {
  RunOutput out;
  const Potential u = make_potential(c.potential);
  for (int n : c.n) {
    const auto t0 = detail::Clock::now();
    const Graph g = Graph::torus(n);
    const auto tuples = connected_edge_tuples(g, c.k_max);
    const auto rep = controlled_gradients_probe(g, u, c.level, tuples, make_chain_plan(c, g), c.seed);
    const double wall = detail::seconds_since(t0);
    ResultRecord d = detail::base_record(c, n, "delta");
    detail::set_estimate(d, rep.delta);
    d.wall_time = wall;
    d.extra = {{"all_within", rep.all_within}, {"delta_needed", rep.delta_needed}, {"max_k", rep.max_k}};
    out.records.push_back(d);
    for (std::size_t i = 0; i < rep.tuples.size(); ++i) {
      const auto& t = rep.tuples[i];
      Json edges = Json::array();
      for (const Edge& e : t.edges) edges.push_back({detail::coord_text(g, e.a), detail::coord_text(g, e.b)});
      ResultRecord r = detail::base_record(c, n, "ratio[k=" + std::to_string(t.edges.size()) + ";i=" + std::to_string(i) + "]");
      detail::set_estimate(r, t.ratio);
      r.wall_time = wall;
      r.extra = {{"edges", edges},
                 {"probability", t.probability.value},
                 {"probability_stderr", t.probability.std_error},
                 {"within_bound", t.within_bound}};
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

inline RunOutput run_chessboard_experiment(const ExperimentConfig& c) {
  RunOutput out;
  const Potential u = make_potential(c.potential);
  std::vector<ChessboardTerm> terms;
  for (const auto& b : c.blocks) terms.push_back({make_block(b), b.t});
  for (int n : c.n) {
    const auto t0 = detail::Clock::now();
    const Graph g = Graph::torus(n);
    ChessboardReport rep;
    try {
      rep = chessboard_check(g, u, terms, make_chain_plan(c, g), c.seed);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("blocks", e.what());
    }
    const double wall = detail::seconds_since(t0);
    Json factors = Json::array();
    for (const auto& f : rep.rhs_factors) factors.push_back({{"value", f.value}, {"lo", f.lo}, {"hi", f.hi}});
    ResultRecord r = detail::base_record(c, n, "lhs_power");
    r.value = rep.lhs_power;
    r.n_samples = rep.samples;
    r.wall_time = wall;
    r.extra = {{"lhs", rep.lhs.value},         {"lhs_lo", rep.lhs.lo},
               {"lhs_hi", rep.lhs.hi},         {"lhs_power_lo", rep.lhs_power_lo},
               {"rhs_product", rep.rhs_product}, {"rhs_product_hi", rep.rhs_product_hi},
               {"rhs_factors", factors},       {"holds_point", rep.holds_point},
               {"holds_band", rep.holds_band},  {"volume", rep.volume}};
    out.records.push_back(r);
    r.estimator = "rhs_product";
    r.value = rep.rhs_product;
    out.records.push_back(std::move(r));
  }
  return out;
}

inline RunOutput run_verify_addition(const ExperimentConfig& c) {
  RunOutput out;
  std::vector<std::optional<Graph>> graphs;
  if (c.n_given)
    for (int n : c.n) graphs.emplace_back(Graph::torus(n));
  else
    graphs.emplace_back(std::nullopt);
  for (const auto& g : graphs) {
    const auto t0 = detail::Clock::now();
    const auto rep = verify_addition_campaign(c.instances, c.seed, g);
    const int n = g ? g->side() : 0;
    ResultRecord r = detail::base_record(c, n, "violations");
    if (!g) r.params["n"] = "mixed";
    r.value = rep.totals.total();
    r.n_samples = rep.instances;
    r.wall_time = detail::seconds_since(t0);
    r.extra = {{"failing_instances", rep.failing_instances},
               {"applicable", rep.applicable},
               {"max_round_trip_error", rep.max_round_trip_error},
               {"round_trip", rep.totals.round_trip},
               {"surjectivity", rep.totals.surjectivity},
               {"increment", rep.totals.increment},
               {"lipschitz", rep.totals.lipschitz},
               {"monotone", rep.totals.monotone},
               {"mirror", rep.totals.mirror},
               {"shift_bounds", rep.totals.shift_bounds},
               {"jacobian_bound", rep.totals.jacobian_bound},
               {"failures", rep.failures}};
    out.records.push_back(std::move(r));
  }
  return out;
}

/// Runs one experiment and writes <dir>/<experiment>.jsonl and .csv.
inline RunOutput run_experiment(const ExperimentConfig& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  RunOutput out;
  const auto& e = c.experiment;
  if (e == "variance" || e == "small_ball" || e == "tail" || e == "max") out = run_survey_experiment(c);
  else if (e == "sample") out = run_sample_experiment(c, dir);
  else if (e == "shift") out = run_shift_experiment(c, dir);
  else if (e == "gradients") out = run_gradients_experiment(c);
  else if (e == "chessboard") out = run_chessboard_experiment(c);
  else out = run_verify_addition(c);
  {
    std::ofstream f(dir / (e + ".jsonl"));
    write_jsonl(f, out.records);
  }
  {
    std::ofstream f(dir / (e + ".csv"));
    write_results_csv(f, out.records);
  }
  out.files.insert(out.files.begin(), {e + ".jsonl", e + ".csv"});
  return out;
}

// ---------------------------------------------------------------------------
// Command line

/// Exit codes: 0 success, 2 invalid input, 3 failure while running.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::string tags;
  for (const auto& t : experiment_tags()) tags += (tags.empty() ? "" : " | ") + t;
  CLI::App app{"Monte Carlo experiments for random surfaces and the addition algorithm.\nExperiments: " + tags,
               "surface-shift"};
  std::string experiment, config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("experiment", experiment, "One of: " + tags)->required();
  app.add_option("--config", config_path, "JSON configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides the config)");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads, 0 = all cores (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  try {
    if (std::find(experiment_tags().begin(), experiment_tags().end(), experiment) == experiment_tags().end())
      throw ConfigError("experiment", "unknown experiment '" + experiment + "' (expected one of " + tags + ")");
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config", "cannot open '" + config_path + "'");
    Json j;
    try {
      in >> j;
    } catch (const Json::exception& e) {
      throw ConfigError("config", std::string("not valid JSON: ") + e.what());
    }
    Json merged = j;
    if (!merged.is_object()) throw ConfigError("config", "expected a JSON object");
    if (*seed_opt) merged["seed"] = seed;
    if (*out_opt) merged["output"] = out_dir;
    if (*threads_opt) merged["threads"] = threads;
    cfg = parse_config(merged, experiment);
  } catch (const std::invalid_argument& e) {
    err << "surface-shift: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto t0 = detail::Clock::now();
    const auto res = run_experiment(cfg, cfg.output);
    out << cfg.experiment << ": " << res.records.size() << " records in " << detail::seconds_since(t0) << " s\n";
    for (const auto& f : res.files) out << "  " << (std::filesystem::path(cfg.output) / f).string() << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "surface-shift: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "surface-shift: runtime error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace surfshift

#endif

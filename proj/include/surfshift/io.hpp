// Serialization: transcripts and reports as JSON, configuration grids as
// binary or CSV, result records as JSON lines and CSV rows.
#ifndef SURFSHIFT_IO_HPP
#define SURFSHIFT_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "addition.hpp"
#include "graph.hpp"
#include "stats.hpp"

namespace surfshift {

using Json = nlohmann::json;

inline Json to_json(const AdditionTranscript& tr) {
  return Json{{"p_order", tr.p_order},
              {"shifts", tr.shifts},
              {"step_right_derivs", tr.step_right_derivs},
              {"j_plus", tr.j_plus},
              {"j_minus", tr.j_minus},
              {"log_j_plus", tr.log_j_plus},
              {"log_j_minus", tr.log_j_minus}};
}

inline AdditionTranscript transcript_from_json(const Json& j) {
  AdditionTranscript tr;
  tr.p_order = j.at("p_order").get<std::vector<Vertex>>();
  tr.shifts = j.at("shifts").get<std::vector<double>>();
  tr.step_right_derivs = j.at("step_right_derivs").get<std::vector<double>>();
  tr.j_plus = j.at("j_plus").get<double>();
  tr.j_minus = j.at("j_minus").get<double>();
  tr.log_j_plus = j.at("log_j_plus").get<double>();
  tr.log_j_minus = j.at("log_j_minus").get<double>();
  return tr;
}

inline Json to_json(const EstimateWithError& e) {
  return Json{{"value", e.value}, {"stderr", e.std_error}, {"n_samples", e.n_samples}, {"seed", e.seed}};
}

// ---------------------------------------------------------------------------
// Grids

/// Header of a serialized torus configuration.
struct GridHeader {
  int n = 0;
  std::string potential;
  std::uint64_t seed = 0;
};

/// Row-major over coordinates: row i holds x = i - n + 1, column j holds
/// y = j - n + 1, both running over {-n+1, ..., n}.
inline std::vector<double> to_grid(const Graph& g, std::span<const double> heights) {
  if (!g.is_torus()) throw std::invalid_argument("to_grid: requires a torus graph");
  const int n = g.side(), m = 2 * n;
  std::vector<double> out(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(i) * m + j] = heights[g.at({i - n + 1, j - n + 1})];
  return out;
}

inline std::vector<double> from_grid(const Graph& g, std::span<const double> grid) {
  if (!g.is_torus()) throw std::invalid_argument("from_grid: requires a torus graph");
  const int n = g.side(), m = 2 * n;
  if (grid.size() != static_cast<std::size_t>(m) * m) throw std::invalid_argument("from_grid: wrong grid size");
  std::vector<double> h(g.vertex_count());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) h[g.at({i - n + 1, j - n + 1})] = grid[static_cast<std::size_t>(i) * m + j];
  return h;
}

namespace detail {

inline constexpr char kGridMagic[8] = {'S', 'S', 'G', 'R', 'I', 'D', '0', '1'};

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "grid files are written little-endian");
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("grid file truncated");
  return v;
}

}  // namespace detail

/// Binary layout: magic "SSGRID01", int64 n, uint64 seed, uint32 length and
/// bytes of the potential description, then (2n)^2 little-endian binary64.
inline void write_grid_binary(std::ostream& os, const Graph& g, std::span<const double> heights,
                              const GridHeader& header) {
  const auto grid = to_grid(g, heights);
  os.write(detail::kGridMagic, sizeof detail::kGridMagic);
  detail::put_le<std::int64_t>(os, g.side());
  detail::put_le<std::uint64_t>(os, header.seed);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(header.potential.size()));
  os.write(header.potential.data(), static_cast<std::streamsize>(header.potential.size()));
  for (double x : grid) detail::put_le<double>(os, x);
}

inline std::vector<double> read_grid_binary(std::istream& is, GridHeader& header) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, detail::kGridMagic, sizeof magic) != 0) throw std::runtime_error("not a grid file");
  header.n = static_cast<int>(detail::get_le<std::int64_t>(is));
  header.seed = detail::get_le<std::uint64_t>(is);
  const auto len = detail::get_le<std::uint32_t>(is);
  header.potential.assign(len, '\0');
  is.read(header.potential.data(), len);
  if (header.n < 2) throw std::runtime_error("grid file: bad n");
  const std::size_t m = 2 * static_cast<std::size_t>(header.n);
  std::vector<double> grid(m * m);
  for (double& x : grid) x = detail::get_le<double>(is);
  return grid;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
  std::ostringstream ss;
  ss << std::setprecision(17) << x;
  return ss.str();
}

/// A '#' header line, then 2n rows of 2n comma-separated heights.
inline void write_grid_csv(std::ostream& os, const Graph& g, std::span<const double> heights, const GridHeader& header) {
  const auto grid = to_grid(g, heights);
  const int m = 2 * g.side();
  os << "# n=" << g.side() << " potential=" << header.potential << " seed=" << header.seed << "\n";
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) os << (j ? "," : "") << format_double(grid[static_cast<std::size_t>(i) * m + j]);
    os << "\n";
  }
}

// ---------------------------------------------------------------------------
// Result records

/// One estimate. wall_time is the only field allowed to differ between reruns.
struct ResultRecord {
  std::string experiment;
  std::string estimator;
  Json params = Json::object();
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  int n = 0;
  std::string vertex;  // "x,y" or a vertex id; empty when not applicable
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  Json extra = Json::object();
};

inline Json to_json(const ResultRecord& r) {
  Json j{{"experiment", r.experiment}, {"estimator", r.estimator}, {"params", r.params}, {"value", r.value},
         {"stderr", r.std_error},     {"n_samples", r.n_samples},  {"n", r.n},           {"vertex", r.vertex},
         {"seed", r.seed},            {"wall_time", r.wall_time}};
  if (!r.extra.empty()) j["extra"] = r.extra;
  return j;
}

inline void write_jsonl(std::ostream& os, const std::vector<ResultRecord>& records) {
  for (const auto& r : records) os << to_json(r).dump() << "\n";
}

inline void write_results_csv(std::ostream& os, const std::vector<ResultRecord>& records) {
  os << "experiment,estimator,n,vertex,value,stderr,n_samples,seed\n";
  for (const auto& r : records)
    os << r.experiment << "," << r.estimator << "," << r.n << ",\"" << r.vertex << "\"," << format_double(r.value)
       << "," << format_double(r.std_error) << "," << r.n_samples << "," << r.seed << "\n";
}

}  // namespace surfshift

#endif

// Copyright 2026 The freechaos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The freechaos command line. Everything runs through run_cli so that tests
// and `replay` can drive it in-process.

#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "freechaos/freechaos.hpp"
#include "freechaos/json_io.hpp"

namespace freechaos::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kValidation = 2,
  kResource = 3,
  kCrossCheck = 4,
};

using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
  std::string schema;  // name/version, e.g. "moments/1"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  Json summary = Json::object();
};

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(v);
        } else {
          return v;
        }
      },
      c);
}

inline Json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return v;
        }
      },
      c);
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    os << (i ? "," : "") << csv_field(t.columns[i]);
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "," : "") << csv_field(cell_text(row[i]));
    }
    os << '\n';
  }
}

inline void write_table_json(std::ostream& os, const Table& t, bool pretty) {
  Json j;
  j["schema"] = t.schema;
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    Json r = Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  j["summary"] = t.summary;
  write_json(os, j, pretty);
  os << '\n';
}

// Aligned columns for people; reals are shortened to 10 digits.
inline void write_pretty(std::ostream& os, const Table& t) {
  std::vector<std::vector<std::string>> text;
  text.push_back(t.columns);
  for (const auto& row : t.rows) {
    std::vector<std::string> r;
    for (const auto& c : row) {
      if (const double* d = std::get_if<double>(&c)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", *d);
        r.emplace_back(buf);
      } else {
        r.push_back(cell_text(c));
      }
    }
    text.push_back(std::move(r));
  }
  std::vector<std::size_t> width(t.columns.size(), 0);
  for (const auto& r : text)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  for (std::size_t k = 0; k < text.size(); ++k) {
    for (std::size_t i = 0; i < text[k].size(); ++i) {
      os << (i ? "  " : "") << std::setw(static_cast<int>(width[i]))
         << text[k][i];
    }
    os << '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total >= 2 ? total - 2 : 0, '-') << '\n';
    }
  }
  for (auto it = t.summary.begin(); it != t.summary.end(); ++it) {
    os << it.key() << ": " << to_json_string(it.value()) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Option parsing helpers

inline GridSpec parse_grid(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) {
    throw ArgumentError("--grid expects N,T (cells, horizon), got \"" + s + "\"");
  }
  const std::string n = s.substr(0, comma), t = s.substr(comma + 1);
  char* end = nullptr;
  const long cells = std::strtol(n.c_str(), &end, 10);
  if (n.empty() || *end != '\0') throw ArgumentError("--grid: bad cell count \"" + n + "\"");
  const double horizon = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0') throw ArgumentError("--grid: bad horizon \"" + t + "\"");
  if (cells > std::numeric_limits<int>::max()) throw ArgumentError("--grid: too many cells");
  return GridSpec(horizon, static_cast<int>(cells));
}

inline std::string grid_text(const GridSpec& g) {
  return std::to_string(g.cells) + "," + format_real(g.horizon);
}

inline std::optional<long long> env_integer(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const long long x = std::strtoll(v, &end, 10);
  if (*end != '\0' || x < 1) {
    throw ArgumentError(std::string(name) + " must be a positive integer, got \"" + v + "\"");
  }
  return x;
}

// Defaults, then environment overrides; command flags are applied on top.
inline Limits limits_from_env() {
  Limits l;
  if (auto v = env_integer("FREECHAOS_PAIRING_CAP")) l.all_pairings_max_n = static_cast<int>(*v);
  if (auto v = env_integer("FREECHAOS_NC_CAP")) l.nc_pairings_max_n = static_cast<int>(*v);
  if (auto v = env_integer("FREECHAOS_MOMENT_CAP")) l.moment_max_total_order = static_cast<int>(*v);
  if (auto v = env_integer("FREECHAOS_MAX_ENTRIES")) l.kernel_max_entries = static_cast<std::size_t>(*v);
  return l;
}

inline Json limits_json(const Limits& l) {
  return Json{{"all_pairings_max_n", l.all_pairings_max_n},
              {"nc_pairings_max_n", l.nc_pairings_max_n},
              {"moment_max_total_order", l.moment_max_total_order},
              {"kernel_max_entries", l.kernel_max_entries}};
}

// ---------------------------------------------------------------------------
// Commands

struct Outcome {
  std::string command;
  Table table;
  Json parameters = Json::object();
  std::optional<std::uint64_t> seed;
  int exit_code = kOk;
};

struct EnumerateArgs {
  std::vector<int> sizes;
  int points = 0;
  bool all = false;
  bool connected = false;
  bool decompose = false;
  int cap = 0;
};

inline Outcome cmd_enumerate(const EnumerateArgs& a) {
  Limits limits = limits_from_env();
  if (a.cap > 0) {
    limits.nc_pairings_max_n = a.cap;
    limits.all_pairings_max_n = a.cap;
  }
  std::vector<int> sizes = a.sizes;
  if (a.points > 0) {
    if (!sizes.empty()) throw ArgumentError("enumerate: give block sizes or --points, not both");
    sizes.assign(a.points, 1);
  }
  if (sizes.empty()) throw ArgumentError("enumerate: no block sizes given");
  if (a.all && a.decompose) {
    throw ArgumentError("enumerate: --decompose needs noncrossing pairings; drop --all");
  }
  const IntervalPartition ip(sizes);
  const int cap = a.all ? limits.all_pairings_max_n : limits.nc_pairings_max_n;
  if (ip.total() > cap) {
    throw ResourceError("enumerate: " + std::to_string(ip.total()) +
                        " points exceed the cap of " + std::to_string(cap) +
                        "; try a partition with at most " + std::to_string(cap) +
                        " points in total, or raise --cap / " +
                        (a.all ? "FREECHAOS_PAIRING_CAP" : "FREECHAOS_NC_CAP"));
  }
  const auto pairings = a.all ? enumerate_respecting_pairings(ip, limits)
                              : enumerate_nc2_respecting(ip, limits);

  Outcome out;
  out.command = "enumerate";
  Table& t = out.table;
  t.schema = "enumerate/1";
  t.columns = {"index", "pairing"};
  if (a.connected) t.columns.push_back("connected");
  if (a.decompose) {
    t.columns.push_back("word");
    t.columns.push_back("composition");
  }
  long long connected = 0;
  long long index = 0;
  for (const auto& p : pairings) {
    std::vector<Cell> row{++index, p.to_string()};
    if (a.connected) {
      const bool c = is_connected(p, ip);
      connected += c;
      row.emplace_back(std::string(c ? "yes" : "no"));
    }
    if (a.decompose) {
      const ContractionWord w = decompose(p, ip);
      row.emplace_back(to_json_string(to_json(w)));
      row.emplace_back(w.composition_string());
    }
    t.rows.push_back(std::move(row));
  }
  t.summary["partition"] = ip.to_string();
  t.summary["count"] = pairings.size();
  if (a.connected) t.summary["connected"] = connected;
  out.parameters = Json{{"sizes", sizes},
                        {"crossing", a.all},
                        {"connected", a.connected},
                        {"decompose", a.decompose},
                        {"limits", limits_json(limits)}};
  return out;
}

struct MomentsArgs {
  std::vector<std::string> kernels;
  int order = 0;
  std::string engine = "wigner";
  bool breakdown = false;
  std::string grid = "16,1";
  int cap = 0;
};

inline Outcome cmd_moments(const MomentsArgs& a) {
  Limits limits = limits_from_env();
  if (a.cap > 0) {
    limits.moment_max_total_order = a.cap;
    limits.all_pairings_max_n = std::max(limits.all_pairings_max_n, a.cap);
    limits.nc_pairings_max_n = std::max(limits.nc_pairings_max_n, a.cap);
  }
  const GridSpec grid = parse_grid(a.grid);
  std::vector<Kernel> factors;
  for (const auto& spec : a.kernels) factors.push_back(parse_kernel_spec(spec, grid, limits));
  if (a.order > 0) {
    if (factors.size() == 1) {
      factors.assign(a.order, factors.front());
    } else if (static_cast<int>(factors.size()) != a.order) {
      throw ArgumentError("moments: --order " + std::to_string(a.order) + " given with " +
                          std::to_string(factors.size()) + " kernels");
    }
  }
  int total = 0;
  for (const auto& f : factors) total += f.order();

  std::vector<std::pair<std::string, MomentReport>> reports;
  if (a.engine == "wigner" || a.engine == "both") {
    reports.emplace_back("wigner", wigner_mixed_moment(factors, limits));
  }
  if (a.engine == "wiener" || a.engine == "both") {
    reports.emplace_back("wiener", wiener_mixed_moment(factors, limits));
  }

  Outcome out;
  out.command = "moments";
  Table& t = out.table;
  if (a.breakdown) {
    t.schema = "moments-breakdown/1";
    t.columns = {"engine", "pairing", "contribution_re", "contribution_im"};
    for (const auto& [engine, r] : reports) {
      for (const auto& term : r.terms) {
        t.rows.push_back({engine, term.pairing.to_string(), term.contribution.real(),
                          term.contribution.imag()});
      }
      t.rows.push_back({engine, std::string("total"), r.value.real(), r.value.imag()});
    }
  } else {
    t.schema = "moments/1";
    t.columns = {"engine", "factors", "total_order", "pairings", "value_re", "value_im"};
    for (const auto& [engine, r] : reports) {
      t.rows.push_back({engine, static_cast<long long>(factors.size()),
                        static_cast<long long>(total),
                        static_cast<long long>(r.terms.size()), r.value.real(),
                        r.value.imag()});
    }
    if (reports.size() == 2) {
      const Complex q = reports[1].second.value / reports[0].second.value;
      t.rows.push_back({std::string("ratio"), static_cast<long long>(factors.size()),
                        static_cast<long long>(total), Cell{}, q.real(), q.imag()});
    }
  }
  t.summary["factors"] = factors.size();
  t.summary["total_order"] = total;
  out.parameters = Json{{"kernels", a.kernels},   {"order", a.order},
                        {"engine", a.engine},     {"breakdown", a.breakdown},
                        {"grid", grid_text(grid)}, {"limits", limits_json(limits)}};
  return out;
}

struct BreuerMajorArgs {
  std::vector<int> ms{1, 2, 4, 16, 64};
  std::string grid;  // empty: one cell per unit on [0, max m]
  int max_order = 8;
  int cap = 0;
};

inline Outcome cmd_breuer_major(const BreuerMajorArgs& a) {
  if (a.ms.empty()) throw ArgumentError("breuer-major: no values of m");
  if (a.max_order < 1 || a.max_order > 8) {
    throw ArgumentError("breuer-major: --max-order must lie in [1, 8]");
  }
  Limits limits = limits_from_env();
  // Moments up to order 8 of a double integral pair 16 arguments.
  const int cap = a.cap > 0 ? a.cap
                            : (std::getenv("FREECHAOS_MOMENT_CAP") ? limits.moment_max_total_order
                                                                   : 16);
  limits.moment_max_total_order = cap;
  limits.nc_pairings_max_n = std::max(limits.nc_pairings_max_n, cap);
  const int top = *std::max_element(a.ms.begin(), a.ms.end());
  const GridSpec grid = a.grid.empty() ? GridSpec(top, top) : parse_grid(a.grid);

  Outcome out;
  out.command = "breuer-major";
  Table& t = out.table;
  t.schema = "breuer-major/1";
  t.columns = {"m", "contraction_norm", "fourth_moment_gap", "distance_bound"};
  for (int k = 1; k <= a.max_order; ++k) t.columns.push_back("moment_" + std::to_string(k));
  for (int m : a.ms) {
    const Kernel f = breuer_major_kernel(m, grid, limits);
    const DistanceReport d = distance_bound_order2(f, limits);
    std::vector<Cell> row{static_cast<long long>(m), d.contraction_norm,
                          fourth_moment_gap(f, limits), d.bound};
    for (int k = 1; k <= a.max_order; ++k) {
      const std::vector<Kernel> fs(k, f);
      row.emplace_back(wigner_mixed_moment(fs, limits).value.real());
    }
    t.rows.push_back(std::move(row));
  }
  Json targets = Json::object();
  for (int k = 1; k <= a.max_order; ++k) {
    targets["moment_" + std::to_string(k)] = semicircle_moment(k, 1.0);
  }
  t.summary["semicircle"] = targets;
  out.parameters = Json{{"m", a.ms},
                        {"grid", grid_text(grid)},
                        {"max_order", a.max_order},
                        {"limits", limits_json(limits)}};
  return out;
}

struct DistanceArgs {
  std::string kernel;
  std::string grid = "16,1";
};

inline Outcome cmd_distance(const DistanceArgs& a) {
  const Limits limits = limits_from_env();
  const GridSpec grid = parse_grid(a.grid);
  const Kernel f = parse_kernel_spec(a.kernel, grid, limits);
  const DistanceReport d = distance_bound_order2(f, limits);

  Outcome out;
  out.command = "distance";
  Table& t = out.table;
  t.schema = "distance/1";
  t.columns = {"kernel",          "scale",           "contraction_norm",
               "fourth_moment_gap", "distance_bound", "deviation_squared",
               "component_norm_sum", "identity_residual", "gradient_deviation",
               "adapted_deviation", "variation_deviation"};
  std::vector<Cell> row{a.kernel, d.scale, d.contraction_norm,
                        fourth_moment_gap(f, limits), d.bound, d.deviation_squared,
                        d.component_norm_sum, d.identity_residual};
  if (is_fully_symmetric(f)) {
    const EquivalenceNorms e = equivalence_norms_order2(f, limits);
    row.emplace_back(e.gradient_deviation);
    row.emplace_back(e.adapted_deviation);
    row.emplace_back(e.variation_deviation);
  } else {
    row.resize(t.columns.size());
  }
  t.rows.push_back(std::move(row));
  out.parameters = Json{{"kernel", a.kernel}, {"grid", grid_text(grid)}};
  return out;
}

struct CrosscheckArgs {
  std::string kernel;
  std::string config;
  std::string grid = "4,1";
  int dimension = 200;
  int samples = 200;
  std::uint64_t seed = 0;
  std::vector<int> orders{1, 2, 3, 4, 5, 6};
  std::string diagonal = "drop";
  int threads = 0;
  double z_limit = 5.0;
  int cap = 0;
  // Which of the above were given on the command line.
  std::vector<std::string> given;
};

inline void apply_config_file(CrosscheckArgs& a) {
  std::ifstream is(a.config);
  if (!is) throw ArgumentError("crosscheck: cannot open config file " + a.config);
  Json j;
  try {
    j = Json::parse(is);
  } catch (const Json::exception& e) {
    throw ValidationError("crosscheck: config file is not valid JSON: " +
                          std::string(e.what()));
  }
  if (!j.is_object()) throw ValidationError("crosscheck: config file must hold an object");
  if (!j.contains("seed")) {
    throw ArgumentError("crosscheck: \"seed\" is mandatory in a config file");
  }
  auto given = [&](const char* flag) {
    return std::find(a.given.begin(), a.given.end(), flag) != a.given.end();
  };
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const Json& v = it.value();
      if (k == "kernel") {
        if (!given("kernel")) a.kernel = v.get<std::string>();
      } else if (k == "grid") {
        if (!given("grid")) {
          a.grid = v.is_array() ? std::to_string(v.at(0).get<int>()) + "," +
                                      format_real(v.at(1).get<double>())
                                : v.get<std::string>();
        }
      } else if (k == "dimension") {
        if (!given("dimension")) a.dimension = v.get<int>();
      } else if (k == "samples") {
        if (!given("samples")) a.samples = v.get<int>();
      } else if (k == "seed") {
        if (!given("seed")) a.seed = v.get<std::uint64_t>();
      } else if (k == "orders") {
        if (!given("orders")) a.orders = v.get<std::vector<int>>();
      } else if (k == "diagonal") {
        if (!given("diagonal")) a.diagonal = v.get<std::string>();
      } else if (k == "threads") {
        if (!given("threads")) a.threads = v.get<int>();
      } else if (k == "z_limit") {
        if (!given("z-limit")) a.z_limit = v.get<double>();
      } else {
        throw ValidationError("crosscheck: unknown config key \"" + k + "\"");
      }
    }
  } catch (const Json::exception& e) {
    throw ValidationError("crosscheck: bad value in config file: " + std::string(e.what()));
  }
}

inline Outcome cmd_crosscheck(CrosscheckArgs a) {
  if (!a.config.empty()) apply_config_file(a);
  if (a.kernel.empty()) throw ArgumentError("crosscheck: no kernel given");
  if (a.diagonal != "drop" && a.diagonal != "wick") {
    throw ArgumentError("crosscheck: --diagonal must be drop or wick");
  }
  if (a.orders.empty()) throw ArgumentError("crosscheck: no moment orders given");
  if (!(a.z_limit > 0.0)) throw ArgumentError("crosscheck: --z-limit must be positive");
  Limits limits = limits_from_env();
  if (a.cap > 0) {
    limits.moment_max_total_order = a.cap;
    limits.nc_pairings_max_n = std::max(limits.nc_pairings_max_n, a.cap);
  }
  const GridSpec grid = parse_grid(a.grid);
  const Kernel f = parse_kernel_spec(a.kernel, grid, limits);
  if (f.order() < 1 || f.order() > 2) {
    throw ArgumentError("crosscheck: matrix integrals are simulated for orders 1 and 2 only");
  }
  for (int k : a.orders) {
    if (k < 1 || k > 8) throw ArgumentError("crosscheck: orders must lie in [1, 8]");
  }

  SimConfig cfg;
  cfg.dimension = a.dimension;
  cfg.samples = a.samples;
  cfg.seed = a.seed;
  cfg.grid = grid;
  cfg.diagonal = a.diagonal == "wick" ? DiagonalPolicy::wick : DiagonalPolicy::drop;
  cfg.threads = a.threads;

  // The simulated integral sees the off-diagonal part unless the diagonal is
  // integrated too, so that is what the pairing engine is given.
  const Kernel target =
      cfg.diagonal == DiagonalPolicy::wick || f.order() == 1 ? f : off_diagonal_part(f);
  const SimReport sim = empirical_moments(f, cfg, a.orders);

  Outcome out;
  out.command = "crosscheck";
  out.seed = a.seed;
  Table& t = out.table;
  t.schema = "crosscheck/1";
  t.columns = {"order", "combinatorial", "empirical_mean", "std_error", "z_score"};
  double max_z = 0.0;
  for (const auto& e : sim.moments) {
    const std::vector<Kernel> fs(e.order, target);
    const double c = wigner_mixed_moment(fs, limits).value.real();
    const double diff = e.mean - c;
    double z;
    if (e.std_error > 0.0) {
      z = diff / e.std_error;
    } else {
      z = std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(c))
              ? 0.0
              : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    max_z = std::max(max_z, std::abs(z));
    t.rows.push_back({static_cast<long long>(e.order), c, e.mean, e.std_error, z});
  }
  const double haagerup = (f.order() + 1) * norm(f) + 0.5;
  const bool pass = max_z <= a.z_limit;
  t.summary["max_abs_z"] = max_z;
  t.summary["z_limit"] = a.z_limit;
  t.summary["max_operator_norm"] = sim.max_operator_norm;
  t.summary["operator_norm_bound"] = haagerup;
  t.summary["dropped_diagonal_mass"] = sim.dropped_diagonal_mass;
  t.summary["max_hermitian_residual"] = sim.max_hermitian_residual;
  t.summary["pass"] = pass;
  out.exit_code = pass ? kOk : kCrossCheck;
  out.parameters = Json{{"kernel", a.kernel},
                        {"grid", grid_text(grid)},
                        {"dimension", a.dimension},
                        {"samples", a.samples},
                        {"orders", a.orders},
                        {"diagonal", a.diagonal},
                        {"z_limit", a.z_limit},
                        {"limits", limits_json(limits)}};
  return out;
}

// ---------------------------------------------------------------------------
// Output and manifest

struct OutputArgs {
  std::string format = "csv";
  bool pretty = false;
  std::string out_dir;
};

inline std::string render(const Table& t, const OutputArgs& o) {
  std::ostringstream os;
  if (o.format == "json") {
    write_table_json(os, t, o.pretty);
  } else if (o.pretty) {
    write_pretty(os, t);
  } else {
    write_csv(os, t);
  }
  return os.str();
}

inline int emit(const Outcome& r, const OutputArgs& o, const std::vector<std::string>& args,
                double wall_seconds, std::ostream& out, std::ostream& err) {
  const std::string text = render(r.table, o);
  Json manifest;
  manifest["command"] = r.command;
  manifest["argv"] = args;
  manifest["parameters"] = r.parameters;
  manifest["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
  manifest["tool_version"] = kToolVersion;
  manifest["schema"] = r.table.schema;
  manifest["format"] = o.format == "json" ? "json" : (o.pretty ? "pretty" : "csv");
  manifest["wall_time_seconds"] = wall_seconds;
  manifest["exit_code"] = r.exit_code;
  if (o.out_dir.empty()) {
    out << text;
    manifest["outputs"] = Json::array();
    err << to_json_string(manifest) << '\n';
    return r.exit_code;
  }
  namespace fs = std::filesystem;
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  const std::string ext = o.format == "json" ? ".json" : (o.pretty ? ".txt" : ".csv");
  const std::string name = r.command + ext;
  {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << text;
  }
  manifest["outputs"] = Json::array({name});
  std::ofstream m(dir / "manifest.json", std::ios::binary);
  if (!m) throw Error("cannot write " + (dir / "manifest.json").string());
  write_json(m, manifest, true);
  m << '\n';
  return r.exit_code;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Re-runs a manifest's command line into a fresh directory and, with
// --check, compares every output byte for byte.
inline int cmd_replay(const std::string& manifest_path, const std::string& out_dir, bool check,
                      std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  std::ifstream is(manifest_path);
  if (!is) throw ArgumentError("replay: cannot open manifest " + manifest_path);
  Json m;
  try {
    m = Json::parse(is);
  } catch (const Json::exception& e) {
    throw ValidationError("replay: manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!m.contains("argv") || !m["argv"].is_array()) {
    throw ValidationError("replay: manifest has no argv");
  }
  if (m.value("tool_version", "") != kToolVersion) {
    err << "replay: manifest written by version " << m.value("tool_version", "?")
        << ", running " << kToolVersion << '\n';
  }
  std::vector<std::string> argv;
  const auto stored = m["argv"].get<std::vector<std::string>>();
  if (!stored.empty() && stored.front() == "replay") {
    throw ArgumentError("replay: refusing to replay a replay");
  }
  for (std::size_t i = 0; i < stored.size(); ++i) {
    if (stored[i] == "--out") {
      ++i;
      continue;
    }
    if (stored[i].rfind("--out=", 0) == 0) continue;
    argv.push_back(stored[i]);
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  const fs::path target = out_dir.empty() ? base / "replay" : fs::path(out_dir);
  argv.push_back("--out");
  argv.push_back(target.string());
  const int rc = run_cli(argv, out, err);
  if (!check) return rc;
  bool same = true;
  for (const auto& name : m.value("outputs", Json::array())) {
    const std::string file = name.get<std::string>();
    auto slurp = [](const fs::path& p) {
      std::ifstream f(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(f), {});
    };
    const bool equal = fs::exists(base / file) && fs::exists(target / file) &&
                       slurp(base / file) == slurp(target / file);
    out << file << ": " << (equal ? "identical" : "differs") << '\n';
    same = same && equal;
  }
  if (!same) return kInternal;
  return rc;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Free stochastic integrals on step kernels: pairing enumeration, moment "
               "engines, Malliavin-type bounds and matrix Monte Carlo."};
  app.name("freechaos");
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  OutputArgs output;
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--format", output.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_flag("--pretty", output.pretty, "Human-readable table (or indented JSON)");
    sub->add_option("--out", output.out_dir, "Write output and manifest.json to DIR");
  };

  EnumerateArgs en;
  auto* s_enum = app.add_subcommand("enumerate", "List the pairings respecting block sizes");
  s_enum->add_option("sizes", en.sizes, "Block sizes n1 n2 ...");
  s_enum->add_option("--points", en.points, "Pair 1..N with no block constraint")
      ->check(CLI::PositiveNumber);
  s_enum->add_flag("--all", en.all, "Include crossing pairings");
  s_enum->add_flag("--connected", en.connected, "Report connectivity of the block graph");
  s_enum->add_flag("--decompose", en.decompose, "Report the contraction word of each pairing");
  s_enum->add_option("--cap", en.cap, "Largest number of points to enumerate")
      ->check(CLI::PositiveNumber);
  add_output(s_enum);

  MomentsArgs mo;
  auto* s_mom = app.add_subcommand("moments", "Mixed moments of multiple integrals");
  s_mom->add_option("-k,--kernel", mo.kernels, "Kernel spec (repeatable)")->required();
  s_mom->add_option("-r,--order", mo.order, "Number of factors (repeats a single kernel)")
      ->check(CLI::PositiveNumber);
  s_mom->add_option("--engine", mo.engine, "Moment engine")
      ->check(CLI::IsMember({"wigner", "wiener", "both"}))
      ->capture_default_str();
  s_mom->add_flag("--breakdown", mo.breakdown, "One row per pairing");
  s_mom->add_option("--grid", mo.grid, "Grid as N,T")->capture_default_str();
  s_mom->add_option("--cap", mo.cap, "Largest total order")->check(CLI::PositiveNumber);
  add_output(s_mom);

  BreuerMajorArgs bm;
  auto* s_bm = app.add_subcommand("breuer-major", "Breuer-Major family sweep");
  s_bm->add_option("--m", bm.ms, "Values of m")->delimiter(',')->capture_default_str();
  s_bm->add_option("--grid", bm.grid, "Grid as N,T (default: max m cells on [0, max m])");
  s_bm->add_option("--max-order", bm.max_order, "Highest moment")->capture_default_str();
  s_bm->add_option("--cap", bm.cap, "Largest total order (default 16)")
      ->check(CLI::PositiveNumber);
  add_output(s_bm);

  DistanceArgs di;
  auto* s_di = app.add_subcommand("distance", "Semicircular distance bound of a double integral");
  s_di->add_option("-k,--kernel", di.kernel, "Order-2 kernel spec")->required();
  s_di->add_option("--grid", di.grid, "Grid as N,T")->capture_default_str();
  add_output(s_di);

  CrosscheckArgs cc;
  auto* s_cc = app.add_subcommand("crosscheck", "Matrix Monte Carlo against the pairing engine");
  auto* o_kernel = s_cc->add_option("-k,--kernel", cc.kernel, "Kernel spec (order 1 or 2)");
  s_cc->add_option("--config", cc.config, "JSON config file (seed mandatory)");
  auto* o_grid = s_cc->add_option("--grid", cc.grid, "Grid as N,T")->capture_default_str();
  auto* o_dim = s_cc->add_option("-d,--dimension", cc.dimension, "Matrix size")
                    ->capture_default_str();
  auto* o_samples =
      s_cc->add_option("--samples", cc.samples, "Sample paths")->capture_default_str();
  auto* o_seed = s_cc->add_option("--seed", cc.seed, "RNG seed")->capture_default_str();
  auto* o_orders = s_cc->add_option("--orders", cc.orders, "Moment orders")
                       ->delimiter(',')
                       ->capture_default_str();
  auto* o_diag = s_cc->add_option("--diagonal", cc.diagonal, "Repeated-cell mass: drop or wick")
                     ->check(CLI::IsMember({"drop", "wick"}))
                     ->capture_default_str();
  auto* o_threads = s_cc->add_option("--threads", cc.threads, "Worker threads (0: all cores)")
                        ->capture_default_str();
  auto* o_z = s_cc->add_option("--z-limit", cc.z_limit, "Largest accepted |z|")
                  ->capture_default_str();
  s_cc->add_option("--cap", cc.cap, "Largest total order")->check(CLI::PositiveNumber);
  add_output(s_cc);

  std::string replay_manifest, replay_out;
  bool replay_check = false;
  auto* s_re = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  s_re->add_option("manifest", replay_manifest, "manifest.json")->required();
  s_re->add_option("--out", replay_out, "Directory for the new outputs");
  s_re->add_flag("--check", replay_check, "Compare outputs byte for byte");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    std::optional<Outcome> r;
    if (s_enum->parsed()) {
      r = cmd_enumerate(en);
    } else if (s_mom->parsed()) {
      r = cmd_moments(mo);
    } else if (s_bm->parsed()) {
      r = cmd_breuer_major(bm);
    } else if (s_di->parsed()) {
      r = cmd_distance(di);
    } else if (s_cc->parsed()) {
      const std::pair<CLI::Option*, const char*> flags[] = {
          {o_kernel, "kernel"}, {o_grid, "grid"},       {o_dim, "dimension"},
          {o_samples, "samples"}, {o_seed, "seed"},     {o_orders, "orders"},
          {o_diag, "diagonal"}, {o_threads, "threads"}, {o_z, "z-limit"}};
      for (const auto& [opt, name] : flags) {
        if (opt->count() > 0) cc.given.emplace_back(name);
      }
      r = cmd_crosscheck(cc);
    } else {
      return cmd_replay(replay_manifest, replay_out, replay_check, out, err);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return emit(*r, output, args, wall, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << '\n';
    return kResource;
  } catch (const ArithmeticError& e) {
    err << "error: " << e.what() << '\n';
    return kResource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace freechaos::cli

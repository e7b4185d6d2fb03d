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

// JSON encodings of pairings, words, moment reports and kernel files, plus
// the kernel generator mini-language used on the command line.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "freechaos/chaos.hpp"
#include "freechaos/error.hpp"
#include "freechaos/kernel.hpp"
#include "freechaos/pairing.hpp"
#include "json.hpp"

namespace freechaos {

using Json = nlohmann::ordered_json;

// Shortest form is not what we want for reproducible files: every real is
// written with 17 significant digits.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_json(std::ostream& os, const Json& j, bool pretty,
                       int depth) {
  const std::string pad = pretty ? std::string(2 * (depth + 1), ' ') : "";
  const std::string close_pad = pretty ? std::string(2 * depth, ' ') : "";
  const char* nl = pretty ? "\n" : "";
  const char* sep = pretty ? ": " : ":";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',' << nl;
        first = false;
        os << pad << Json(it.key()).dump() << sep;
        write_json(os, it.value(), pretty, depth + 1);
      }
      os << nl << close_pad << '}';
      return;
    }
    case Json::value_t::array: {
      // Short numeric arrays stay on one line.
      bool flat = !pretty || j.size() <= 16;
      for (const auto& e : j) flat = flat && e.is_primitive();
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      if (!flat) os << nl;
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << (flat ? (pretty ? ", " : ",") : ",");
        if (!first && !flat) os << nl;
        first = false;
        if (!flat) os << pad;
        write_json(os, e, pretty, depth + 1);
      }
      if (!flat) os << nl << close_pad;
      os << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      os << (std::isfinite(x) ? format_real(x) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

inline void write_json(std::ostream& os, const Json& j, bool pretty = false) {
  detail::write_json(os, j, pretty, 0);
}

inline std::string to_json_string(const Json& j, bool pretty = false) {
  std::ostringstream os;
  write_json(os, j, pretty);
  return os.str();
}

inline Json complex_json(Complex c) { return Json::array({c.real(), c.imag()}); }

inline Json to_json(const Pairing& p) {
  Json out = Json::array();
  for (const auto& pr : p.pairs()) out.push_back(Json::array({pr[0], pr[1]}));
  return out;
}

inline Json to_json(const IntervalPartition& ip) {
  return Json(ip.block_sizes());
}

inline Json to_json(const ContractionWord& w) { return Json(w.depths); }

inline Json to_json(const MomentReport& r, bool breakdown) {
  Json out;
  out["order"] = r.order;
  out["value"] = complex_json(r.value);
  out["pairings"] = r.terms.size();
  if (breakdown) {
    Json terms = Json::array();
    for (const auto& t : r.terms) {
      terms.push_back(Json{{"pairing", to_json(t.pairing)},
                           {"contribution", complex_json(t.contribution)}});
    }
    out["terms"] = std::move(terms);
  }
  return out;
}

inline Pairing pairing_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("pairing JSON must be an array");
  std::vector<IndexPair> pairs;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) {
      throw ValidationError("pairing JSON entries must be [i, j] pairs");
    }
    pairs.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return Pairing(std::move(pairs));
}

inline IntervalPartition partition_from_json(const Json& j) {
  return IntervalPartition(j.get<std::vector<int>>());
}

inline ContractionWord word_from_json(const Json& j) {
  return ContractionWord{j.get<std::vector<int>>()};
}

// Kernels above this many entries are written with a binary sidecar.
inline constexpr std::size_t kInlineKernelEntries = 4096;

// {order, N, T, dtype, data: [[re, im], ...]} row-major, or data_file naming
// a sidecar of little-endian float64 (re, im) pairs next to the JSON file.
inline void save_kernel(const Kernel& f, const std::filesystem::path& path) {
  Json j;
  j["order"] = f.order();
  j["N"] = f.cells();
  j["T"] = f.grid().horizon;
  j["dtype"] = "complex128";
  if (f.size() <= kInlineKernelEntries) {
    Json data = Json::array();
    for (const auto& v : f.values()) data.push_back(complex_json(v));
    j["data"] = std::move(data);
  } else {
    std::filesystem::path bin = path;
    bin.replace_extension(".bin");
    std::ofstream b(bin, std::ios::binary);
    if (!b) throw Error("cannot write " + bin.string());
    for (const auto& v : f.values()) {
      const double parts[2] = {v.real(), v.imag()};
      b.write(reinterpret_cast<const char*>(parts), sizeof parts);
    }
    j["data_file"] = bin.filename().string();
  }
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  write_json(os, j, true);
  os << '\n';
}

inline Kernel load_kernel(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open kernel file " + path.string());
  Json j;
  try {
    j = Json::parse(is);
  } catch (const Json::exception& e) {
    throw ValidationError("kernel file " + path.string() +
                          " is not valid JSON: " + e.what());
  }
  for (const char* key : {"order", "N", "T"}) {
    if (!j.contains(key)) {
      throw ValidationError("kernel file lacks \"" + std::string(key) + "\"");
    }
  }
  if (j.value("dtype", "complex128") != "complex128") {
    throw ValidationError("kernel file dtype must be complex128");
  }
  const int order = j["order"].get<int>();
  const GridSpec grid(j["T"].get<double>(), j["N"].get<int>());
  const std::size_t want = detail::ipow(grid.cells, order);
  std::vector<Complex> values;
  values.reserve(want);
  if (j.contains("data")) {
    for (const auto& e : j["data"]) {
      if (e.is_array() && e.size() == 2) {
        values.emplace_back(e[0].get<double>(), e[1].get<double>());
      } else {
        values.emplace_back(e.get<double>(), 0.0);
      }
    }
  } else if (j.contains("data_file")) {
    const auto bin = path.parent_path() / j["data_file"].get<std::string>();
    std::ifstream b(bin, std::ios::binary);
    if (!b) throw ArgumentError("cannot open kernel sidecar " + bin.string());
    double parts[2];
    while (b.read(reinterpret_cast<char*>(parts), sizeof parts)) {
      values.emplace_back(parts[0], parts[1]);
    }
  } else {
    throw ValidationError("kernel file has neither data nor data_file");
  }
  if (values.size() != want) {
    throw ValidationError("kernel file holds " + std::to_string(values.size()) +
                          " values, expected " + std::to_string(want));
  }
  return Kernel(order, grid, std::move(values));
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

inline double parse_real(const std::string& s, const std::string& spec) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw ArgumentError("kernel spec \"" + spec + "\": \"" + s +
                      "\" is not a number");
}

inline long long parse_int(const std::string& s, const std::string& spec) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw ArgumentError("kernel spec \"" + spec + "\": \"" + s +
                      "\" is not an integer");
}

}  // namespace detail

// Generator specs:
//   breuer-major:m=K
//   indicator:a,b[,order]        1_{[a,b]^order}, order 1 by default
//   random:order,seed,symmetry[,real]   symmetry in none|mirror|full
// Anything else is read as a kernel file, which must match the grid.
inline Kernel parse_kernel_spec(const std::string& spec, const GridSpec& grid,
                                const Limits& limits = {}) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args =
      colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "breuer-major") {
    if (args.rfind("m=", 0) != 0) {
      throw ArgumentError("kernel spec \"" + spec + "\": expected m=K");
    }
    return breuer_major_kernel(
        static_cast<int>(detail::parse_int(args.substr(2), spec)), grid, limits);
  }
  if (kind == "indicator") {
    const auto parts = detail::split(args, ',');
    if (parts.size() != 2 && parts.size() != 3) {
      throw ArgumentError("kernel spec \"" + spec + "\": expected a,b[,order]");
    }
    const int order =
        parts.size() == 3 ? static_cast<int>(detail::parse_int(parts[2], spec))
                          : 1;
    return indicator_kernel(order, detail::parse_real(parts[0], spec),
                            detail::parse_real(parts[1], spec), grid, limits);
  }
  if (kind == "random") {
    const auto parts = detail::split(args, ',');
    if (parts.size() != 3 && parts.size() != 4) {
      throw ArgumentError("kernel spec \"" + spec +
                          "\": expected order,seed,symmetry[,real]");
    }
    Symmetry sym;
    if (parts[2] == "none") {
      sym = Symmetry::none;
    } else if (parts[2] == "mirror") {
      sym = Symmetry::mirror;
    } else if (parts[2] == "full") {
      sym = Symmetry::full;
    } else {
      throw ArgumentError("kernel spec \"" + spec +
                          "\": symmetry must be none, mirror or full");
    }
    bool real = false;
    if (parts.size() == 4) {
      if (parts[3] != "real") {
        throw ArgumentError("kernel spec \"" + spec +
                            "\": the optional fourth field must be \"real\"");
      }
      real = true;
    }
    return random_kernel(
        static_cast<int>(detail::parse_int(parts[0], spec)), grid,
        static_cast<std::uint64_t>(detail::parse_int(parts[1], spec)), sym,
        real, limits);
  }
  if (colon != std::string::npos && !std::filesystem::exists(spec)) {
    throw ArgumentError("unknown kernel generator \"" + kind + "\"");
  }
  Kernel f = load_kernel(spec);
  if (!(f.grid() == grid)) {
    throw GridError("kernel file " + spec + " uses " + f.grid().to_string() +
                    " but the run uses " + grid.to_string());
  }
  return f;
}

}  // namespace freechaos

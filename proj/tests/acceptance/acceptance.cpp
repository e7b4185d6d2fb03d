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

// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "freechaos/freechaos.hpp"
#include "oracles.hpp"

using namespace freechaos;

namespace {

// Tolerances and budgets.
constexpr double kCatalanSeconds = 5.0;
constexpr double kRespectSeconds = 30.0;
constexpr double kFourthMomentRel = 1e-10;
constexpr double kFourthMomentSeconds = 120.0;
constexpr double kPositiveGap = 1e-12;
constexpr double kBreuerMajorAbs = 1e-12;
constexpr double kTransferRel = 1e-12;
constexpr double kWienerFourthAbs = 1e-10;
constexpr double kDistanceAbs = 1e-10;
constexpr double kClarkOconeAbs = 0.0;
constexpr double kSigmas = 5.0;
constexpr double kHaagerupSlack = 0.5;
constexpr double kMatrixSeconds = 600.0;
constexpr double kOracleRel = 1e-10;

constexpr int kMatrixDimension = 200;
constexpr int kMatrixSamples = 200;
constexpr std::uint64_t kMatrixSeed = 20261015;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "; first failure: " << what;
      pass = false;
    }
  }
};

std::vector<std::vector<int>> compositions(int total) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int left) {
    if (left == 0) {
      out.push_back(cur);
      return;
    }
    for (int k = 1; k <= left; ++k) {
      cur.push_back(k);
      rec(left - k);
      cur.pop_back();
    }
  };
  rec(total);
  return out;
}

double rel_err(Complex got, Complex want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Brute-force NC2 lists per total, filtered from all matchings.
const std::vector<Pairing>& oracle_nc(int total) {
  static std::map<int, std::vector<Pairing>> cache;
  auto it = cache.find(total);
  if (it != cache.end()) return it->second;
  std::vector<Pairing> nc;
  for (const auto& p : oracle::all_pairings(total)) {
    if (!oracle::crosses(p)) nc.push_back(p);
  }
  return cache.emplace(total, std::move(nc)).first->second;
}

std::vector<Pairing> oracle_nc_respecting(const IntervalPartition& ip) {
  std::vector<Pairing> out;
  for (const auto& p : oracle_nc(ip.total())) {
    if (oracle::respects(p, ip)) out.push_back(p);
  }
  return out;
}

// The random mirror-symmetric suite shared by several criteria: 20 kernels
// each of order 2 on 16 cells and of order 3 on 8 cells.
struct SuiteKernel {
  int order;
  std::uint64_t seed;
  Kernel f;
};

std::vector<SuiteKernel> mirror_suite() {
  std::vector<SuiteKernel> out;
  for (int n : {2, 3}) {
    const GridSpec g(1.0, n == 2 ? 16 : 8);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      out.push_back({n, seed, random_kernel(n, g, 1000 * n + seed, Symmetry::mirror)});
    }
  }
  return out;
}

Verdict criterion1() {
  Verdict v;
  const auto t0 = Clock::now();
  for (int m = 1; m <= 6; ++m) {
    const auto got = enumerate_nc2(2 * m);
    v.require(got.size() == oracle::catalan(m), "count at m=" + std::to_string(m));
    v.require(got == oracle_nc(2 * m), "listing differs from brute force at m=" + std::to_string(m));
  }
  const double s = seconds_since(t0);
  v.require(s < kCatalanSeconds, "runtime");
  v.detail << "m<=6, C_6=" << enumerate_nc2(12).size() << ", " << s << " s";
  return v;
}

Verdict criterion2() {
  Verdict v;
  const auto t0 = Clock::now();
  const IntervalPartition five({4, 3, 1, 2, 2});
  const auto ps = enumerate_nc2_respecting(five);
  int connected = 0;
  for (const auto& p : ps) connected += is_connected(p, five);
  v.require(ps.size() == 5, "|NC2(4x3x1x2x2)| != 5");
  v.require(connected == 4, "connected count != 4");
  for (int n = 2; n <= 6; ++n) {
    v.require(enumerate_nc2_respecting(IntervalPartition({n, n})).size() == 1,
              "|NC2(n x n)| != 1 at n=" + std::to_string(n));
  }
  long partitions = 0;
  for (int total = 1; total <= 10; ++total) {
    for (const auto& sizes : compositions(total)) {
      const IntervalPartition ip(sizes);
      ++partitions;
      if (total % 2) {
        v.require(enumerate_contraction_words(ip).empty(), "words on odd total " + ip.to_string());
        continue;
      }
      v.require(enumerate_nc2_respecting(ip) == oracle_nc_respecting(ip),
                "word construction vs filter on " + ip.to_string());
    }
  }
  const double s = seconds_since(t0);
  v.require(s < kRespectSeconds, "runtime");
  v.detail << "5 pairings, " << connected << " connected, " << partitions
           << " partitions checked, " << s << " s";
  return v;
}

Verdict criterion3() {
  Verdict v;
  long checked = 0;
  for (int total = 2; total <= 10; total += 2) {
    for (const auto& sizes : compositions(total)) {
      const IntervalPartition ip(sizes);
      for (const auto& w : enumerate_contraction_words(ip)) {
        v.require(decompose(compose(w, ip), ip) == w, "decompose(compose) on " + ip.to_string());
      }
      for (const auto& p : oracle_nc_respecting(ip)) {
        v.require(compose(decompose(p, ip), ip) == p, "compose(decompose) on " + ip.to_string());
        ++checked;
      }
    }
  }
  const IntervalPartition four({3, 2, 2, 3});
  const Pairing tau_zero({{1, 10}, {2, 5}, {3, 4}, {6, 9}, {7, 8}});
  const ContractionWord w0 = decompose(tau_zero, four);
  v.require(w0.composition_string() == "tau3 o tau0 o tau2", "tau3 o tau0 o tau2 figure");
  v.require(compose(w0, four) == tau_zero, "tau3 o tau0 o tau2 round trip");
  const IntervalPartition five({4, 3, 1, 2, 2});
  const Pairing nested({{1, 12}, {2, 11}, {3, 10}, {4, 5}, {6, 9}, {7, 8}});
  const ContractionWord w1 = decompose(nested, five);
  v.require(w1.composition_string() == "tau2 o tau2 o tau1 o tau1", "tau2 o tau2 o tau1 o tau1 figure");
  v.require(compose(w1, five) == nested, "tau2 o tau2 o tau1 o tau1 round trip");
  v.detail << checked << " pairings, both figures";
  return v;
}

Verdict criterion4() {
  Verdict v;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& k : mirror_suite()) {
    const std::vector<Kernel> fs(4, k.f);
    const Complex got = wigner_mixed_moment(fs).value;
    const Kernel fstar = adjoint(k.f);
    double want = 2.0;
    for (int p = 1; p < k.order; ++p) want += norm_squared(oracle::contract(k.f, fstar, p));
    const double e = rel_err(got, want);
    worst = std::max(worst, e);
    v.require(e <= kFourthMomentRel, "order " + std::to_string(k.order) + " seed " +
                                         std::to_string(k.seed));
  }
  const double s = seconds_since(t0);
  v.require(s < kFourthMomentSeconds, "runtime");
  v.detail << "40 kernels, worst rel err " << worst << ", " << s << " s";
  return v;
}

Verdict criterion5() {
  Verdict v;
  double smallest = 1e300;
  int count = 0;
  for (const auto& k : mirror_suite()) {
    const double gap = fourth_moment_gap(k.f);
    smallest = std::min(smallest, gap);
    ++count;
    v.require(gap > kPositiveGap, "gap at order " + std::to_string(k.order) + " seed " +
                                      std::to_string(k.seed));
  }
  for (int n = 2; n <= 4; ++n) {
    const Kernel f = random_kernel(n, GridSpec(1.0, 4), 77 + n, Symmetry::mirror, true);
    const double gap = fourth_moment_gap(f);
    smallest = std::min(smallest, gap);
    ++count;
    v.require(gap > kPositiveGap, "real kernel of order " + std::to_string(n));
  }
  v.detail << count << " kernels, smallest gap " << smallest;
  return v;
}

Verdict criterion6() {
  Verdict v;
  for (int m : {1, 2, 4, 16, 64}) {
    const Kernel f = breuer_major_kernel(m, GridSpec(m, m));
    const double cn = norm(oracle::contract(f, f, 1));
    v.require(std::abs(cn - 1.0 / std::sqrt(m)) <= kBreuerMajorAbs, "contraction norm m=" + std::to_string(m));
    const DistanceReport d = distance_bound_order2(f);
    v.require(std::abs(d.bound - 0.5 * std::sqrt(3.0 / (2.0 * m))) <= kBreuerMajorAbs,
              "bound m=" + std::to_string(m));
    v.require(std::abs(fourth_moment_gap(f) - 1.0 / m) <= kBreuerMajorAbs, "gap m=" + std::to_string(m));
    if (m == 64) v.detail << "m=64: norm " << cn << ", bound " << d.bound;
  }
  return v;
}

Verdict criterion7() {
  Verdict v;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Kernel f = random_kernel(2, GridSpec(1.0, 8), 500 + seed, Symmetry::full);
    const std::vector<Kernel> fs(2, f);
    const Complex wiener = wiener_mixed_moment(fs).value;
    const Complex wigner = wigner_mixed_moment(fs).value;
    const double e = rel_err(wiener, 2.0 * wigner);
    worst = std::max(worst, e);
    v.require(e <= kTransferRel, "second moment ratio, seed " + std::to_string(seed));
  }
  const Kernel g = random_kernel(1, GridSpec(1.0, 8), 7, Symmetry::mirror);
  const std::vector<Kernel> four(4, g);
  const Complex m4 = wiener_mixed_moment(four).value;
  v.require(std::abs(m4 - 3.0) <= kWienerFourthAbs, "classical fourth moment");
  v.detail << "worst ratio err " << worst << ", classical fourth moment " << m4.real();
  return v;
}

// Equality of the deviation with (3/2)·gap holds exactly for real kernels.
// For complex mirror-symmetric kernels the chaos identity is exact and the
// comparison with the gap is an inequality (the two cross terms are bounded
// by, not equal to, ‖f ⌣1 f‖).
Verdict criterion8() {
  Verdict v;
  double worst_identity = 0.0, worst_equality = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GridSpec g(1.0, 16);
    const Kernel real = random_kernel(2, g, 3000 + seed, Symmetry::mirror, true);
    const DistanceReport r = distance_bound_order2(real);
    const double gap = fourth_moment_gap(real);
    worst_identity = std::max(worst_identity, r.identity_residual);
    worst_equality = std::max(worst_equality, std::abs(r.deviation_squared - 1.5 * gap));
    v.require(r.identity_residual <= kDistanceAbs, "identity, real seed " + std::to_string(seed));
    v.require(std::abs(r.component_norm_sum - 6.0 * gap) <= kDistanceAbs,
              "component norms vs 3/2 gap, real seed " + std::to_string(seed));

    const Kernel cplx = random_kernel(2, g, 2000 + seed, Symmetry::mirror);
    const DistanceReport c = distance_bound_order2(cplx);
    worst_identity = std::max(worst_identity, c.identity_residual);
    v.require(c.identity_residual <= kDistanceAbs, "identity, complex seed " + std::to_string(seed));
    v.require(c.deviation_squared <= 1.5 * fourth_moment_gap(cplx) + kDistanceAbs,
              "deviation above 3/2 gap, complex seed " + std::to_string(seed));
  }
  for (int m : {1, 2, 4, 16, 64}) {
    const DistanceReport d = distance_bound_order2(breuer_major_kernel(m, GridSpec(m, m)));
    v.require(std::abs(d.bound - 0.5 * std::sqrt(3.0 / (2.0 * m))) <= kDistanceAbs,
              "bound m=" + std::to_string(m));
    v.require(d.identity_residual <= kDistanceAbs, "identity m=" + std::to_string(m));
  }
  v.detail << "worst identity residual " << worst_identity << ", worst |dev - 3/2 gap| (real) "
           << worst_equality;
  return v;
}

Verdict criterion9() {
  Verdict v;
  const GridSpec g(1.0, 12);
  double worst = 0.0;
  int count = 0;
  for (int n = 1; n <= 3; ++n) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      for (Symmetry sym : {Symmetry::none, Symmetry::mirror}) {
        ChaosElement F(g);
        F.add(Kernel::scalar(Complex(0.1 * seed, -0.2), g));
        F.add(off_diagonal_part(random_kernel(n, g, 100 * n + seed, sym)));
        const ChaosElement back = clark_ocone_reconstruct(F);
        v.require(back.mean() == F.mean(), "mean term");
        const Kernel a = back.component(n), b = F.component(n);
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        v.require(back.components().size() == 2, "extra chaos components");
        ++count;
      }
    }
  }
  v.require(worst <= kClarkOconeAbs, "cell-wise mismatch");
  v.detail << count << " elements on 12 cells, max cell error " << worst;
  return v;
}

Verdict criterion10() {
  Verdict v;
  const auto t0 = Clock::now();
  SimConfig cfg;
  cfg.dimension = kMatrixDimension;
  cfg.samples = kMatrixSamples;
  cfg.seed = kMatrixSeed;
  double worst_z = 0.0;
  auto z_of = [](const MomentEstimate& e, double target) {
    if (e.std_error > 0.0) return std::abs(e.mean - target) / e.std_error;
    return std::abs(e.mean - target) <= 1e-12 ? 0.0 : 1e300;
  };

  cfg.grid = GridSpec(1.0, 1);
  const Kernel one = indicator_kernel(1, 0.0, 1.0, cfg.grid);
  const SimReport s = empirical_moments(one, cfg, {1, 2, 3, 4, 5, 6});
  for (const auto& e : s.moments) {
    const double z = z_of(e, semicircle_moment(e.order, 1.0));
    worst_z = std::max(worst_z, z);
    v.require(z <= kSigmas, "semicircle moment " + std::to_string(e.order));
  }
  v.require(s.max_operator_norm <= 2.0 * norm(one) + kHaagerupSlack, "operator norm, first chaos");

  cfg.grid = GridSpec(4.0, 4);
  cfg.diagonal = DiagonalPolicy::wick;
  const Kernel f4 = breuer_major_kernel(4, cfg.grid);
  const SimReport b = empirical_moments(f4, cfg, {4});
  const double z4 = z_of(b.moments[0], 2.25);
  worst_z = std::max(worst_z, z4);
  v.require(z4 <= kSigmas, "fourth moment of I2(f_4)");
  v.require(b.max_operator_norm <= 3.0 * norm(f4) + kHaagerupSlack, "operator norm, f_4");

  const double s_total = seconds_since(t0);
  v.require(s_total < kMatrixSeconds, "runtime");
  v.detail << "d=" << kMatrixDimension << ", " << kMatrixSamples << " samples, worst |z| "
           << worst_z << ", I2(f_4) fourth moment " << b.moments[0].mean << " +- "
           << b.moments[0].std_error << ", norms " << s.max_operator_norm << " / "
           << b.max_operator_norm << ", " << s_total << " s";
  return v;
}

Verdict criterion11() {
  Verdict v;
  std::vector<std::vector<Kernel>> cases;
  const GridSpec g(1.0, 6);
  const std::vector<std::vector<int>> shapes{
      {1, 1}, {2, 2}, {3, 3}, {4, 4}, {1, 1, 1, 1}, {2, 2, 2, 2}, {1, 2, 1}, {2, 1, 3},
      {3, 1, 2, 2}, {1, 3, 3, 1}, {4, 2, 2}, {1, 1, 2, 2, 1, 1}, {1, 1, 1, 1, 1, 1, 1, 1},
      {2, 3, 3}, {3, 3, 2}};
  std::uint64_t seed = 4000;
  for (const auto& shape : shapes) {
    for (Symmetry sym : {Symmetry::none, Symmetry::mirror, Symmetry::full}) {
      std::vector<Kernel> fs;
      for (int n : shape) fs.push_back(random_kernel(n, g, ++seed, sym));
      cases.push_back(std::move(fs));
    }
  }
  for (const auto& sk : mirror_suite()) {
    if (sk.order == 2 && sk.seed <= 5) cases.push_back(std::vector<Kernel>(4, sk.f));
  }
  for (int m : {1, 2, 4}) {
    const Kernel f = breuer_major_kernel(m, GridSpec(4.0, 8));
    cases.push_back(std::vector<Kernel>(2, f));
    cases.push_back(std::vector<Kernel>(4, f));
  }
  const Kernel one = indicator_kernel(1, 0.0, 1.0, GridSpec(1.0, 4));
  for (int r = 2; r <= 8; r += 2) cases.push_back(std::vector<Kernel>(r, one));

  double worst = 0.0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const double e = rel_err(wigner_mixed_moment(cases[c]).value, oracle::wigner_moment(cases[c]));
    worst = std::max(worst, e);
    v.require(e <= kOracleRel, "case " + std::to_string(c));
  }
  v.detail << cases.size() << " cases, worst rel err " << worst;
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"catalan enumeration", criterion1},
      {"respectful enumeration", criterion2},
      {"decomposition round trip", criterion3},
      {"fourth moment identity", criterion4},
      {"strict positivity of the gap", criterion5},
      {"Breuer-Major exact values", criterion6},
      {"transfer principle", criterion7},
      {"distance bound consistency", criterion8},
      {"Clark-Ocone reconstruction", criterion9},
      {"matrix simulation cross-check", criterion10},
      {"oracle equivalence", criterion11},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failures += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

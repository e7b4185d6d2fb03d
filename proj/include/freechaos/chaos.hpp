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

// Finite chaos expansions and the moment engines for Wigner (free) and
// Wiener (classical) multiple integrals of step kernels.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freechaos/error.hpp"
#include "freechaos/kernel.hpp"
#include "freechaos/pairing.hpp"

namespace freechaos {

// F = sum_n I_n(f_n). The order-0 component is the mean.
class ChaosElement {
 public:
  explicit ChaosElement(GridSpec grid) : grid_(grid) {}
  explicit ChaosElement(const Kernel& f) : grid_(f.grid()) { add(f); }

  const GridSpec& grid() const { return grid_; }
  const std::map<int, Kernel>& components() const { return components_; }

  void add(const Kernel& f) {
    if (!(f.grid() == grid_)) {
      throw GridError("chaos element and kernel live on different grids");
    }
    auto it = components_.find(f.order());
    if (it == components_.end()) {
      components_.emplace(f.order(), f);
    } else {
      it->second += f;
    }
  }

  bool has(int order) const { return components_.count(order) != 0; }

  // The order-n kernel, or zero when the element has no such component.
  Kernel component(int order) const {
    auto it = components_.find(order);
    if (it != components_.end()) return it->second;
    return Kernel(order, grid_);
  }

  Complex mean() const { return has(0) ? components_.at(0)[0] : Complex{}; }

  // Second moment phi(F* F): chaoses of different order are orthogonal.
  double norm_squared() const {
    double s = 0.0;
    for (const auto& [n, f] : components_) s += freechaos::norm_squared(f);
    return s;
  }

  ChaosElement& operator+=(const ChaosElement& o) {
    for (const auto& [n, f] : o.components_) add(f);
    return *this;
  }
  ChaosElement& operator*=(Complex c) {
    for (auto& [n, f] : components_) f *= c;
    return *this;
  }

 private:
  GridSpec grid_;
  std::map<int, Kernel> components_;
};

inline ChaosElement adjoint(const ChaosElement& F) {
  ChaosElement out(F.grid());
  for (const auto& [n, f] : F.components()) out.add(adjoint(f));
  return out;
}

struct MomentTerm {
  Pairing pairing;
  Complex contribution;
};

struct MomentReport {
  int order = 0;  // number of factors
  Complex value{};
  std::vector<MomentTerm> terms;
};

enum class IntegralMethod { automatic, labelled, graph };

namespace detail {

inline void check_factors(std::span<const Kernel> factors, const char* what) {
  for (const auto& f : factors) {
    if (!(f.grid() == factors.front().grid())) {
      throw GridError(std::string(what) + ": factors live on different grids");
    }
  }
}

inline int total_order(std::span<const Kernel> factors) {
  int n = 0;
  for (const auto& f : factors) n += f.order();
  return n;
}

// Every factor has order <= 2 and every slot is paired, so each label meets
// exactly two slots and the factors form disjoint paths (capped by order-1
// factors) and cycles (order-2 only). Each path is a chain of vector-matrix
// products and each cycle the trace of a matrix product.
inline Complex pairing_integral_graph(const Pairing& p,
                                      std::span<const Kernel> factors) {
  using Mat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                            Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
  const GridSpec grid = factors.front().grid();
  const int N = grid.cells;
  const double h = grid.width();

  std::vector<int> slot_factor;
  std::vector<int> slot_axis;
  std::vector<int> first_slot(factors.size());
  for (std::size_t f = 0; f < factors.size(); ++f) {
    first_slot[f] = static_cast<int>(slot_factor.size());
    for (int a = 0; a < factors[f].order(); ++a) {
      slot_factor.push_back(static_cast<int>(f));
      slot_axis.push_back(a);
    }
  }
  auto across = [&](int slot) { return p.partner(slot + 1) - 1; };
  auto matrix = [&](int f) {
    return Eigen::Map<const Mat>(factors[f].data(), N, N);
  };

  Complex total = 1.0;
  std::vector<char> seen(factors.size(), 0);
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (factors[f].order() == 0) {
      total *= factors[f][0];
      seen[f] = 1;
    }
  }
  for (std::size_t f0 = 0; f0 < factors.size(); ++f0) {
    if (seen[f0] || factors[f0].order() != 1) continue;
    seen[f0] = 1;
    Vec w = Eigen::Map<const Vec>(factors[f0].data(), N);
    int slot = first_slot[f0];
    while (true) {
      const int s = across(slot);
      const int g = slot_factor[s];
      seen[g] = 1;
      if (factors[g].order() == 1) {
        total *= h * (w.transpose() *
                      Eigen::Map<const Vec>(factors[g].data(), N))(0);
        break;
      }
      if (slot_axis[s] == 0) {
        w = h * (matrix(g).transpose() * w);
        slot = first_slot[g] + 1;
      } else {
        w = h * (matrix(g) * w);
        slot = first_slot[g];
      }
    }
  }
  for (std::size_t g0 = 0; g0 < factors.size(); ++g0) {
    if (seen[g0]) continue;
    seen[g0] = 1;
    Mat M = matrix(static_cast<int>(g0));
    int slot = first_slot[g0] + 1;
    while (true) {
      const int s = across(slot);
      const int g = slot_factor[s];
      if (g == static_cast<int>(g0)) {
        total *= h * M.trace();
        break;
      }
      seen[g] = 1;
      if (slot_axis[s] == 0) {
        M = h * (M * matrix(g));
        slot = first_slot[g] + 1;
      } else {
        M = h * (M * matrix(g).transpose());
        slot = first_slot[g];
      }
    }
  }
  return total;
}

}  // namespace detail

// Integral of f1 ⊗ ... ⊗ fr with the arguments in each pair of p identified:
// h^k times the sum over cell assignments of the k pairs.
inline Complex pairing_integral(const Pairing& p,
                                std::span<const Kernel> factors,
                                IntegralMethod method = IntegralMethod::automatic,
                                const Limits& limits = {}) {
  if (factors.empty()) {
    throw ArgumentError("pairing_integral: no factors");
  }
  detail::check_factors(factors, "pairing_integral");
  const int n = detail::total_order(factors);
  if (n != p.size()) {
    throw ArgumentError("pairing_integral: pairing on {1.." +
                        std::to_string(p.size()) + "} but factors have " +
                        std::to_string(n) + " arguments in total");
  }
  bool low_order = true;
  for (const auto& f : factors) low_order = low_order && f.order() <= 2;
  if (method == IntegralMethod::graph && !low_order) {
    throw ArgumentError("pairing_integral: graph method needs orders <= 2");
  }
  if (method == IntegralMethod::graph ||
      (method == IntegralMethod::automatic && low_order)) {
    return detail::pairing_integral_graph(p, factors);
  }
  std::vector<int> slot_label(n);
  for (std::size_t k = 0; k < p.pairs().size(); ++k) {
    slot_label[p.pairs()[k][0] - 1] = static_cast<int>(k);
    slot_label[p.pairs()[k][1] - 1] = static_cast<int>(k);
  }
  std::vector<LabelledFactor> lf;
  int slot = 0;
  for (const auto& f : factors) {
    lf.push_back({&f, std::vector<int>(slot_label.begin() + slot,
                                       slot_label.begin() + slot + f.order())});
    slot += f.order();
  }
  return labelled_sum(lf, static_cast<int>(p.pairs().size()), {},
                      factors.front().grid(), limits)[0];
}

// Integrates out the given pairs of arguments and keeps the rest, in their
// original order, as the arguments of the result.
inline Kernel partial_pairing_integral(std::span<const IndexPair> pairs,
                                       std::span<const Kernel> factors,
                                       const Limits& limits = {}) {
  if (factors.empty()) {
    throw ArgumentError("partial_pairing_integral: no factors");
  }
  detail::check_factors(factors, "partial_pairing_integral");
  const int n = detail::total_order(factors);
  std::vector<int> slot_label(n, -1);
  int labels = 0;
  for (const auto& pr : pairs) {
    for (int idx : pr) {
      if (idx < 1 || idx > n || slot_label[idx - 1] >= 0) {
        throw ArgumentError("partial_pairing_integral: bad or repeated index " +
                            std::to_string(idx));
      }
      slot_label[idx - 1] = labels;
    }
    if (pr[0] == pr[1]) {
      throw ArgumentError("partial_pairing_integral: index paired with itself");
    }
    ++labels;
  }
  std::vector<int> free_labels;
  for (int s = 0; s < n; ++s) {
    if (slot_label[s] < 0) {
      slot_label[s] = labels;
      free_labels.push_back(labels++);
    }
  }
  std::vector<LabelledFactor> lf;
  int slot = 0;
  for (const auto& f : factors) {
    lf.push_back({&f, std::vector<int>(slot_label.begin() + slot,
                                       slot_label.begin() + slot + f.order())});
    slot += f.order();
  }
  return labelled_sum(lf, labels, free_labels, factors.front().grid(), limits);
}

namespace detail {

inline IntervalPartition moment_partition(std::span<const Kernel> factors,
                                          const Limits& limits,
                                          const char* what) {
  if (factors.empty()) {
    throw ArgumentError(std::string(what) + ": needs at least one factor");
  }
  check_factors(factors, what);
  std::vector<int> sizes;
  for (const auto& f : factors) {
    if (f.order() < 1) {
      throw ArgumentError(std::string(what) +
                          ": every factor needs order >= 1");
    }
    sizes.push_back(f.order());
  }
  IntervalPartition ip(sizes);
  if (ip.total() > limits.moment_max_total_order) {
    throw ResourceError(std::string(what) + ": total order " +
                        std::to_string(ip.total()) + " exceeds the cap of " +
                        std::to_string(limits.moment_max_total_order));
  }
  return ip;
}

// Orders of the kernels ((f1 ⌣p1 f2) ⌣p2 f3) ... built along the word.
inline bool chain_fits(const ContractionWord& w, const IntervalPartition& ip,
                       const Limits& limits, int cells) {
  int open = ip.block_sizes()[0];
  for (std::size_t k = 0; k < w.depths.size(); ++k) {
    const int widest = open + ip.block_sizes()[k + 1];
    const int next = widest - 2 * w.depths[k];
    std::size_t entries = 1;
    for (int i = 0; i < std::max(next, open); ++i) {
      if (entries > limits.kernel_max_entries / cells) return false;
      entries *= cells;
    }
    open = next;
  }
  return true;
}

inline Complex contraction_chain(const ContractionWord& w,
                                 std::span<const Kernel> factors,
                                 const Limits& limits) {
  Kernel acc = factors[0];
  for (std::size_t k = 0; k < w.depths.size(); ++k) {
    acc = contract(acc, factors[k + 1], w.depths[k], limits);
  }
  return acc.scalar_value();
}

}  // namespace detail

// phi[I_{n1}(f1) ... I_{nr}(fr)]: one term per noncrossing pairing that
// respects the blocks n1 x ... x nr. Each term is evaluated as the iterated
// contraction given by its word when the intermediate kernels fit, and as a
// pairing integral otherwise.
inline MomentReport wigner_mixed_moment(std::span<const Kernel> factors,
                                        const Limits& limits = {}) {
  const IntervalPartition ip =
      detail::moment_partition(factors, limits, "wigner_mixed_moment");
  MomentReport report;
  report.order = static_cast<int>(factors.size());
  if (ip.total() % 2 != 0) return report;
  bool low_order = true;
  for (const auto& f : factors) low_order = low_order && f.order() <= 2;
  for (const auto& w : enumerate_contraction_words(ip)) {
    Pairing p = compose(w, ip);
    Complex c;
    if (!low_order && detail::chain_fits(w, ip, limits, factors[0].cells())) {
      c = detail::contraction_chain(w, factors, limits);
    } else {
      c = pairing_integral(p, factors, IntegralMethod::automatic, limits);
    }
    report.terms.push_back({std::move(p), c});
  }
  std::sort(report.terms.begin(), report.terms.end(),
            [](const MomentTerm& a, const MomentTerm& b) {
              return a.pairing < b.pairing;
            });
  for (const auto& t : report.terms) report.value += t.contribution;
  return report;
}

// Classical counterpart: every respecting pairing counts, crossing or not.
inline MomentReport wiener_mixed_moment(std::span<const Kernel> factors,
                                        const Limits& limits = {}) {
  const IntervalPartition ip =
      detail::moment_partition(factors, limits, "wiener_mixed_moment");
  MomentReport report;
  report.order = static_cast<int>(factors.size());
  if (ip.total() % 2 != 0) return report;
  for (auto& p : enumerate_respecting_pairings(ip, limits)) {
    const Complex c =
        pairing_integral(p, factors, IntegralMethod::automatic, limits);
    report.terms.push_back({std::move(p), c});
    report.value += c;
  }
  return report;
}

// I_n(f) I_m(g) = sum_{p=0}^{min(n,m)} I_{n+m-2p}(f ⌣p g).
inline ChaosElement product_expand(const Kernel& f, const Kernel& g,
                                   const Limits& limits = {}) {
  check_same_grid(f, g);
  ChaosElement out(f.grid());
  for (int p = 0; p <= std::min(f.order(), g.order()); ++p) {
    out.add(contract(f, g, p, limits));
  }
  return out;
}

// Multiplies the order-n component by n, or by 1/n for the inverse. The
// inverse only exists on mean-zero elements.
inline ChaosElement number_operator(const ChaosElement& F, bool inverse) {
  ChaosElement out(F.grid());
  for (const auto& [n, f] : F.components()) {
    if (n == 0) {
      if (inverse && f[0] != Complex{}) {
        throw DomainError("number_operator: the inverse needs a zero mean");
      }
      continue;
    }
    out.add(f * Complex(inverse ? 1.0 / n : static_cast<double>(n)));
  }
  return out;
}

struct FourthMomentReport {
  double gap = 0.0;
  double scale = 1.0;  // factor applied to f before evaluation
};

namespace detail {

// Kernels within 10% of unit norm are rescaled; anything further off is
// rejected.
inline double normalizing_scale(const Kernel& f, const char* what) {
  const double r = norm(f);
  if (!(r > 0.0)) {
    throw DegenerateInputError(std::string(what) + ": kernel is zero");
  }
  if (std::abs(r - 1.0) > 0.1) {
    throw ArgumentError(std::string(what) + ": kernel norm " +
                        std::to_string(r) + " is not within 10% of 1");
  }
  return 1.0 / r;
}

}  // namespace detail

// sum_{p=1}^{n-1} ‖f ⌣p f*‖^2, the excess of the fourth moment over 2.
inline FourthMomentReport fourth_moment_gap_report(const Kernel& f,
                                                   const Limits& limits = {}) {
  if (f.order() < 1) {
    throw ArgumentError("fourth_moment_gap: order must be >= 1");
  }
  FourthMomentReport rep;
  rep.scale = detail::normalizing_scale(f, "fourth_moment_gap");
  const Kernel g = f * Complex(rep.scale);
  const Kernel gs = adjoint(g);
  for (int p = 1; p < f.order(); ++p) {
    rep.gap += norm_squared(contract(g, gs, p, limits));
  }
  return rep;
}

inline double fourth_moment_gap(const Kernel& f, const Limits& limits = {}) {
  return fourth_moment_gap_report(f, limits).gap;
}

// k-th moment of the semicircle law of variance t.
inline double semicircle_moment(int k, double t = 1.0) {
  if (k < 0) throw ArgumentError("semicircle_moment: k must be >= 0");
  if (!(t > 0.0)) throw ArgumentError("semicircle_moment: t must be > 0");
  if (k % 2 != 0) return 0.0;
  return static_cast<double>(catalan(k / 2)) * std::pow(t, k / 2);
}

// Monic Chebyshev polynomials of the second kind on [-2, 2]:
// U_0 = 1, U_1 = x, U_{n+1} = x U_n - U_{n-1}.
inline double chebyshev_U(int n, double x) {
  if (n < 0) throw ArgumentError("chebyshev_U: n must be >= 0");
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// Coefficients c_0..c_n of U_n in the monomial basis.
inline std::vector<double> chebyshev_U_coefficients(int n) {
  if (n < 0) throw ArgumentError("chebyshev_U_coefficients: n must be >= 0");
  std::vector<double> prev{1.0};
  if (n == 0) return prev;
  std::vector<double> cur{0.0, 1.0};
  for (int k = 1; k < n; ++k) {
    std::vector<double> next(k + 2, 0.0);
    for (int i = 0; i <= k; ++i) next[i + 1] += cur[i];
    for (int i = 0; i < k; ++i) next[i] -= prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace freechaos

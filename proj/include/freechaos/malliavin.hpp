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

// Kernel-level free Malliavin calculus: gradient, adapted projection,
// divergence, the sharp product of biprocesses and the quantities built from
// them for double integrals.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "freechaos/chaos.hpp"
#include "freechaos/error.hpp"
#include "freechaos/kernel.hpp"

namespace freechaos {

// Key (left order, right order) of a biprocess or bi-chaos component.
using BiOrder = std::pair<int, int>;

// t -> sum over components of I_a(K(t, x, .)) ⊗ I_b(K(t, ., y)). A component
// keyed (a, b) holds a kernel of order 1 + a + b in the variables
// (t, x1..xa, y1..yb).
class Biprocess {
 public:
  explicit Biprocess(GridSpec grid) : grid_(grid) {}

  const GridSpec& grid() const { return grid_; }
  const std::map<BiOrder, Kernel>& terms() const { return terms_; }

  void add(int left, int right, const Kernel& k) {
    if (left < 0 || right < 0 || k.order() != 1 + left + right) {
      throw ArgumentError("biprocess term (" + std::to_string(left) + ", " +
                          std::to_string(right) + ") needs a kernel of order " +
                          std::to_string(1 + left + right));
    }
    if (!(k.grid() == grid_)) {
      throw GridError("biprocess term lives on a different grid");
    }
    auto it = terms_.find({left, right});
    if (it == terms_.end()) {
      terms_.emplace(BiOrder{left, right}, k);
    } else {
      it->second += k;
    }
  }

  Biprocess& operator+=(const Biprocess& o) {
    for (const auto& [key, k] : o.terms_) add(key.first, key.second, k);
    return *this;
  }
  Biprocess& operator*=(Complex c) {
    for (auto& [key, k] : terms_) k *= c;
    return *this;
  }

  // ∫ ‖U_t‖^2 dt for the product state.
  double norm_squared() const {
    double s = 0.0;
    for (const auto& [key, k] : terms_) s += freechaos::norm_squared(k);
    return s;
  }

 private:
  GridSpec grid_;
  std::map<BiOrder, Kernel> terms_;
};

// sum of I_l ⊗ I_r integrals; component (l, r) is a kernel of order l + r in
// the variables (x1..xl, y1..yr).
class BiChaos {
 public:
  explicit BiChaos(GridSpec grid) : grid_(grid) {}

  const GridSpec& grid() const { return grid_; }
  const std::map<BiOrder, Kernel>& components() const { return components_; }

  void add(int left, int right, const Kernel& k) {
    if (left < 0 || right < 0 || k.order() != left + right) {
      throw ArgumentError("bi-chaos component order mismatch");
    }
    if (!(k.grid() == grid_)) {
      throw GridError("bi-chaos component lives on a different grid");
    }
    auto it = components_.find({left, right});
    if (it == components_.end()) {
      components_.emplace(BiOrder{left, right}, k);
    } else {
      it->second += k;
    }
  }

  Kernel component(int left, int right) const {
    auto it = components_.find({left, right});
    if (it != components_.end()) return it->second;
    return Kernel(left + right, grid_);
  }

  // Squared norm in L^2 of the product state: components of distinct
  // bi-order are orthogonal and each is isometric to its kernel.
  double norm_squared() const {
    double s = 0.0;
    for (const auto& [key, k] : components_) s += freechaos::norm_squared(k);
    return s;
  }

 private:
  GridSpec grid_;
  std::map<BiOrder, Kernel> components_;
};

// Gradient of I_n(f): slot k (1-based) is the component (k-1, n-k) with
// kernel (t, x, y) -> f(x, t, y).
inline Biprocess gradient(const Kernel& f) {
  const int n = f.order();
  if (n < 1) throw ArgumentError("gradient: order must be >= 1");
  Biprocess out(f.grid());
  std::vector<int> perm(n);
  for (int k = 1; k <= n; ++k) {
    perm[0] = k - 1;
    for (int j = 1; j < k; ++j) perm[j] = j - 1;
    for (int j = k; j < n; ++j) perm[j] = j;
    out.add(k - 1, n - k, permute_axes(f, perm));
  }
  return out;
}

inline Biprocess gradient(const ChaosElement& F) {
  Biprocess out(F.grid());
  for (const auto& [n, f] : F.components()) {
    if (n >= 1) out += gradient(f);
  }
  return out;
}

// (A ⊗ B)* = A* ⊗ B*, taken pointwise in t. Each side keeps its place;
// its variables are reversed and the values conjugated.
inline Biprocess adjoint(const Biprocess& U) {
  Biprocess out(U.grid());
  for (const auto& [key, k] : U.terms()) {
    const auto [a, b] = key;
    std::vector<int> perm(1 + a + b);
    perm[0] = 0;
    for (int j = 0; j < a; ++j) perm[1 + j] = a - j;
    for (int j = 0; j < b; ++j) perm[1 + a + j] = a + b - j;
    out.add(a, b, conj(permute_axes(k, perm)));
  }
  return out;
}

// How the restriction s <= t treats s and t in the same grid cell.
//   open:     excluded (weight 0)
//   closed:   included (weight 1)
//   midpoint: weight 1/2, so that weight(s, t) + weight(t, s) = 1
//   balanced: weight 1/sqrt(2), so that weight(s, t)^2 + weight(t, s)^2 = 1
enum class BoundaryWeight { open, closed, midpoint, balanced };

inline double boundary_value(BoundaryWeight w) {
  switch (w) {
    case BoundaryWeight::open:
      return 0.0;
    case BoundaryWeight::closed:
      return 1.0;
    case BoundaryWeight::midpoint:
      return 0.5;
    case BoundaryWeight::balanced:
      return std::sqrt(0.5);
  }
  return 0.0;
}

// Weight of the restriction s <= t on cells (cs, ct).
inline double before_weight(int cs, int ct, BoundaryWeight w) {
  if (cs < ct) return 1.0;
  if (cs > ct) return 0.0;
  return boundary_value(w);
}

// Adapted projection: restricts every integration variable of U_t to [0, t].
inline Biprocess adapted_projection(const Biprocess& U, BoundaryWeight w) {
  Biprocess out(U.grid());
  for (const auto& [key, k] : U.terms()) {
    Kernel r = k;
    for (std::size_t off = 0; off < r.size(); ++off) {
      if (r[off] == Complex{}) continue;
      const auto cell = r.cell_of(off);
      double weight = 1.0;
      for (std::size_t j = 1; j < cell.size() && weight != 0.0; ++j) {
        weight *= before_weight(cell[j], cell[0], w);
      }
      r[off] *= weight;
    }
    out.add(key.first, key.second, r);
  }
  return out;
}

// δ(A ⊗ B h(t)) = ∫ A dS_t B h(t): the component (a, b) becomes an
// integral of order a + b + 1 with t moved between the two sides.
inline ChaosElement divergence(const Biprocess& U) {
  ChaosElement out(U.grid());
  for (const auto& [key, k] : U.terms()) {
    const int a = key.first;
    const int n = k.order();
    std::vector<int> perm(n);
    for (int j = 0; j < a; ++j) perm[j] = j + 1;
    perm[a] = 0;
    for (int j = a + 1; j < n; ++j) perm[j] = j;
    out.add(permute_axes(k, perm));
  }
  return out;
}

// ∫ U_t ♯ V_t dt with (A ⊗ B) ♯ (C ⊗ D) = AC ⊗ DB, both products expanded
// by the contraction product formula.
inline BiChaos sharp_integral(const Biprocess& U, const Biprocess& V,
                              const Limits& limits = {}) {
  if (!(U.grid() == V.grid())) {
    throw GridError("sharp_integral: biprocesses live on different grids");
  }
  BiChaos out(U.grid());
  for (const auto& [ku, u] : U.terms()) {
    const auto [a, b] = ku;
    for (const auto& [kv, v] : V.terms()) {
      const auto [c, d] = kv;
      for (int p = 0; p <= std::min(a, c); ++p) {
        for (int q = 0; q <= std::min(b, d); ++q) {
          int next = 0;
          auto fresh = [&](int count) {
            std::vector<int> ls(count);
            for (auto& l : ls) l = next++;
            return ls;
          };
          const int t = next++;
          const auto xp = fresh(a - p);
          const auto s = fresh(p);
          const auto zp = fresh(c - p);
          const auto wp = fresh(d - q);
          const auto r = fresh(q);
          const auto yp = fresh(b - q);

          std::vector<int> ul{t};
          ul.insert(ul.end(), xp.begin(), xp.end());
          ul.insert(ul.end(), s.begin(), s.end());
          ul.insert(ul.end(), r.rbegin(), r.rend());
          ul.insert(ul.end(), yp.begin(), yp.end());
          std::vector<int> vl{t};
          vl.insert(vl.end(), s.rbegin(), s.rend());
          vl.insert(vl.end(), zp.begin(), zp.end());
          vl.insert(vl.end(), wp.begin(), wp.end());
          vl.insert(vl.end(), r.begin(), r.end());
          std::vector<int> free_labels = xp;
          free_labels.insert(free_labels.end(), zp.begin(), zp.end());
          free_labels.insert(free_labels.end(), wp.begin(), wp.end());
          free_labels.insert(free_labels.end(), yp.begin(), yp.end());

          const LabelledFactor fs[] = {{&u, ul}, {&v, vl}};
          out.add(a + c - 2 * p, d + b - 2 * q,
                  labelled_sum(fs, next, free_labels, U.grid(), limits));
        }
      }
    }
  }
  return out;
}

// ∫ ⟨⟨U_t, V_t⟩⟩ dt with ⟨⟨X, Y⟩⟩ = (id ⊗ φ)(X ♯ Y): only components with
// nothing on the right survive the state.
inline ChaosElement bracket_integral(const Biprocess& U, const Biprocess& V,
                                     const Limits& limits = {}) {
  ChaosElement out(U.grid());
  const BiChaos s = sharp_integral(U, V, limits);
  for (const auto& [key, k] : s.components()) {
    if (key.second == 0) out.add(k);
  }
  return out;
}

// δ(Γ∇ I_n(f)) with the strict restriction. Equals f on every cell product
// with distinct cells, which is why diagonal mass is rejected.
inline Kernel clark_ocone_reconstruct(const Kernel& f) {
  if (f.order() == 0) return Kernel(0, f.grid());
  if (has_diagonal_mass(f)) {
    throw DomainError(
        "clark_ocone_reconstruct: kernel has mass on cells where two "
        "arguments share a grid cell");
  }
  return divergence(adapted_projection(gradient(f), BoundaryWeight::open))
      .component(f.order());
}

// φ(F) + δ(Γ∇F).
inline ChaosElement clark_ocone_reconstruct(const ChaosElement& F) {
  ChaosElement out(F.grid());
  out.add(Kernel::scalar(F.mean(), F.grid()));
  for (const auto& [n, f] : F.components()) {
    if (n >= 1) out.add(clark_ocone_reconstruct(f));
  }
  return out;
}

struct DistanceReport {
  double bound = 0.0;             // ½·√(3/2)·‖f ⌣1 f‖
  double contraction_norm = 0.0;  // ‖f ⌣1 f‖
  double scale = 1.0;             // factor applied to reach unit norm
  Kernel conj_conj;               // f̄ ⌣1 f̄
  Kernel mixed;                   // f̄ ⌣1 f + f ⌣1 f̄
  Kernel plain;                   // f ⌣1 f
  double component_norm_sum = 0.0;
  // ‖∫ ∇_t(N0^{-1}F) ♯ (∇_t F)* dt - 1 ⊗ 1‖^2 from the operator calculus.
  double deviation_squared = 0.0;
  // |4·deviation_squared - component_norm_sum|
  double identity_residual = 0.0;
};

namespace detail {

inline Kernel order2_normalized(const Kernel& f, const char* what,
                                double* scale) {
  if (f.order() != 2) {
    throw ArgumentError(std::string(what) + ": kernel must have order 2");
  }
  if (!is_mirror_symmetric(f)) {
    throw ArgumentError(std::string(what) + ": kernel is not mirror symmetric");
  }
  *scale = normalizing_scale(f, what);
  return f * Complex(*scale);
}

inline BiChaos minus_one_tensor_one(BiChaos x) {
  x.add(0, 0, Kernel::scalar(-1.0, x.grid()));
  return x;
}

}  // namespace detail

// Semicircular distance bound for F = I_2(f), with the chaos decomposition
// of the Malliavin deviation it is derived from.
inline DistanceReport distance_bound_order2(const Kernel& f,
                                            const Limits& limits = {}) {
  DistanceReport rep;
  const Kernel g = detail::order2_normalized(f, "distance_bound_order2",
                                             &rep.scale);
  const Kernel gb = conj(g);
  rep.plain = contract(g, g, 1, limits);
  rep.conj_conj = contract(gb, gb, 1, limits);
  rep.mixed = contract(gb, g, 1, limits) + contract(g, gb, 1, limits);
  rep.contraction_norm = norm(rep.plain);
  rep.bound = 0.5 * std::sqrt(1.5) * rep.contraction_norm;
  rep.component_norm_sum = norm_squared(rep.conj_conj) +
                           norm_squared(rep.mixed) + norm_squared(rep.plain);

  Biprocess grad = gradient(g);
  Biprocess half = grad;
  half *= 0.5;
  rep.deviation_squared =
      detail::minus_one_tensor_one(sharp_integral(half, adjoint(grad), limits))
          .norm_squared();
  rep.identity_residual =
      std::abs(4.0 * rep.deviation_squared - rep.component_norm_sum);
  return rep;
}

// The three time-restricted pieces of f ⌣1 f for a symmetric order-2 kernel:
// t below both arguments, t above both, and t in between.
struct RestrictedContractions {
  Kernel lower;
  Kernel upper;
  Kernel middle;
};

inline RestrictedContractions restricted_contractions(
    const Kernel& f, BoundaryWeight w = BoundaryWeight::midpoint) {
  if (f.order() != 2) {
    throw ArgumentError("restricted_contractions: kernel must have order 2");
  }
  const int N = f.cells();
  const double h = f.grid().width();
  RestrictedContractions rc{Kernel(2, f.grid()), Kernel(2, f.grid()),
                            Kernel(2, f.grid())};
  for (int x = 0; x < N; ++x) {
    for (int y = 0; y < N; ++y) {
      Complex lo{}, up{}, all{};
      for (int t = 0; t < N; ++t) {
        const Complex v = f.at({x, t}) * f.at({y, t});
        lo += v * (before_weight(t, x, w) * before_weight(t, y, w));
        up += v * (before_weight(x, t, w) * before_weight(y, t, w));
        all += v;
      }
      rc.lower.at({x, y}) = h * lo;
      rc.upper.at({x, y}) = h * up;
      rc.middle.at({x, y}) = h * (all - lo - up);
    }
  }
  return rc;
}

// Squared deviations behind the four equivalent convergence conditions for a
// fully symmetric, normalized double integral F = I_2(f).
struct EquivalenceNorms {
  double fourth_moment_gap = 0.0;    // φ(F^4) - 2
  double gradient_deviation = 0.0;   // ‖∫∇(N0^{-1}F) ♯ (∇F)* - 1⊗1‖^2
  double adapted_deviation = 0.0;    // ‖∫Γ∇F ♯ (∇F)* - 1⊗1‖^2
  double variation_deviation = 0.0;  // ‖∫⟨⟨Γ∇F, Γ∇F⟩⟩ - 1‖^2
  double scale = 1.0;
};

// Same-cell restrictions use the midpoint weight where the quantity is
// linear in Γ and the balanced weight where it is quadratic, which keeps the
// constant terms exact on the grid.
inline EquivalenceNorms equivalence_norms_order2(const Kernel& f,
                                                 const Limits& limits = {}) {
  EquivalenceNorms out;
  const Kernel g = detail::order2_normalized(f, "equivalence_norms_order2",
                                             &out.scale);
  if (!is_fully_symmetric(g)) {
    throw ArgumentError("equivalence_norms_order2: kernel is not fully "
                        "symmetric");
  }
  out.fourth_moment_gap = fourth_moment_gap(g, limits);

  const Biprocess grad = gradient(g);
  const Biprocess grad_adj = adjoint(grad);
  Biprocess half = grad;
  half *= 0.5;
  out.gradient_deviation =
      detail::minus_one_tensor_one(sharp_integral(half, grad_adj, limits))
          .norm_squared();

  const Biprocess adapted = adapted_projection(grad, BoundaryWeight::midpoint);
  out.adapted_deviation =
      detail::minus_one_tensor_one(sharp_integral(adapted, grad_adj, limits))
          .norm_squared();

  const Biprocess balanced =
      adapted_projection(grad, BoundaryWeight::balanced);
  ChaosElement qv = bracket_integral(balanced, balanced, limits);
  qv.add(Kernel::scalar(-1.0, g.grid()));
  out.variation_deviation = qv.norm_squared();
  return out;
}

}  // namespace freechaos

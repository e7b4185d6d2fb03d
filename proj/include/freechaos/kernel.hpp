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

// Step kernels on a uniform grid of [0, T]^n and their algebra: adjoints,
// nested contractions, tensor products, inner products and a general
// labelled-index summation used by the pairing and Malliavin code.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freechaos/error.hpp"
#include "freechaos/rng.hpp"

namespace freechaos {

using Complex = std::complex<double>;

inline constexpr double kDefaultTolerance = 1e-10;

struct GridSpec {
  double horizon = 1.0;
  int cells = 1;

  GridSpec() = default;
  GridSpec(double horizon_, int cells_) : horizon(horizon_), cells(cells_) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw GridError("grid horizon must be a positive finite number");
    }
    if (cells < 1) throw GridError("grid needs at least one cell");
  }

  double width() const { return horizon / cells; }
  std::string to_string() const {
    return std::to_string(cells) + " cells on [0, " +
           std::to_string(horizon) + "]";
  }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

namespace detail {

// N^n, or ResourceError when it exceeds the cap (or overflows).
inline std::size_t checked_entries(int order, int cells, std::size_t cap) {
  std::size_t total = 1;
  for (int k = 0; k < order; ++k) {
    if (total > cap / static_cast<std::size_t>(cells)) {
      throw ResourceError("kernel of order " + std::to_string(order) +
                          " on " + std::to_string(cells) +
                          " cells exceeds the cap of " + std::to_string(cap) +
                          " entries");
    }
    total *= static_cast<std::size_t>(cells);
  }
  if (total > cap) {
    throw ResourceError("kernel exceeds the cap of " + std::to_string(cap) +
                        " entries");
  }
  return total;
}

inline std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int k = 0; k < exp; ++k) r *= base;
  return r;
}

}  // namespace detail

// Piecewise-constant complex function on [0, T]^n. values_[offset] holds the
// value on the cell product indexed row-major by (i1, ..., in).
class Kernel {
 public:
  Kernel() : grid_(), values_(1, Complex{}) {}

  Kernel(int order, GridSpec grid, const Limits& limits = {})
      : order_(order), grid_(grid) {
    if (order < 0) throw ArgumentError("kernel order must be >= 0");
    values_.assign(detail::checked_entries(order, grid.cells,
                                           limits.kernel_max_entries),
                   Complex{});
  }

  Kernel(int order, GridSpec grid, std::vector<Complex> values)
      : order_(order), grid_(grid), values_(std::move(values)) {
    if (order < 0) throw ArgumentError("kernel order must be >= 0");
    const std::size_t want = detail::ipow(grid.cells, order);
    if (values_.size() != want) {
      throw ArgumentError("kernel of order " + std::to_string(order) +
                          " on " + std::to_string(grid.cells) +
                          " cells needs " + std::to_string(want) +
                          " values, got " + std::to_string(values_.size()));
    }
  }

  static Kernel scalar(Complex c, GridSpec grid) {
    return Kernel(0, grid, std::vector<Complex>{c});
  }

  int order() const { return order_; }
  const GridSpec& grid() const { return grid_; }
  int cells() const { return grid_.cells; }
  std::size_t size() const { return values_.size(); }

  std::vector<Complex>& values() { return values_; }
  const std::vector<Complex>& values() const { return values_; }
  Complex* data() { return values_.data(); }
  const Complex* data() const { return values_.data(); }

  Complex& operator[](std::size_t offset) { return values_[offset]; }
  const Complex& operator[](std::size_t offset) const {
    return values_[offset];
  }

  std::size_t offset(std::span<const int> cell) const {
    if (static_cast<int>(cell.size()) != order_) {
      throw ArgumentError("kernel index has " + std::to_string(cell.size()) +
                          " coordinates, order is " + std::to_string(order_));
    }
    std::size_t off = 0;
    for (int c : cell) {
      if (c < 0 || c >= grid_.cells) {
        throw ArgumentError("cell index " + std::to_string(c) +
                            " out of range");
      }
      off = off * grid_.cells + c;
    }
    return off;
  }
  Complex& at(std::span<const int> cell) { return values_[offset(cell)]; }
  const Complex& at(std::span<const int> cell) const {
    return values_[offset(cell)];
  }
  Complex& at(std::initializer_list<int> cell) {
    return at(std::span<const int>(cell.begin(), cell.size()));
  }
  const Complex& at(std::initializer_list<int> cell) const {
    return at(std::span<const int>(cell.begin(), cell.size()));
  }

  // Cell coordinates of a flat offset.
  std::vector<int> cell_of(std::size_t offset) const {
    std::vector<int> cell(order_);
    for (int k = order_ - 1; k >= 0; --k) {
      cell[k] = static_cast<int>(offset % grid_.cells);
      offset /= grid_.cells;
    }
    return cell;
  }

  Complex scalar_value() const {
    if (order_ != 0) throw ArgumentError("kernel is not a scalar");
    return values_[0];
  }

  Kernel& operator+=(const Kernel& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Kernel& operator-=(const Kernel& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Kernel& operator*=(Complex c) {
    for (auto& v : values_) v *= c;
    return *this;
  }
  friend Kernel operator+(Kernel a, const Kernel& b) { return a += b; }
  friend Kernel operator-(Kernel a, const Kernel& b) { return a -= b; }
  friend Kernel operator*(Kernel a, Complex c) { return a *= c; }
  friend Kernel operator*(Complex c, Kernel a) { return a *= c; }

  friend bool operator==(const Kernel&, const Kernel&) = default;

  void check_same_shape(const Kernel& o) const {
    if (!(grid_ == o.grid_)) {
      throw GridError("kernels live on different grids (" +
                      grid_.to_string() + " vs " + o.grid_.to_string() + ")");
    }
    if (order_ != o.order_) {
      throw ArgumentError("kernel orders differ (" + std::to_string(order_) +
                          " vs " + std::to_string(o.order_) + ")");
    }
  }

 private:
  int order_ = 0;
  GridSpec grid_;
  std::vector<Complex> values_;
};

inline void check_same_grid(const Kernel& a, const Kernel& b) {
  if (!(a.grid() == b.grid())) {
    throw GridError("kernels live on different grids (" +
                    a.grid().to_string() + " vs " + b.grid().to_string() +
                    ")");
  }
}

// result(x_0, ..., x_{n-1}) = f(y) where y[perm[k]] = x[k]; that is, axis k
// of the result is axis perm[k] of f.
inline Kernel permute_axes(const Kernel& f, std::span<const int> perm) {
  const int n = f.order();
  if (static_cast<int>(perm.size()) != n) {
    throw ArgumentError("permutation length does not match kernel order");
  }
  std::vector<int> seen(n, 0);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]++) {
      throw ArgumentError("not a permutation of the kernel axes");
    }
  }
  const std::size_t N = f.cells();
  std::vector<std::size_t> src_stride(n);
  for (int k = 0; k < n; ++k) src_stride[k] = detail::ipow(N, n - 1 - k);
  std::vector<std::size_t> stride(n);
  for (int k = 0; k < n; ++k) stride[k] = src_stride[perm[k]];

  std::vector<Complex> out(f.size());
  std::vector<std::size_t> idx(n, 0);
  std::size_t src = 0;
  for (std::size_t dst = 0; dst < out.size(); ++dst) {
    out[dst] = f[src];
    for (int k = n - 1; k >= 0; --k) {
      src += stride[k];
      if (++idx[k] < N) break;
      src -= N * stride[k];
      idx[k] = 0;
    }
  }
  return Kernel(n, f.grid(), std::move(out));
}

inline Kernel conj(Kernel f) {
  for (auto& v : f.values()) v = std::conj(v);
  return f;
}

// f*(t1, ..., tn) = conj f(tn, ..., t1).
inline Kernel adjoint(const Kernel& f) {
  std::vector<int> perm(f.order());
  for (int k = 0; k < f.order(); ++k) perm[k] = f.order() - 1 - k;
  return conj(permute_axes(f, perm));
}

// h^n * sum f * conj(g).
inline Complex inner(const Kernel& f, const Kernel& g) {
  f.check_same_shape(g);
  Complex s{};
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * std::conj(g[i]);
  return s * std::pow(f.grid().width(), f.order());
}

inline double norm_squared(const Kernel& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return s * std::pow(f.grid().width(), f.order());
}

inline double norm(const Kernel& f) { return std::sqrt(norm_squared(f)); }

// f's last p arguments integrated against g's first p arguments in reverse:
//   (f ⌣p g)(x, y) = ∫ f(x, s1..sp) g(sp..s1, y) ds.
// p = 0 is the tensor product.
inline Kernel contract(const Kernel& f, const Kernel& g, int p,
                       const Limits& limits = {}) {
  check_same_grid(f, g);
  const int n = f.order();
  const int m = g.order();
  if (p < 0 || p > std::min(n, m)) {
    throw ArgumentError("contraction depth " + std::to_string(p) +
                        " outside [0, min(" + std::to_string(n) + ", " +
                        std::to_string(m) + ")]");
  }
  const std::size_t N = f.cells();
  Kernel out(n + m - 2 * p, f.grid(), limits);
  const auto A = static_cast<Eigen::Index>(detail::ipow(N, n - p));
  const auto S = static_cast<Eigen::Index>(detail::ipow(N, p));
  const auto B = static_cast<Eigen::Index>(detail::ipow(N, m - p));

  using RowMajor =
      Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  // Reverse g's first p axes so that both operands index s in the same order.
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.begin() + p);
  const Kernel g_rev = p > 1 ? permute_axes(g, perm) : g;

  Eigen::Map<const RowMajor> F(f.data(), A, S);
  Eigen::Map<const RowMajor> G(g_rev.data(), S, B);
  Eigen::Map<RowMajor> R(out.data(), A, B);
  R.noalias() = F * G;
  if (p > 0) R *= std::pow(f.grid().width(), p);
  return out;
}

inline Kernel tensor(const Kernel& f, const Kernel& g,
                     const Limits& limits = {}) {
  return contract(f, g, 0, limits);
}

// ‖f - f*‖ <= tol * max(1, ‖f‖).
inline bool is_mirror_symmetric(const Kernel& f,
                                double tol = kDefaultTolerance) {
  if (tol < 0) throw ArgumentError("tolerance must be >= 0");
  return norm(f - adjoint(f)) <= tol * std::max(1.0, norm(f));
}

// Real valued and invariant under every permutation of the arguments.
// Adjacent transpositions generate all permutations, so checking them is
// enough.
inline bool is_fully_symmetric(const Kernel& f,
                               double tol = kDefaultTolerance) {
  if (tol < 0) throw ArgumentError("tolerance must be >= 0");
  const double scale = tol * std::max(1.0, norm(f));
  double imag_sq = 0.0;
  for (const auto& v : f.values()) imag_sq += v.imag() * v.imag();
  if (std::sqrt(imag_sq * std::pow(f.grid().width(), f.order())) > scale) {
    return false;
  }
  std::vector<int> perm(f.order());
  for (int k = 0; k + 1 < f.order(); ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[k], perm[k + 1]);
    if (norm(f - permute_axes(f, perm)) > scale) return false;
  }
  return true;
}

// True when some two coordinates share a cell, for any cell product holding
// a nonzero value.
inline bool has_diagonal_mass(const Kernel& f) {
  for (std::size_t off = 0; off < f.size(); ++off) {
    if (f[off] == Complex{}) continue;
    auto cell = f.cell_of(off);
    std::sort(cell.begin(), cell.end());
    if (std::adjacent_find(cell.begin(), cell.end()) != cell.end()) {
      return true;
    }
  }
  return false;
}

// Copy of f with every cell product that repeats a cell set to zero.
inline Kernel off_diagonal_part(const Kernel& f) {
  Kernel out = f;
  for (std::size_t off = 0; off < f.size(); ++off) {
    auto cell = f.cell_of(off);
    std::sort(cell.begin(), cell.end());
    if (std::adjacent_find(cell.begin(), cell.end()) != cell.end()) {
      out[off] = Complex{};
    }
  }
  return out;
}

namespace detail {

// Number of cells per unit length, when unit boundaries are cell boundaries.
inline int cells_per_unit(const GridSpec& grid) {
  const double per_unit = grid.cells / grid.horizon;
  const double rounded = std::round(per_unit);
  if (rounded < 1.0 || std::abs(per_unit - rounded) > 1e-9 * per_unit) {
    throw ArgumentError("grid " + grid.to_string() +
                        " does not align cell boundaries with the integers; "
                        "cells / horizon must be a positive integer");
  }
  return static_cast<int>(rounded);
}

inline int aligned_cell(double x, const GridSpec& grid) {
  const double pos = x / grid.width();
  const double rounded = std::round(pos);
  if (std::abs(pos - rounded) > 1e-9 * std::max(1.0, std::abs(pos)) ||
      rounded < 0 || rounded > grid.cells) {
    throw ArgumentError("point " + std::to_string(x) +
                        " is not a cell boundary of " + grid.to_string());
  }
  return static_cast<int>(rounded);
}

}  // namespace detail

// f_m(x, y) = m^{-1/2} * sum_{k<m} 1_{(k,k+1]}(x) 1_{(k,k+1]}(y).
inline Kernel breuer_major_kernel(int m, const GridSpec& grid,
                                  const Limits& limits = {}) {
  if (m < 1) throw ArgumentError("breuer-major kernel needs m >= 1");
  if (grid.horizon + 1e-12 < m) {
    throw ArgumentError("grid horizon " + std::to_string(grid.horizon) +
                        " is shorter than m = " + std::to_string(m));
  }
  const int c = detail::cells_per_unit(grid);
  Kernel f(2, grid, limits);
  const Complex v = 1.0 / std::sqrt(static_cast<double>(m));
  for (int k = 0; k < m; ++k) {
    for (int i = k * c; i < (k + 1) * c; ++i) {
      for (int j = k * c; j < (k + 1) * c; ++j) f.at({i, j}) = v;
    }
  }
  return f;
}

// Indicator of [a, b]^order; a and b must be cell boundaries.
inline Kernel indicator_kernel(int order, double a, double b,
                               const GridSpec& grid,
                               const Limits& limits = {}) {
  if (order < 0) throw ArgumentError("indicator order must be >= 0");
  if (!(a < b)) throw ArgumentError("indicator needs a < b");
  const int lo = detail::aligned_cell(a, grid);
  const int hi = detail::aligned_cell(b, grid);
  Kernel f(order, grid, limits);
  for (std::size_t off = 0; off < f.size(); ++off) {
    const auto cell = f.cell_of(off);
    const bool inside = std::all_of(cell.begin(), cell.end(), [&](int c) {
      return c >= lo && c < hi;
    });
    if (inside) f[off] = 1.0;
  }
  return f;
}

enum class Symmetry { none, mirror, full };

// Normalized pseudo-random kernel. mirror: (g + g*) / ‖g + g*‖ from a complex
// (or real) Gaussian g. full: real g averaged over all argument permutations.
inline Kernel random_kernel(int order, const GridSpec& grid,
                            std::uint64_t seed, Symmetry symmetry,
                            bool real_valued = false,
                            const Limits& limits = {}) {
  if (order < 1) throw ArgumentError("random kernel needs order >= 1");
  Kernel g(order, grid, limits);
  StreamRng rng(seed, static_cast<std::uint64_t>(order));
  const bool real = real_valued || symmetry == Symmetry::full;
  for (auto& v : g.values()) {
    const double re = rng.normal();
    const double im = real ? 0.0 : rng.normal();
    v = Complex(re, im);
  }
  Kernel f = g;
  if (symmetry == Symmetry::mirror) {
    f += adjoint(g);
  } else if (symmetry == Symmetry::full) {
    std::vector<int> perm(order);
    std::iota(perm.begin(), perm.end(), 0);
    f = Kernel(order, grid, limits);
    do {
      f += permute_axes(g, perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  const double r = norm(f);
  if (!(r > 1e-300)) {
    throw DegenerateInputError("random kernel vanished after symmetrization");
  }
  f *= 1.0 / r;
  return f;
}

// One operand of labelled_sum: kernel argument k carries label labels[k].
struct LabelledFactor {
  const Kernel* kernel;
  std::vector<int> labels;
};

// Sum over every assignment of cells to labels 0..label_count-1 of the
// product of the factors, each evaluated at the cells of its labels. Labels
// listed in free_labels become the axes of the result, in that order; every
// other label is integrated, contributing one factor h.
inline Kernel labelled_sum(std::span<const LabelledFactor> factors,
                           int label_count, std::span<const int> free_labels,
                           const GridSpec& grid, const Limits& limits = {}) {
  const int L = label_count;
  const std::size_t N = grid.cells;
  std::vector<int> position(L, -1);
  std::vector<int> order;
  for (int l : free_labels) {
    if (l < 0 || l >= L || position[l] >= 0) {
      throw ArgumentError("labelled_sum: bad free label " + std::to_string(l));
    }
    position[l] = static_cast<int>(order.size());
    order.push_back(l);
  }
  const int free_count = static_cast<int>(order.size());
  for (int l = 0; l < L; ++l) {
    if (position[l] < 0) {
      position[l] = static_cast<int>(order.size());
      order.push_back(l);
    }
  }

  const std::size_t nf = factors.size();
  // For each odometer position: which factor offsets move, and by how much.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> moves(L);
  std::vector<const Complex*> data(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const Kernel& k = *factors[f].kernel;
    if (!(k.grid() == grid)) {
      throw GridError("labelled_sum: factor on a different grid");
    }
    if (static_cast<int>(factors[f].labels.size()) != k.order()) {
      throw ArgumentError("labelled_sum: factor of order " +
                          std::to_string(k.order()) + " given " +
                          std::to_string(factors[f].labels.size()) +
                          " labels");
    }
    data[f] = k.data();
    for (int a = 0; a < k.order(); ++a) {
      const int l = factors[f].labels[a];
      if (l < 0 || l >= L) {
        throw ArgumentError("labelled_sum: label out of range");
      }
      moves[position[l]].push_back({f, detail::ipow(N, k.order() - 1 - a)});
    }
  }
  std::vector<std::size_t> out_stride(L, 0);
  for (int k = 0; k < free_count; ++k) {
    out_stride[k] = detail::ipow(N, free_count - 1 - k);
  }

  std::uint64_t iterations = 1;
  for (int l = 0; l < L; ++l) {
    if (iterations > limits.integral_max_iterations / N) {
      throw ResourceError("labelled_sum: " + std::to_string(L) +
                          " free indices on " + std::to_string(N) +
                          " cells exceed the iteration cap of " +
                          std::to_string(limits.integral_max_iterations));
    }
    iterations *= N;
  }

  Kernel out(free_count, grid, limits);
  Complex* res = out.data();
  std::vector<std::size_t> idx(L, 0);
  std::vector<std::size_t> off(nf, 0);
  std::size_t out_off = 0;
  while (true) {
    Complex prod = 1.0;
    for (std::size_t f = 0; f < nf; ++f) prod *= data[f][off[f]];
    res[out_off] += prod;
    int pos = L - 1;
    for (; pos >= 0; --pos) {
      for (const auto& [f, s] : moves[pos]) off[f] += s;
      out_off += out_stride[pos];
      if (++idx[pos] < N) break;
      for (const auto& [f, s] : moves[pos]) off[f] -= N * s;
      out_off -= N * out_stride[pos];
      idx[pos] = 0;
    }
    if (pos < 0) break;
  }
  const int summed = L - free_count;
  if (summed > 0) out *= std::pow(grid.width(), summed);
  return out;
}

}  // namespace freechaos

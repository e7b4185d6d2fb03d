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

// Hermitian matrix Brownian motion as a finite-dimensional stand-in for free
// Brownian motion, and Monte Carlo trace moments of matrix multiple
// integrals of step kernels.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "freechaos/error.hpp"
#include "freechaos/kernel.hpp"
#include "freechaos/rng.hpp"

namespace freechaos {

using Matrix = Eigen::MatrixXcd;

// What to do with kernel mass on cell products that repeat a cell.
//   drop: discard it (the integral of the off-diagonal part)
//   wick: for order 2, integrate it exactly, using that the double
//         integral of 1_{cell}^2 is ΔS^2 - h
enum class DiagonalPolicy { drop, wick };

struct SimConfig {
  int dimension = 200;
  int samples = 200;
  std::uint64_t seed = 0;
  GridSpec grid;
  DiagonalPolicy diagonal = DiagonalPolicy::drop;
  // Matrix products allowed per sample path.
  std::uint64_t max_products = 1'000'000;
  // Worker threads; 0 picks the hardware concurrency. Results do not depend
  // on it.
  int threads = 0;

  void validate() const {
    if (dimension < 2) throw ArgumentError("simulation needs dimension >= 2");
    if (samples < 1) throw ArgumentError("simulation needs samples >= 1");
    if (threads < 0) throw ArgumentError("simulation needs threads >= 0");
  }
};

// Increments ΔS_i of S = W / sqrt(d) over each grid cell.
struct MatrixPath {
  int dimension = 0;
  GridSpec grid;
  std::vector<Matrix> increments;
};

// Sample path number `sample` of the configured seed. Upper-triangle entries
// are complex Gaussians with variance h/d (h/2d per real part), diagonal
// entries real with variance h/d.
inline MatrixPath sample_path(const SimConfig& cfg, std::uint64_t sample = 0) {
  cfg.validate();
  const int d = cfg.dimension;
  const double h = cfg.grid.width();
  const double sd_diag = std::sqrt(h / d);
  const double sd_part = std::sqrt(h / (2.0 * d));
  StreamRng rng(cfg.seed, sample);
  MatrixPath path{d, cfg.grid, {}};
  path.increments.reserve(cfg.grid.cells);
  for (int c = 0; c < cfg.grid.cells; ++c) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
      m(i, i) = sd_diag * rng.normal();
      for (int j = i + 1; j < d; ++j) {
        const double re = sd_part * rng.normal();
        const double im = sd_part * rng.normal();
        m(i, j) = Complex(re, im);
        m(j, i) = Complex(re, -im);
      }
    }
    path.increments.push_back(std::move(m));
  }
  return path;
}

// I_n(f) on the matrix path: the sum over pairwise distinct cells i1..in of
// f(i1..in) ΔS_{i1} ... ΔS_{in}, plus the exact diagonal term for order 2
// under the wick policy.
inline Matrix matrix_wigner_integral(const Kernel& f, const MatrixPath& path,
                                     DiagonalPolicy policy = DiagonalPolicy::drop,
                                     std::uint64_t max_products = 1'000'000) {
  if (!(f.grid() == path.grid)) {
    throw GridError("matrix_wigner_integral: kernel and path grids differ");
  }
  const int d = path.dimension;
  const int N = f.cells();
  const int n = f.order();
  const auto& dS = path.increments;
  if (n == 0) return f[0] * Matrix::Identity(d, d);
  if (n == 1) {
    Matrix m = Matrix::Zero(d, d);
    for (int i = 0; i < N; ++i) {
      if (f[i] != Complex{}) m += f[i] * dS[i];
    }
    return m;
  }
  if (n == 2) {
    Matrix m = Matrix::Zero(d, d);
    for (int i = 0; i < N; ++i) {
      Matrix y = Matrix::Zero(d, d);
      bool any = false;
      for (int j = 0; j < N; ++j) {
        const Complex v = f.at({i, j});
        if (j == i || v == Complex{}) continue;
        y += v * dS[j];
        any = true;
      }
      if (any) m.noalias() += dS[i] * y;
    }
    if (policy == DiagonalPolicy::wick) {
      const double h = f.grid().width();
      for (int i = 0; i < N; ++i) {
        const Complex v = f.at({i, i});
        if (v == Complex{}) continue;
        Matrix sq = dS[i] * dS[i];
        sq.diagonal().array() -= h;
        m += v * sq;
      }
    }
    return m;
  }
  if (policy == DiagonalPolicy::wick) {
    throw ArgumentError("matrix_wigner_integral: the wick diagonal policy is "
                        "only available up to order 2");
  }
  std::uint64_t products = 0;
  for (std::size_t off = 0; off < f.size(); ++off) {
    if (f[off] == Complex{}) continue;
    auto cell = f.cell_of(off);
    std::sort(cell.begin(), cell.end());
    if (std::adjacent_find(cell.begin(), cell.end()) == cell.end()) {
      products += static_cast<std::uint64_t>(n - 1);
    }
  }
  if (products > max_products) {
    throw ResourceError("matrix_wigner_integral: " + std::to_string(products) +
                        " matrix products per path exceed the cap of " +
                        std::to_string(max_products));
  }
  Matrix m = Matrix::Zero(d, d);
  for (std::size_t off = 0; off < f.size(); ++off) {
    if (f[off] == Complex{}) continue;
    const auto cell = f.cell_of(off);
    auto sorted = cell;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      continue;
    }
    Matrix prod = dS[cell[0]];
    for (int k = 1; k < n; ++k) prod = prod * dS[cell[k]];
    m += f[off] * prod;
  }
  return m;
}

struct MomentEstimate {
  int order = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct SimReport {
  std::vector<MomentEstimate> moments;
  double max_operator_norm = 0.0;
  // Squared L^2 mass of f on repeated-cell products that the drop policy
  // discards.
  double dropped_diagonal_mass = 0.0;
  // Largest ‖M - M*‖ / max(1, ‖M‖) seen before symmetrization.
  double max_hermitian_residual = 0.0;
  bool hermitian = true;
};

inline double diagonal_mass(const Kernel& f) {
  return norm_squared(f - off_diagonal_part(f));
}

// Sample means and standard errors of (1/d) Tr(M^k) over independent paths.
// Mirror-symmetric kernels give Hermitian matrices, whose moments come from
// the spectrum; otherwise the real part of the trace of the power is used.
inline SimReport empirical_moments(const Kernel& f, const SimConfig& cfg,
                                   const std::vector<int>& orders) {
  cfg.validate();
  for (int k : orders) {
    if (k < 0 || k > 8) {
      throw ArgumentError("empirical_moments: orders must lie in [0, 8]");
    }
  }
  if (!(f.grid() == cfg.grid)) {
    throw GridError("empirical_moments: kernel and simulation grids differ");
  }
  SimReport rep;
  const bool keeps_diagonal =
      cfg.diagonal == DiagonalPolicy::wick && f.order() == 2;
  if (!keeps_diagonal && f.order() >= 2) rep.dropped_diagonal_mass = diagonal_mass(f);
  rep.hermitian = is_mirror_symmetric(f);

  const int d = cfg.dimension;
  struct PathResult {
    std::vector<double> values;
    double operator_norm = 0.0;
    double residual = 0.0;
  };
  const bool hermitian = rep.hermitian;
  auto evaluate = [&](int s) {
    const MatrixPath path = sample_path(cfg, static_cast<std::uint64_t>(s));
    const Matrix m = matrix_wigner_integral(f, path, cfg.diagonal, cfg.max_products);
    PathResult r;
    r.values.resize(orders.size());
    r.residual = (m - m.adjoint()).norm() / std::max(1.0, m.norm());
    if (hermitian) {
      const Matrix herm = 0.5 * (m + m.adjoint());
      Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) {
        throw Error("empirical_moments: eigenvalue solver failed");
      }
      const Eigen::VectorXd& lambda = es.eigenvalues();
      r.operator_norm = lambda.cwiseAbs().maxCoeff();
      for (std::size_t k = 0; k < orders.size(); ++k) {
        r.values[k] = lambda.array().pow(orders[k]).sum() / d;
      }
    } else {
      Eigen::JacobiSVD<Matrix> svd(m);
      r.operator_norm = svd.singularValues()(0);
      for (std::size_t k = 0; k < orders.size(); ++k) {
        Matrix power = Matrix::Identity(d, d);
        for (int j = 0; j < orders[k]; ++j) power = power * m;
        r.values[k] = power.trace().real() / d;
      }
    }
    return r;
  };

  // Paths are independent and seeded by their index; the reduction below
  // runs in sample order, so the thread count cannot change the result.
  std::vector<PathResult> results(cfg.samples);
  int workers = cfg.threads > 0
                    ? cfg.threads
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, cfg.samples);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int s; (s = next.fetch_add(1)) < cfg.samples;) {
      try {
        results[s] = evaluate(s);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.samples;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> sum(orders.size(), 0.0), sum_sq(orders.size(), 0.0);
  for (const auto& r : results) {
    rep.max_hermitian_residual = std::max(rep.max_hermitian_residual, r.residual);
    rep.max_operator_norm = std::max(rep.max_operator_norm, r.operator_norm);
    for (std::size_t k = 0; k < orders.size(); ++k) {
      sum[k] += r.values[k];
      sum_sq[k] += r.values[k] * r.values[k];
    }
  }
  const double S = cfg.samples;
  for (std::size_t k = 0; k < orders.size(); ++k) {
    MomentEstimate e;
    e.order = orders[k];
    e.mean = sum[k] / S;
    if (cfg.samples > 1) {
      const double var =
          std::max(0.0, (sum_sq[k] - S * e.mean * e.mean) / (S - 1.0));
      e.std_error = std::sqrt(var / S);
    }
    rep.moments.push_back(e);
  }
  return rep;
}

}  // namespace freechaos

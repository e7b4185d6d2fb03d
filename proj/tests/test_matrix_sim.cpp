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

#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"
#include "freechaos/chaos.hpp"
#include "freechaos/matrix_sim.hpp"

using namespace freechaos;

namespace {

SimConfig small(GridSpec grid, int d = 60, int samples = 60) {
  SimConfig cfg;
  cfg.dimension = d;
  cfg.samples = samples;
  cfg.seed = 20261015;
  cfg.grid = grid;
  return cfg;
}

bool within_sigma(const MomentEstimate& e, double target, double k = 5.0) {
  return std::abs(e.mean - target) <= k * e.std_error + 1e-12;
}

}  // namespace

TEST_CASE("increments are centred with variance h", "[matrix][path]") {
  const GridSpec g(2.0, 4);
  const SimConfig cfg = small(g, 40, 200);
  const double h = g.width();
  double sum = 0.0, sq_sum = 0.0, sq_sq_sum = 0.0;
  for (int s = 0; s < cfg.samples; ++s) {
    const MatrixPath p = sample_path(cfg, s);
    REQUIRE(p.increments.size() == 4);
    const Matrix& m = p.increments[1];
    REQUIRE((m - m.adjoint()).norm() == 0.0);
    sum += m.trace().real() / cfg.dimension;
    const double v = (m * m).trace().real() / cfg.dimension;
    sq_sum += v;
    sq_sq_sum += v * v;
  }
  const double S = cfg.samples;
  const double d = cfg.dimension;
  REQUIRE(std::abs(sum / S) <= 4.0 * std::sqrt(h / (d * d * S)));
  const double mean = sq_sum / S;
  const double se = std::sqrt((sq_sq_sum / S - mean * mean) / (S - 1.0));
  REQUIRE(std::abs(mean - h) <= 5.0 * se);
}

TEST_CASE("paths are reproducible", "[matrix][path]") {
  const GridSpec g(1.0, 3);
  const SimConfig cfg = small(g, 20, 4);
  const MatrixPath a = sample_path(cfg, 2), b = sample_path(cfg, 2), c = sample_path(cfg, 3);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(a.increments[i] == b.increments[i]);
    REQUIRE(a.increments[i] != c.increments[i]);
  }
  SimConfig other = cfg;
  other.seed += 1;
  REQUIRE(sample_path(other, 2).increments[0] != a.increments[0]);
}

TEST_CASE("estimates do not depend on the thread count", "[matrix][determinism]") {
  const GridSpec g(1.0, 4);
  const Kernel f = random_kernel(2, g, 3, Symmetry::mirror);
  SimConfig one = small(g, 30, 12);
  one.threads = 1;
  SimConfig many = one;
  many.threads = 5;
  const SimReport a = empirical_moments(f, one, {2, 3, 4});
  const SimReport b = empirical_moments(f, many, {2, 3, 4});
  const SimReport c = empirical_moments(f, one, {2, 3, 4});
  for (std::size_t k = 0; k < 3; ++k) {
    REQUIRE(a.moments[k].mean == b.moments[k].mean);
    REQUIRE(a.moments[k].std_error == b.moments[k].std_error);
    REQUIRE(a.moments[k].mean == c.moments[k].mean);
  }
  REQUIRE(a.max_operator_norm == b.max_operator_norm);
}

TEST_CASE("zero kernel gives the zero matrix", "[matrix][integral]") {
  const GridSpec g(1.0, 3);
  const SimConfig cfg = small(g, 10, 1);
  const MatrixPath p = sample_path(cfg);
  for (int n = 1; n <= 3; ++n) {
    REQUIRE(matrix_wigner_integral(Kernel(n, g), p).norm() == 0.0);
  }
}

TEST_CASE("first-order integral is the weighted sum of increments", "[matrix][integral]") {
  const GridSpec g(1.0, 4);
  const SimConfig cfg = small(g, 10, 1);
  const MatrixPath p = sample_path(cfg);
  const Matrix m = matrix_wigner_integral(indicator_kernel(1, 0.25, 0.75, g), p);
  REQUIRE((m - p.increments[1] - p.increments[2]).norm() < 1e-14);
}

TEST_CASE("second-order integral against explicit products", "[matrix][integral]") {
  const GridSpec g(1.0, 3);
  const SimConfig cfg = small(g, 8, 1);
  const MatrixPath p = sample_path(cfg);
  const Kernel f = random_kernel(2, g, 4, Symmetry::none);
  Matrix want = Matrix::Zero(8, 8);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) want += f.at({i, j}) * p.increments[i] * p.increments[j];
  REQUIRE((matrix_wigner_integral(f, p) - want).norm() < 1e-12);
  const double h = g.width();
  for (int i = 0; i < 3; ++i) {
    Matrix sq = p.increments[i] * p.increments[i];
    sq.diagonal().array() -= h;
    want += f.at({i, i}) * sq;
  }
  REQUIRE((matrix_wigner_integral(f, p, DiagonalPolicy::wick) - want).norm() < 1e-12);
}

TEST_CASE("mirror-symmetric kernels give Hermitian matrices", "[matrix][hermitian]") {
  const GridSpec g(1.0, 4);
  const SimConfig cfg = small(g, 16, 1);
  const MatrixPath p = sample_path(cfg);
  for (int n = 1; n <= 3; ++n) {
    const Matrix m = matrix_wigner_integral(random_kernel(n, g, n, Symmetry::mirror), p);
    REQUIRE((m - m.adjoint()).norm() <= 1e-12 * std::max(1.0, m.norm()));
  }
  const Matrix w = matrix_wigner_integral(random_kernel(2, g, 9, Symmetry::mirror), p,
                                          DiagonalPolicy::wick);
  REQUIRE((w - w.adjoint()).norm() <= 1e-12 * std::max(1.0, w.norm()));
}

TEST_CASE("semicircle moments of the first chaos", "[matrix][moments]") {
  const GridSpec g(1.0, 2);
  const Kernel one = indicator_kernel(1, 0.0, 1.0, g);
  const SimReport rep = empirical_moments(one, small(g, 80, 60), {1, 2, 3, 4, 5, 6});
  REQUIRE(rep.hermitian);
  for (const auto& e : rep.moments) {
    REQUIRE(within_sigma(e, semicircle_moment(e.order, 1.0)));
  }
  REQUIRE(rep.max_operator_norm <= 2.0 * norm(one) + 0.5);
  REQUIRE(rep.max_hermitian_residual <= 1e-12);
}

TEST_CASE("second chaos moments match the pairing engine", "[matrix][moments]") {
  const GridSpec g(1.0, 5);
  const Kernel f = off_diagonal_part(random_kernel(2, g, 6, Symmetry::mirror));
  const SimReport rep = empirical_moments(f, small(g, 80, 60), {2, 3, 4});
  REQUIRE(rep.dropped_diagonal_mass == 0.0);
  for (const auto& e : rep.moments) {
    const std::vector<Kernel> fs(e.order, f);
    REQUIRE(within_sigma(e, wigner_mixed_moment(fs).value.real()));
  }
  REQUIRE(rep.max_operator_norm <= 3.0 * norm(f) + 0.5);
}

TEST_CASE("diagonal kernels need the wick policy", "[matrix][moments]") {
  const Kernel f = breuer_major_kernel(4, GridSpec(4.0, 4));
  SimConfig cfg = small(GridSpec(4.0, 4), 80, 60);
  const SimReport dropped = empirical_moments(f, cfg, {4});
  REQUIRE(dropped.dropped_diagonal_mass > 0.0);
  REQUIRE(dropped.moments[0].mean == 0.0);

  cfg.diagonal = DiagonalPolicy::wick;
  const SimReport kept = empirical_moments(f, cfg, {2, 4});
  REQUIRE(kept.dropped_diagonal_mass == 0.0);
  REQUIRE(within_sigma(kept.moments[0], 1.0));
  REQUIRE(within_sigma(kept.moments[1], 2.25));
}

TEST_CASE("simulation input validation", "[matrix]") {
  const GridSpec g(1.0, 3);
  const Kernel f = random_kernel(2, g, 1, Symmetry::mirror);
  SimConfig cfg = small(g, 10, 2);
  REQUIRE_THROWS_AS(empirical_moments(f, cfg, {9}), ArgumentError);
  REQUIRE_THROWS_AS(empirical_moments(random_kernel(2, GridSpec(2.0, 3), 1, Symmetry::mirror),
                                      cfg, {2}),
                    GridError);
  cfg.dimension = 1;
  REQUIRE_THROWS_AS(empirical_moments(f, cfg, {2}), ArgumentError);
  cfg.dimension = 10;
  cfg.samples = 0;
  REQUIRE_THROWS_AS(empirical_moments(f, cfg, {2}), ArgumentError);

  const MatrixPath p = sample_path(small(g, 4, 1));
  const Kernel f3 = random_kernel(3, g, 1, Symmetry::none);
  REQUIRE_THROWS_AS(matrix_wigner_integral(f3, p, DiagonalPolicy::wick), ArgumentError);
  REQUIRE_THROWS_AS(matrix_wigner_integral(f3, p, DiagonalPolicy::drop, 5), ResourceError);
  REQUIRE_NOTHROW(matrix_wigner_integral(f3, p, DiagonalPolicy::drop, 12));
}

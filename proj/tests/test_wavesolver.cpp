#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tcloak/wavesolver.hpp"

using namespace tcloak;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

BoundarySignal<1> left_pulse(double t_on = -1.9, double t_off = -0.9) {
  BoundarySignal<1> f;
  f.t_on = t_on;
  f.t_off = t_off;
  return f;
}

Grid<1> grid1(int points, double t_min, double t_max, double a = 1.0, double cfl = 0.9) {
  const double h = 2.0 / (points - 1);
  return Grid<1>::make(1.0, points, cfl * h / a, t_min, t_max, 0.9);
}

Grid<2> grid2(int points, double t_min, double t_max, double a = 1.0) {
  const double h = 2.0 / (points - 1);
  return Grid<2>::make(1.0, points, 0.9 * h / (a * std::sqrt(2.0)), t_min, t_max, 0.9);
}

double max_error_vs_oracle(int points) {
  const auto f = left_pulse();
  const auto grid = grid1(points, -2.0, 0.2);
  const auto u = solve_physical(grid, 1.0, f);
  double err = 0.0;
  for (std::int64_t k = 0; k < grid.levels; ++k) {
    for (std::size_t p = 0; p < grid.point_count(); ++p) {
      try {
        const double exact = dalembert_oracle_1d(1.0, f, grid.L, grid.coord(p)[0], grid.time(k));
        err = std::max(err, std::abs(u.at(k, p) - exact));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::OracleDomainExceeded) throw;
      }
    }
  }
  return err;
}

}  // namespace

TEST(Grid, WindowContainsZeroAndSnaps) {
  const auto g = Grid<2>::make(1.0, 33, 0.03, -1.0, 0.5);
  ASSERT_GE(g.zero_level(), 0);
  EXPECT_EQ(g.time(g.zero_level()), 0.0);
  EXPECT_LE(g.t_first(), -1.0);
  EXPECT_GE(g.t_last(), 0.5 - 1e-12);
  EXPECT_EQ(kind_of([] { Grid<2>::make(1.0, 8, 0.03, -1.0, 0.5); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { Grid<2>::make(1.0, 33, 0.03, 0.1, 0.5); }), ErrorKind::ConfigError);
}

TEST(SolvePhysical, ZeroSignalGivesZeroField) {
  auto f = left_pulse();
  f.amplitude = 0.0;
  const auto u = solve_physical(grid1(65, -2.0, 0.2), 1.0, f);
  for (double v : u.values()) ASSERT_EQ(v, 0.0);
}

TEST(SolvePhysical, FirstTwoLevelsZeroAndDiscreteEquationHolds) {
  BoundarySignal<2> f;
  f.t_on = -0.9;
  f.t_off = -0.3;
  f.faces = {Face{0, -1}, Face{1, 1}};
  const auto grid = grid2(33, -1.0, 0.3);
  const auto u = solve_physical(grid, 1.0, f);
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    EXPECT_EQ(u.at(0, p), 0.0);
    EXPECT_EQ(u.at(1, p), 0.0);
  }
  const double lambda = grid.dt / grid.h();
  for (std::int64_t k = 1; k + 1 < grid.levels; ++k) {
    for_each_interior(grid, [&](std::size_t p) {
      const double expect = 2.0 * u.at(k, p) - u.at(k - 1, p) +
                            lambda * lambda * laplacian_sum(grid, u.level(k), p);
      ASSERT_EQ(u.at(k + 1, p), expect);
    });
  }
}

TEST(SolvePhysical, Errors) {
  const auto f = left_pulse();
  auto g = grid1(65, -2.0, 0.2);
  g.dt *= 1.2;
  EXPECT_EQ(kind_of([&] { solve_physical(g, 1.0, f); }), ErrorKind::CflViolation);
  const auto late = grid1(65, -1.0, 0.2);
  EXPECT_EQ(kind_of([&] { solve_physical(late, 1.0, f); }), ErrorKind::SignalOutsideWindow);
}

TEST(SolvePhysical, FinitePropagation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double t_on = -1.9 + 0.3 * u(rng);
    const auto f = left_pulse(t_on, t_on + 0.5 + 0.4 * u(rng));
    const auto grid = grid1(129, -2.0, 0.2, 1.0, 0.5 + 0.4 * u(rng));
    const auto field = solve_physical(grid, 1.0, f);
    double peak = 0.0;
    for (double v : field.values()) peak = std::max(peak, std::abs(v));
    // first level with a nonzero boundary value
    std::int64_t k_on = 0;
    while (field.at(k_on, 0) == 0.0) ++k_on;
    for (std::int64_t k = 0; k < grid.levels; ++k) {
      for (std::size_t p = 0; p < grid.point_count(); ++p) {
        const double x = grid.coord(p)[0];
        // the stencil reaches one cell per step: exact zeros outside that cone
        if (static_cast<std::int64_t>(p) > k - k_on) ASSERT_EQ(field.at(k, p), 0.0);
        // outside the physical cone only a small dispersive precursor remains
        if (x + 1.0 > (grid.time(k) - t_on) + 2 * grid.h()) {
          ASSERT_LE(std::abs(field.at(k, p)), 1e-4 * peak) << "level " << k << " x " << x;
        }
      }
    }
  }
}

TEST(DalembertOracle, Examples) {
  const auto f = left_pulse(1.0 - 0.5, 1.0 + 0.5);  // Ricker peak at t = 1
  EXPECT_EQ(dalembert_oracle_1d(1.0, f, 1.0, 0.3, 0.2), 0.0);
  EXPECT_EQ(dalembert_oracle_1d(1.0, f, 1.0, -1.0, 0.8), f.pulse(0.8));
  // distance 2 from the driven end: the peak arrives at t = 3
  EXPECT_EQ(dalembert_oracle_1d(1.0, f, 5.0, -3.0, 3.0), f.pulse(1.0));
  EXPECT_EQ(dalembert_oracle_1d(2.0, f, 5.0, -3.0, 2.0), f.pulse(1.0));
  EXPECT_EQ(f.pulse(1.0), 1.0);
  EXPECT_EQ(kind_of([&] { dalembert_oracle_1d(1.0, f, 1.0, 0.0, 0.5 + 3.5); }),
            ErrorKind::OracleDomainExceeded);
  auto right = f;
  right.faces = {Face{0, 1}};
  EXPECT_EQ(kind_of([&] { dalembert_oracle_1d(1.0, right, 1.0, 0.0, 0.0); }),
            ErrorKind::PreconditionViolated);
}

TEST(SolvePhysical, ConvergesToDalembertAtSecondOrder) {
  std::vector<double> err;
  for (int n : {257, 513, 1025}) err.push_back(max_error_vs_oracle(n));
  const double o1 = std::log2(err[0] / err[1]);
  const double o2 = std::log2(err[1] / err[2]);
  EXPECT_GE(o1, 1.7);
  EXPECT_LE(o1, 2.3);
  EXPECT_GE(o2, 1.7);
  EXPECT_LE(o2, 2.3);
  EXPECT_LT(err[2], 1e-3);
}

TEST(Signal, CompactSupportAndShapes) {
  BoundarySignal<2> f;
  f.t_on = -1.0;
  f.t_off = 0.0;
  for (auto shape : {PulseShape::Ricker, PulseShape::RaisedCosine}) {
    f.shape = shape;
    EXPECT_EQ(f.pulse(-1.0), 0.0);
    EXPECT_EQ(f.pulse(0.0), 0.0);
    EXPECT_EQ(f.pulse(-1.5), 0.0);
    EXPECT_EQ(f.pulse(0.5), 0.0);
    EXPECT_NEAR(f.pulse(-0.5), 1.0, 1e-15);
  }
  EXPECT_EQ(f.face_weight(Face{0, -1}, {-1.0, -1.0}, 1.0), 0.0);
  EXPECT_NEAR(f.face_weight(Face{0, -1}, {-1.0, 0.0}, 1.0), 1.0, 1e-15);
  EXPECT_EQ(f.value(-0.5, Face{1, 1}, {0.0, 1.0}, 1.0), 0.0);  // undriven face
  EXPECT_EQ(Face::parse("y+"), (Face{1, 1}));
  EXPECT_EQ(kind_of([] { Face::parse("z-"); }), ErrorKind::ConfigError);
}

TEST(BoundaryTrace, Examples) {
  const auto grid = grid2(33, -1.0, 0.3);
  SpacetimeField<2> zero(grid);
  const auto tz = boundary_trace(zero, 2.0);
  for (double v : tz.force) EXPECT_EQ(v, 0.0);

  SpacetimeField<2> ramp(grid);
  for (std::int64_t k = 0; k < grid.levels; ++k) {
    for (std::size_t p = 0; p < grid.point_count(); ++p) ramp.at(k, p) = grid.coord(p)[0] + 1.0;
  }
  const auto tr = boundary_trace(ramp, 1.0);
  for (std::size_t i = 0; i < tr.node_count(); ++i) {
    if (tr.nodes[i].face == Face{0, -1}) {
      EXPECT_NEAR(tr.normal_derivative[i], -1.0, 1e-13);
      EXPECT_EQ(tr.force[i], tr.normal_derivative[i]);
    }
    if (tr.nodes[i].face == Face{0, 1}) EXPECT_NEAR(tr.normal_derivative[i], 1.0, 1e-13);
  }

  BoundarySignal<2> f;
  f.t_on = -0.9;
  f.t_off = -0.3;
  const auto u = solve_physical(grid, 1.0, f);
  const auto tu = boundary_trace(u, 1.0);
  const std::size_t n = tu.node_count();
  for (std::int64_t k = 0; k < grid.levels; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = tu.nodes[i];
      EXPECT_EQ(tu.value[static_cast<std::size_t>(k) * n + i], f.value(grid.time(k), node.face, node.x, 1.0));
    }
  }

  auto masked = zero;
  masked.set_state(3, tu.nodes[5].flat + 2 * static_cast<std::size_t>(tu.nodes[5].inward), CellState::Void);
  EXPECT_EQ(kind_of([&] { boundary_trace(masked, 1.0); }), ErrorKind::VoidNearBoundary);
}

TEST(SuggestDt, Examples) {
  Grid<2> g;
  g.points = 129;
  EXPECT_EQ(effective_speed(1.3, 1.0), 1.3);
  EXPECT_DOUBLE_EQ(suggest_dt(g, 1.0, 1.0), 0.9 * g.h() / std::sqrt(2.0));
  // max|grad c| = 0.5, a = 1: margin 0.75, slope a / (1 - a|grad c|) = 2
  EXPECT_DOUBLE_EQ(effective_speed(1.0, 0.75), 2.0);
  EXPECT_LT(suggest_dt(g, 1.0, 1e-12), 1e-6 * suggest_dt(g, 1.0, 1.0));
  EXPECT_EQ(kind_of([&] { suggest_dt(g, 1.0, 0.0); }), ErrorKind::NotHyperbolic);
  for (double m : {0.01, 0.3, 0.9}) EXPECT_GE(effective_speed(0.7, m), 0.7);
}

TEST(Energy, ConservedAfterSignalSwitchesOff) {
  BoundarySignal<2> f;
  f.t_on = -0.95;
  f.t_off = -0.6;
  const auto grid = grid2(65, -1.0, 0.4);
  const auto u = solve_physical(grid, 1.0, f);
  const auto off = grid.first_level_at_or_after(f.t_off) + 1;
  double prev = discrete_energy(u, 1.0, off);
  EXPECT_GT(prev, 0.0);
  for (std::int64_t k = off + 1; k + 1 < grid.levels; ++k) {
    const double e = discrete_energy(u, 1.0, k);
    EXPECT_LE(e, prev * (1.0 + 1e-9));
    EXPECT_NEAR(e, prev, 1e-9 * prev);
    prev = e;
  }
}

TEST(Leapfrog, TimeReversible) {
  const auto grid = grid2(65, -1.0, 0.4);
  std::vector<double> value(grid.point_count(), 0.0);
  std::vector<double> rate(grid.point_count(), 0.0);
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    const auto x = grid.coord(p);
    const double r2 = (x[0] - 0.1) * (x[0] - 0.1) + x[1] * x[1];
    value[p] = std::exp(-20.0 * r2) * (grid.on_boundary(p) ? 0.0 : 1.0);
    rate[p] = 0.3 * value[p] * x[0];
  }
  BoundarySignal<2> quiet;
  quiet.amplitude = 0.0;
  const auto fwd = restart_physical(grid, 1.0, quiet, value, rate);
  const std::int64_t k = 60;
  std::vector<double> prev(fwd.level(k).begin(), fwd.level(k).end());
  std::vector<double> curr(fwd.level(k - 1).begin(), fwd.level(k - 1).end());
  std::vector<double> next(grid.point_count(), 0.0);
  for (std::int64_t s = k - 1; s >= 1; --s) {
    leapfrog_step(grid, 1.0, prev, curr, next);
    std::swap(prev, curr);
    std::swap(curr, next);
  }
  double err = 0.0;
  double scale = 0.0;
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    err = std::max(err, std::abs(curr[p] - fwd.at(0, p)));
    scale = std::max(scale, std::abs(fwd.at(0, p)));
  }
  EXPECT_LE(err, 1e-8 * scale);
}

TEST(SpacetimeField, MaskAndSentinel) {
  const auto grid = grid2(17, -1.0, 0.3);
  SpacetimeField<2> f(grid);
  EXPECT_FALSE(f.has_mask());
  EXPECT_EQ(f.state(2, 5), CellState::Defined);
  f.set_state(2, 5, CellState::Void);
  EXPECT_TRUE(std::isnan(f.at(2, 5)));
  EXPECT_EQ(f.void_count(), 1u);
  EXPECT_EQ(f.levels(), grid.levels);
}

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcloak/errors.hpp"
#include "tcloak/field.hpp"
#include "tcloak/profile.hpp"
#include "tcloak/signal.hpp"
#include "tcloak/symbol.hpp"
#include "tcloak/wavesolver.hpp"

namespace tcloak {

enum class Provenance { Mapped, DirectSolve };

/// Field in the shifted coordinates (y0, y). Cells of the cloaked region are
/// Void; everything else is defined.
template <std::size_t Dim>
struct CloakedField {
  SpacetimeField<Dim> field;
  CloakProfile<Dim> profile;
  Provenance provenance = Provenance::Mapped;
};

namespace detail {

/// Cubic Lagrange weights for nodes 0, 1, 2, 3 evaluated at s.
inline std::array<double, 4> lagrange4(double s) {
  const double a = s;
  const double b = s - 1.0;
  const double c = s - 2.0;
  const double d = s - 3.0;
  return {-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0};
}

inline std::array<double, 4> lagrange4_derivative(double s) {
  const double a = s;
  const double b = s - 1.0;
  const double c = s - 2.0;
  const double d = s - 3.0;
  return {-(c * d + b * d + b * c) / 6.0, (c * d + a * d + a * c) / 2.0,
          -(b * d + a * d + a * b) / 2.0, (b * c + a * c + a * b) / 6.0};
}

/// Cubic interpolation in time at fractional level `pos`, using four
/// consecutive levels inside [lo, hi]. The stencil is shifted rather than
/// allowed to cross either end, so values on x0 >= 0 never mix in the past.
template <typename LevelFn>
double sample_levels(LevelFn&& level_value, double pos, std::int64_t lo, std::int64_t hi) {
  if (!(pos >= static_cast<double>(lo) - 1e-9 && pos <= static_cast<double>(hi) + 1e-9)) {
    throw Error(ErrorKind::CoverageExceeded, "time sample at level position " +
                                                 std::to_string(pos) + " lies outside [" +
                                                 std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  require(hi - lo >= 3, ErrorKind::CoverageExceeded, "fewer than four levels available for interpolation");
  auto m0 = static_cast<std::int64_t>(std::floor(pos)) - 1;
  m0 = std::clamp(m0, lo, hi - 3);
  const auto w = lagrange4(pos - static_cast<double>(m0));
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) acc += w[static_cast<std::size_t>(i)] * level_value(m0 + i);
  return acc;
}

template <std::size_t Dim>
std::vector<double> c_on_grid(const Grid<Dim>& grid, const CloakProfile<Dim>& profile) {
  std::vector<double> c(grid.point_count());
  for (std::size_t p = 0; p < c.size(); ++p) c[p] = c_value(profile, grid.coord(p));
  return c;
}

template <std::size_t Dim>
std::int64_t require_zero_level(const Grid<Dim>& grid) {
  const auto zero = grid.zero_level();
  require(zero >= 0, ErrorKind::CoverageExceeded, "time window does not contain x0 = 0");
  return zero;
}

}  // namespace detail

/// Builds v(y0, y) = u(psi(y0, y), y): identity for y0 < 0, the shifted
/// solution u(y0 - c(y), y) on y0 >= c(y), and Void in between.
template <std::size_t Dim>
CloakedField<Dim> map_solution(const SpacetimeField<Dim>& u, const CloakProfile<Dim>& profile) {
  profile.validate();
  const auto& grid = u.grid();
  const auto zero = detail::require_zero_level(grid);
  const auto last = grid.levels - 1;
  const auto c = detail::c_on_grid(grid, profile);
  CloakedField<Dim> v{SpacetimeField<Dim>(grid), profile, Provenance::Mapped};
  for (std::int64_t k = 0; k < grid.levels; ++k) {
    const double y0 = grid.time(k);
    auto out = v.field.level(k);
    const auto in = u.level(k);
    for (std::size_t p = 0; p < c.size(); ++p) {
      if (y0 < 0.0 || c[p] == 0.0) {
        out[p] = in[p];
      } else if (y0 < c[p]) {
        v.field.set_state(k, p, CellState::Void);
      } else {
        const double pos = static_cast<double>(k) - c[p] / grid.dt;
        out[p] = detail::sample_levels([&](std::int64_t m) { return u.at(m, p); }, pos, zero, last);
      }
    }
  }
  return v;
}

struct GlueReport {
  double value_jump = 0.0;
  double deriv_jump = 0.0;
  std::size_t worst_point = 0;
};

/// Compares, at every lattice point, the one-sided limits of v and dv/dy0 at
/// the bottom of the void (y0 -> 0 from below) and at its top (y0 -> c(y)
/// from above), each obtained by cubic extrapolation of four levels. Points
/// with c(y) = 0 have no seam and are skipped.
template <std::size_t Dim>
GlueReport glue_check(const CloakedField<Dim>& v) {
  const auto& field = v.field;
  const auto& grid = field.grid();
  const auto zero = detail::require_zero_level(grid);
  require(zero >= 4, ErrorKind::CoverageExceeded, "need four levels below y0 = 0");
  const auto c = detail::c_on_grid(grid, v.profile);
  const auto below_w = detail::lagrange4(4.0);
  const auto below_d = detail::lagrange4_derivative(4.0);
  GlueReport report;
  for (std::size_t p = 0; p < c.size(); ++p) {
    if (c[p] == 0.0) continue;  // no seam: v is u itself here
    double left = 0.0;
    double left_d = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double x = field.at(zero - 4 + i, p);
      left += below_w[static_cast<std::size_t>(i)] * x;
      left_d += below_d[static_cast<std::size_t>(i)] * x;
    }
    left_d /= grid.dt;
    auto m = zero;
    while (m < grid.levels && field.state(m, p) == CellState::Void) ++m;
    require(m + 3 < grid.levels, ErrorKind::CoverageExceeded,
            "need four levels above the cloaked region");
    const double s = (c[p] - grid.time(m)) / grid.dt;
    const auto w = detail::lagrange4(s);
    const auto wd = detail::lagrange4_derivative(s);
    double right = 0.0;
    double right_d = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double x = field.at(m + i, p);
      right += w[static_cast<std::size_t>(i)] * x;
      right_d += wd[static_cast<std::size_t>(i)] * x;
    }
    right_d /= grid.dt;
    const double jv = std::abs(right - left);
    const double jd = std::abs(right_d - left_d);
    if (jv > report.value_jump) report.worst_point = p;
    report.value_jump = std::max(report.value_jump, jv);
    report.deriv_jump = std::max(report.deriv_jump, jd);
  }
  return report;
}

/// Residual of the transformed equation
///   (1 - a^2|grad c|^2) v_00 - 2 a^2 grad c . grad v_0 - a^2 (lap c) v_0 - a^2 lap v
/// together with the magnitude scale of its stencil terms.
struct Residual {
  double value = 0.0;
  double scale = 0.0;
};

namespace detail {

template <std::size_t Dim>
Residual residual_at(const Grid<Dim>& grid, double a, const Vec<Dim>& grad, double lap_c,
                     std::span<const double> prev, std::span<const double> curr,
                     std::span<const double> next, std::size_t p) {
  const double dt = grid.dt;
  const double h = grid.h();
  const double a2 = a * a;
  const double A = 1.0 - a2 * dot<Dim>(grad, grad);
  const double C = a2 * lap_c;
  double vmax = std::max({std::abs(prev[p]), std::abs(curr[p]), std::abs(next[p])});
  double mixed = 0.0;
  double mixed_weight = 0.0;
  for (std::size_t d = 0; d < Dim; ++d) {
    const std::size_t s = grid.stride(d);
    const double dvt = (next[p + s] - next[p - s] - prev[p + s] + prev[p - s]) / (4.0 * h * dt);
    mixed += a2 * grad[d] * dvt;
    mixed_weight += std::abs(a2 * grad[d]);
    vmax = std::max({vmax, std::abs(next[p + s]), std::abs(next[p - s]), std::abs(prev[p + s]),
                     std::abs(prev[p - s]), std::abs(curr[p + s]), std::abs(curr[p - s])});
  }
  const double v00 = (next[p] - 2.0 * curr[p] + prev[p]) / (dt * dt);
  const double v0 = (next[p] - prev[p]) / (2.0 * dt);
  const double lap = laplacian_sum(grid, curr, p) / (h * h);
  Residual r;
  r.value = A * v00 - 2.0 * mixed - C * v0 - a2 * lap;
  r.scale = vmax * (4.0 * std::abs(A) / (dt * dt) + 2.0 * mixed_weight / (h * dt) +
                    std::abs(C) / dt + 4.0 * static_cast<double>(Dim) * a2 / (h * h));
  return r;
}

}  // namespace detail

/// Residual at (level, point); the full 3-level, 3^n-point stencil box has to
/// stay inside Y+ and away from the boundary.
template <std::size_t Dim>
Residual residual_transformed(const CloakedField<Dim>& v, double a, std::int64_t level,
                              std::size_t point) {
  const auto& field = v.field;
  const auto& grid = field.grid();
  if (!grid.box_interior(point)) {
    throw Error(ErrorKind::StencilTouchesBoundary, "stencil at point " + std::to_string(point) +
                                                       " reaches the boundary");
  }
  if (level < 1 || level + 1 >= grid.levels) {
    throw Error(ErrorKind::StencilTouchesBoundary, "stencil leaves the time window");
  }
  const auto idx = grid.unflatten(point);
  std::size_t box = 1;
  for (std::size_t d = 0; d < Dim; ++d) box *= 3;
  for (std::int64_t k = level - 1; k <= level + 1; ++k) {
    for (std::size_t b = 0; b < box; ++b) {
      std::array<int, Dim> q = idx;
      std::size_t rest = b;
      for (std::size_t d = 0; d < Dim; ++d) {
        q[d] += static_cast<int>(rest % 3) - 1;
        rest /= 3;
      }
      const auto flat = grid.flatten(q);
      if (field.state(k, flat) == CellState::Void ||
          classify(v.profile, grid.time(k), grid.coord(flat)) != RegionLabel::YPlus) {
        throw Error(ErrorKind::StencilTouchesVoid,
                    "stencil at level " + std::to_string(level) + " leaves Y+");
      }
    }
  }
  const auto x = grid.coord(point);
  return detail::residual_at(grid, a, c_grad(v.profile, x), c_laplacian(v.profile, x),
                             field.level(level - 1), field.level(level), field.level(level + 1),
                             point);
}

struct ResidualSweep {
  double max_abs = 0.0;
  double max_scale = 0.0;
  std::int64_t argmax_level = -1;
  std::size_t argmax_point = 0;
  std::size_t evaluated = 0;
};

/// Max |residual| over every admissible stencil position of the field.
template <std::size_t Dim>
ResidualSweep residual_sweep(const CloakedField<Dim>& v, double a) {
  const auto& field = v.field;
  const auto& grid = field.grid();
  const std::size_t n = grid.point_count();
  const auto c = detail::c_on_grid(grid, v.profile);
  std::vector<Vec<Dim>> grad(n);
  std::vector<double> lap(n);
  std::vector<double> box_c(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto x = grid.coord(p);
    grad[p] = c_grad(v.profile, x);
    lap[p] = c_laplacian(v.profile, x);
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (!grid.box_interior(p)) continue;
    const auto idx = grid.unflatten(p);
    std::size_t box = 1;
    for (std::size_t d = 0; d < Dim; ++d) box *= 3;
    double m = 0.0;
    for (std::size_t b = 0; b < box; ++b) {
      auto q = idx;
      std::size_t rest = b;
      for (std::size_t d = 0; d < Dim; ++d) {
        q[d] += static_cast<int>(rest % 3) - 1;
        rest /= 3;
      }
      m = std::max(m, c[grid.flatten(q)]);
    }
    box_c[p] = m;
  }
  ResidualSweep sweep;
  for (std::int64_t k = 1; k + 1 < grid.levels; ++k) {
    const double lowest = grid.time(k - 1);
    if (lowest < 0.0) continue;
    const auto prev = field.level(k - 1);
    const auto curr = field.level(k);
    const auto next = field.level(k + 1);
    for (std::size_t p = 0; p < n; ++p) {
      if (!grid.box_interior(p) || lowest < box_c[p]) continue;
      const auto r = detail::residual_at(grid, a, grad[p], lap[p], prev, curr, next, p);
      ++sweep.evaluated;
      sweep.max_scale = std::max(sweep.max_scale, r.scale);
      if (std::abs(r.value) > sweep.max_abs) {
        sweep.max_abs = std::abs(r.value);
        sweep.argmax_level = k;
        sweep.argmax_point = p;
      }
    }
  }
  return sweep;
}

/// Value and y0-rate of v on the flat slice y0 = time of `level`, read off
/// the physical solution at x0 = y0 - c(y).
struct SliceData {
  std::int64_t level = 0;
  double y0 = 0.0;
  std::vector<double> value;
  std::vector<double> rate;
};

template <std::size_t Dim>
SliceData slice_initial_data(const SpacetimeField<Dim>& u, const CloakProfile<Dim>& profile,
                             std::int64_t level) {
  const auto& grid = u.grid();
  const auto zero = detail::require_zero_level(grid);
  const auto last = grid.levels - 1;
  require(level >= zero && level < grid.levels, ErrorKind::CoverageExceeded,
          "slice level outside the physical window");
  const double y0 = grid.time(level);
  const auto c = detail::c_on_grid(grid, profile);
  for (double cv : c) {
    require(y0 >= cv, ErrorKind::CoverageExceeded, "slice is not contained in Y+");
  }
  const double inv2dt = 1.0 / (2.0 * grid.dt);
  auto rate_at = [&](std::int64_t m, std::size_t p) {
    return (u.at(m + 1, p) - u.at(m - 1, p)) * inv2dt;
  };
  const auto rate_lo = std::max<std::int64_t>(zero, 1);
  const auto rate_hi = last - 1;
  SliceData out;
  out.level = level;
  out.y0 = y0;
  out.value.resize(c.size());
  out.rate.resize(c.size());
  for (std::size_t p = 0; p < c.size(); ++p) {
    if (c[p] == 0.0) {
      out.value[p] = u.at(level, p);
      require(level >= rate_lo && level <= rate_hi, ErrorKind::CoverageExceeded,
              "centered time difference needs a level on each side of the slice");
      out.rate[p] = rate_at(level, p);
      continue;
    }
    const double pos = static_cast<double>(level) - c[p] / grid.dt;
    out.value[p] = detail::sample_levels([&](std::int64_t m) { return u.at(m, p); }, pos, zero, last);
    out.rate[p] = detail::sample_levels([&](std::int64_t m) { return rate_at(m, p); }, pos,
                                        rate_lo, rate_hi);
  }
  return out;
}

/// Explicit-in-time integrator for the transformed equation on a slab where
/// every lattice point is in Y+. Time derivatives are centered; the v^{n+1}
/// coupling introduced by the mixed term is resolved by Gauss-Seidel
/// sweeps, a contraction under the characteristic CFL bound.
template <std::size_t Dim>
class TransformedStepper {
 public:
  TransformedStepper(const Grid<Dim>& grid, double a, const CloakProfile<Dim>& profile,
                     const BoundarySignal<Dim>& f)
      : grid_(grid), a_(a), signal_(f), nodes_(boundary_nodes(grid)) {
    const std::size_t n = grid.point_count();
    A_.resize(n);
    C_.resize(n);
    B_.resize(n);
    double speed = a;
    for (std::size_t p = 0; p < n; ++p) {
      const auto x = grid.coord(p);
      const auto g = c_grad(profile, x);
      const double margin = hyperbolicity_value<Dim>(a, g);
      if (!(margin > 0.0)) {
        throw Error(ErrorKind::NotHyperbolic, "1 - a^2|grad c|^2 = " + std::to_string(margin) +
                                                  " at lattice point " + std::to_string(p));
      }
      speed = std::max(speed, max_characteristic_slope<Dim>(a, g));
      A_[p] = margin;
      C_[p] = a * a * c_laplacian(profile, x);
      for (std::size_t d = 0; d < Dim; ++d) B_[p][d] = a * a * g[d];
      if (!grid.on_boundary(p)) {
        bool coupled = false;
        for (std::size_t d = 0; d < Dim; ++d) coupled = coupled || B_[p][d] != 0.0;
        (coupled ? coupled_ : uncoupled_).push_back(p);
      }
    }
    check_cfl(grid, speed);
  }

  /// First level from value and rate, with v_00 taken from the equation.
  void taylor_step(std::span<const double> value, std::span<const double> rate, double t_next,
                   std::span<double> out) const {
    const double dt = grid_.dt;
    const double h = grid_.h();
    const double a2 = a_ * a_;
    for_each_interior(grid_, [&](std::size_t p) {
      double mixed = 0.0;
      for (std::size_t d = 0; d < Dim; ++d) {
        const std::size_t s = grid_.stride(d);
        mixed += B_[p][d] * (rate[p + s] - rate[p - s]) / (2.0 * h);
      }
      const double lap = laplacian_sum(grid_, value, p) / (h * h);
      const double vtt = (2.0 * mixed + C_[p] * rate[p] + a2 * lap) / A_[p];
      out[p] = value[p] + dt * rate[p] + 0.5 * dt * dt * vtt;
    });
    apply_boundary(nodes_, signal_, grid_.L, t_next, out);
  }

  /// One centered step; returns the number of Gauss-Seidel sweeps used.
  int step(std::span<const double> prev, std::span<const double> curr, double t_next,
           std::span<double> next) const {
    const double dt = grid_.dt;
    const double h = grid_.h();
    const double half_dt = 0.5 * dt;
    const double lap_factor = a_ * a_ * dt * dt / (h * h);
    const double couple = dt / (2.0 * h);
    apply_boundary(nodes_, signal_, grid_.L, t_next, next);
    auto known = [&](std::size_t p) {
      double r = 2.0 * A_[p] * curr[p] - A_[p] * prev[p] - C_[p] * half_dt * prev[p] +
                 lap_factor * laplacian_sum(grid_, curr, p);
      for (std::size_t d = 0; d < Dim; ++d) {
        const std::size_t s = grid_.stride(d);
        r -= couple * B_[p][d] * (prev[p + s] - prev[p - s]);
      }
      return r;
    };
    auto diag = [&](std::size_t p) { return A_[p] - C_[p] * half_dt; };
    for (std::size_t p : uncoupled_) next[p] = known(p) / diag(p);
    if (coupled_.empty()) return 0;
    rhs_.resize(grid_.point_count());
    double wmax = 0.0;
    for (std::size_t p : coupled_) {
      rhs_[p] = known(p);
      next[p] = 2.0 * curr[p] - prev[p];
      wmax = std::max(wmax, std::abs(next[p]));
    }
    constexpr int kMaxSweeps = 200;
    double last_change = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
      double change = 0.0;
      for (std::size_t p : coupled_) {
        double r = rhs_[p];
        for (std::size_t d = 0; d < Dim; ++d) {
          const std::size_t s = grid_.stride(d);
          r += couple * B_[p][d] * (next[p + s] - next[p - s]);
        }
        const double w = r / diag(p);
        change = std::max(change, std::abs(w - next[p]));
        wmax = std::max(wmax, std::abs(w));
        next[p] = w;
      }
      if (change <= 4.0 * std::numeric_limits<double>::epsilon() * wmax) return sweep;
      // rounding noise: the sweep stopped contracting at machine level
      if (change >= last_change && change <= 1e-13 * std::max(wmax, 1.0)) return sweep;
      last_change = change;
    }
    throw Error(ErrorKind::CflViolation,
                "implicit coupling of the mixed term did not converge; reduce dt");
  }

  const Grid<Dim>& grid() const { return grid_; }

 private:
  Grid<Dim> grid_;
  double a_;
  BoundarySignal<Dim> signal_;
  std::vector<BoundaryNode<Dim>> nodes_;
  std::vector<double> A_;
  std::vector<double> C_;
  std::vector<Vec<Dim>> B_;
  std::vector<std::size_t> coupled_;
  std::vector<std::size_t> uncoupled_;
  mutable std::vector<double> rhs_;
};

/// Direct integration of the transformed equation on the flat slab
/// [y0 of the slice, y0_max], independent of the coordinate map.
template <std::size_t Dim>
CloakedField<Dim> solve_transformed_above(const SliceData& initial, const BoundarySignal<Dim>& f,
                                          double a, const CloakProfile<Dim>& profile,
                                          const Grid<Dim>& parent, double y0_max) {
  const auto end = parent.first_level_at_or_after(y0_max);
  const auto count = std::max<std::int64_t>(end - initial.level + 1, 4);
  const auto grid = parent.sub_window(initial.level, count);
  require(initial.value.size() == grid.point_count(), ErrorKind::PreconditionViolated,
          "slice data does not match the grid");
  const double c0 = profile.c0;
  require(grid.t_first() >= c0, ErrorKind::CoverageExceeded, "slab must start at or above y0 = c0");
  TransformedStepper<Dim> stepper(grid, a, profile, f);
  CloakedField<Dim> out{SpacetimeField<Dim>(grid), profile, Provenance::DirectSolve};
  auto& field = out.field;
  std::copy(initial.value.begin(), initial.value.end(), field.level(0).begin());
  stepper.taylor_step(initial.value, initial.rate, grid.time(1), field.level(1));
  for (std::int64_t k = 1; k + 1 < grid.levels; ++k) {
    stepper.step(std::as_const(field).level(k - 1), std::as_const(field).level(k), grid.time(k + 1),
                 field.level(k + 1));
  }
  return out;
}

/// max |direct - mapped| over the levels the two fields share.
template <std::size_t Dim>
double cross_agreement(const CloakedField<Dim>& direct, const CloakedField<Dim>& mapped) {
  const auto& dg = direct.field.grid();
  const auto& mg = mapped.field.grid();
  require(dg.points == mg.points && dg.dt == mg.dt && dg.L == mg.L, ErrorKind::PreconditionViolated,
          "fields live on different lattices");
  double worst = 0.0;
  for (std::int64_t k = 0; k < dg.levels; ++k) {
    const std::int64_t m = dg.first_step + k - mg.first_step;
    if (m < 0 || m >= mg.levels) continue;
    const auto a = direct.field.level(k);
    const auto b = mapped.field.level(m);
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (mapped.field.state(m, p) == CellState::Void) continue;
      worst = std::max(worst, std::abs(a[p] - b[p]));
    }
  }
  return worst;
}

}  // namespace tcloak

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tcloak/errors.hpp"
#include "tcloak/field.hpp"
#include "tcloak/signal.hpp"
#include "tcloak/vec.hpp"

namespace tcloak {

/// Boundary node of the lattice that carries a trace sample: a face node that
/// is not a corner, with the offset pointing one cell into the domain.
template <std::size_t Dim>
struct TraceNode {
  std::size_t flat = 0;
  Face face{};
  std::ptrdiff_t inward = 0;
  Vec<Dim> x{};
};

/// Face nodes ordered x-, x+, y-, y+ (corners excluded).
template <std::size_t Dim>
std::vector<TraceNode<Dim>> trace_nodes(const Grid<Dim>& grid) {
  std::vector<TraceNode<Dim>> nodes;
  const int n = grid.points;
  for (std::size_t axis = 0; axis < Dim; ++axis) {
    const auto stride = static_cast<std::ptrdiff_t>(grid.stride(axis));
    for (int side : {-1, 1}) {
      const int lo = Dim == 1 ? 0 : 1;
      const int hi = Dim == 1 ? 1 : n - 1;
      for (int t = lo; t < hi; ++t) {
        std::array<int, Dim> idx{};
        idx[axis] = side < 0 ? 0 : n - 1;
        if constexpr (Dim == 2) idx[1 - axis] = t;
        TraceNode<Dim> node;
        node.flat = grid.flatten(idx);
        node.face = Face{static_cast<int>(axis), side};
        node.inward = side < 0 ? stride : -stride;
        node.x = grid.coord(node.flat);
        nodes.push_back(node);
      }
    }
  }
  return nodes;
}

/// All lattice nodes on the box boundary, with the faces they belong to.
template <std::size_t Dim>
struct BoundaryNode {
  std::size_t flat = 0;
  Vec<Dim> x{};
  std::vector<Face> faces;
};

template <std::size_t Dim>
std::vector<BoundaryNode<Dim>> boundary_nodes(const Grid<Dim>& grid) {
  std::vector<BoundaryNode<Dim>> out;
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    if (!grid.on_boundary(p)) continue;
    BoundaryNode<Dim> node;
    node.flat = p;
    node.x = grid.coord(p);
    const auto idx = grid.unflatten(p);
    for (std::size_t d = 0; d < Dim; ++d) {
      if (idx[d] == 0) node.faces.push_back(Face{static_cast<int>(d), -1});
      if (idx[d] == grid.points - 1) node.faces.push_back(Face{static_cast<int>(d), 1});
    }
    out.push_back(std::move(node));
  }
  return out;
}

/// Writes f(t, .) into the boundary nodes of one level.
template <std::size_t Dim>
void apply_boundary(const std::vector<BoundaryNode<Dim>>& nodes, const BoundarySignal<Dim>& f,
                    double L, double t, std::span<double> level) {
  for (const auto& node : nodes) {
    double v = 0.0;
    for (const auto& face : node.faces) v += f.value(t, face, node.x, L);
    level[node.flat] = v;
  }
}

/// Calls fn(flat) for every interior node.
template <std::size_t Dim, typename Fn>
void for_each_interior(const Grid<Dim>& grid, Fn&& fn) {
  const int n = grid.points;
  if constexpr (Dim == 1) {
    for (int i = 1; i < n - 1; ++i) fn(static_cast<std::size_t>(i));
  } else {
    for (int j = 1; j < n - 1; ++j) {
      const auto row = static_cast<std::size_t>(j) * static_cast<std::size_t>(n);
      for (int i = 1; i < n - 1; ++i) fn(row + static_cast<std::size_t>(i));
    }
  }
}

/// Undivided 2n+1 point Laplacian, sum over axes of u[p+s] - 2u[p] + u[p-s].
template <std::size_t Dim>
inline double laplacian_sum(const Grid<Dim>& grid, std::span<const double> u, std::size_t p) {
  double s = 0.0;
  for (std::size_t d = 0; d < Dim; ++d) {
    const std::size_t st = grid.stride(d);
    s += u[p + st] - 2.0 * u[p] + u[p - st];
  }
  return s;
}

/// Interior leapfrog update next = 2 curr - prev + (a dt / h)^2 lap(curr).
/// Boundary nodes of `next` are left untouched.
template <std::size_t Dim>
void leapfrog_step(const Grid<Dim>& grid, double a, std::span<const double> prev,
                   std::span<const double> curr, std::span<double> next) {
  const double lambda = a * grid.dt / grid.h();
  const double lambda2 = lambda * lambda;
  for_each_interior(grid, [&](std::size_t p) {
    next[p] = 2.0 * curr[p] - prev[p] + lambda2 * laplacian_sum(grid, curr, p);
  });
}

template <std::size_t Dim>
void check_cfl(const Grid<Dim>& grid, double speed) {
  const double nu = grid.cfl_number(speed);
  if (!(nu <= grid.cfl_limit * (1.0 + 1e-12))) {
    throw Error(ErrorKind::CflViolation, "CFL number " + std::to_string(nu) + " exceeds limit " +
                                             std::to_string(grid.cfl_limit));
  }
}

/// Leapfrog solution of u_tt = a^2 lap u with Dirichlet data f and zero past.
template <std::size_t Dim>
SpacetimeField<Dim> solve_physical(const Grid<Dim>& grid, double a, const BoundarySignal<Dim>& f) {
  grid.validate();
  f.validate();
  check_cfl(grid, a);
  if (!(f.t_on > grid.time(1))) {
    throw Error(ErrorKind::SignalOutsideWindow,
                "signal switches on at t = " + std::to_string(f.t_on) +
                    " but the first two levels end at t = " + std::to_string(grid.time(1)));
  }
  SpacetimeField<Dim> u(grid);
  const auto nodes = boundary_nodes(grid);
  for (std::int64_t k = 1; k + 1 < grid.levels; ++k) {
    auto next = u.level(k + 1);
    leapfrog_step(grid, a, std::as_const(u).level(k - 1), std::as_const(u).level(k), next);
    apply_boundary(nodes, f, grid.L, grid.time(k + 1), next);
  }
  return u;
}

/// Leapfrog restarted from value and rate data at level 0 of `grid`; the
/// second level comes from a Taylor step with u_tt = a^2 lap u.
template <std::size_t Dim>
SpacetimeField<Dim> restart_physical(const Grid<Dim>& grid, double a, const BoundarySignal<Dim>& f,
                                     std::span<const double> value, std::span<const double> rate) {
  grid.validate();
  check_cfl(grid, a);
  require(value.size() == grid.point_count() && rate.size() == grid.point_count(),
          ErrorKind::PreconditionViolated, "restart data does not match the grid");
  SpacetimeField<Dim> u(grid);
  const auto nodes = boundary_nodes(grid);
  const double dt = grid.dt;
  const double lambda = a * dt / grid.h();
  const double lambda2 = lambda * lambda;
  std::copy(value.begin(), value.end(), u.level(0).begin());
  apply_boundary(nodes, f, grid.L, grid.time(0), u.level(0));
  auto first = u.level(1);
  for_each_interior(grid, [&](std::size_t p) {
    first[p] = value[p] + dt * rate[p] + 0.5 * lambda2 * laplacian_sum(grid, value, p);
  });
  apply_boundary(nodes, f, grid.L, grid.time(1), first);
  for (std::int64_t k = 1; k + 1 < grid.levels; ++k) {
    auto next = u.level(k + 1);
    leapfrog_step(grid, a, std::as_const(u).level(k - 1), std::as_const(u).level(k), next);
    apply_boundary(nodes, f, grid.L, grid.time(k + 1), next);
  }
  return u;
}

/// Right-travelling wave f(t - (x + L)/a) launched from the left end of
/// [-L, L]; valid until the reflection off the right end returns to x.
inline double dalembert_oracle_1d(double a, const BoundarySignal<1>& f, double L, double x,
                                  double t) {
  require(a > 0.0, ErrorKind::PreconditionViolated, "oracle needs a > 0");
  for (const auto& face : f.faces) {
    require(face == Face{0, -1}, ErrorKind::PreconditionViolated,
            "oracle supports a signal on the left endpoint only");
  }
  const double travelled = x + L;
  if (t > f.t_on + (4.0 * L - travelled) / a) {
    throw Error(ErrorKind::OracleDomainExceeded,
                "reflection from the right endpoint reaches x = " + std::to_string(x) +
                    " before t = " + std::to_string(t));
  }
  return f.pulse(t - travelled / a);
}

/// Time series of Dirichlet values, outward normal derivatives and forces
/// T du/dn at the trace nodes, one row per level.
template <std::size_t Dim>
struct BoundaryTrace {
  std::vector<double> times;
  std::vector<TraceNode<Dim>> nodes;
  std::vector<double> value;  // levels x nodes
  std::vector<double> normal_derivative;
  std::vector<double> force;
  double tension = 1.0;

  std::size_t node_count() const { return nodes.size(); }

  friend bool operator==(const BoundaryTrace& a, const BoundaryTrace& b) {
    return a.times == b.times && a.value == b.value &&
           a.normal_derivative == b.normal_derivative && a.force == b.force;
  }
};

namespace detail {

template <std::size_t Dim>
void append_trace_row(BoundaryTrace<Dim>& trace, double h, double t, std::span<const double> u) {
  trace.times.push_back(t);
  for (const auto& node : trace.nodes) {
    const double u0 = u[node.flat];
    const double u1 = u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node.flat) + node.inward)];
    const double u2 =
        u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node.flat) + 2 * node.inward)];
    const double dn = (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * h);
    trace.value.push_back(u0);
    trace.normal_derivative.push_back(dn);
    trace.force.push_back(trace.tension * dn);
  }
}

}  // namespace detail

template <std::size_t Dim>
BoundaryTrace<Dim> make_trace(const Grid<Dim>& grid, double tension) {
  BoundaryTrace<Dim> trace;
  trace.nodes = trace_nodes(grid);
  trace.tension = tension;
  return trace;
}

/// Trace of a field; fails if a Void cell sits inside any trace stencil.
template <std::size_t Dim>
BoundaryTrace<Dim> boundary_trace(const SpacetimeField<Dim>& field, double tension) {
  const auto& grid = field.grid();
  auto trace = make_trace(grid, tension);
  trace.times.reserve(static_cast<std::size_t>(grid.levels));
  for (std::int64_t k = 0; k < grid.levels; ++k) {
    if (field.has_mask()) {
      for (const auto& node : trace.nodes) {
        for (int step = 0; step < 3; ++step) {
          const auto p = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node.flat) + step * node.inward);
          if (field.state(k, p) == CellState::Void) {
            throw Error(ErrorKind::VoidNearBoundary,
                        "void cell inside the trace stencil at level " + std::to_string(k));
          }
        }
      }
    }
    detail::append_trace_row(trace, grid.h(), grid.time(k), field.level(k));
  }
  return trace;
}

/// Largest characteristic speed when the margin 1 - a^2 max|grad c|^2 is
/// known: a / (1 - sqrt(1 - margin)).
inline double effective_speed(double a, double margin_min) {
  if (!(margin_min > 0.0)) {
    throw Error(ErrorKind::NotHyperbolic,
                "hyperbolicity margin " + std::to_string(margin_min) + " is not positive");
  }
  if (margin_min >= 1.0) return a;
  return a / (1.0 - std::sqrt(1.0 - margin_min));
}

/// Time step shared by the physical and the transformed solve.
template <std::size_t Dim>
double suggest_dt(const Grid<Dim>& grid, double a, double margin_min) {
  const double speed = effective_speed(a, margin_min);
  return grid.cfl_limit * grid.h() / (speed * std::sqrt(static_cast<double>(Dim)));
}

/// Conserved leapfrog energy between levels k and k+1 (zero Dirichlet data):
/// kinetic part from the time difference, potential part from the product of
/// edge differences at the two levels.
template <std::size_t Dim>
double discrete_energy(const SpacetimeField<Dim>& u, double a, std::int64_t k) {
  const auto& grid = u.grid();
  const double h = grid.h();
  const double dt = grid.dt;
  const auto cur = u.level(k);
  const auto nxt = u.level(k + 1);
  double kinetic = 0.0;
  for_each_interior(grid, [&](std::size_t p) {
    const double v = (nxt[p] - cur[p]) / dt;
    kinetic += v * v;
  });
  double potential = 0.0;
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    const auto idx = grid.unflatten(p);
    for (std::size_t d = 0; d < Dim; ++d) {
      if (idx[d] + 1 >= grid.points) continue;
      // skip edges running along the boundary; they carry no dynamics
      bool along_boundary = false;
      for (std::size_t e = 0; e < Dim; ++e) {
        if (e != d && (idx[e] == 0 || idx[e] == grid.points - 1)) along_boundary = true;
      }
      if (along_boundary) continue;
      const std::size_t q = p + grid.stride(d);
      potential += (nxt[q] - nxt[p]) * (cur[q] - cur[p]) / (h * h);
    }
  }
  double cell = 1.0;
  for (std::size_t d = 0; d < Dim; ++d) cell *= h;
  return 0.5 * cell * (kinetic + a * a * potential);
}

}  // namespace tcloak

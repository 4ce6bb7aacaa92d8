#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tcloak/config.hpp"
#include "tcloak/errors.hpp"
#include "tcloak/field.hpp"
#include "tcloak/metric.hpp"
#include "tcloak/profile.hpp"
#include "tcloak/signal.hpp"
#include "tcloak/symbol.hpp"
#include "tcloak/transformed.hpp"
#include "tcloak/wavesolver.hpp"

namespace tcloak {

inline constexpr int kReportSchemaVersion = 1;

/// Wall-clock seconds per stage. Kept apart from the report so that reports
/// stay bit-reproducible.
struct Timings {
  std::vector<std::pair<std::string, double>> stages;

  double total() const {
    double s = 0.0;
    for (const auto& st : stages) s += st.second;
    return s;
  }
};

namespace detail {

/// Runs `fn`, labels any library error with `stage` and records the time.
template <typename Fn>
auto staged(const std::string& stage, Timings* timings, Fn&& fn) -> decltype(fn()) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    if (!timings) return;
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
    timings->stages.emplace_back(stage, d.count());
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto out = fn();
      record();
      return out;
    }
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    std::string what = e.what();
    const auto colon = what.find(": ");
    if (colon != std::string::npos) what = what.substr(colon + 2);
    throw Error(e.kind(), what, stage);
  }
}

inline bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

}  // namespace detail

/// Bit-for-bit equality of two traces (distinguishes -0.0 from 0.0).
template <std::size_t Dim>
bool traces_bit_identical(const BoundaryTrace<Dim>& a, const BoundaryTrace<Dim>& b) {
  return detail::bit_equal(a.times, b.times) && detail::bit_equal(a.value, b.value) &&
         detail::bit_equal(a.normal_derivative, b.normal_derivative) &&
         detail::bit_equal(a.force, b.force);
}

/// Geometry and physics resolved from a configuration.
template <std::size_t Dim>
struct Setup {
  CloakProfile<Dim> profile;
  BoundarySignal<Dim> signal;
  double a = 1.0;
  double tension = 1.0;
  double c0_max = 0.0;
  FeasibilityReport<Dim> feasibility;
};

template <std::size_t Dim>
Setup<Dim> make_setup(const ExperimentConfig& cfg) {
  require(static_cast<std::size_t>(cfg.dim) == Dim, ErrorKind::ConfigError,
          "configuration dimension does not match");
  Setup<Dim> s;
  s.a = cfg.physics.speed();
  s.tension = cfg.physics.tension;
  s.c0_max = max_admissible_c0(s.a, cfg.profile.c1, cfg.profile.kind);
  s.profile.c1 = cfg.profile.c1;
  s.profile.kind = cfg.profile.kind;
  s.profile.c0 = cfg.profile.c0 ? *cfg.profile.c0 : cfg.profile.c0_fraction * s.c0_max;
  for (std::size_t d = 0; d < Dim; ++d) {
    s.profile.center[d] = cfg.profile.center.empty() ? 0.0 : cfg.profile.center[d];
    require(std::abs(s.profile.center[d]) + s.profile.c1 < cfg.grid.L, ErrorKind::ConfigError,
            "cloak ball must lie strictly inside the box");
  }
  s.profile.validate();
  s.signal.shape = cfg.signal.shape;
  s.signal.t_on = cfg.signal.t_on;
  s.signal.t_off = cfg.signal.t_off;
  s.signal.amplitude = cfg.signal.amplitude;
  s.signal.faces.clear();
  for (const auto& f : cfg.signal.faces) s.signal.faces.push_back(Face::parse(f));
  s.signal.validate();
  return s;
}

/// Samples the hyperbolicity margin and rejects the configuration unless it
/// stays above the floor. No solver runs before this passes.
template <std::size_t Dim>
FeasibilityReport<Dim> feasibility_gate(Setup<Dim>& setup, const ExperimentConfig& cfg) {
  const auto samples = SampleGrid<Dim>::covering(setup.profile, cfg.experiment.samples_per_radius);
  setup.feasibility = hyperbolicity_margin(setup.profile, setup.a, samples);
  const auto& f = setup.feasibility;
  if (!f.admissible || !(f.margin_min > cfg.experiment.margin_floor)) {
    std::string where;
    for (std::size_t d = 0; d < Dim; ++d) where += (d ? ", " : "") + std::to_string(f.argmin[d]);
    throw Error(ErrorKind::NotHyperbolic,
                "margin 1 - a^2|grad c|^2 = " + std::to_string(f.margin_min) + " at (" + where +
                    ") is not above the floor " + std::to_string(cfg.experiment.margin_floor),
                "feasibility");
  }
  return f;
}

/// Norms measured by one pipeline pass at a given resolution.
struct LevelNorms {
  int points = 0;
  double h = 0.0;
  double dt = 0.0;
  double glue_value = 0.0;
  double glue_deriv = 0.0;
  double residual_max = 0.0;
  double residual_scale = 0.0;
  double cross_max = 0.0;
  double u_max = 0.0;
  std::int64_t slab_first_level = 0;
  std::int64_t slab_levels = 0;

  /// Rounding-level thresholds below which a column carries no order.
  double floor_value() const { return 1e-12 * u_max; }
  double floor_deriv() const { return 1e-12 * u_max / dt; }
  double floor_residual() const { return 1e-12 * residual_scale; }
};

template <std::size_t Dim>
struct PipelineResult {
  Grid<Dim> grid;
  SpacetimeField<Dim> u;
  CloakedField<Dim> v;
  CloakedField<Dim> direct;
  LevelNorms norms;
};

/// Time step for a lattice with `points` per axis: the configured dt
/// (scaled with h) or the CFL-suggested one.
template <std::size_t Dim>
double pipeline_dt(const ExperimentConfig& cfg, const Setup<Dim>& setup, int points) {
  if (cfg.grid.dt) {
    return *cfg.grid.dt * static_cast<double>(cfg.grid.points - 1) / static_cast<double>(points - 1);
  }
  Grid<Dim> g;
  g.L = cfg.grid.L;
  g.points = points;
  g.cfl_limit = cfg.grid.cfl_limit;
  return suggest_dt(g, setup.a, setup.feasibility.margin_min);
}

/// Physical solve, map, glue, residual and the direct slab solve at one
/// resolution.
template <std::size_t Dim>
PipelineResult<Dim> run_pipeline(const ExperimentConfig& cfg, const Setup<Dim>& setup, int points,
                                 Timings* timings = nullptr) {
  using detail::staged;
  const double dt = pipeline_dt(cfg, setup, points);
  const auto grid = staged("grid", timings, [&] {
    return Grid<Dim>::make(cfg.grid.L, points, dt, cfg.grid.t_min, cfg.grid.t_max,
                           cfg.grid.cfl_limit);
  });
  PipelineResult<Dim> out{grid, {}, {}, {}, {}};
  out.u = staged("solve_physical", timings, [&] { return solve_physical(grid, setup.a, setup.signal); });
  out.v = staged("map_solution", timings, [&] { return map_solution(out.u, setup.profile); });
  const auto glue = staged("glue_check", timings, [&] { return glue_check(out.v); });
  const auto sweep = staged("residual", timings, [&] { return residual_sweep(out.v, setup.a); });

  const double c0 = setup.profile.c0;
  const auto s0 = grid.first_level_at_or_after(c0);
  double y0_max = cfg.experiment.y0_max ? *cfg.experiment.y0_max : c0 * (1.0 + cfg.experiment.slab_fraction);
  y0_max = std::max(y0_max, grid.time(s0) + 8.0 * dt);
  if (y0_max > grid.t_last()) {
    throw Error(ErrorKind::CoverageExceeded,
                "slab end y0 = " + std::to_string(y0_max) + " lies beyond t_max = " +
                    std::to_string(grid.t_last()),
                "slice_initial_data");
  }
  const auto slice = staged("slice_initial_data", timings,
                            [&] { return slice_initial_data(out.u, setup.profile, s0); });
  out.direct = staged("solve_transformed", timings, [&] {
    return solve_transformed_above(slice, setup.signal, setup.a, setup.profile, grid, y0_max);
  });
  const double cross = staged("cross_agreement", timings, [&] { return cross_agreement(out.direct, out.v); });

  auto& n = out.norms;
  n.points = points;
  n.h = grid.h();
  n.dt = dt;
  n.glue_value = glue.value_jump;
  n.glue_deriv = glue.deriv_jump;
  n.residual_max = sweep.max_abs;
  n.residual_scale = sweep.max_scale;
  n.cross_max = cross;
  for (double x : out.u.values()) n.u_max = std::max(n.u_max, std::abs(x));
  n.slab_first_level = s0;
  n.slab_levels = out.direct.field.levels();
  return out;
}

/// Least-squares slope of log(err) against log(h); empty when any error
/// sits at or below its noise floor.
inline std::optional<double> fit_order(const std::vector<double>& h, const std::vector<double>& err,
                                       const std::vector<double>& floor) {
  require(h.size() == err.size() && h.size() == floor.size() && h.size() >= 2,
          ErrorKind::PreconditionViolated, "fit_order needs matching columns of length >= 2");
  for (std::size_t i = 0; i < err.size(); ++i) {
    if (!(err[i] > floor[i]) || !std::isfinite(err[i])) return std::nullopt;
  }
  double mx = 0.0;
  double my = 0.0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    mx += std::log(h[i]);
    my += std::log(err[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double dx = std::log(h[i]) - mx;
    sxy += dx * (std::log(err[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Event demonstration: payload written into the Void cells, and a negative
/// control written into one Defined cell just above the void.
template <std::size_t Dim>
struct EventReport {
  bool applicable = false;
  std::size_t void_cells = 0;
  bool void_identical = false;
  bool control_differs = false;
  std::int64_t restart_level = 0;
  std::int64_t horizon_levels = 0;
  std::int64_t control_level = 0;
  std::size_t control_point = 0;
  BoundaryTrace<Dim> baseline;
  BoundaryTrace<Dim> after_payload;
  BoundaryTrace<Dim> after_control;

  bool passed() const { return !applicable || (void_identical && control_differs); }
};

namespace detail {

/// Boundary trace of a cloaked field whose evolution above the void is
/// recomputed from levels (s0, s0 + 1), so that values written anywhere at
/// or after s0 reach the trace through the scheme. Levels before s0 + 2 are
/// read straight from the field. The recomputation runs for `horizon` levels
/// past s0, which may extend beyond the field's own window.
template <std::size_t Dim>
BoundaryTrace<Dim> reevolved_trace(const SpacetimeField<Dim>& field, const TransformedStepper<Dim>& stepper,
                                   std::int64_t s0, std::int64_t horizon, double tension) {
  const auto& grid = field.grid();
  auto trace = make_trace(grid, tension);
  for (std::int64_t k = 0; k < s0 + 2; ++k) {
    for (const auto& node : trace.nodes) {
      for (int step = 0; step < 3; ++step) {
        const auto p = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node.flat) + step * node.inward);
        require(field.state(k, p) == CellState::Defined, ErrorKind::VoidNearBoundary,
                "void cell inside the trace stencil at level " + std::to_string(k));
      }
    }
    detail::append_trace_row(trace, grid.h(), grid.time(k), field.level(k));
  }
  const std::size_t n = grid.point_count();
  std::vector<double> prev(field.level(s0).begin(), field.level(s0).end());
  std::vector<double> curr(field.level(s0 + 1).begin(), field.level(s0 + 1).end());
  std::vector<double> next(n, 0.0);
  for (std::int64_t k = s0 + 2; k < s0 + horizon; ++k) {
    stepper.step(prev, curr, grid.time(k), next);
    detail::append_trace_row(trace, grid.h(), grid.time(k), std::span<const double>(next));
    std::swap(prev, curr);
    std::swap(curr, next);
  }
  return trace;
}

}  // namespace detail

template <std::size_t Dim>
EventReport<Dim> event_invariance_demo(const CloakedField<Dim>& v, double a,
                                       const BoundarySignal<Dim>& f, double tension,
                                       std::uint64_t seed, double amplitude = 1e6) {
  const auto& field = v.field;
  const auto& grid = field.grid();
  EventReport<Dim> report;
  report.void_cells = field.void_count();
  if (report.void_cells == 0) {
    throw Error(ErrorKind::NoVoidCells, "the cloaked field has no void cells (c0 = 0?)");
  }
  report.applicable = true;

  const auto c = detail::c_on_grid(grid, v.profile);
  const double c_max = *std::max_element(c.begin(), c.end());
  const auto s0 = grid.first_level_at_or_after(c_max);
  require(s0 + 1 < grid.levels, ErrorKind::CoverageExceeded,
          "window ends before the void is closed on every lattice point");
  // long enough for a disturbance at the cloak to reach the nearest face
  const auto travel = static_cast<std::int64_t>(std::ceil(1.5 * grid.L / (a * grid.dt)));
  const std::int64_t horizon = std::max<std::int64_t>(grid.levels - s0, travel);
  report.restart_level = s0;
  report.horizon_levels = horizon;

  Grid<Dim> step_grid = grid;
  TransformedStepper<Dim> stepper(step_grid, a, v.profile, f);

  report.baseline = detail::reevolved_trace(field, stepper, s0, horizon, tension);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  {
    SpacetimeField<Dim> payload = field;
    for (std::int64_t k = 0; k < grid.levels; ++k) {
      for (std::size_t p = 0; p < grid.point_count(); ++p) {
        if (payload.state(k, p) == CellState::Void) payload.at(k, p) = amplitude * unit(rng);
      }
    }
    report.after_payload = detail::reevolved_trace(payload, stepper, s0, horizon, tension);
  }
  report.void_identical = traces_bit_identical(report.baseline, report.after_payload);

  // negative control: first Defined level above the void at the lattice
  // point nearest the cloak center
  std::size_t target = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    const double r = norm<Dim>(grid.coord(p) - v.profile.center);
    if (r < best) {
      best = r;
      target = p;
    }
  }
  std::int64_t m = detail::require_zero_level(grid);
  while (m < grid.levels && field.state(m, target) == CellState::Void) ++m;
  require(m <= s0 + 1, ErrorKind::PreconditionViolated, "control cell lies after the restart");
  require(m > 0 && field.state(m - 1, target) == CellState::Void, ErrorKind::PreconditionViolated,
          "no void below the control cell");
  report.control_level = m;
  report.control_point = target;
  {
    SpacetimeField<Dim> control = field;
    control.at(m, target) += amplitude * (0.5 + 0.25 * (unit(rng) + 1.0));
    report.after_control = detail::reevolved_trace(control, stepper, s0, horizon, tension);
  }
  report.control_differs = !traces_bit_identical(report.baseline, report.after_control);
  return report;
}

/// Everything the run subcommand reports and writes.
template <std::size_t Dim>
struct ExperimentRun {
  Setup<Dim> setup;
  PipelineResult<Dim> fine;
  std::optional<LevelNorms> coarse;
  BoundaryTrace<Dim> trace_u;
  BoundaryTrace<Dim> trace_v;
  bool trace_identity = false;
  EventReport<Dim> event;
  std::optional<double> glue_value_order;
  std::optional<double> glue_deriv_order;
  std::optional<double> residual_order;
  std::optional<double> cross_order;
  bool passed = false;
  std::vector<std::string> failures;
};

template <std::size_t Dim>
ExperimentRun<Dim> run_cloak_experiment(const ExperimentConfig& cfg, Timings* timings = nullptr) {
  using detail::staged;
  ExperimentRun<Dim> run;
  run.setup = staged("setup", timings, [&] { return make_setup<Dim>(cfg); });
  staged("feasibility", timings, [&] { feasibility_gate(run.setup, cfg); });
  run.fine = run_pipeline(cfg, run.setup, cfg.grid.points, timings);

  run.trace_u = staged("trace_u", timings, [&] { return boundary_trace(run.fine.u, run.setup.tension); });
  run.trace_v = staged("trace_v", timings, [&] { return boundary_trace(run.fine.v.field, run.setup.tension); });
  run.trace_identity = traces_bit_identical(run.trace_u, run.trace_v);

  run.event = staged("event_demo", timings, [&] {
    if (run.fine.v.field.void_count() == 0) return EventReport<Dim>{};
    return event_invariance_demo(run.fine.v, run.setup.a, run.setup.signal, run.setup.tension,
                                 cfg.experiment.seed, cfg.experiment.payload_amplitude);
  });

  const int coarse_points = (cfg.grid.points - 1) / 2 + 1;
  if ((cfg.grid.points - 1) % 2 == 0 && coarse_points >= 16) {
    Timings coarse_timings;
    run.coarse = run_pipeline(cfg, run.setup, coarse_points, &coarse_timings).norms;
    if (timings) timings->stages.emplace_back("coarse_pass", coarse_timings.total());
    const auto& c = *run.coarse;
    const auto& f = run.fine.norms;
    const std::vector<double> h{c.h, f.h};
    run.glue_value_order = fit_order(h, {c.glue_value, f.glue_value}, {c.floor_value(), f.floor_value()});
    run.glue_deriv_order = fit_order(h, {c.glue_deriv, f.glue_deriv}, {c.floor_deriv(), f.floor_deriv()});
    run.residual_order =
        fit_order(h, {c.residual_max, f.residual_max}, {c.floor_residual(), f.floor_residual()});
    run.cross_order = fit_order(h, {c.cross_max, f.cross_max}, {c.floor_value(), f.floor_value()});
  }

  if (!run.trace_identity) run.failures.push_back("trace_identity");
  if (!run.event.passed()) run.failures.push_back("event_invariance");
  auto check_order = [&](const char* name, const std::optional<double>& order) {
    if (order && *order < 1.5) run.failures.push_back(name);
  };
  check_order("glue_value_order", run.glue_value_order);
  check_order("glue_deriv_order", run.glue_deriv_order);
  check_order("residual_order", run.residual_order);
  check_order("cross_agreement_order", run.cross_order);
  run.passed = run.failures.empty();
  return run;
}

/// One row per resolution plus fitted slopes.
struct ConvergenceStudy {
  std::vector<LevelNorms> rows;
  std::optional<double> glue_value_slope;
  std::optional<double> glue_deriv_slope;
  std::optional<double> residual_slope;
  std::optional<double> cross_slope;
  std::vector<std::string> flagged;  // columns with slope < 1.5

  bool passed() const { return flagged.empty(); }
};

/// Resolutions for a study with `levels` entries starting at `points`, each
/// halving h.
inline std::vector<int> refinement_ladder(int points, int levels) {
  std::vector<int> out;
  int n = points;
  for (int i = 0; i < levels; ++i) {
    out.push_back(n);
    n = 2 * (n - 1) + 1;
  }
  return out;
}

template <std::size_t Dim>
ConvergenceStudy convergence_study(const ExperimentConfig& cfg, std::vector<int> points,
                                   Timings* timings = nullptr) {
  if (points.size() < 3) {
    throw Error(ErrorKind::InsufficientLevels,
                "a convergence study needs at least 3 refinement levels, got " +
                    std::to_string(points.size()));
  }
  std::sort(points.begin(), points.end());
  for (std::size_t i = 1; i < points.size(); ++i) {
    require(points[i] - 1 == 2 * (points[i - 1] - 1), ErrorKind::PreconditionViolated,
            "refinement levels must halve h: " + std::to_string(points[i - 1]) + " -> " +
                std::to_string(points[i]));
  }
  Setup<Dim> setup = detail::staged("setup", timings, [&] { return make_setup<Dim>(cfg); });
  detail::staged("feasibility", timings, [&] { feasibility_gate(setup, cfg); });
  ConvergenceStudy study;
  for (int n : points) {
    Timings level_timings;
    study.rows.push_back(run_pipeline(cfg, setup, n, &level_timings).norms);
    if (timings) timings->stages.emplace_back("level_" + std::to_string(n), level_timings.total());
  }
  for (std::size_t i = 1; i < study.rows.size(); ++i) {
    const double ratio = study.rows[i - 1].dt / study.rows[i].dt;
    require(std::abs(ratio - 2.0) < 1e-12, ErrorKind::PreconditionViolated,
            "refinement levels must halve dt");
  }
  std::vector<double> h;
  for (const auto& r : study.rows) h.push_back(r.h);
  auto column = [&](auto value, auto floor) {
    std::vector<double> v;
    std::vector<double> f;
    for (const auto& r : study.rows) {
      v.push_back(value(r));
      f.push_back(floor(r));
    }
    return fit_order(h, v, f);
  };
  study.glue_value_slope = column([](const LevelNorms& r) { return r.glue_value; },
                                  [](const LevelNorms& r) { return r.floor_value(); });
  study.glue_deriv_slope = column([](const LevelNorms& r) { return r.glue_deriv; },
                                  [](const LevelNorms& r) { return r.floor_deriv(); });
  study.residual_slope = column([](const LevelNorms& r) { return r.residual_max; },
                                [](const LevelNorms& r) { return r.floor_residual(); });
  study.cross_slope = column([](const LevelNorms& r) { return r.cross_max; },
                             [](const LevelNorms& r) { return r.floor_value(); });
  auto flag = [&](const char* name, const std::optional<double>& s) {
    if (s && *s < 1.5) study.flagged.push_back(name);
  };
  flag("glue_value", study.glue_value_slope);
  flag("glue_deriv", study.glue_deriv_slope);
  flag("residual", study.residual_slope);
  flag("cross_agreement", study.cross_slope);
  return study;
}

// ---------------------------------------------------------------- metric

template <std::size_t Dim>
Metric<Dim> make_metric(const ExperimentConfig& cfg, double a) {
  const auto& m = cfg.metric;
  if (m.preset == "minkowski") return Metric<Dim>::minkowski(a);
  if (m.preset == "diagonal") {
    Vec<Dim> d{};
    require(m.diagonal.empty() || m.diagonal.size() == Dim, ErrorKind::ConfigError,
            "metric.diagonal must have grid.dim entries");
    for (std::size_t j = 0; j < Dim; ++j) d[j] = m.diagonal.empty() ? a * a : m.diagonal[j];
    return Metric<Dim>::diagonal(m.g00, d, m.variation);
  }
  if (m.preset == "table") {
    require(m.table.is_object(), ErrorKind::ConfigError, "metric.table must be an object");
    MetricTable<Dim> table;
    try {
      const auto& axes = m.table.at("axes");
      require(axes.is_array() && axes.size() == Dim, ErrorKind::ConfigError,
              "metric.table.axes must have grid.dim entries");
      for (std::size_t d = 0; d < Dim; ++d) {
        table.axes[d].min = axes[d].at("min").get<double>();
        table.axes[d].max = axes[d].at("max").get<double>();
        table.axes[d].count = axes[d].at("count").get<int>();
      }
      const auto& entries = m.table.at("entries");
      for (auto it = entries.begin(); it != entries.end(); ++it) {
        const auto& key = it.key();
        require(key.size() == 2 && key[0] >= '0' && key[1] >= '0' &&
                    static_cast<std::size_t>(key[0] - '0') <= Dim &&
                    static_cast<std::size_t>(key[1] - '0') <= Dim && key[0] <= key[1],
                ErrorKind::ConfigError, "metric.table.entries key '" + key + "' must be jk with j <= k");
        table.entries[static_cast<std::size_t>(key[0] - '0')][static_cast<std::size_t>(key[1] - '0')] =
            it.value().get<std::vector<double>>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ConfigError, std::string("bad metric.table: ") + e.what());
    }
    return table.to_metric();
  }
  throw Error(ErrorKind::ConfigError,
              "metric.preset must be minkowski, diagonal or table, got '" + m.preset + "'");
}

/// Transformed-coefficient checks for the configured metric. `admissible`
/// requires a positive transformed g^{00} and time-like boundary before and
/// after the change of time.
template <std::size_t Dim>
json metric_check(const ExperimentConfig& cfg) {
  auto setup = make_setup<Dim>(cfg);
  const auto metric = make_metric<Dim>(cfg, setup.a);
  auto samples = SampleGrid<Dim>::covering(setup.profile, cfg.experiment.samples_per_radius);
  validate_metric(metric, samples);

  const auto general = check_hyperbolic_general(metric, setup.profile, samples);
  CloakProfile<Dim> flat = setup.profile;
  flat.c0 = 0.0;
  bool identity = true;
  double max_dev_g00 = 0.0;
  for (const auto& x : samples.points) {
    for (double t : {-0.5, 0.0, 0.5}) {
      if (transform_metric(metric, flat, t, x) != metric(t, x)) identity = false;
    }
    if (cfg.metric.preset == "minkowski") {
      const double lhs = transform_metric(metric, setup.profile, 0.0, x)[0][0];
      const double rhs = hyperbolicity_value<Dim>(setup.a, c_grad(setup.profile, x));
      max_dev_g00 = std::max(max_dev_g00, std::abs(lhs - rhs));
    }
  }
  const auto timelike = check_timelike_boundary(metric, setup.profile,
                                                box_boundary_samples<Dim>(cfg.grid.L),
                                                {-0.5, 0.0, 0.5});
  json out;
  out["schema_version"] = kReportSchemaVersion;
  out["preset"] = metric.name();
  out["dim"] = Dim;
  out["c0"] = setup.profile.c0;
  out["samples"] = general.samples;
  out["transformed_g00_min"] = general.margin_min;
  out["transformed_g00_argmin"] = std::vector<double>(general.argmin.begin(), general.argmin.end());
  out["hyperbolic"] = general.admissible;
  out["identity_at_c0_zero"] = identity;
  if (cfg.metric.preset == "minkowski") {
    out["g00_closed_form_deviation"] = max_dev_g00;
    out["g00_closed_form_agrees"] = max_dev_g00 <= 1e-12;
  }
  out["timelike"] = {{"original", timelike.original},
                     {"transformed", timelike.transformed},
                     {"max_form_original", timelike.max_form_original},
                     {"max_form_transformed", timelike.max_form_transformed},
                     {"samples", timelike.samples}};
  std::optional<double> C0 = cfg.metric.ellipticity;
  if (!C0 && cfg.metric.preset == "minkowski") C0 = setup.a * setup.a;
  if (!C0 && cfg.metric.preset == "diagonal") {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < Dim; ++j) {
      const double d = cfg.metric.diagonal.empty() ? setup.a * setup.a : cfg.metric.diagonal[j];
      lo = std::min(lo, d * (1.0 - std::abs(cfg.metric.variation)));
    }
    if (lo > 0.0) C0 = lo;
  }
  if (C0) {
    try {
      const auto e = elliptic_bound_check(metric, *C0, setup.profile, samples);
      out["elliptic"] = {{"C0", *C0},
                         {"transformed_g00_min", e.transformed_g00_min},
                         {"transformed_g00_positive", e.transformed_g00_positive},
                         {"gradient_bound", e.gradient_bound},
                         {"worst_bound_ratio", e.worst_bound_ratio},
                         {"samples", e.samples}};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::PreconditionViolated) throw;
      out["elliptic"] = {{"C0", *C0}, {"skipped", e.what()}};
    }
  } else {
    out["elliptic"] = nullptr;
  }
  out["admissible"] = general.admissible && timelike.ok();
  return out;
}

// ---------------------------------------------------------------- JSON

namespace detail {

inline json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

template <std::size_t Dim>
json vec_json(const Vec<Dim>& x) {
  return std::vector<double>(x.begin(), x.end());
}

}  // namespace detail

template <std::size_t Dim>
json feasibility_json(const Setup<Dim>& s, double floor) {
  const auto& f = s.feasibility;
  return {{"margin_min", f.margin_min},
          {"argmin", detail::vec_json<Dim>(f.argmin)},
          {"admissible", f.admissible && f.margin_min > floor},
          {"margin_floor", floor},
          {"samples", f.samples},
          {"a", s.a},
          {"c0", s.profile.c0},
          {"c1", s.profile.c1},
          {"max_admissible_c0", s.c0_max},
          {"max_grad_c", max_grad_norm(s.profile)},
          {"effective_speed", f.margin_min > 0.0 ? json(effective_speed(s.a, f.margin_min)) : json(nullptr)}};
}

inline json norms_json(const LevelNorms& n) {
  return {{"points", n.points},           {"h", n.h},
          {"dt", n.dt},                   {"glue_value_jump", n.glue_value},
          {"glue_deriv_jump", n.glue_deriv}, {"residual_max", n.residual_max},
          {"residual_scale", n.residual_scale}, {"cross_agreement_max", n.cross_max},
          {"u_max", n.u_max},             {"slab_first_level", n.slab_first_level},
          {"slab_levels", n.slab_levels}};
}

template <std::size_t Dim>
json report_json(const ExperimentRun<Dim>& run, const ExperimentConfig& cfg) {
  const auto& n = run.fine.norms;
  json pair = run.coarse ? json::array({run.coarse->points, n.points}) : json(nullptr);
  json out;
  out["schema_version"] = kReportSchemaVersion;
  out["dim"] = Dim;
  out["feasibility"] = feasibility_json(run.setup, cfg.experiment.margin_floor);
  out["grid"] = {{"points", n.points}, {"h", n.h}, {"dt", n.dt},
                 {"t_first", run.fine.grid.t_first()}, {"t_last", run.fine.grid.t_last()},
                 {"levels", run.fine.grid.levels},
                 {"cfl_number", run.fine.grid.cfl_number(run.setup.a)}};
  out["glue_value_jump"] = n.glue_value;
  out["glue_deriv_jump"] = n.glue_deriv;
  out["residual_max"] = n.residual_max;
  out["residual_scale"] = n.residual_scale;
  out["cross_agreement_max"] = n.cross_max;
  out["orders"] = {{"refinement_pair", pair},
                   {"glue_value", detail::optional_json(run.glue_value_order)},
                   {"glue_deriv", detail::optional_json(run.glue_deriv_order)},
                   {"residual", detail::optional_json(run.residual_order)},
                   {"cross_agreement", detail::optional_json(run.cross_order)}};
  out["coarse"] = run.coarse ? norms_json(*run.coarse) : json(nullptr);
  out["fine"] = norms_json(n);
  out["void_cells"] = run.fine.v.field.void_count();
  out["trace_identity"] = run.trace_identity;
  out["event_invariance"] = {{"applicable", run.event.applicable},
                             {"passed", run.event.passed()},
                             {"void_identical", run.event.void_identical},
                             {"control_differs", run.event.control_differs},
                             {"restart_level", run.event.restart_level},
                             {"horizon_levels", run.event.horizon_levels},
                             {"control_level", run.event.control_level},
                             {"control_point", run.event.control_point},
                             {"seed", cfg.experiment.seed}};
  out["passed"] = run.passed;
  out["failures"] = run.failures;
  return out;
}

inline json study_json(const ConvergenceStudy& s) {
  json rows = json::array();
  for (const auto& r : s.rows) rows.push_back(norms_json(r));
  return {{"schema_version", kReportSchemaVersion},
          {"rows", rows},
          {"slopes",
           {{"glue_value", detail::optional_json(s.glue_value_slope)},
            {"glue_deriv", detail::optional_json(s.glue_deriv_slope)},
            {"residual", detail::optional_json(s.residual_slope)},
            {"cross_agreement", detail::optional_json(s.cross_slope)}}},
          {"flagged", s.flagged},
          {"passed", s.passed()}};
}

inline json timings_json(const Timings& t) {
  json out = json::object();
  for (const auto& [name, sec] : t.stages) out[name] = out.contains(name) ? out[name].get<double>() + sec : sec;
  out["total"] = t.total();
  return out;
}

}  // namespace tcloak

// Acceptance criteria 1-8. One PASS/FAIL line each; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "tcloak/tcloak.hpp"

using namespace tcloak;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

std::string num(const std::optional<double>& x) { return x ? num(*x) : std::string("none"); }

ExperimentConfig demo(const std::vector<std::string>& overrides = {}) {
  return load_config(std::string(TCLOAK_SOURCE_DIR) + "/configs/demo2d.json", overrides);
}

// Runs `fn` and reports an unexpected exception as a failed criterion.
template <typename Fn>
void guarded(int id, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

void criterion1() {
  BoundarySignal<1> f;
  f.t_on = -1.9;
  f.t_off = -0.9;
  const auto start = Clock::now();
  std::vector<double> err;
  for (int n : {257, 513, 1025}) {
    const double h = 2.0 / (n - 1);
    const auto grid = Grid<1>::make(1.0, n, 0.9 * h, -2.0, 0.2, 0.9);
    const auto u = solve_physical(grid, 1.0, f);
    double e = 0.0;
    for (std::int64_t k = 0; k < grid.levels; ++k) {
      for (std::size_t p = 0; p < grid.point_count(); ++p) {
        try {
          e = std::max(e, std::abs(u.at(k, p) - dalembert_oracle_1d(1.0, f, 1.0, grid.coord(p)[0], grid.time(k))));
        } catch (const Error& ex) {
          if (ex.kind() != ErrorKind::OracleDomainExceeded) throw;
        }
      }
    }
    err.push_back(e);
  }
  const double elapsed = seconds_since(start);
  const auto order = fit_order({2.0 / 256, 2.0 / 512, 2.0 / 1024}, err, {0.0, 0.0, 0.0});
  const bool ok = order && *order >= 1.7 && *order <= 2.3 && err.back() < 1e-3 && elapsed < 10.0;
  report(1, ok, "1D oracle order " + num(order) + ", finest error " + num(err.back()) + ", " + num(elapsed) + " s");
}

void criterion2() {
  bool rejected = true;
  std::string detail;
  for (const char* frac : {"1.0", "1.2", "2.0"}) {
    for (const char* floor : {"0.05", "0"}) {
      const auto cfg = demo({std::string("profile.c0_fraction=") + frac, std::string("experiment.margin_floor=") + floor});
      const auto setup = make_setup<2>(cfg);
      // independent of the sampled gate: closed-form maximum of |grad c|
      const bool violates = setup.a * max_grad_norm(setup.profile) >= 1.0 - 1e-12;
      Timings t;
      bool gate = false;
      try {
        run_cloak_experiment<2>(cfg, &t);
      } catch (const Error& e) {
        gate = e.kind() == ErrorKind::NotHyperbolic && e.stage() == "feasibility";
      }
      bool solved = false;
      for (const auto& [stage, sec] : t.stages) solved = solved || stage != "setup";
      if (!(violates && gate && !solved)) {
        rejected = false;
        detail += std::string(" c0_fraction=") + frac + "/floor=" + floor + " not rejected;";
      }
    }
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int misclassified = 0;
  for (int i = 0; i < 10000; ++i) {
    const double a = 0.1 + 3.0 * std::abs(u(rng));
    const Vec<2> g{1.5 * u(rng) / a, 1.5 * u(rng) / a};
    const Vec<2> eta = i % 2 ? Vec<2>{-g[1], g[0]} : Vec<2>{u(rng), u(rng)};
    if (norm<2>(eta) == 0.0) continue;
    // oracle: hyperbolic iff 1 - a^2|g|^2 > 0, evaluated in long double
    const long double m = 1.0L - static_cast<long double>(a) * a *
                                     (static_cast<long double>(g[0]) * g[0] + static_cast<long double>(g[1]) * g[1]);
    bool thrown = false;
    try {
      characteristic_roots<2>(a, g, eta);
    } catch (const Error& e) {
      thrown = e.kind() == ErrorKind::NotHyperbolic;
    }
    misclassified += (thrown == (m > 0.0L));
  }
  report(2, rejected && misclassified == 0,
         "gate rejects a|grad c| >= 1 before solving;" + detail + " misclassified " +
             std::to_string(misclassified) + "/10000");
}

struct Shared {
  std::optional<ConvergenceStudy> study;
  std::optional<ExperimentRun<2>> run;
};

void criterion3(Shared& shared) {
  const auto cfg = demo();
  shared.study = convergence_study<2>(cfg, cfg.experiment.refinements);
  const auto& s = *shared.study;
  const auto start = Clock::now();
  const auto run = run_cloak_experiment<2>(cfg);
  const double elapsed = seconds_since(start);
  const bool ok = s.glue_value_slope && *s.glue_value_slope >= 1.5 && s.glue_deriv_slope &&
                  *s.glue_deriv_slope >= 1.5 && elapsed < 120.0 && run.passed;
  report(3, ok,
         "glue slopes value " + num(s.glue_value_slope) + ", derivative " + num(s.glue_deriv_slope) +
             " (65/129/257); 129-point run " + num(elapsed) + " s");
}

void criterion4(const Shared& shared) {
  const auto& s = *shared.study;
  const auto cfg = demo({"grid.points=33"});
  auto setup = make_setup<2>(cfg);
  const auto grid = Grid<2>::make(1.0, 33, 0.02, -0.1, 0.3, 0.9);
  CloakedField<2> v{SpacetimeField<2>(grid), setup.profile, Provenance::Mapped};
  for (std::int64_t k = 0; k < grid.levels; ++k) {
    for (std::size_t p = 0; p < grid.point_count(); ++p) {
      const auto x = grid.coord(p);
      v.field.at(k, p) = 0.3 - 0.4 * x[0] + 1.1 * x[1];
    }
  }
  const auto sweep = residual_sweep(v, setup.a);
  const bool affine_ok = sweep.evaluated > 0 && sweep.max_abs <= 1e-12 * sweep.max_scale;
  const bool ok = s.residual_slope && *s.residual_slope >= 1.5 && affine_ok;
  report(4, ok,
         "residual slope " + num(s.residual_slope) + "; affine field residual " + num(sweep.max_abs) +
             " vs scale " + num(sweep.max_scale));
}

void criterion5(const Shared& shared) {
  const auto& s = *shared.study;
  const auto cfg = demo({"profile.c0=0"});
  auto setup = make_setup<2>(cfg);
  feasibility_gate(setup, cfg);
  const auto res = run_pipeline(cfg, setup, cfg.grid.points);
  const bool zero_ok = res.norms.cross_max <= 1e-12 * res.norms.u_max;
  const bool ok = s.cross_slope && *s.cross_slope >= 1.5 && zero_ok;
  report(5, ok,
         "cross-agreement slope " + num(s.cross_slope) + "; c0 = 0 difference " + num(res.norms.cross_max) +
             " (u max " + num(res.norms.u_max) + ")");
}

void criterion6(Shared& shared) {
  const auto cfg = demo();
  shared.run = run_cloak_experiment<2>(cfg);
  const auto& a = *shared.run;
  const bool ok6 = a.trace_identity && traces_bit_identical(a.trace_u, a.trace_v) && a.event.applicable &&
                   a.event.void_identical && a.event.control_differs;
  report(6, ok6,
         std::string("trace bit-identical ") + (a.trace_identity ? "yes" : "no") + "; event demo void " +
             (a.event.void_identical ? "identical" : "differs") + ", control " +
             (a.event.control_differs ? "differs" : "identical"));
}

void criterion8(const Shared& shared) {
  const auto cfg = demo();
  const auto& a = *shared.run;
  const auto b = run_cloak_experiment<2>(cfg);
  const bool same = report_json(a, cfg).dump() == report_json(b, cfg).dump() &&
                    trace_csv(a.trace_u) == trace_csv(b.trace_u) && trace_csv(a.trace_v) == trace_csv(b.trace_v) &&
                    trace_csv(a.event.after_payload) == trace_csv(b.event.after_payload) &&
                    trace_csv(a.event.after_control) == trace_csv(b.event.after_control) &&
                    snapshot_csv(a.fine.u, 0) == snapshot_csv(b.fine.u, 0) &&
                    snapshot_csv(a.fine.v.field, 0) == snapshot_csv(b.fine.v.field, 0);
  report(8, same, "report.json and CSV outputs byte-identical across two runs");
}

void criterion7() {
  const auto out = metric_check<2>(demo());
  const double dev = out.at("g00_closed_form_deviation").get<double>();
  const bool identity = out.at("identity_at_c0_zero").get<bool>();
  const bool timelike = out.at("timelike").at("original").get<bool>() && out.at("timelike").at("transformed").get<bool>();
  report(7, dev <= 1e-12 && identity && timelike,
         "minkowski g00 deviation " + num(dev) + "; identity at c0 = 0 " + (identity ? "yes" : "no") +
             "; time-like boundary " + (timelike ? "yes" : "no"));
}

void quintic_info() {
  const auto run = run_cloak_experiment<2>(demo({"profile.smoothstep=quintic"}));
  std::printf("info: quintic profile residual order %s (65/129)\n", num(run.residual_order).c_str());
}

}  // namespace

int main() {
  Shared shared;
  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, [&] { criterion3(shared); });
  if (shared.study) {
    guarded(4, [&] { criterion4(shared); });
    guarded(5, [&] { criterion5(shared); });
  } else {
    report(4, false, "convergence study did not complete");
    report(5, false, "convergence study did not complete");
  }
  guarded(6, [&] { criterion6(shared); });
  guarded(7, criterion7);
  if (shared.run) {
    guarded(8, [&] { criterion8(shared); });
  } else {
    report(8, false, "first run did not complete");
  }
  try {
    quintic_info();
  } catch (const std::exception& e) {
    std::printf("info: quintic run failed: %s\n", e.what());
  }
  std::printf("%s\n", failures == 0 ? "all criteria PASS" : "some criteria FAIL");
  return failures == 0 ? 0 : 1;
}

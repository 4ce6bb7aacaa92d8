// Command-line front end: check, run, converge, metric-check.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcloak/tcloak.hpp"

namespace {

using tcloak::ErrorKind;
using tcloak::json;

enum Exit : int { kPass = 0, kChecksFailed = 1, kConfigError = 2, kNumerical = 3, kIo = 4 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError:
      return kIo;
    case ErrorKind::NotHyperbolic:
    case ErrorKind::CflViolation:
    case ErrorKind::CloakedPoint:
    case ErrorKind::StencilTouchesVoid:
    case ErrorKind::StencilTouchesBoundary:
    case ErrorKind::OracleDomainExceeded:
      return kNumerical;
    default:
      return kConfigError;
  }
}

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  int verbosity = 0;
  int levels = 0;
  std::optional<double> margin_floor;
};

tcloak::fs::path out_dir(const Options& o, const tcloak::ExperimentConfig& cfg) {
  return o.out.empty() ? tcloak::fs::path(cfg.experiment.output_dir) : tcloak::fs::path(o.out);
}

void emit(const tcloak::fs::path& dir, const std::string& name, const json& j) {
  tcloak::write_atomic(dir / name, j.dump(2) + "\n");
}

void log_timings(const Options& o, const tcloak::Timings& t) {
  if (o.verbosity == 0) return;
  for (const auto& [stage, sec] : t.stages) std::cerr << "  " << stage << ": " << sec << " s\n";
  std::cerr << "  total: " << t.total() << " s\n";
}

template <std::size_t Dim>
int do_check(const Options& o, const tcloak::ExperimentConfig& cfg) {
  auto setup = tcloak::make_setup<Dim>(cfg);
  int code = kPass;
  try {
    tcloak::feasibility_gate(setup, cfg);
  } catch (const tcloak::Error& e) {
    if (e.kind() != ErrorKind::NotHyperbolic) throw;
    code = kChecksFailed;
  }
  const json report = tcloak::feasibility_json(setup, cfg.experiment.margin_floor);
  std::cout << report.dump(2) << "\n";
  if (!o.out.empty()) emit(o.out, "check.json", report);
  return code;
}

template <std::size_t Dim>
int do_run(const Options& o, const tcloak::ExperimentConfig& cfg) {
  const auto dir = out_dir(o, cfg);
  emit(dir, "effective_config.json", cfg.source);
  tcloak::Timings timings;
  const auto run = tcloak::run_cloak_experiment<Dim>(cfg, &timings);
  const json report = tcloak::report_json(run, cfg);
  emit(dir, "report.json", report);
  emit(dir, "timings.json", tcloak::timings_json(timings));
  tcloak::write_atomic(dir / "traces_u.csv", tcloak::trace_csv(run.trace_u));
  tcloak::write_atomic(dir / "traces_v.csv", tcloak::trace_csv(run.trace_v));
  tcloak::write_atomic(dir / "boundary_points.csv", tcloak::boundary_points_csv(run.fine.grid, run.trace_u));
  const int stride = cfg.experiment.snapshot_stride;
  tcloak::write_atomic(dir / "snapshot_u.csv", tcloak::snapshot_csv(run.fine.u, stride));
  tcloak::write_atomic(dir / "snapshot_v.csv", tcloak::snapshot_csv(run.fine.v.field, stride));
  if (run.event.applicable) {
    tcloak::write_atomic(dir / "event_baseline.csv", tcloak::trace_csv(run.event.baseline));
    tcloak::write_atomic(dir / "event_payload.csv", tcloak::trace_csv(run.event.after_payload));
    tcloak::write_atomic(dir / "event_control.csv", tcloak::trace_csv(run.event.after_control));
  }
  if (cfg.experiment.dump_fields) {
    tcloak::write_atomic(dir / "u.tclk", tcloak::encode_field(run.fine.u));
    tcloak::write_atomic(dir / "v.tclk", tcloak::encode_field(run.fine.v.field));
  }
  std::cout << report.dump(2) << "\n";
  log_timings(o, timings);
  if (!run.passed) {
    std::cerr << "checks failed:";
    for (const auto& f : run.failures) std::cerr << " " << f;
    std::cerr << "\n";
  }
  return run.passed ? kPass : kChecksFailed;
}

template <std::size_t Dim>
int do_converge(const Options& o, const tcloak::ExperimentConfig& cfg) {
  std::vector<int> points;
  if (o.levels > 0) {
    points = tcloak::refinement_ladder(cfg.grid.points, o.levels);
  } else if (!cfg.experiment.refinements.empty()) {
    points = cfg.experiment.refinements;
  } else {
    points = tcloak::refinement_ladder(cfg.grid.points, 3);
  }
  tcloak::Timings timings;
  const auto study = tcloak::convergence_study<Dim>(cfg, points, &timings);
  const auto dir = out_dir(o, cfg);
  std::ostringstream csv;
  csv << "points,h,dt,glue_value_jump,glue_deriv_jump,residual_max,residual_scale,cross_agreement_max\n";
  for (const auto& r : study.rows) {
    csv << r.points << ',' << tcloak::detail::fmt(r.h) << ',' << tcloak::detail::fmt(r.dt) << ','
        << tcloak::detail::fmt(r.glue_value) << ',' << tcloak::detail::fmt(r.glue_deriv) << ','
        << tcloak::detail::fmt(r.residual_max) << ',' << tcloak::detail::fmt(r.residual_scale) << ','
        << tcloak::detail::fmt(r.cross_max) << '\n';
  }
  tcloak::write_atomic(dir / "convergence.csv", csv.str());
  const json report = tcloak::study_json(study);
  emit(dir, "convergence.json", report);
  emit(dir, "timings.json", tcloak::timings_json(timings));
  std::cout << report.dump(2) << "\n";
  log_timings(o, timings);
  return study.passed() ? kPass : kChecksFailed;
}

template <std::size_t Dim>
int do_metric_check(const Options& o, const tcloak::ExperimentConfig& cfg) {
  const json report = tcloak::metric_check<Dim>(cfg);
  std::cout << report.dump(2) << "\n";
  if (!o.out.empty()) emit(o.out, "metric_check.json", report);
  return report.at("admissible").get<bool>() ? kPass : kChecksFailed;
}

template <typename Fn1, typename Fn2>
int by_dim(int dim, Fn1&& one, Fn2&& two) {
  return dim == 1 ? one() : two();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal cloaking experiments for the wave equation"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", o.config, "JSON configuration file")->required();
    sub->add_option("-o,--out", o.out, "output directory (overrides experiment.output_dir)");
    sub->add_option("-s,--set", o.overrides, "override a value, e.g. profile.c0=0.05")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("--margin-floor", o.margin_floor, "minimum hyperbolicity margin before any solve");
    sub->add_flag("-v,--verbose", "print stage timings");
  };
  auto* check = app.add_subcommand("check", "hyperbolicity gate only");
  auto* run = app.add_subcommand("run", "full experiment with artifacts");
  auto* converge = app.add_subcommand("converge", "convergence study");
  auto* metric = app.add_subcommand("metric-check", "checks for general coefficients");
  for (auto* sub : {check, run, converge, metric}) add_common(sub);
  converge->add_option("--levels", o.levels, "number of refinement levels, starting at grid.points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  for (auto* sub : {check, run, converge, metric}) {
    if (*sub) o.verbosity = static_cast<int>(sub->count("--verbose"));
  }

  try {
    auto overrides = o.overrides;
    if (o.margin_floor) overrides.push_back("experiment.margin_floor=" + tcloak::detail::fmt(*o.margin_floor));
    const auto cfg = tcloak::load_config(o.config, overrides);
    if (*check) return by_dim(cfg.dim, [&] { return do_check<1>(o, cfg); }, [&] { return do_check<2>(o, cfg); });
    if (*run) return by_dim(cfg.dim, [&] { return do_run<1>(o, cfg); }, [&] { return do_run<2>(o, cfg); });
    if (*converge) {
      return by_dim(cfg.dim, [&] { return do_converge<1>(o, cfg); }, [&] { return do_converge<2>(o, cfg); });
    }
    return by_dim(cfg.dim, [&] { return do_metric_check<1>(o, cfg); },
                  [&] { return do_metric_check<2>(o, cfg); });
  } catch (const tcloak::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}

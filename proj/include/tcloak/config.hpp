#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcloak/errors.hpp"
#include "tcloak/profile.hpp"
#include "tcloak/signal.hpp"

namespace tcloak {

using json = nlohmann::json;

/// Membrane parameters; the wave speed is sqrt(T / rho).
struct PhysicalParams {
  double tension = 1.0;
  double density = 1.0;

  double speed() const { return std::sqrt(tension / density); }

  void validate() const {
    require(tension > 0.0 && std::isfinite(tension), ErrorKind::ConfigError,
            "physics.T must be positive");
    require(density > 0.0 && std::isfinite(density), ErrorKind::ConfigError,
            "physics.rho must be positive");
  }
};

struct GridSpec {
  double L = 1.0;
  int points = 129;
  double t_min = -1.5;
  double t_max = 0.2;
  double cfl_limit = 0.9;
  std::optional<double> dt;
};

struct ProfileSpec {
  std::optional<double> c0;
  double c0_fraction = 0.8;
  double c1 = 0.25;
  std::vector<double> center;
  Smoothstep kind = Smoothstep::Quintic;
};

struct SignalSpec {
  PulseShape shape = PulseShape::Ricker;
  double t_on = -1.45;
  double t_off = -0.35;
  double amplitude = 1.0;
  std::vector<std::string> faces{"x-"};
};

struct ExperimentSpec {
  double slab_fraction = 0.5;
  std::optional<double> y0_max;
  std::vector<int> refinements;
  double margin_floor = 0.05;
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  int snapshot_stride = 0;  // 0 picks a stride giving about 40 rows
  bool dump_fields = false;
  int samples_per_radius = 64;
  double payload_amplitude = 1e6;
};

struct MetricSpec {
  std::string preset = "minkowski";
  double g00 = 1.0;
  std::vector<double> diagonal;
  double variation = 0.0;
  std::optional<double> ellipticity;
  json table;
};

/// Parsed experiment configuration plus the effective JSON it came from.
struct ExperimentConfig {
  int dim = 2;
  GridSpec grid;
  ProfileSpec profile;
  PhysicalParams physics;
  SignalSpec signal;
  ExperimentSpec experiment;
  MetricSpec metric;
  json source;
};

namespace detail {

inline void reject_unknown(const json& section, const std::string& name,
                           std::initializer_list<const char*> allowed) {
  if (!section.is_object()) {
    throw Error(ErrorKind::ConfigError, "section '" + name + "' must be an object");
  }
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (auto it = section.begin(); it != section.end(); ++it) {
    if (!keys.count(it.key())) {
      throw Error(ErrorKind::ConfigError, "unknown key '" + name + "." + it.key() + "'");
    }
  }
}

template <typename T>
T read(const json& section, const std::string& path, const char* key, T fallback) {
  if (!section.contains(key)) return fallback;
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "bad value for '" + path + "." + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> read_optional(const json& section, const std::string& path, const char* key) {
  if (!section.contains(key) || section.at(key).is_null()) return std::nullopt;
  return read<T>(section, path, key, T{});
}

inline Smoothstep parse_smoothstep(const std::string& s) {
  if (s == "quintic") return Smoothstep::Quintic;
  if (s == "septic") return Smoothstep::Septic;
  throw Error(ErrorKind::ConfigError, "profile.smoothstep must be 'quintic' or 'septic', got '" + s + "'");
}

inline PulseShape parse_shape(const std::string& s) {
  if (s == "ricker") return PulseShape::Ricker;
  if (s == "raised_cosine") return PulseShape::RaisedCosine;
  throw Error(ErrorKind::ConfigError, "signal.shape must be 'ricker' or 'raised_cosine', got '" + s + "'");
}

inline json section(const json& root, const char* name) {
  return root.contains(name) ? root.at(name) : json::object();
}

}  // namespace detail

inline std::string to_string(Smoothstep kind) {
  return kind == Smoothstep::Quintic ? "quintic" : "septic";
}

inline std::string to_string(PulseShape shape) {
  return shape == PulseShape::Ricker ? "ricker" : "raised_cosine";
}

/// Builds and validates a configuration from a JSON document.
inline ExperimentConfig config_from_json(const json& root) {
  using namespace detail;
  if (!root.is_object()) throw Error(ErrorKind::ConfigError, "configuration must be a JSON object");
  reject_unknown(root, "<root>", {"grid", "profile", "physics", "signal", "experiment", "metric"});
  ExperimentConfig cfg;
  cfg.source = root;

  const json g = section(root, "grid");
  reject_unknown(g, "grid", {"dim", "L", "points", "t_min", "t_max", "cfl_limit", "dt"});
  cfg.dim = read<int>(g, "grid", "dim", 2);
  cfg.grid.L = read<double>(g, "grid", "L", cfg.grid.L);
  cfg.grid.points = read<int>(g, "grid", "points", cfg.grid.points);
  cfg.grid.t_min = read<double>(g, "grid", "t_min", cfg.grid.t_min);
  cfg.grid.t_max = read<double>(g, "grid", "t_max", cfg.grid.t_max);
  cfg.grid.cfl_limit = read<double>(g, "grid", "cfl_limit", cfg.grid.cfl_limit);
  cfg.grid.dt = read_optional<double>(g, "grid", "dt");

  const json p = section(root, "profile");
  reject_unknown(p, "profile", {"c0", "c0_fraction", "c1", "center", "smoothstep"});
  cfg.profile.c0 = read_optional<double>(p, "profile", "c0");
  cfg.profile.c0_fraction = read<double>(p, "profile", "c0_fraction", cfg.profile.c0_fraction);
  cfg.profile.c1 = read<double>(p, "profile", "c1", cfg.profile.c1);
  cfg.profile.center = read<std::vector<double>>(p, "profile", "center", {});
  cfg.profile.kind = parse_smoothstep(read<std::string>(p, "profile", "smoothstep", "quintic"));

  const json ph = section(root, "physics");
  reject_unknown(ph, "physics", {"T", "rho"});
  cfg.physics.tension = read<double>(ph, "physics", "T", 1.0);
  cfg.physics.density = read<double>(ph, "physics", "rho", 1.0);

  const json s = section(root, "signal");
  reject_unknown(s, "signal", {"shape", "t_on", "t_off", "amplitude", "faces"});
  cfg.signal.shape = parse_shape(read<std::string>(s, "signal", "shape", "ricker"));
  cfg.signal.t_on = read<double>(s, "signal", "t_on", cfg.signal.t_on);
  cfg.signal.t_off = read<double>(s, "signal", "t_off", cfg.signal.t_off);
  cfg.signal.amplitude = read<double>(s, "signal", "amplitude", cfg.signal.amplitude);
  cfg.signal.faces = read<std::vector<std::string>>(s, "signal", "faces", cfg.signal.faces);

  const json e = section(root, "experiment");
  reject_unknown(e, "experiment",
                 {"slab_fraction", "y0_max", "refinements", "margin_floor", "seed", "output_dir",
                  "snapshot_stride", "dump_fields", "samples_per_radius", "payload_amplitude"});
  cfg.experiment.slab_fraction = read<double>(e, "experiment", "slab_fraction", 0.5);
  cfg.experiment.y0_max = read_optional<double>(e, "experiment", "y0_max");
  cfg.experiment.refinements = read<std::vector<int>>(e, "experiment", "refinements", {});
  cfg.experiment.margin_floor = read<double>(e, "experiment", "margin_floor", 0.05);
  cfg.experiment.seed = read<std::uint64_t>(e, "experiment", "seed", 42);
  cfg.experiment.output_dir = read<std::string>(e, "experiment", "output_dir", "out");
  cfg.experiment.snapshot_stride = read<int>(e, "experiment", "snapshot_stride", 0);
  cfg.experiment.dump_fields = read<bool>(e, "experiment", "dump_fields", false);
  cfg.experiment.samples_per_radius = read<int>(e, "experiment", "samples_per_radius", 64);
  cfg.experiment.payload_amplitude = read<double>(e, "experiment", "payload_amplitude", 1e6);

  const json m = section(root, "metric");
  reject_unknown(m, "metric", {"preset", "g00", "diagonal", "variation", "C0", "table"});
  cfg.metric.preset = read<std::string>(m, "metric", "preset", "minkowski");
  cfg.metric.g00 = read<double>(m, "metric", "g00", 1.0);
  cfg.metric.diagonal = read<std::vector<double>>(m, "metric", "diagonal", {});
  cfg.metric.variation = read<double>(m, "metric", "variation", 0.0);
  cfg.metric.ellipticity = read_optional<double>(m, "metric", "C0");
  cfg.metric.table = m.contains("table") ? m.at("table") : json();

  // structural checks; geometry against the lattice is checked in setup
  require(cfg.dim == 1 || cfg.dim == 2, ErrorKind::ConfigError, "grid.dim must be 1 or 2");
  require(cfg.grid.L > 0.0, ErrorKind::ConfigError, "grid.L must be positive");
  require(cfg.grid.points >= 16, ErrorKind::ConfigError, "grid.points must be at least 16");
  require(cfg.grid.t_min < 0.0 && cfg.grid.t_max > 0.0, ErrorKind::ConfigError,
          "grid window must satisfy t_min < 0 < t_max");
  require(cfg.grid.cfl_limit > 0.0 && cfg.grid.cfl_limit <= 1.0, ErrorKind::ConfigError,
          "grid.cfl_limit must lie in (0, 1]");
  require(!cfg.grid.dt || *cfg.grid.dt > 0.0, ErrorKind::ConfigError, "grid.dt must be positive");
  require(cfg.profile.c1 > 0.0, ErrorKind::ConfigError, "profile.c1 must be positive");
  require(!cfg.profile.c0 || *cfg.profile.c0 >= 0.0, ErrorKind::ConfigError,
          "profile.c0 must be non-negative");
  require(cfg.profile.c0_fraction >= 0.0, ErrorKind::ConfigError,
          "profile.c0_fraction must be non-negative");
  require(cfg.profile.center.empty() || cfg.profile.center.size() == static_cast<std::size_t>(cfg.dim),
          ErrorKind::ConfigError, "profile.center must have grid.dim entries");
  cfg.physics.validate();
  require(cfg.signal.t_off > cfg.signal.t_on, ErrorKind::ConfigError, "signal needs t_off > t_on");
  for (const auto& f : cfg.signal.faces) {
    const auto face = Face::parse(f);
    require(face.axis < cfg.dim, ErrorKind::ConfigError, "face " + f + " does not exist for this dim");
  }
  require(cfg.experiment.slab_fraction > 0.0, ErrorKind::ConfigError,
          "experiment.slab_fraction must be positive");
  require(cfg.experiment.margin_floor >= 0.0 && cfg.experiment.margin_floor < 1.0,
          ErrorKind::ConfigError, "experiment.margin_floor must lie in [0, 1)");
  require(cfg.experiment.samples_per_radius >= 64, ErrorKind::ConfigError,
          "experiment.samples_per_radius must be at least 64 (spacing <= c1/64)");
  require(cfg.experiment.snapshot_stride >= 0, ErrorKind::ConfigError,
          "experiment.snapshot_stride must be non-negative");
  return cfg;
}

/// Parses JSON text; syntax errors carry the line and column.
inline json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, origin + ": " + e.what());
  }
}

/// Sets `dotted.key=value` in the document. The value is read as JSON when it
/// parses as such (numbers, booleans, arrays) and as a string otherwise.
inline void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorKind::ConfigError,
          "override '" + assignment + "' must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &root;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    require(!path[i].empty(), ErrorKind::ConfigError, "empty segment in override key '" + key + "'");
    if (node->is_null()) *node = json::object();  // absent section
    if (!node->is_object()) {
      throw Error(ErrorKind::ConfigError, "override '" + key + "' descends into a non-object");
    }
    if (i + 1 == path.size()) {
      (*node)[path[i]] = value;
    } else {
      node = &(*node)[path[i]];
    }
  }
}

inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open configuration file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json root = parse_config_text(buffer.str(), path);
  for (const auto& o : overrides) apply_override(root, o);
  return config_from_json(root);
}

}  // namespace tcloak

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tcloak/errors.hpp"
#include "tcloak/vec.hpp"

namespace tcloak {

/// Uniform lattice on the box [-L, L]^n together with a uniform time axis.
/// Level k sits at time (first_step + k) * dt, so time 0 is a level whenever
/// first_step <= 0 < first_step + levels.
template <std::size_t Dim>
struct Grid {
  double L = 1.0;
  int points = 17;
  double dt = 0.0;
  std::int64_t first_step = 0;
  std::int64_t levels = 0;
  double cfl_limit = 0.9;

  double h() const { return 2.0 * L / (points - 1); }

  std::size_t point_count() const {
    std::size_t n = 1;
    for (std::size_t d = 0; d < Dim; ++d) n *= static_cast<std::size_t>(points);
    return n;
  }

  double time(std::int64_t level) const { return static_cast<double>(first_step + level) * dt; }
  double t_first() const { return time(0); }
  double t_last() const { return time(levels - 1); }

  /// Level holding time 0, or -1 if the window does not contain it.
  std::int64_t zero_level() const {
    return (first_step <= 0 && -first_step < levels) ? -first_step : -1;
  }

  /// Smallest level with time >= t (may equal `levels` when past the end).
  std::int64_t first_level_at_or_after(double t) const {
    auto k = static_cast<std::int64_t>(std::ceil(t / dt)) - first_step;
    while (k > 0 && time(k - 1) >= t) --k;
    while (time(k) < t) ++k;
    return k < 0 ? 0 : k;
  }

  std::array<int, Dim> unflatten(std::size_t flat) const {
    std::array<int, Dim> idx{};
    for (std::size_t d = 0; d < Dim; ++d) {
      idx[d] = static_cast<int>(flat % static_cast<std::size_t>(points));
      flat /= static_cast<std::size_t>(points);
    }
    return idx;
  }

  std::size_t flatten(const std::array<int, Dim>& idx) const {
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < Dim; ++d) {
      flat += static_cast<std::size_t>(idx[d]) * stride;
      stride *= static_cast<std::size_t>(points);
    }
    return flat;
  }

  std::size_t stride(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t d = 0; d < axis; ++d) s *= static_cast<std::size_t>(points);
    return s;
  }

  Vec<Dim> coord(std::size_t flat) const {
    const auto idx = unflatten(flat);
    Vec<Dim> x{};
    const double step = h();
    for (std::size_t d = 0; d < Dim; ++d) x[d] = -L + idx[d] * step;
    return x;
  }

  bool on_boundary(std::size_t flat) const {
    for (int i : unflatten(flat)) {
      if (i == 0 || i == points - 1) return true;
    }
    return false;
  }

  /// True when every node of the 3^n box around `flat` is interior.
  bool box_interior(std::size_t flat) const {
    for (int i : unflatten(flat)) {
      if (i < 2 || i > points - 3) return false;
    }
    return true;
  }

  double cfl_number(double speed) const {
    return speed * dt * std::sqrt(static_cast<double>(Dim)) / h();
  }

  void validate() const {
    require(L > 0.0 && std::isfinite(L), ErrorKind::ConfigError, "grid L must be positive");
    require(points >= 16, ErrorKind::ConfigError, "grid needs at least 16 points per axis");
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::ConfigError, "grid dt must be positive");
    require(levels >= 4, ErrorKind::ConfigError, "grid needs at least 4 time levels");
    require(cfl_limit > 0.0 && cfl_limit <= 1.0, ErrorKind::ConfigError,
            "cfl_limit must lie in (0, 1]");
  }

  /// Time axis covering [t_min, t_max] with 0 on a level.
  static Grid make(double L, int points, double dt, double t_min, double t_max,
                   double cfl_limit = 0.9) {
    require(t_min < 0.0 && t_max > 0.0, ErrorKind::ConfigError,
            "time window must satisfy t_min < 0 < t_max");
    require(dt > 0.0, ErrorKind::ConfigError, "dt must be positive");
    Grid g;
    g.L = L;
    g.points = points;
    g.dt = dt;
    g.cfl_limit = cfl_limit;
    const auto below = static_cast<std::int64_t>(std::ceil(-t_min / dt - 1e-9));
    const auto above = static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-9));
    g.first_step = -below;
    g.levels = below + above + 1;
    g.validate();
    return g;
  }

  /// Same lattice, levels [start, start + count) of this grid's time axis.
  Grid sub_window(std::int64_t start, std::int64_t count) const {
    Grid g = *this;
    g.first_step = first_step + start;
    g.levels = count;
    return g;
  }
};

enum class CellState : std::uint8_t { Defined = 0, Void = 1 };

/// Scalar field sampled on every grid point at every time level. Cells
/// marked Void carry a quiet NaN.
template <std::size_t Dim>
class SpacetimeField {
 public:
  static constexpr double void_value() { return std::numeric_limits<double>::quiet_NaN(); }

  SpacetimeField() = default;
  explicit SpacetimeField(Grid<Dim> grid)
      : grid_(grid),
        values_(static_cast<std::size_t>(grid.levels) * grid.point_count(), 0.0) {}

  const Grid<Dim>& grid() const { return grid_; }
  std::size_t point_count() const { return grid_.point_count(); }
  std::int64_t levels() const { return grid_.levels; }

  std::span<double> level(std::int64_t k) {
    return {values_.data() + static_cast<std::size_t>(k) * point_count(), point_count()};
  }
  std::span<const double> level(std::int64_t k) const {
    return {values_.data() + static_cast<std::size_t>(k) * point_count(), point_count()};
  }

  double& at(std::int64_t k, std::size_t p) { return values_[index(k, p)]; }
  double at(std::int64_t k, std::size_t p) const { return values_[index(k, p)]; }

  bool has_mask() const { return !mask_.empty(); }

  CellState state(std::int64_t k, std::size_t p) const {
    return mask_.empty() ? CellState::Defined : static_cast<CellState>(mask_[index(k, p)]);
  }

  void set_state(std::int64_t k, std::size_t p, CellState s) {
    if (mask_.empty()) {
      if (s == CellState::Defined) return;
      mask_.assign(values_.size(), 0);
    }
    mask_[index(k, p)] = static_cast<std::uint8_t>(s);
    if (s == CellState::Void) values_[index(k, p)] = void_value();
  }

  std::size_t void_count() const {
    std::size_t n = 0;
    for (auto m : mask_) n += (m != 0);
    return n;
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

 private:
  std::size_t index(std::int64_t k, std::size_t p) const {
    return static_cast<std::size_t>(k) * point_count() + p;
  }

  Grid<Dim> grid_{};
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace tcloak

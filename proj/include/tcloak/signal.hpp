#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tcloak/errors.hpp"
#include "tcloak/vec.hpp"

namespace tcloak {

/// Face of the box [-L, L]^n: axis index and side (-1 or +1).
struct Face {
  int axis = 0;
  int side = -1;

  friend bool operator==(const Face&, const Face&) = default;

  std::string name() const {
    return std::string(1, static_cast<char>('x' + axis)) + (side < 0 ? "-" : "+");
  }

  static Face parse(const std::string& s) {
    require(s.size() == 2 && (s[0] == 'x' || s[0] == 'y') && (s[1] == '-' || s[1] == '+'),
            ErrorKind::ConfigError, "unknown face '" + s + "' (expected x-, x+, y-, y+)");
    return Face{s[0] - 'x', s[1] == '-' ? -1 : 1};
  }
};

enum class PulseShape {
  Ricker,        // Mexican hat centred in the window, tapered to exact zero
  RaisedCosine,  // squared Hann bell sin^4 over the window
};

namespace detail {

/// C-infinity transition from 1 (x <= 0) to 0 (x >= 1).
inline double smooth_cutoff(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / x);
  const double b = std::exp(-1.0 / (1.0 - x));
  return b / (a + b);
}

}  // namespace detail

/// Dirichlet data f(t, x) on the driven faces: a temporal pulse with compact
/// support [t_on, t_off] times a bump along the face that vanishes at the
/// corners (so data on adjacent faces stay compatible).
template <std::size_t Dim>
struct BoundarySignal {
  PulseShape shape = PulseShape::Ricker;
  double t_on = -1.0;
  double t_off = -0.5;
  double amplitude = 1.0;
  std::vector<Face> faces{Face{0, -1}};

  void validate() const {
    require(t_off > t_on, ErrorKind::ConfigError, "signal needs t_off > t_on");
    require(std::isfinite(amplitude), ErrorKind::ConfigError, "signal amplitude must be finite");
    for (const auto& f : faces) {
      require(f.axis >= 0 && static_cast<std::size_t>(f.axis) < Dim, ErrorKind::ConfigError,
              "face " + f.name() + " does not exist in this dimension");
    }
  }

  /// Temporal factor, identically zero outside [t_on, t_off].
  double pulse(double t) const {
    if (t <= t_on || t >= t_off) return 0.0;
    const double width = t_off - t_on;
    if (shape == PulseShape::RaisedCosine) {
      const double s = std::sin(std::numbers::pi * (t - t_on) / width);
      return amplitude * s * s * s * s;
    }
    const double half = 0.5 * width;
    const double tau = t - (t_on + half);
    const double sigma = half / 6.0;
    const double q = (tau / sigma) * (tau / sigma);
    const double taper = detail::smooth_cutoff((std::abs(tau) / half - 0.75) / 0.25);
    return amplitude * (1.0 - q) * std::exp(-0.5 * q) * taper;
  }

  /// Spatial weight of face `f` at boundary point x.
  double face_weight(const Face& f, const Vec<Dim>& x, double L) const {
    if constexpr (Dim == 1) {
      (void)f;
      (void)x;
      (void)L;
      return 1.0;
    } else {
      const double s = x[1 - f.axis];
      const double w = std::sin(std::numbers::pi * (s + L) / (2.0 * L));
      return w * w * w * w;
    }
  }

  bool drives(const Face& f) const {
    for (const auto& g : faces) {
      if (g == f) return true;
    }
    return false;
  }

  /// f(t, x) at a boundary point lying on face `f`.
  double value(double t, const Face& f, const Vec<Dim>& x, double L) const {
    if (!drives(f)) return 0.0;
    const double p = pulse(t);
    if (p == 0.0) return 0.0;
    return p * face_weight(f, x, L);
  }
};

}  // namespace tcloak

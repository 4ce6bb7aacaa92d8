#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "tcloak/errors.hpp"
#include "tcloak/profile.hpp"
#include "tcloak/vec.hpp"

namespace tcloak {

template <std::size_t Dim>
struct Covector {
  double eta0 = 0.0;
  Vec<Dim> eta{};
};

/// Principal symbol of the time-shifted wave operator,
/// eta0^2 - a^2 * sum_j (eta_j + c_j eta0)^2.
template <std::size_t Dim>
double principal_symbol(double a, const Vec<Dim>& cgrad, double eta0, const Vec<Dim>& eta) {
  double s = 0.0;
  for (std::size_t j = 0; j < Dim; ++j) {
    const double term = eta[j] + cgrad[j] * eta0;
    s += term * term;
  }
  return eta0 * eta0 - a * a * s;
}

template <std::size_t Dim>
double principal_symbol(double a, const Vec<Dim>& cgrad, const Covector<Dim>& xi) {
  return principal_symbol<Dim>(a, cgrad, xi.eta0, xi.eta);
}

/// 1 - a^2 |grad c|^2; strict hyperbolicity in y0 holds iff this is positive.
template <std::size_t Dim>
double hyperbolicity_value(double a, const Vec<Dim>& cgrad) {
  return 1.0 - a * a * dot<Dim>(cgrad, cgrad);
}

/// The two roots eta0 of the principal symbol for a fixed spatial covector,
/// returned as (plus branch, minus branch).
///
/// Throws NotHyperbolic whenever 1 - a^2|grad c|^2 <= 0. For n >= 2 this is
/// exactly when the covector orthogonal to grad c produces a non-real or
/// double root; in 1D the roots stay real but y0 no longer separates them.
template <std::size_t Dim>
std::pair<double, double> characteristic_roots(double a, const Vec<Dim>& cgrad,
                                               const Vec<Dim>& eta) {
  const double eta_sq = dot<Dim>(eta, eta);
  require(eta_sq > 0.0, ErrorKind::PreconditionViolated,
          "characteristic_roots needs a nonzero spatial covector");
  const double a2 = a * a;
  const double denom = 1.0 - a2 * dot<Dim>(cgrad, cgrad);
  const double ceta = dot<Dim>(cgrad, eta);
  const double disc = a2 * a2 * ceta * ceta + denom * a2 * eta_sq;
  if (denom <= 0.0 || disc < 0.0) {
    throw Error(ErrorKind::NotHyperbolic,
                "1 - a^2|grad c|^2 = " + std::to_string(denom) + ", discriminant = " +
                    std::to_string(disc));
  }
  const double root = std::sqrt(disc);
  return {(a2 * ceta + root) / denom, (a2 * ceta - root) / denom};
}

/// Largest characteristic speed max_{|eta|=1} |eta0| at a point, reached for
/// eta parallel to grad c: a / (1 - a |grad c|).
template <std::size_t Dim>
double max_characteristic_slope(double a, const Vec<Dim>& cgrad) {
  const double g = a * norm<Dim>(cgrad);
  if (g >= 1.0) {
    throw Error(ErrorKind::NotHyperbolic, "a|grad c| = " + std::to_string(g) + " >= 1");
  }
  return a / (1.0 - g);
}

/// Lattice of spatial sample points (and optional sample times) used to
/// turn pointwise conditions into a min-reduction.
template <std::size_t Dim>
struct SampleGrid {
  std::vector<Vec<Dim>> points;
  std::vector<double> times{0.0};

  std::size_t size() const { return points.size() * times.size(); }

  /// Uniform lattice with spacing c1/per_radius over the box center +- c1,
  /// which covers the annulus c1/2 <= r <= c1.
  static SampleGrid covering(const CloakProfile<Dim>& profile, int per_radius = 64) {
    require(per_radius >= 1, ErrorKind::PreconditionViolated, "per_radius must be positive");
    SampleGrid grid;
    const double step = profile.c1 / per_radius;
    const int n = 2 * per_radius + 1;
    std::size_t total = 1;
    for (std::size_t d = 0; d < Dim; ++d) total *= static_cast<std::size_t>(n);
    grid.points.reserve(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
      Vec<Dim> x{};
      std::size_t rest = flat;
      for (std::size_t d = 0; d < Dim; ++d) {
        const int i = static_cast<int>(rest % static_cast<std::size_t>(n));
        rest /= static_cast<std::size_t>(n);
        x[d] = profile.center[d] + (i - per_radius) * step;
      }
      grid.points.push_back(x);
    }
    return grid;
  }
};

template <std::size_t Dim>
struct FeasibilityReport {
  double margin_min = std::numeric_limits<double>::infinity();
  Vec<Dim> argmin{};
  double argmin_time = 0.0;
  bool admissible = false;
  std::size_t samples = 0;
};

namespace detail {

template <std::size_t Dim, typename MarginFn>
FeasibilityReport<Dim> min_reduce(const SampleGrid<Dim>& grid, MarginFn&& margin) {
  FeasibilityReport<Dim> report;
  for (double t : grid.times) {
    for (const auto& x : grid.points) {
      const double m = margin(t, x);
      ++report.samples;
      if (m < report.margin_min) {
        report.margin_min = m;
        report.argmin = x;
        report.argmin_time = t;
      }
    }
  }
  report.admissible = report.samples > 0 && report.margin_min > 0.0;
  return report;
}

}  // namespace detail

/// min over the samples of 1 - a^2 |grad c(x)|^2.
template <std::size_t Dim>
FeasibilityReport<Dim> hyperbolicity_margin(const CloakProfile<Dim>& profile, double a,
                                            const SampleGrid<Dim>& grid) {
  return detail::min_reduce(grid, [&](double, const Vec<Dim>& x) {
    return hyperbolicity_value<Dim>(a, c_grad(profile, x));
  });
}

/// Supremum of c0 for which the margin stays positive: c1 / (2 a max s').
/// For the quintic profile this is 4 c1 / (15 a).
inline double max_admissible_c0(double a, double c1, Smoothstep kind = Smoothstep::Quintic) {
  require(a > 0.0 && c1 > 0.0, ErrorKind::PreconditionViolated,
          "max_admissible_c0 needs a > 0 and c1 > 0");
  return c1 / (2.0 * a * smoothstep::max_slope(kind));
}

}  // namespace tcloak

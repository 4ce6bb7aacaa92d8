#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "tcloak/errors.hpp"
#include "tcloak/vec.hpp"

namespace tcloak {

/// Polynomial smoothstep s(t) on [0,1] with s(0)=0, s(1)=1 and vanishing
/// derivatives at both ends.
enum class Smoothstep {
  Quintic,  // 6t^5 - 15t^4 + 10t^3, C2 seams
  Septic,   // -20t^7 + 70t^6 - 84t^5 + 35t^4, C3 seams
};

namespace smoothstep {

constexpr double value(Smoothstep kind, double t) {
  if (kind == Smoothstep::Quintic) return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  return t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}

constexpr double slope(Smoothstep kind, double t) {
  const double u = t * (1.0 - t);
  if (kind == Smoothstep::Quintic) return 30.0 * u * u;
  return 140.0 * u * u * u;
}

constexpr double curvature(Smoothstep kind, double t) {
  const double u = t * (1.0 - t);
  if (kind == Smoothstep::Quintic) return 60.0 * u * (1.0 - 2.0 * t);
  return 420.0 * u * u * (1.0 - 2.0 * t);
}

/// max over [0,1] of s'(t), attained at t = 1/2.
constexpr double max_slope(Smoothstep kind) {
  return kind == Smoothstep::Quintic ? 15.0 / 8.0 : 35.0 / 16.0;
}

}  // namespace smoothstep

/// Partition of spacetime by the time change: below the jump, the cloaked
/// void, and the shifted region above it.
enum class RegionLabel { YMinus, YPlus, YZero };

inline std::string to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::YMinus: return "YMinus";
    case RegionLabel::YPlus: return "YPlus";
    case RegionLabel::YZero: return "YZero";
  }
  return "?";
}

/// Radial bump c(x) = c0 * chi(|x - center|) with chi = 1 on the plateau
/// |x - center| <= c1/2 and chi = 0 for |x - center| >= c1.
template <std::size_t Dim>
struct CloakProfile {
  double c0 = 0.0;
  double c1 = 1.0;
  Vec<Dim> center{};
  Smoothstep kind = Smoothstep::Quintic;

  void validate() const {
    require(std::isfinite(c0) && c0 >= 0.0, ErrorKind::PreconditionViolated,
            "profile c0 must be finite and non-negative");
    require(std::isfinite(c1) && c1 > 0.0, ErrorKind::PreconditionViolated,
            "profile c1 must be finite and positive");
  }
};

namespace detail {

template <std::size_t Dim>
double radius(const CloakProfile<Dim>& p, const Vec<Dim>& x) {
  return norm<Dim>(x - p.center);
}

/// Radial coordinate mapped onto the smoothstep argument.
inline double taper_coordinate(double r, double c1) {
  const double half = 0.5 * c1;
  return std::clamp((r - half) / half, 0.0, 1.0);
}

}  // namespace detail

template <std::size_t Dim>
double chi(const CloakProfile<Dim>& p, const Vec<Dim>& x) {
  const double r = detail::radius(p, x);
  if (r <= 0.5 * p.c1) return 1.0;
  if (r >= p.c1) return 0.0;
  return 1.0 - smoothstep::value(p.kind, detail::taper_coordinate(r, p.c1));
}

template <std::size_t Dim>
double c_value(const CloakProfile<Dim>& p, const Vec<Dim>& x) {
  return p.c0 * chi(p, x);
}

template <std::size_t Dim>
Vec<Dim> c_grad(const CloakProfile<Dim>& p, const Vec<Dim>& x) {
  Vec<Dim> g{};
  const double r = detail::radius(p, x);
  if (r <= 0.5 * p.c1 || r >= p.c1) return g;
  const double inv_half = 2.0 / p.c1;
  const double dchi_dr = -smoothstep::slope(p.kind, detail::taper_coordinate(r, p.c1)) * inv_half;
  const double factor = p.c0 * dchi_dr / r;
  for (std::size_t i = 0; i < Dim; ++i) g[i] = factor * (x[i] - p.center[i]);
  return g;
}

template <std::size_t Dim>
double c_laplacian(const CloakProfile<Dim>& p, const Vec<Dim>& x) {
  const double r = detail::radius(p, x);
  if (r <= 0.5 * p.c1 || r >= p.c1) return 0.0;
  const double inv_half = 2.0 / p.c1;
  const double t = detail::taper_coordinate(r, p.c1);
  const double d1 = -smoothstep::slope(p.kind, t) * inv_half;
  const double d2 = -smoothstep::curvature(p.kind, t) * inv_half * inv_half;
  return p.c0 * (d2 + static_cast<double>(Dim - 1) * d1 / r);
}

/// Largest |grad c| over all of R^n, attained on the sphere r = 3c1/4.
template <std::size_t Dim>
double max_grad_norm(const CloakProfile<Dim>& p) {
  return p.c0 * smoothstep::max_slope(p.kind) * 2.0 / p.c1;
}

/// Time change y0 = phi0(x0, x): identity in the past, shifted by c(x) from
/// x0 = 0 onwards.
template <std::size_t Dim>
double phi0(const CloakProfile<Dim>& p, double x0, const Vec<Dim>& x) {
  return x0 >= 0.0 ? x0 + c_value(p, x) : x0;
}

template <std::size_t Dim>
RegionLabel classify(const CloakProfile<Dim>& p, double y0, const Vec<Dim>& y) {
  if (y0 < 0.0) return RegionLabel::YMinus;
  return y0 < c_value(p, y) ? RegionLabel::YZero : RegionLabel::YPlus;
}

/// Inverse of phi0 on the complement of the void.
template <std::size_t Dim>
double psi(const CloakProfile<Dim>& p, double y0, const Vec<Dim>& y) {
  if (y0 < 0.0) return y0;
  const double c = c_value(p, y);
  if (y0 < c) {
    throw Error(ErrorKind::CloakedPoint,
                "y0 = " + std::to_string(y0) + " lies inside the cloaked region (c = " +
                    std::to_string(c) + ")");
  }
  return y0 - c;
}

}  // namespace tcloak

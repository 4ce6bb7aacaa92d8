#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace tcloak {

/// Spatial point or vector in R^Dim.
template <std::size_t Dim>
using Vec = std::array<double, Dim>;

template <std::size_t Dim>
constexpr double dot(const Vec<Dim>& a, const Vec<Dim>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < Dim; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t Dim>
inline double norm(const Vec<Dim>& a) {
  return std::sqrt(dot<Dim>(a, a));
}

template <std::size_t Dim>
constexpr Vec<Dim> operator-(const Vec<Dim>& a, const Vec<Dim>& b) {
  Vec<Dim> r{};
  for (std::size_t i = 0; i < Dim; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t Dim>
constexpr Vec<Dim> operator+(const Vec<Dim>& a, const Vec<Dim>& b) {
  Vec<Dim> r{};
  for (std::size_t i = 0; i < Dim; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t Dim>
constexpr Vec<Dim> operator*(double s, const Vec<Dim>& a) {
  Vec<Dim> r{};
  for (std::size_t i = 0; i < Dim; ++i) r[i] = s * a[i];
  return r;
}

}  // namespace tcloak

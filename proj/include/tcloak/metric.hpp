#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tcloak/errors.hpp"
#include "tcloak/profile.hpp"
#include "tcloak/symbol.hpp"
#include "tcloak/vec.hpp"

namespace tcloak {

/// Contravariant coefficients g^{jk}, index 0 is time.
template <std::size_t Dim>
using MetricMatrix = std::array<std::array<double, Dim + 1>, Dim + 1>;

/// Coefficient field g^{jk}(x0, x) of a second-order hyperbolic operator in
/// divergence form.
template <std::size_t Dim>
class Metric {
 public:
  using Eval = std::function<MetricMatrix<Dim>(double, const Vec<Dim>&)>;

  Metric(std::string name, Eval eval) : name_(std::move(name)), eval_(std::move(eval)) {}

  MetricMatrix<Dim> operator()(double x0, const Vec<Dim>& x) const { return eval_(x0, x); }
  const std::string& name() const { return name_; }

  /// g^{00} = 1, g^{jj} = -a^2.
  static Metric minkowski(double a) {
    return Metric("minkowski", [a](double, const Vec<Dim>&) {
      MetricMatrix<Dim> g{};
      g[0][0] = 1.0;
      for (std::size_t j = 1; j <= Dim; ++j) g[j][j] = -a * a;
      return g;
    });
  }

  /// g^{00} constant, g^{jj} = -d_j (1 + variation cos(x0) cos(x_j)),
  /// off-diagonal zero.
  static Metric diagonal(double g00, const Vec<Dim>& spatial, double variation = 0.0) {
    return Metric("diagonal", [=](double x0, const Vec<Dim>& x) {
      MetricMatrix<Dim> g{};
      g[0][0] = g00;
      for (std::size_t j = 1; j <= Dim; ++j) {
        const double wobble = variation == 0.0 ? 1.0 : 1.0 + variation * std::cos(x0) * std::cos(x[j - 1]);
        g[j][j] = -spatial[j - 1] * wobble;
      }
      return g;
    });
  }

 private:
  std::string name_;
  Eval eval_;
};

/// Time-independent metric tabulated on a uniform lattice; values are
/// interpolated multilinearly and clamped to the table extent.
template <std::size_t Dim>
struct MetricTable {
  struct Axis {
    double min = -1.0;
    double max = 1.0;
    int count = 2;
  };

  std::array<Axis, Dim> axes{};
  /// entries[j][k] holds one value per lattice node (x fastest); the table is
  /// symmetrized on evaluation from the upper triangle j <= k.
  std::array<std::array<std::vector<double>, Dim + 1>, Dim + 1> entries{};

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& ax : axes) n *= static_cast<std::size_t>(ax.count);
    return n;
  }

  void validate() const {
    for (const auto& ax : axes) {
      require(ax.count >= 2 && ax.max > ax.min, ErrorKind::ConfigError,
              "metric table axes need count >= 2 and max > min");
    }
    for (std::size_t j = 0; j <= Dim; ++j) {
      for (std::size_t k = j; k <= Dim; ++k) {
        require(entries[j][k].empty() || entries[j][k].size() == node_count(),
                ErrorKind::ConfigError,
                "metric table entry " + std::to_string(j) + std::to_string(k) +
                    " has the wrong number of values");
      }
    }
  }

  Metric<Dim> to_metric() const {
    validate();
    MetricTable table = *this;
    return Metric<Dim>("table", [table](double, const Vec<Dim>& x) { return table.eval(x); });
  }

  MetricMatrix<Dim> eval(const Vec<Dim>& x) const {
    std::array<int, Dim> base{};
    std::array<double, Dim> frac{};
    for (std::size_t d = 0; d < Dim; ++d) {
      const auto& ax = axes[d];
      const double step = (ax.max - ax.min) / (ax.count - 1);
      const double s = std::clamp((x[d] - ax.min) / step, 0.0, static_cast<double>(ax.count - 1));
      int i = std::min(static_cast<int>(std::floor(s)), ax.count - 2);
      base[d] = i;
      frac[d] = s - i;
    }
    MetricMatrix<Dim> g{};
    for (std::size_t j = 0; j <= Dim; ++j) {
      for (std::size_t k = j; k <= Dim; ++k) {
        const auto& values = entries[j][k];
        if (values.empty()) continue;
        double acc = 0.0;
        for (unsigned corner = 0; corner < (1u << Dim); ++corner) {
          double w = 1.0;
          std::size_t flat = 0;
          std::size_t stride = 1;
          for (std::size_t d = 0; d < Dim; ++d) {
            const int bit = (corner >> d) & 1u;
            w *= bit ? frac[d] : 1.0 - frac[d];
            flat += static_cast<std::size_t>(base[d] + bit) * stride;
            stride *= static_cast<std::size_t>(axes[d].count);
          }
          acc += w * values[flat];
        }
        g[j][k] = acc;
        g[k][j] = acc;
      }
    }
    return g;
  }
};

namespace detail {

template <std::size_t Dim>
double spatial_determinant(const MetricMatrix<Dim>& g) {
  if constexpr (Dim == 1) {
    return g[1][1];
  } else if constexpr (Dim == 2) {
    return g[1][1] * g[2][2] - g[1][2] * g[2][1];
  } else {
    static_assert(Dim <= 2, "only n <= 2 is supported");
    return 0.0;
  }
}

/// Spacetime gradient of phi0: (1, 0) in the past, (1, grad c) from x0 = 0.
template <std::size_t Dim>
std::array<double, Dim + 1> phi0_gradient(const CloakProfile<Dim>& profile, double x0,
                                          const Vec<Dim>& x) {
  std::array<double, Dim + 1> d{};
  d[0] = 1.0;
  if (x0 >= 0.0) {
    const auto g = c_grad(profile, x);
    for (std::size_t j = 0; j < Dim; ++j) d[j + 1] = g[j];
  }
  return d;
}

}  // namespace detail

/// Checks the standing assumptions on g at every sample: symmetry, g^{00} > 0
/// and a non-degenerate spatial block.
template <std::size_t Dim>
void validate_metric(const Metric<Dim>& metric, const SampleGrid<Dim>& samples) {
  for (double t : samples.times) {
    for (const auto& x : samples.points) {
      const auto g = metric(t, x);
      for (std::size_t j = 0; j <= Dim; ++j) {
        for (std::size_t k = 0; k <= Dim; ++k) {
          require(g[j][k] == g[k][j], ErrorKind::PreconditionViolated, "metric is not symmetric");
        }
      }
      require(g[0][0] > 0.0, ErrorKind::PreconditionViolated, "metric needs g^00 > 0");
      require(detail::spatial_determinant<Dim>(g) != 0.0, ErrorKind::PreconditionViolated,
              "metric spatial block is singular");
    }
  }
}

/// Coefficients of the operator after the change of time y0 = phi0(x0, x):
/// spatial block unchanged, the time row and column contracted with grad phi0.
template <std::size_t Dim>
MetricMatrix<Dim> transform_metric(const Metric<Dim>& metric, const CloakProfile<Dim>& profile,
                                   double x0, const Vec<Dim>& x) {
  const auto g = metric(x0, x);
  const auto dphi = detail::phi0_gradient(profile, x0, x);
  MetricMatrix<Dim> out = g;
  double g00 = 0.0;
  for (std::size_t p = 0; p <= Dim; ++p) {
    for (std::size_t r = 0; r <= Dim; ++r) g00 += g[p][r] * dphi[p] * dphi[r];
  }
  out[0][0] = g00;
  for (std::size_t j = 1; j <= Dim; ++j) {
    double g0j = 0.0;
    for (std::size_t p = 0; p <= Dim; ++p) g0j += g[p][j] * dphi[p];
    out[0][j] = g0j;
    out[j][0] = g0j;
  }
  return out;
}

/// min over the samples of the transformed g^{00}; positive means the
/// transformed operator stays hyperbolic in y0. Samples are taken on the
/// shifted branch x0 >= 0 unless the sample time is negative.
template <std::size_t Dim>
FeasibilityReport<Dim> check_hyperbolic_general(const Metric<Dim>& metric,
                                                const CloakProfile<Dim>& profile,
                                                const SampleGrid<Dim>& samples) {
  return detail::min_reduce(samples, [&](double t, const Vec<Dim>& x) {
    return transform_metric(metric, profile, t, x)[0][0];
  });
}

/// Boundary point of the cylinder R x dD together with its unit spacetime
/// normal (nu0 = 0 for a cylinder).
template <std::size_t Dim>
struct BoundarySample {
  Vec<Dim> point{};
  std::array<double, Dim + 1> normal{};
};

struct TimelikeReport {
  bool original = false;
  bool transformed = false;
  double max_form_original = -std::numeric_limits<double>::infinity();
  double max_form_transformed = -std::numeric_limits<double>::infinity();
  std::size_t samples = 0;

  bool ok() const { return original && transformed; }
};

template <std::size_t Dim>
TimelikeReport check_timelike_boundary(const Metric<Dim>& metric, const CloakProfile<Dim>& profile,
                                       const std::vector<BoundarySample<Dim>>& boundary,
                                       const std::vector<double>& times = {0.0}) {
  auto form = [](const MetricMatrix<Dim>& g, const std::array<double, Dim + 1>& nu) {
    double s = 0.0;
    for (std::size_t j = 0; j <= Dim; ++j) {
      for (std::size_t k = 0; k <= Dim; ++k) s += g[j][k] * nu[j] * nu[k];
    }
    return s;
  };
  TimelikeReport report;
  for (double t : times) {
    for (const auto& b : boundary) {
      report.max_form_original = std::max(report.max_form_original, form(metric(t, b.point), b.normal));
      report.max_form_transformed = std::max(
          report.max_form_transformed, form(transform_metric(metric, profile, t, b.point), b.normal));
      ++report.samples;
    }
  }
  report.original = report.samples > 0 && report.max_form_original < 0.0;
  report.transformed = report.samples > 0 && report.max_form_transformed < 0.0;
  return report;
}

/// Unit outward normals sampled along the faces of the box [-L, L]^n.
template <std::size_t Dim>
std::vector<BoundarySample<Dim>> box_boundary_samples(double L, int per_face = 33) {
  std::vector<BoundarySample<Dim>> out;
  for (std::size_t axis = 0; axis < Dim; ++axis) {
    for (int side : {-1, 1}) {
      const int count = Dim == 1 ? 1 : per_face;
      for (int i = 0; i < count; ++i) {
        BoundarySample<Dim> b;
        b.point[axis] = side * L;
        if constexpr (Dim == 2) {
          b.point[1 - axis] = -L + 2.0 * L * i / (per_face - 1);
        }
        b.normal[axis + 1] = side;
        out.push_back(b);
      }
    }
  }
  return out;
}

struct EllipticReport {
  /// min over samples of g^{00} + sum_{j,k>=1} g^{jk} c_j c_k
  double transformed_g00_min = std::numeric_limits<double>::infinity();
  bool transformed_g00_positive = false;
  /// |grad c|^2 <= g^{00} / C0 at every sample
  bool gradient_bound = false;
  double worst_bound_ratio = 0.0;  // max of |grad c|^2 C0 / g^{00}
  std::size_t samples = 0;
};

/// Special case with no time-space coupling and a uniformly elliptic spatial
/// block, sum g^{jk} xi_j xi_k <= -C0 |xi|^2.
template <std::size_t Dim>
EllipticReport elliptic_bound_check(const Metric<Dim>& metric, double C0,
                                    const CloakProfile<Dim>& profile,
                                    const SampleGrid<Dim>& samples) {
  require(C0 > 0.0, ErrorKind::PreconditionViolated, "ellipticity constant C0 must be positive");
  EllipticReport report;
  report.gradient_bound = true;
  for (double t : samples.times) {
    for (const auto& x : samples.points) {
      const auto g = metric(t, x);
      for (std::size_t j = 1; j <= Dim; ++j) {
        if (std::abs(g[0][j]) > 1e-12) {
          throw Error(ErrorKind::PreconditionViolated,
                      "elliptic bound check needs g^{0j} = 0, found " + std::to_string(g[0][j]));
        }
      }
      const auto c = c_grad(profile, x);
      double value = g[0][0];
      for (std::size_t j = 0; j < Dim; ++j) {
        for (std::size_t k = 0; k < Dim; ++k) value += g[j + 1][k + 1] * c[j] * c[k];
      }
      report.transformed_g00_min = std::min(report.transformed_g00_min, value);
      const double ratio = dot<Dim>(c, c) * C0 / g[0][0];
      report.worst_bound_ratio = std::max(report.worst_bound_ratio, ratio);
      if (ratio > 1.0) report.gradient_bound = false;
      ++report.samples;
    }
  }
  report.transformed_g00_positive = report.samples > 0 && report.transformed_g00_min > 0.0;
  if (report.samples == 0) report.gradient_bound = false;
  return report;
}

}  // namespace tcloak

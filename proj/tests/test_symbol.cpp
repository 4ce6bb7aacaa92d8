#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tcloak/metric.hpp"
#include "tcloak/symbol.hpp"

using namespace tcloak;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;  // sentinel: nothing thrown
}

CloakProfile<2> demo_profile(double c0 = 0.05, double c1 = 0.25) {
  CloakProfile<2> p;
  p.c0 = c0;
  p.c1 = c1;
  return p;
}

}  // namespace

TEST(PrincipalSymbol, Examples) {
  EXPECT_EQ(principal_symbol<1>(1.0, {0.0}, 1.0, {1.0}), 0.0);
  EXPECT_EQ(principal_symbol<1>(2.0, {0.0}, 1.0, {1.0}), -3.0);
  EXPECT_EQ(principal_symbol<1>(1.0, {0.5}, 2.0, {0.0}), 3.0);
}

TEST(CharacteristicRoots, Examples) {
  auto flat = characteristic_roots<2>(1.0, {0.0, 0.0}, {0.0, 1.0});
  EXPECT_EQ(flat.first, 1.0);
  EXPECT_EQ(flat.second, -1.0);
  auto tilted = characteristic_roots<2>(1.0, {0.5, 0.0}, {0.0, 1.0});
  EXPECT_NEAR(tilted.first, 1.1547005383792515, 1e-12);
  EXPECT_NEAR(tilted.second, -1.1547005383792515, 1e-12);
  EXPECT_EQ(kind_of([] { characteristic_roots<2>(1.0, {2.0, 0.0}, {0.0, 1.0}); }),
            ErrorKind::NotHyperbolic);
  EXPECT_EQ(kind_of([] { characteristic_roots<2>(1.0, {0.0, 0.0}, {0.0, 0.0}); }),
            ErrorKind::PreconditionViolated);
}

TEST(CharacteristicRoots, GenuineDistinctZeros) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = 0.2 + 2.0 * std::abs(u(rng));
    Vec<2> g{u(rng), u(rng)};
    const double gn = norm<2>(g);
    const double target = 0.95 * std::abs(u(rng)) / a;  // a|g| < 1
    if (gn > 0.0) g = (target / gn) * g;
    const Vec<2> eta{u(rng), u(rng)};
    if (norm<2>(eta) < 1e-3) continue;
    const auto [p, m] = characteristic_roots<2>(a, g, eta);
    EXPECT_GT(p - m, 0.0);
    for (double r : {p, m}) {
      double scale = r * r;
      for (std::size_t j = 0; j < 2; ++j) scale += a * a * (std::abs(eta[j]) + std::abs(g[j] * r)) * (std::abs(eta[j]) + std::abs(g[j] * r));
      EXPECT_LE(std::abs(principal_symbol<2>(a, g, r, eta)), 1e-9 * scale);
    }
  }
}

TEST(CharacteristicRoots, ClassificationMatchesMargin) {
  // closed-form margin 1 - a^2|g|^2 decides; 10^4 samples straddling it
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int misclassified = 0;
  for (int i = 0; i < 10000; ++i) {
    const double a = 0.1 + 3.0 * std::abs(u(rng));
    const Vec<2> g{1.5 * u(rng) / a, 1.5 * u(rng) / a};
    Vec<2> eta{u(rng), u(rng)};
    if (i % 4 == 0) eta = {-g[1], g[0]};  // c_y . eta = 0
    if (norm<2>(eta) == 0.0) continue;
    const bool hyperbolic = hyperbolicity_value<2>(a, g) > 0.0;
    bool thrown = false;
    try {
      characteristic_roots<2>(a, g, eta);
    } catch (const Error& e) {
      thrown = e.kind() == ErrorKind::NotHyperbolic;
    }
    misclassified += (thrown == hyperbolic);
  }
  EXPECT_EQ(misclassified, 0);
}

TEST(MaxCharacteristicSlope, MatchesBruteForce) {
  // a = 1, |grad c| = 0.5: the aligned covector gives a / (1 - a|grad c|) = 2
  EXPECT_DOUBLE_EQ(max_characteristic_slope<2>(1.0, {0.5, 0.0}), 2.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double a = 0.5 + std::abs(u(rng));
    Vec<2> g{u(rng), u(rng)};
    g = (0.9 * std::abs(u(rng)) / (a * norm<2>(g))) * g;
    double best = 0.0;
    for (int k = 0; k < 20000; ++k) {
      const double th = 2.0 * 3.141592653589793 * k / 20000.0;
      const auto [p, m] = characteristic_roots<2>(a, g, {std::cos(th), std::sin(th)});
      best = std::max({best, std::abs(p), std::abs(m)});
    }
    EXPECT_NEAR(max_characteristic_slope<2>(a, g), best, 1e-6 * best);
  }
}

TEST(HyperbolicityMargin, Examples) {
  const double c1 = 0.25;
  const auto ok = hyperbolicity_margin(demo_profile(0.5 * 4.0 * c1 / 15.0, c1), 1.0,
                                       SampleGrid<2>::covering(demo_profile(0.0, c1)));
  EXPECT_TRUE(ok.admissible);
  const auto critical = demo_profile(4.0 * c1 / 15.0, c1);
  // the covering lattice does not hit r = 3c1/4 exactly; sample the ring there
  SampleGrid<2> ring;
  for (int k = 0; k < 64; ++k) {
    const double th = 2.0 * 3.141592653589793 * k / 64.0;
    ring.points.push_back({0.75 * c1 * std::cos(th), 0.75 * c1 * std::sin(th)});
  }
  const auto edge = hyperbolicity_margin(critical, 1.0, ring);
  EXPECT_NEAR(edge.margin_min, 0.0, 1e-12);
  EXPECT_FALSE(edge.admissible && edge.margin_min > 1e-12);
  const auto still = hyperbolicity_margin(critical, 0.0, SampleGrid<2>::covering(critical));
  EXPECT_EQ(still.margin_min, 1.0);
  EXPECT_TRUE(still.admissible);
}

TEST(HyperbolicityMargin, CoveringSpacing) {
  const auto p = demo_profile(0.05, 0.25);
  const auto g = SampleGrid<2>::covering(p, 64);
  EXPECT_EQ(g.points.size(), 129u * 129u);
  EXPECT_NEAR(g.points[1][0] - g.points[0][0], 0.25 / 64, 1e-15);
}

TEST(MaxAdmissibleC0, Examples) {
  EXPECT_DOUBLE_EQ(max_admissible_c0(1.0, 15.0), 4.0);
  EXPECT_DOUBLE_EQ(max_admissible_c0(2.0, 15.0), 2.0);
  EXPECT_LT(max_admissible_c0(1e12, 15.0), 1e-11);
  // septic: c1 / (2 a 35/16)
  EXPECT_DOUBLE_EQ(max_admissible_c0(1.0, 35.0, Smoothstep::Septic), 8.0);
}

TEST(TransformMetric, Examples) {
  const double a = 1.3;
  const auto g = Metric<2>::minkowski(a);
  const auto flat = demo_profile(0.0);
  const Vec<2> x{0.17, -0.05};
  EXPECT_EQ(transform_metric(g, flat, 0.4, x), g(0.4, x));
  const auto p = demo_profile(0.05);
  EXPECT_EQ(transform_metric(g, p, 0.4, p.center), g(0.4, p.center));
  const Vec<2> y{0.75 * p.c1, 0.0};
  const double s = c_grad(p, y)[0];
  const auto h = transform_metric(g, p, 0.4, y);
  EXPECT_NEAR(h[0][0], 1.0 - a * a * s * s, 1e-15);
  EXPECT_NEAR(h[0][1], -a * a * s, 1e-15);
  EXPECT_EQ(h[0][1], h[1][0]);
  // below x0 = 0 the gradient is the identity one
  EXPECT_EQ(transform_metric(g, p, -0.4, y), g(-0.4, y));
}

TEST(TransformMetric, SymmetricAndMatchesClosedFormG00) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const auto p = demo_profile(0.05);
  const auto diag = Metric<2>::diagonal(1.2, {0.7, 2.0}, 0.3);
  const auto mink = Metric<2>::minkowski(1.1);
  for (int i = 0; i < 2000; ++i) {
    const Vec<2> x{u(rng), u(rng)};
    const double t = u(rng) + 0.3;
    const auto h = transform_metric(diag, p, t, x);
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(h[j][k] - h[k][j], 0.0);
    }
    const double lhs = transform_metric(mink, p, std::abs(t), x)[0][0];
    EXPECT_NEAR(lhs, hyperbolicity_value<2>(1.1, c_grad(p, x)), 1e-12);
  }
}

TEST(CheckHyperbolicGeneral, Examples) {
  const auto p = demo_profile(0.05);
  const auto samples = SampleGrid<2>::covering(p);
  const auto general = check_hyperbolic_general(Metric<2>::minkowski(1.0), p, samples);
  const auto direct = hyperbolicity_margin(p, 1.0, samples);
  EXPECT_NEAR(general.margin_min, direct.margin_min, 1e-12);
  const auto zero = check_hyperbolic_general(Metric<2>::diagonal(0.7, {1.0, 1.0}), demo_profile(0.0), samples);
  EXPECT_EQ(zero.margin_min, 0.7);
  SampleGrid<2> one;
  // a point where grad c = (0.4, 0): pick c0 so that the ring r = 3c1/4 has |grad c| = 0.4
  auto q = demo_profile(0.4 * 0.25 / (2.0 * 15.0 / 8.0));
  one.points.push_back({0.75 * q.c1, 0.0});
  const auto d = check_hyperbolic_general(Metric<2>::diagonal(1.0, {4.0, 4.0}), q, one);
  EXPECT_NEAR(d.margin_min, 0.36, 1e-12);
}

TEST(CheckTimelikeBoundary, Examples) {
  const auto p = demo_profile(0.05);
  const auto normals = box_boundary_samples<2>(1.0);
  EXPECT_TRUE(check_timelike_boundary(Metric<2>::minkowski(2.0), p, normals).ok());
  EXPECT_DOUBLE_EQ(check_timelike_boundary(Metric<2>::minkowski(2.0), p, normals).max_form_original, -4.0);
  const Metric<2> flipped("flipped", [](double, const Vec<2>&) {
    MetricMatrix<2> g{};
    g[0][0] = 1.0;
    g[1][1] = 1.0;
    g[2][2] = 1.0;
    return g;
  });
  EXPECT_FALSE(check_timelike_boundary(flipped, p, normals).original);
  BoundarySample<2> b;
  b.point = {0.0, 1.0};
  b.normal = {0.0, 1.0, 0.0};
  const auto r = check_timelike_boundary(Metric<2>::diagonal(1.0, {1.0, 9.0}), p, {b});
  EXPECT_DOUBLE_EQ(r.max_form_original, -1.0);
  EXPECT_TRUE(r.ok());
}

TEST(EllipticBoundCheck, Examples) {
  const auto samples = SampleGrid<2>::covering(demo_profile(0.05));
  const auto none = elliptic_bound_check(Metric<2>::diagonal(1.0, {4.0, 4.0}), 4.0, demo_profile(0.0), samples);
  EXPECT_TRUE(none.gradient_bound);
  EXPECT_TRUE(none.transformed_g00_positive);
  // Minkowski, C0 = a^2: bound |grad c|^2 <= 1/a^2 matches 1 - a^2 |grad c|^2 > 0
  const auto p = demo_profile(0.05);
  const auto mk = elliptic_bound_check(Metric<2>::minkowski(1.0), 1.0, p, samples);
  EXPECT_EQ(mk.gradient_bound, hyperbolicity_margin(p, 1.0, samples).margin_min >= 0.0);
  EXPECT_TRUE(mk.transformed_g00_positive);
  // grad c = (0.6, 0) with spatial part -diag(4,4): both fail
  auto q = demo_profile(0.6 * 0.25 / (2.0 * 15.0 / 8.0));
  SampleGrid<2> one;
  one.points.push_back({0.75 * q.c1, 0.0});
  const auto bad = elliptic_bound_check(Metric<2>::diagonal(1.0, {4.0, 4.0}), 4.0, q, one);
  EXPECT_FALSE(bad.gradient_bound);
  EXPECT_NEAR(bad.worst_bound_ratio, 0.36 * 4.0, 1e-12);
  EXPECT_NEAR(bad.transformed_g00_min, 1.0 - 4.0 * 0.36, 1e-12);
  EXPECT_FALSE(bad.transformed_g00_positive);
  const Metric<2> coupled("coupled", [](double, const Vec<2>&) {
    MetricMatrix<2> g{};
    g[0][0] = 1.0;
    g[0][1] = g[1][0] = 0.1;
    g[1][1] = g[2][2] = -1.0;
    return g;
  });
  EXPECT_EQ(kind_of([&] { elliptic_bound_check(coupled, 1.0, p, samples); }), ErrorKind::PreconditionViolated);
}

TEST(MetricTable, InterpolatesAndMatchesPreset) {
  MetricTable<2> t;
  t.axes[0] = {-1.0, 1.0, 3};
  t.axes[1] = {-1.0, 1.0, 5};
  const std::size_t n = t.node_count();
  t.entries[0][0].assign(n, 1.0);
  t.entries[1][1].assign(n, -2.0);
  t.entries[2][2].resize(n);
  for (std::size_t i = 0; i < n; ++i) t.entries[2][2][i] = -1.0 - static_cast<double>(i % 3);
  const auto m = t.to_metric();
  const auto g = m(0.0, {0.5, 0.3});
  EXPECT_DOUBLE_EQ(g[0][0], 1.0);
  EXPECT_DOUBLE_EQ(g[1][1], -2.0);
  // x fastest: values -1, -2, -3 along x, linear -> at x = 0.5 gives -2.5
  EXPECT_DOUBLE_EQ(g[2][2], -2.5);
  t.entries[0][1].assign(2, 0.0);
  EXPECT_EQ(kind_of([&] { t.validate(); }), ErrorKind::ConfigError);
}

#include <gtest/gtest.h>

#include <numbers>

#include <Eigen/Dense>

#include "ruelle/correlator.hpp"

using namespace ruelle;

namespace {

GibbsSolution max_entropy(const Subshift& s) {
  return gibbs_state(DepthFn<double>::constant(s, 1, 0.0), DepthFn<double>::constant(s, 1, 1.0), 0.0,
                     std::log(s.perron_root()));
}

DepthFn<double> indicator0(const Subshift& s) { return DepthFn<double>(s, 1, {1.0, 0.0}); }

DepthFn<double> roof12(const Subshift& s) { return DepthFn<double>(s, 1, {1.0, std::numbers::sqrt2}); }

// Parry chain on the golden mean: P_ij = A_ij v_j / (lambda v_i), pi_i = u_i v_i.
struct ParryOracle {
  Eigen::Matrix2d P;
  Eigen::Vector2d pi;
  ParryOracle() {
    const double phi = std::numbers::phi;
    Eigen::Vector2d v(phi, 1.0);
    Eigen::Matrix2d A;
    A << 1, 1, 1, 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) P(i, j) = A(i, j) * v(j) / (phi * v(i));
    pi = Eigen::Vector2d(v(0) * v(0), v(1) * v(1));
    pi /= pi.sum();
  }
  double corr(const Eigen::Vector2d& a, const Eigen::Vector2d& b, int n) const {
    Eigen::Matrix2d Pn = Eigen::Matrix2d::Identity();
    for (int i = 0; i < n; ++i) Pn = Pn * P;
    double joint = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) joint += pi(i) * a(i) * Pn(i, j) * b(j);
    return joint - pi.dot(a) * pi.dot(b);
  }
};

}  // namespace

TEST(Profile, ExactIntegrals) {
  Profile p({0.0, 0.3, 1.0}, {{1.0, 2.0}, {0.5, 0.0, -1.0}});
  Profile q({0.0, 0.5, 1.0}, {{0.0, 1.0}, {2.0}});
  double num = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = (i + 0.5) / n;
    num += p(u) * q(u) / n;
  }
  EXPECT_NEAR(Profile::product_integral(p, q), num, 1e-8);
  EXPECT_NEAR(Profile::centered_ramp().integral(), 0.0, 1e-15);
  EXPECT_NEAR(Profile::product_integral(Profile::centered_ramp(), Profile::centered_ramp()), 1.0 / 12, 1e-15);
  EXPECT_THROW(Profile({0.0, 0.5}, {{1.0}}), InvalidArgument);
  EXPECT_THROW(Profile({0.0, 0.6, 0.4, 1.0}, {{1.0}, {1.0}, {1.0}}), InvalidArgument);
  std::vector<double> br;
  for (int i = 0; i <= 9; ++i) br.push_back(i / 9.0);
  EXPECT_THROW(Profile(br, std::vector<std::vector<double>>(9, {1.0})), InvalidArgument);
}

TEST(Suspension, ConstantRoofFiberIsUniform) {
  auto s = Subshift::full(2);
  auto pts = suspension_measure_sample(max_entropy(s), DepthFn<double>::constant(s, 1, 1.0), 100000, 3);
  double ms = 0, m0 = 0, cross = 0;
  for (const auto& p : pts) {
    EXPECT_GE(p.s, 0.0);
    EXPECT_LT(p.s, 1.0);
    ms += p.s;
    m0 += p.x[0];
    cross += p.s * p.x[0];
  }
  const double n = static_cast<double>(pts.size());
  ms /= n;
  m0 /= n;
  cross /= n;
  EXPECT_NEAR(ms, 0.5, 3 * std::sqrt(1.0 / 12 / n) + 1e-3);
  EXPECT_NEAR(cross - ms * m0, 0.0, 3 * std::sqrt(1.0 / 48 / n) + 1e-3);
}

TEST(Suspension, RoofMeansAndNormalization) {
  auto s = Subshift::full(2);
  auto g = max_entropy(s);
  auto tau = roof12(s);
  auto pts = suspension_measure_sample(g, tau, 200000, 5);
  // Under m the base point is tau-weighted, so 1 / E_m[1/tau] recovers int tau dnu.
  double inv = 0, sq = 0;
  for (const auto& p : pts) {
    const double t = tau(p.x);
    inv += 1 / t;
    sq += 1 / (t * t);
  }
  const double n = static_cast<double>(pts.size());
  inv /= n;
  const double sd = std::sqrt(sq / n - inv * inv);
  const double mean_tau = (1 + std::numbers::sqrt2) / 2;
  EXPECT_NEAR(inv, 1 / mean_tau, 3 * sd / std::sqrt(n));
  const SuspensionMeasure m(g, tau);
  EXPECT_NEAR(m.mean_roof(), mean_tau, 1e-14);
  EXPECT_NEAR(m.integrate({DepthFn<double>::constant(s, 1, 1.0), Profile()}), 1.0, 1e-14);
}

TEST(Correlation, TimeZeroMatchesExactVariance) {
  auto s = Subshift::full(2);
  const SuspensionMeasure m(max_entropy(s), roof12(s));
  const SuspensionObservable A{indicator0(s), Profile()};
  CorrelationOptions opt;
  opt.samples = 100000;
  auto c = correlation(m, A, A, {0.0, 0.5}, opt);
  const double exact = m.integrate_product(A, A) - m.integrate(A) * m.integrate(A);
  EXPECT_NEAR(c.rho[0], exact, 3 * c.se[0]);
  EXPECT_GT(c.se[0], 0.0);
}

TEST(Correlation, DeterministicAndLinear) {
  auto s = Subshift::golden_mean();
  const SuspensionMeasure m(max_entropy(s), roof12(s));
  const SuspensionObservable A{indicator0(s), Profile::centered_ramp()};
  const SuspensionObservable B1{DepthFn<double>(s, 2, {0.3, -1.0, 2.0}), Profile()};
  const SuspensionObservable B2{DepthFn<double>(s, 2, {1.0, 0.5, -0.5}), Profile()};
  const SuspensionObservable B12{B1.base + B2.base, Profile()};
  CorrelationOptions opt;
  opt.samples = 20000;
  opt.seed = 9;
  const auto grid = time_grid(0, 5, 0.5);
  auto c1 = correlation(m, A, B1, grid, opt);
  auto c1b = correlation(m, A, B1, grid, opt);
  auto c2 = correlation(m, A, B2, grid, opt);
  auto c12 = correlation(m, A, B12, grid, opt);
  EXPECT_EQ(c1.rho, c1b.rho);
  EXPECT_EQ(c1.se, c1b.se);
  opt.threads = 3;
  EXPECT_EQ(correlation(m, A, B1, grid, opt).rho, c1.rho);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(c12.rho[i], c1.rho[i] + c2.rho[i], 1e-12);
}

TEST(Correlation, StandardErrorScalesAsInverseRoot) {
  auto s = Subshift::full(2);
  const SuspensionMeasure m(max_entropy(s), roof12(s));
  const SuspensionObservable A{indicator0(s), Profile()};
  std::vector<double> ln, lse;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    CorrelationOptions opt;
    opt.samples = n;
    auto c = correlation(m, A, A, {1.5}, opt);
    ln.push_back(std::log(static_cast<double>(n)));
    lse.push_back(std::log(c.se[0]));
  }
  auto f = fit_line(ln, lse);
  EXPECT_NEAR(f.slope, -0.5, 0.1);
}

TEST(Correlation, ConstantRoofIsPeriodicWithoutDecay) {
  auto s = Subshift::full(2);
  const SuspensionMeasure m(max_entropy(s), DepthFn<double>::constant(s, 1, 1.0));
  const SuspensionObservable A{DepthFn<double>::constant(s, 1, 1.0), Profile::centered_ramp()};
  CorrelationOptions opt;
  opt.samples = 50000;
  auto c = correlation(m, A, A, time_grid(0, 10, 0.25), opt);
  // rho(t) = 1/12 - f(1 - f)/2 with f the fractional part of t.
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    const double f = c.t[i] - std::floor(c.t[i]);
    EXPECT_NEAR(c.rho[i], 1.0 / 12 - f * (1 - f) / 2, 4 * c.se[i] + 1e-12) << c.t[i];
  }
  EXPECT_FALSE(c.fit.accepted);
}

TEST(Correlation, IntegerTimesReduceToBaseMap) {
  auto s = Subshift::golden_mean();
  auto g = max_entropy(s);
  const SuspensionMeasure m(g, DepthFn<double>::constant(s, 1, 1.0));
  const SuspensionObservable A{indicator0(s), Profile()};
  CorrelationOptions opt;
  opt.samples = 200000;
  auto c = correlation(m, A, A, {0.0, 1.0, 2.0, 3.0}, opt);
  for (int n = 0; n < 4; ++n)
    EXPECT_NEAR(c.rho[static_cast<std::size_t>(n)], exact_base_correlation(g, indicator0(s), indicator0(s), n),
                3 * c.se[static_cast<std::size_t>(n)]);
}

TEST(Correlation, IrrationalRoofDecays) {
  auto s = Subshift::full(2);
  const SuspensionMeasure m(max_entropy(s), roof12(s));
  const SuspensionObservable A{indicator0(s), Profile()};
  CorrelationOptions opt;
  opt.samples = 200000;
  auto c = correlation(m, A, A, time_grid(0, 20, 0.5), opt);
  EXPECT_TRUE(c.fit.accepted) << c.fit.c << " " << c.fit.c_lo << " " << c.fit.points;
  EXPECT_GT(c.fit.c, 0.0);
}

TEST(DecayFit, RecoversRateAndNeedsThreePoints) {
  std::vector<double> t, rho, se;
  for (int i = 0; i < 10; ++i) {
    t.push_back(i);
    rho.push_back(2 * std::exp(-0.3 * i) * (i % 2 ? -1 : 1));
    se.push_back(1e-6);
  }
  auto f = fit_decay(t, rho, se);
  EXPECT_TRUE(f.accepted);
  EXPECT_NEAR(f.c, 0.3, 1e-12);
  EXPECT_NEAR(f.C, 2.0, 1e-12);
  EXPECT_FALSE(fit_decay({0, 1}, {1, 0.5}, {0.01, 0.01}).accepted);
}

TEST(BaseCorrelation, BernoulliIndependence) {
  auto s = Subshift::full(2);
  auto g = max_entropy(s);
  auto A = indicator0(s);
  EXPECT_NEAR(exact_base_correlation(g, A, A, 0), 0.25, 1e-14);
  for (int n = 1; n <= 6; ++n) EXPECT_NEAR(exact_base_correlation(g, A, A, n), 0.0, 1e-14);
  for (int n = 0; n <= 3; ++n) EXPECT_NEAR(exact_base_correlation(g, DepthFn<double>::constant(s, 1, 3.0), A, n), 0.0, 1e-14);
}

TEST(BaseCorrelation, GoldenMeanMatchesMarkovChain) {
  auto s = Subshift::golden_mean();
  auto g = max_entropy(s);
  const ParryOracle oracle;
  const Eigen::Vector2d a(1.0, 0.0), b(0.3, -2.0);
  const DepthFn<double> A(s, 1, {1.0, 0.0}), B(s, 1, {0.3, -2.0});
  auto rep = exact_base_correlation_report(g, A, B, 0);
  const double ratio = 1 / (std::numbers::phi * std::numbers::phi);
  EXPECT_NEAR(rep.rho4, ratio, 1e-12);
  const double c0 = std::abs(oracle.corr(a, b, 0));
  for (int n = 0; n <= 12; ++n) {
    const double v = exact_base_correlation(g, A, B, n);
    EXPECT_NEAR(v, oracle.corr(a, b, n), 1e-13) << n;
    EXPECT_LE(std::abs(v), c0 * std::pow(ratio, n) * (1 + 1e-9) + 1e-15);
    // Reversible chain: symmetric in A and B.
    EXPECT_NEAR(v, exact_base_correlation(g, B, A, n), 1e-13);
  }
}

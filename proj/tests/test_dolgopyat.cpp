#include <gtest/gtest.h>

#include <numbers>

#include "ruelle/dolgopyat.hpp"

using namespace ruelle;

namespace {

// tau(x) = base[x0] + A sum_{j=1}^{D-1} decay^j [x0 = x_j]
DepthFn<double> interaction_roof(const Subshift& s, int D, double A, double decay, std::vector<double> base) {
  return DepthFn<double>::from_function(s, D, [&](const Word& w) {
    double v = base[static_cast<std::size_t>(w[0])];
    for (int j = 1; j < D; ++j) v += A * std::pow(decay, j) * (w[0] == w[static_cast<std::size_t>(j)] ? 1.0 : 0.0);
    return v;
  });
}

TwistModel interaction_model(const Subshift& s = Subshift::full(2)) {
  std::vector<double> base(static_cast<std::size_t>(s.alphabet_size()));
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = 1.0 + 0.4 * static_cast<double>(i);
  auto tau = interaction_roof(s, 10, 0.25, 0.5, base);
  return make_twist_model(DepthFn<double>::constant(s, 1, 0.0), tau, 0.0, 0.5);
}

const DolgopyatFamily& family16() {
  static const DolgopyatFamily fam = build_family(interaction_model(), 16.0, LabConfig{1, 0.1, 2.0, 4});
  return fam;
}

double binom(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST(Family, FlatRoofIsReported) {
  auto s = Subshift::full(2);
  auto m1 = make_twist_model(DepthFn<double>::constant(s, 1, 0.0), DepthFn<double>(s, 1, {1.0, std::numbers::sqrt2}), 0, 0.5);
  EXPECT_THROW(build_family(m1, 16.0), FlatRoof);
  auto m2 = make_twist_model(DepthFn<double>::constant(s, 1, 0.0), DepthFn<double>::constant(s, 1, 1.0), 0, 0.5);
  EXPECT_THROW(build_family(m2, 16.0, LabConfig{3, 0.1, 2.0, 4}), FlatRoof);
}

TEST(Family, RejectsBadArguments) {
  auto m = interaction_model();
  EXPECT_THROW(build_family(m, 2.0), InvalidArgument);
  EXPECT_THROW(build_family(m, 16.0, LabConfig{0, 0.1, 2.0, 4}), InvalidArgument);
  EXPECT_THROW(build_family(m, 16.0, LabConfig{1, 0.1, 1.0, 4}), InvalidArgument);
}

TEST(Family, SeparationFailureCarriesBestDelta) {
  try {
    build_family(interaction_model(), 16.0, LabConfig{1, 50.0, 2.0, 2});
    FAIL() << "expected SeparationFailure";
  } catch (const SeparationFailure& e) {
    EXPECT_GE(e.best_delta(), 0.0);
    EXPECT_LT(e.best_delta(), 50.0);
  }
}

TEST(Family, InvariantsHoldAcrossScales) {
  auto model = interaction_model();
  for (double b : {8.0, 16.0, -32.0}) {
    auto fam = build_family(model, b, LabConfig{1, 0.1, 2.0, 4});
    EXPECT_EQ(fam.length, static_cast<int>(std::lround(std::log(std::abs(b)) / std::log(2.0))));
    for (int v = 0; v < 3; ++v) {
      const auto J = representative_set(fam, v);
      auto chk = verify_family(fam, J);
      EXPECT_TRUE(chk.all()) << b << " " << v;
      EXPECT_GE(chk.min_delta, 0.1);
    }
    EXPECT_GE(fam.ledger.d4, 0.0);
    EXPECT_LE(fam.ledger.d4, 0.5);
    EXPECT_GE(fam.ledger.d3, 1.0);
  }
}

TEST(Family, PsiRangesMatchDirectEvaluation) {
  const auto& fam = family16();
  const auto& tau = fam.model.tau;
  for (const auto& c : fam.cylinders)
    for (const auto& p : c.pairs)
      for (int i = 0; i < 2; ++i)
        for (const auto& x : enumerate_words(fam.shift(), 12)) {
          if (!x.starts_with(p.gamma[i])) continue;
          const double psi = tau(c.branch[0].concat(x)) - tau(c.branch[1].concat(x));
          EXPECT_GE(psi, p.lo[i] - 1e-12);
          EXPECT_LE(psi, p.hi[i] + 1e-12);
        }
}

TEST(Ledger, FormulasAndContraction) {
  const auto& L = family16().ledger;
  EXPECT_NEAR(L.eps3, std::numbers::pi / 64, 1e-15);
  EXPECT_NEAR(L.mu0, (1 - std::cos(std::numbers::pi / 64)) / 20, 1e-18);
  EXPECT_NEAR(L.gamma2, 0.5, 0);
  EXPECT_NEAR(L.E, 3 * L.T0 * std::exp(2 * L.T0) / 0.5, 1e-9 * L.E);
  EXPECT_GE(L.C10, 8.0);
  EXPECT_LT(L.rho3, 1.0);
  EXPECT_GT(L.S0, 1.0);
  EXPECT_GT(L.M, 1e6);
  EXPECT_NEAR(L.decay_bound, 2 / std::pow(16.0, 16.0), 1e-30);
  for (double mu : {1e-5, 1e-3, 0.1})
    for (int N : {1, 4})
      for (double T0 : {0.5, 2.0}) {
        const double C10 = 100, D1 = 1.5, g2 = 0.5;
        const double a0 = ledger::a0(mu, g2, N, T0, C10, D1);
        EXPECT_LT(ledger::rho3(a0, N, T0, mu, C10), 1.0);
      }
}

TEST(Contraction, OmegaAndNJOnConstants) {
  const auto& fam = family16();
  const auto omega = omega_J(fam, fam.J);
  const double mu0 = fam.ledger.mu0;
  std::size_t damped = 0;
  for (double v : omega.values()) {
    EXPECT_TRUE(v == 1.0 || std::abs(v - (1 - mu0)) < 1e-15);
    damped += v < 1;
  }
  EXPECT_GT(damped, 0u);
  const auto one = DepthFn<double>::constant(fam.shift(), 1, 1.0);
  const auto h = apply_NJ(one, fam);
  const double bound = 1 - mu0 * std::exp(-fam.N() * fam.ledger.T0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    EXPECT_LE(h[i], 1 + 1e-14);
    EXPECT_GE(h[i], 1 - mu0 - 1e-14);
    const Word u = h.space().word(i);
    bool in_W = false;
    for (const auto& x : fam.J) in_W = in_W || u.starts_with(fam.gamma(x));
    if (in_W) {
      EXPECT_LE(h[i], bound + 1e-14);
    }
  }
}

TEST(Contraction, LinearAndPositive) {
  const auto& fam = family16();
  std::mt19937_64 rng(5);
  auto g1 = random_cone_member(fam, 8, 1.0, rng);
  auto g2 = random_cone_member(fam, 8, 1.0, rng);
  auto lhs = apply_NJ(2.0 * g1 + g2, fam);
  auto rhs = 2.0 * apply_NJ(g1, fam) + apply_NJ(g2, fam);
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
    EXPECT_GT(lhs[i], 0.0);
  }
}

TEST(Contraction, EngineMatchesLiteralOperator) {
  const auto& fam = family16();
  auto curve = iterate_NJ(fam, {fam.J}, 0.0, 3);
  auto h = DepthFn<double>::constant(fam.shift(), 1, 1.0);
  std::vector<double> expect{fam.model.gibbs.integrate(h * h)};
  for (int r = 0; r < 3; ++r) {
    h = apply_NJ(h, fam);
    expect.push_back(fam.model.gibbs.integrate(h * h));
  }
  ASSERT_EQ(curve.values.size(), expect.size());
  for (std::size_t r = 0; r < expect.size(); ++r) EXPECT_NEAR(curve.values[r], expect[r], 1e-12);
}

TEST(Contraction, DecayCurve) {
  const auto& fam = family16();
  auto curve = iterate_NJ(fam, representative_sequence(fam), 0.0, 200);
  EXPECT_TRUE(curve.strictly_decreasing);
  EXPECT_EQ(curve.steps(), 200u);
  auto flat = iterate_NJ(fam, {JSet{}}, 0.0, 20);
  for (double v : flat.values) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_FALSE(flat.halved);
}

TEST(Metric, BasicProperties) {
  const auto& fam = family16();
  const MetricD D(fam, fam.J);
  const auto words = enumerate_words(fam.shift(), 9);
  for (std::size_t i = 0; i < words.size(); i += 7)
    for (std::size_t j = 0; j < words.size(); j += 5) {
      const double d = D(words[i], words[j]);
      EXPECT_EQ(d, D(words[j], words[i]));
      EXPECT_LE(d, 1.0);
      if (i == j) {
        EXPECT_EQ(d, 0.0);
      } else if (words[i].prefix(4) == words[j].prefix(4)) {
        EXPECT_LE(d_theta(words[i], words[j], 0.5), d + 1e-15);
      }
    }
}

TEST(Metric, MetricStepCaseTwoHolds) {
  const auto& fam = family16();
  auto rep = metric_step_check(fam, fam.J, 8);
  EXPECT_GT(rep.pairs, 0u);
  EXPECT_EQ(rep.violations_case2, 0u);
  EXPECT_EQ(rep.violations, rep.violations_case2 + rep.violations_case3);
  EXPECT_LE(rep.worst_case2, 1 + 1e-12);
  EXPECT_EQ(rep.worst_ratio, std::max(rep.worst_case2, rep.worst_case3));
}

TEST(Cone, ConstantsAndRandomMembers) {
  const auto& fam = family16();
  const double E = fam.ledger.E;
  EXPECT_TRUE(cone_KE_test(DepthFn<double>::constant(fam.shift(), 1, 3.0), fam, E));
  EXPECT_THROW(cone_KE_test(DepthFn<double>::constant(fam.shift(), 1, 0.0), fam, E), NonPositive);
  std::mt19937_64 rng(11);
  int members = 0;
  for (int t = 0; t < 100; ++t) {
    auto H = random_cone_member(fam, 8, 1.0, rng);
    if (!cone_KE_test(H, fam, E)) continue;
    ++members;
    auto rep = cone_step_checks(H, fam);
    EXPECT_TRUE(rep.cauchy_schwarz) << rep.cs_worst;
    EXPECT_TRUE(rep.chain) << rep.chain_worst;
    EXPECT_TRUE(rep.b_holds) << rep.lhs_b << " " << rep.rhs_b;
  }
  EXPECT_GT(members, 50);
}

TEST(Cone, ConeStepOnConstant) {
  const auto& fam = family16();
  auto rep = cone_step_checks(DepthFn<double>::constant(fam.shift(), 1, 1.0), fam);
  EXPECT_NEAR(rep.int_V_H2, 1.0, 1e-12);
  EXPECT_TRUE(rep.a_holds);
  EXPECT_TRUE(rep.b_holds);
  EXPECT_TRUE(rep.cauchy_schwarz);
  EXPECT_TRUE(rep.chain);
}

TEST(BorelCantelli, BinomialOracle) {
  auto s = Subshift::full(2);
  auto sol = gibbs_state(DepthFn<double>::constant(s, 1, 0.0), DepthFn<double>::constant(s, 1, 1.0), 0.0, std::log(2.0));
  const std::vector<Word> V{Word({0, 0}), Word({1, 1})};
  auto rep = borel_cantelli_stats(sol, V, 1, 8);
  ASSERT_TRUE(rep.exact);
  EXPECT_NEAR(rep.nu_V, 0.5, 1e-14);
  EXPECT_NEAR(rep.gamma2, 0.25, 1e-14);
  for (int c = 0; c <= 8; ++c) EXPECT_NEAR(rep.distribution[static_cast<std::size_t>(c)], binom(8, c) / 256, 1e-14);
  EXPECT_NEAR(rep.nu_U_eps, 9.0 / 256, 1e-14);
  EXPECT_NEAR(rep.epsilon, 0.5, 1e-13);
  EXPECT_TRUE(rep.verdict);
  for (double c : rep.cluster) EXPECT_NEAR(c, 0.0, 1e-14);

  BorelCantelliOptions mc;
  mc.exact_cap = 1;
  mc.samples = 200000;
  auto rmc = borel_cantelli_stats(sol, V, 1, 8, mc);
  ASSERT_FALSE(rmc.exact);
  EXPECT_NEAR(rmc.nu_U_eps, 9.0 / 256, 5 * rmc.nu_U_eps_se);
}

TEST(BorelCantelli, SkipWindowsOnGoldenMean) {
  auto s = Subshift::golden_mean();
  auto sol = gibbs_state(DepthFn<double>::constant(s, 1, 0.0), DepthFn<double>::constant(s, 1, 1.0), 0.0,
                         std::log(std::numbers::phi));
  const std::vector<Word> V{Word({0, 1})};
  // Brute force over admissible words of length (M - 1) N + 2.
  const int N = 3, M = 4;
  auto rep = borel_cantelli_stats(sol, V, N, M);
  std::vector<double> dist(M + 1, 0.0);
  for (const auto& w : enumerate_words(s, (M - 1) * N + 2)) {
    int c = 0;
    for (int j = 0; j < M; ++j) c += w[static_cast<std::size_t>(j * N)] == 0 && w[static_cast<std::size_t>(j * N + 1)] == 1;
    dist[static_cast<std::size_t>(c)] += sol.cylinder(w);
  }
  for (int c = 0; c <= M; ++c) EXPECT_NEAR(rep.distribution[static_cast<std::size_t>(c)], dist[static_cast<std::size_t>(c)], 1e-13);
  EXPECT_GT(rep.cluster_envelope, 0.0);
}

TEST(Cone, JumpAboveEIsRejected) {
  const auto& fam = family16();
  const double E = fam.ledger.E;
  // Two sibling blocks of one C'_m whose values differ by a factor 2 + E.
  const int depth = fam.gamma_length() + 2;
  auto H = DepthFn<double>::constant(fam.shift(), depth, 1.0);
  H[1] = 2 + E;
  EXPECT_FALSE(cone_KE_test(H, fam, E));
  EXPECT_GT(cone_KE_ratio(H, fam, E, fam.J), 1.0);
}

TEST(Cone, ClosedUnderNJ) {
  const auto& fam = family16();
  const double E = fam.ledger.E;
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    auto H = random_cone_member(fam, 8, 1.0, rng);
    if (!cone_KE_test(H, fam, E)) continue;
    EXPECT_TRUE(cone_KE_test(apply_NJ(H, fam), fam, E));
  }
}

TEST(Contraction, Monotone) {
  const auto& fam = family16();
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10; ++t) {
    auto h = random_cone_member(fam, 8, 1.0, rng);
    auto d = random_cone_member(fam, 8, 1.0, rng);
    auto lo = apply_NJ(h, fam), hi = apply_NJ(h + d, fam);
    for (std::size_t i = 0; i < lo.size(); ++i) EXPECT_LE(lo[i], hi[i]);
  }
}

TEST(Cone, ConeStepRejectsEmptyJ) {
  const auto& fam = family16();
  EXPECT_THROW(cone_step_checks(DepthFn<double>::constant(fam.shift(), 1, 1.0), fam, JSet{}), InvalidArgument);
}

#pragma once

// Twisted operators L_ab = L_{f^(a) - i b tau}, the norm ||.||_{theta,b}, Lasota-Yorke probes and
// contraction scans over b.

#include <Eigen/Eigenvalues>
#include <limits>
#include <numbers>
#include <optional>

#include "ruelle/thermo.hpp"

namespace ruelle {

struct TwistParams {
  double a = 0;
  double b = 1;
  double theta = 0.5;
};

/// ||h||_{theta,b} = ||h||_0 + |h|_theta / |b|.
template <class T>
double theta_b_norm(const DepthFn<T>& h, double theta, double b) {
  if (b == 0) throw InvalidArgument("b must be nonzero");
  return h.sup_norm() + lip_seminorm(h, theta) / std::abs(b);
}

/// Normalized potential f^(a) together with the roof; everything a twisted operator needs.
struct TwistModel {
  GibbsSolution gibbs;  ///< Gibbs state of f - (P_f + a) tau
  DepthFn<double> tau;
  double theta = 0.5;

  const DepthFn<double>& fa() const { return gibbs.normalized; }
  const Subshift& shift() const { return tau.shift(); }
  double a() const { return gibbs.a; }
};

inline TwistModel make_twist_model(const DepthFn<double>& f, const DepthFn<double>& tau, double a, double theta,
                                   std::optional<double> P_f = std::nullopt) {
  check_theta(theta);
  double pf = P_f ? *P_f : solve_Pf(f, tau);
  return TwistModel{gibbs_state(f, tau, a, pf), tau, theta};
}

class TwistedOperator {
 public:
  TwistedOperator(const TwistModel& model, double b) : b_(b) {
    const auto& fa = model.fa();
    const int k = std::max(fa.depth(), model.tau.depth());
    auto f = fa.lift(k);
    auto t = model.tau.lift(k);
    std::vector<cplx> w(f.size());
    std::vector<double> m(f.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::exp(cplx(f[i], -b * t[i]));
      m[i] = std::exp(f[i]);
    }
    weight_ = DepthFn<cplx>(model.shift(), k, std::move(w));
    modulus_ = DepthFn<double>(model.shift(), k, std::move(m));
    matrix_ = TransferMatrix<cplx>(weight_);
  }

  double b() const noexcept { return b_; }
  const DepthFn<cplx>& weight() const { return weight_; }
  const DepthFn<double>& modulus_weight() const { return modulus_; }
  const TransferMatrix<cplx>& matrix() const { return matrix_; }

  DepthFn<cplx> apply(const DepthFn<cplx>& h) const { return matrix_.apply(h); }

  DepthFn<cplx> power(DepthFn<cplx> h, int m) const {
    for (int i = 0; i < m; ++i) h = apply(h);
    return h;
  }

  /// M_a^m h, the untwisted normalized operator.
  DepthFn<double> modulus_power(DepthFn<double> h, int m) const {
    for (int i = 0; i < m; ++i) h = transfer_apply(modulus_, h);
    return h;
  }

  /// Largest eigenvalue modulus of the finite block matrix.
  double spectral_radius() const {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(matrix_.dense(), false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

 private:
  double b_;
  DepthFn<cplx> weight_;
  DepthFn<double> modulus_;
  TransferMatrix<cplx> matrix_;
};

/// L_ab^m h.
inline DepthFn<cplx> twisted_apply(const DepthFn<cplx>& h, const TwistModel& model, double b, int m) {
  return TwistedOperator(model, b).power(h, m);
}

/// Random theta-Lipschitz function sum_i theta^i r_i(x_0..x_i), r_i uniform in the unit disc (or [-1, 1]).
template <class T>
DepthFn<T> random_lipschitz(const Subshift& shift, int depth, double theta, std::mt19937_64& rng) {
  auto draw = [&]() -> T {
    if constexpr (std::is_same_v<T, cplx>) {
      double r = std::sqrt(uniform01(rng)), phi = 2 * std::numbers::pi * uniform01(rng);
      return std::polar(r, phi);
    } else {
      return 2 * uniform01(rng) - 1;
    }
  };
  auto h = DepthFn<T>::from_function(shift, 1, [&](const Word&) { return draw(); });
  double scale = 1;
  for (int d = 2; d <= depth; ++d) {
    scale *= theta;
    h = h.lift(d);
    for (auto& v : h.values()) v += scale * draw();
  }
  return h;
}

namespace detail {

// Upper bound for sup over same-first-symbol pairs of |h(v) - h(v')| / (H(v') D_theta(v, v')):
// per prefix node of level j >= 1, the bounding-box diagonal of h over the node divided by
// theta^j times the minimum of H over the node. Exceeds the exact value by at most sqrt(2).
template <class T>
double weighted_lip_bound(const DepthFn<T>& h, const DepthFn<double>& H, double theta) {
  const int k = std::max(h.depth(), H.depth());
  if (k < 2) return 0.0;
  auto sp = h.shift().space(k);
  const auto K = static_cast<std::uint64_t>(sp->alphabet());
  struct Box {
    double rlo, rhi, ilo, ihi, hmin;
    void add(const Box& o) {
      rlo = std::min(rlo, o.rlo);
      rhi = std::max(rhi, o.rhi);
      ilo = std::min(ilo, o.ilo);
      ihi = std::max(ihi, o.ihi);
      hmin = std::min(hmin, o.hmin);
    }
  };
  auto leaf = [&](std::size_t i) {
    const auto c = sp->code(i);
    const cplx z(h.at_code(c, k));
    return Box{z.real(), z.real(), z.imag(), z.imag(), H.at_code(c, k)};
  };
  double best = 0;
  // Level k - 1 straight from the leaves, then merge upwards.
  std::vector<Box> level;
  std::vector<std::uint64_t> keys;
  for (std::size_t n = 0; n < sp->size();) {
    Box b = leaf(n);
    const auto key = sp->code(n) / K;
    std::size_t m = n + 1;
    for (; m < sp->size() && sp->code(m) / K == key; ++m) b.add(leaf(m));
    level.push_back(b);
    keys.push_back(key);
    n = m;
  }
  for (int j = k - 1; j >= 1; --j) {
    const double scale = std::pow(theta, j);
    for (const auto& b : level) best = std::max(best, std::hypot(b.rhi - b.rlo, b.ihi - b.ilo) / (scale * b.hmin));
    if (j == 1) break;
    std::size_t out = 0;
    for (std::size_t n = 0; n < level.size();) {
      Box b = level[n];
      const auto key = keys[n] / K;
      std::size_t m = n + 1;
      for (; m < level.size() && keys[m] / K == key; ++m) b.add(level[m]);
      level[out] = b;
      keys[out] = key;
      ++out;
      n = m;
    }
    level.resize(out);
    keys.resize(out);
  }
  return best;
}

}  // namespace detail

struct LasotaYorkeResult {
  int m = 0;
  double b = 0;
  double A0 = 0;       ///< smallest constant making the inequality hold over all probes
  double B_max = 0;    ///< largest hypothesis constant B among the probes
  int probes = 0;
};

/// Measures the smallest A0 with
///   |L^m h(u) - L^m h(u')| <= A0 [B theta^m (M^m H)(u') + |b| (M^m |h|)(u')] D_theta(u, u')
/// over pairs u, u' with the same first symbol, for random pairs (h, H) with
/// |h(v) - h(v')| <= B H(v') D_theta(v, v').
///
/// Probes: h = 1 (B = 0); phase-aligned h = e^{i b tau_m} phi o sigma^m for every cylinder indicator phi
/// (then L^m h = phi, which saturates the B term); and per trial a random theta-Lipschitz h and a random
/// aligned h, each paired with H = 1 and with a random positive H.
inline LasotaYorkeResult lasota_yorke_check(const TwistModel& model, double b, int m, int trials, std::uint64_t seed,
                                            int extra_depth = 2) {
  if (m < 1 || trials < 1) throw InvalidArgument("lasota_yorke_check needs m >= 1 and trials >= 1");
  const Subshift& shift = model.shift();
  const double theta = model.theta;
  TwistedOperator op(model, b);
  const int q = op.matrix().block_depth();
  const int out_depth = std::max(extra_depth, q);
  const int depth = m + out_depth;
  auto rng = make_rng(seed, static_cast<std::uint64_t>(m) * 1000003u + static_cast<std::uint64_t>(std::abs(b) * 64));
  LasotaYorkeResult res;
  res.m = m;
  res.b = b;

  auto measure = [&](const DepthFn<cplx>& h, const DepthFn<double>& H) {
    double B = detail::weighted_lip_bound(h, H, theta);
    auto Lh = op.power(h, m);
    auto MH = op.modulus_power(H, m);
    auto Mabs = op.modulus_power(h.abs(), m);
    const int d = std::max({Lh.depth(), MH.depth(), Mabs.depth()});
    Lh = Lh.lift(d);
    MH = MH.lift(d);
    Mabs = Mabs.lift(d);
    const auto& sp = Lh.space();
    const double tm = std::pow(theta, m);
    for (std::size_t i = 0; i < sp.size(); ++i) {
      for (std::size_t j = 0; j < sp.size(); ++j) {
        if (i == j || sp.symbol(i, 0) != sp.symbol(j, 0)) continue;
        const double num = std::abs(Lh[i] - Lh[j]);
        if (num == 0) continue;
        const double dist = d_theta(sp.word(i), sp.word(j), theta);
        const double den = (B * tm * MH[j] + std::abs(b) * Mabs[j]) * dist;
        res.A0 = std::max(res.A0, den > 0 ? num / den : std::numeric_limits<double>::infinity());
      }
    }
    res.B_max = std::max(res.B_max, B);
    ++res.probes;
  };

  auto random_H = [&](int d) {
    auto g = random_lipschitz<double>(shift, d, theta, rng);
    return g.map([](double x) { return std::exp(0.5 * x); });
  };
  const auto one = DepthFn<double>::constant(shift, 1, 1.0);

  const int aligned_depth = std::max(depth, m + model.tau.depth() - 1);
  const auto phase = birkhoff_table(model.tau, m, aligned_depth);
  const auto& sp = phase.space();
  const auto tail = sp.radix(aligned_depth - m);
  std::vector<cplx> rotation(sp.size());
  for (std::size_t i = 0; i < sp.size(); ++i) rotation[i] = std::polar(1.0, b * phase[i]);
  auto aligned = [&](const DepthFn<double>& phi) {
    std::vector<cplx> v(sp.size());
    for (std::size_t i = 0; i < sp.size(); ++i) v[i] = rotation[i] * phi.at_code(sp.code(i) % tail, aligned_depth - m);
    return DepthFn<cplx>(shift, aligned_depth, std::move(v));
  };

  // h = 1 satisfies the hypothesis with B = 0.
  measure(DepthFn<cplx>::constant(shift, 1, 1.0), one);
  // Phase-aligned cylinder indicators: L^m h = phi exactly, which saturates the B term.
  auto ind_space = shift.space(aligned_depth - m);
  for (std::size_t c = 0; c < ind_space->size() && c < 64; ++c) {
    std::vector<double> v(ind_space->size(), 0.0);
    v[c] = 1.0;
    measure(aligned(DepthFn<double>(shift, aligned_depth - m, std::move(v))), one);
  }
  for (int t = 0; t < trials; ++t) {
    auto h = random_lipschitz<cplx>(shift, depth, theta, rng);
    measure(h, one);
    measure(h, random_H(depth));
    auto a = aligned(random_lipschitz<double>(shift, aligned_depth - m, theta, rng));
    measure(a, one);
    measure(a, random_H(depth));
  }
  return res;
}

struct ContractionRow {
  double b = 0;
  double spectral_radius = 0;
  std::optional<int> m_star;  ///< empty: no m <= m_cap works
  double gelfand = 0;         ///< (max probe ratio at m_cap)^(1/m_cap)
};

struct ContractionProfile {
  double rho = 0.9;
  int m_cap = 400;
  std::vector<ContractionRow> rows;
  double fitted_T = std::numeric_limits<double>::quiet_NaN();  ///< smallest T with m_star <= T log|b| on the grid (|b| > 1)
  double slope = std::numeric_limits<double>::quiet_NaN();     ///< least-squares slope of m_star against log|b|
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  bool all_finite = false;
};

struct ProbeConfig {
  int basis_depth = 6;
  int random_probes = 32;
  std::size_t max_basis = 4096;
  std::uint64_t seed = 1;
};

/// Probe set: indicator functions of the depth-k cylinders plus seeded random theta-Lipschitz
/// functions, all scaled to ||h||_{theta,b} = 1.
inline std::vector<DepthFn<cplx>> contraction_probes(const TwistModel& model, double b, const ProbeConfig& cfg) {
  const Subshift& shift = model.shift();
  std::vector<DepthFn<cplx>> probes;
  auto sp = shift.space(cfg.basis_depth);
  const std::size_t n = std::min(sp->size(), cfg.max_basis);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<cplx> v(sp->size(), 0.0);
    v[i] = 1.0;
    probes.emplace_back(shift, cfg.basis_depth, std::move(v));
  }
  auto rng = make_rng(cfg.seed);
  for (int r = 0; r < cfg.random_probes; ++r) probes.push_back(random_lipschitz<cplx>(shift, cfg.basis_depth, model.theta, rng));
  for (auto& p : probes) p *= cplx(1.0 / theta_b_norm(p, model.theta, b));
  return probes;
}

/// Spectral radius and eventual-contraction index m_star for one b. m_star is the least m such that
/// ||L^m' h||_{theta,b} <= rho^m' ||h||_{theta,b} for every probe h and every m' in [m, m_cap].
inline ContractionRow contraction_row(const TwistModel& model, double b, double rho, int m_cap, const ProbeConfig& cfg) {
  TwistedOperator op(model, b);
  ContractionRow row;
  row.b = b;
  row.spectral_radius = op.spectral_radius();
  auto probes = contraction_probes(model, b, cfg);
  std::vector<char> ok(static_cast<std::size_t>(m_cap) + 1, 0);
  double worst = 0;
  double log_rho = std::log(rho);
  for (int m = 1; m <= m_cap; ++m) {
    worst = 0;
    for (auto& p : probes) {
      p = op.apply(p);
      worst = std::max(worst, theta_b_norm(p, model.theta, b));
    }
    ok[static_cast<std::size_t>(m)] = worst == 0 || std::log(worst) <= m * log_rho + 1e-12;
  }
  row.gelfand = worst > 0 ? std::pow(worst, 1.0 / m_cap) : 0.0;
  std::optional<int> ms;
  for (int m = m_cap; m >= 1 && ok[static_cast<std::size_t>(m)]; --m) ms = m;
  row.m_star = ms;
  return row;
}

inline ContractionProfile contraction_scan(const TwistModel& model, const std::vector<double>& b_grid, double rho = 0.9,
                                           int m_cap = 400, const ProbeConfig& cfg = {}, int threads = 1) {
  if (!(rho > 0 && rho < 1)) throw InvalidArgument("rho must lie in (0,1)");
  ContractionProfile prof;
  prof.rho = rho;
  prof.m_cap = m_cap;
  prof.rows.resize(b_grid.size());
  parallel_chunks(b_grid.size(), threads,
                  [&](std::size_t i) { prof.rows[i] = contraction_row(model, b_grid[i], rho, m_cap, cfg); });
  std::vector<double> x, y;
  prof.all_finite = true;
  double T = 0;
  bool any = false;
  for (const auto& r : prof.rows) {
    if (!r.m_star) {
      prof.all_finite = false;
      continue;
    }
    if (std::abs(r.b) <= 1) continue;
    x.push_back(std::log(std::abs(r.b)));
    y.push_back(*r.m_star);
    T = std::max(T, *r.m_star / std::log(std::abs(r.b)));
    any = true;
  }
  if (any) prof.fitted_T = T;
  if (x.size() >= 2) {
    auto fit = fit_line(x, y);
    prof.slope = fit.slope;
    prof.intercept = fit.intercept;
    prof.r2 = fit.r2;
  }
  return prof;
}

}  // namespace ruelle

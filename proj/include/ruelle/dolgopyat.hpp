#pragma once

// Dolgopyat-type contraction on a symbolic model: cylinders at scale 1/|b|, separated sub-cylinder pairs,
// damping functions omega_J, contraction operators N_J, the metric D and cone K_E, and Borel-Cantelli
// statistics for the visits of sigma^{jN} x to V_b.

#include <numbers>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "ruelle/twist.hpp"

namespace ruelle {

struct LabConfig {
  int N = 4;
  double delta1 = 0.1;
  double s = 2.0;  ///< exponent of the target bound 2 / |b|^{8s}, s > 1
  int max_colength = 4;
};

struct ConstantLedger {
  double b = 0;
  double theta = 0.5;
  int N = 1;
  double delta1 = 0.1;
  double eps2 = 0;  ///< lower end of the window theta^{s_m} |b| in [eps2, C6]
  double C6 = 0;
  double eps3 = 0;
  double mu0 = 0;
  double gamma2 = 0;
  double f_sup = 0;    ///< ||f^(0)||_0
  double f_lip = 0;    ///< |f^(0)|_theta
  double tau_lip = 0;  ///< |tau|_theta
  double T0 = 0;
  double E = 0;
  double d3 = 0;
  double d4 = 0;
  double C10 = 0;
  double D1 = 0;
  double D2 = 0;
  double a0 = 0;
  double rho3 = 0;
  double S0 = 0;
  double lambda2 = 0;  ///< subdominant eigenvalue modulus of L_{f^(0)}
  double r = 0;        ///< beta = e^{-r}
  double beta = 0;
  double beta3 = 0;    ///< rho4 = e^{-beta3}
  double rho4 = 0;
  double s = 2;
  double k = 0;
  double k_tilde = 0;
  double M = 0;            ///< ceil(k_tilde log|b|)
  double decay_bound = 0;  ///< 2 / |b|^{8s}
};

namespace ledger {

inline double eps3(double delta1, double eps2, bool keep_separation_term) {
  double e = std::min(std::numbers::pi / 32, std::log(19.0 / 16.0));
  if (keep_separation_term) e = std::min(e, delta1 * eps2 / 16);
  return e / 2;
}
inline double mu0(double eps3) { return std::min(0.25, (1 - std::cos(eps3)) / 20); }
inline double E_min(double T0, double theta) { return 3 * T0 * std::exp(T0 / (1 - theta)) / (1 - theta); }
inline double C10(double E, double d4) { return std::max(8.0, 16 * E * E / d4); }
inline double a0(double mu0, double gamma2, int N, double T0, double C10, double D1) {
  return mu0 * gamma2 * std::exp(-N * T0) / (32 * C10 * D1 * N * T0);
}
inline double rho3(double a0, int N, double T0, double mu0, double C10) {
  return std::exp(a0 * N * T0) / (1 + mu0 * std::exp(-N * T0) / C10);
}
inline double S0(double a0, int N, double T0) { return std::exp(a0 * N * T0); }
inline double k(double s, double C10, double r, double D1) { return 2 * s * C10 / r + D1; }
inline double k_tilde(double s, double C10, double D1, int N, double T0, double mu0, double gamma2, double r, double beta3) {
  return 32 * s * C10 * D1 * std::exp(N * T0) / (mu0 * gamma2 * gamma2 * r * beta3);
}

}  // namespace ledger

struct SubCylinderPair {
  Word gamma[2];  ///< Gamma_{1,j}, Gamma_{2,j}
  double mass[2] = {0, 0};
  double lo[2] = {0, 0};  ///< range of psi over each sub-cylinder
  double hi[2] = {0, 0};
  double gap = 0;  ///< min |psi(x) - psi(z)| over the pair
};

struct ScaleCylinder {
  Word word;  ///< C'_m
  double mass = 0;
  Word branch[2];  ///< prefixes of the sigma^N-branches v_1, v_2
  double branch_tau[2] = {0, 0};
  std::vector<SubCylinderPair> pairs;
  double best_gap = 0;
};

struct JIndex {
  int i = 1;  ///< 1 or 2
  std::size_t m = 0;
  std::size_t j = 0;
  auto operator<=>(const JIndex&) const = default;
};

using JSet = std::vector<JIndex>;

struct DolgopyatFamily {
  double b = 0;
  int length = 0;    ///< common length s_m of the cylinders C'_m
  int colength = 0;  ///< co-length of the sub-cylinders inside C'_m
  ConstantLedger ledger;
  TwistModel model;  ///< a = 0
  std::vector<ScaleCylinder> cylinders;
  JSet J;  ///< default representative set

  const Subshift& shift() const { return model.shift(); }
  double theta() const { return model.theta; }
  int N() const { return ledger.N; }
  const Word& gamma(const JIndex& x) const { return cylinders[x.m].pairs[x.j].gamma[x.i - 1]; }
  const Word& branch(const JIndex& x) const { return cylinders[x.m].branch[x.i - 1]; }
  int gamma_length() const { return length + colength; }
};

namespace detail {

/// psi(x) = tau_N(beta1 x) - tau_N(beta2 x) tabulated over the extensions of `prefix` to length `depth`;
/// returns its range.
inline std::pair<double, double> psi_range(const DepthFn<double>& tau, int N, const Word& beta1, const Word& beta2,
                                           const Word& prefix, int depth) {
  const Subshift& shift = tau.shift();
  auto sp = shift.space(depth);
  const int extra = depth - static_cast<int>(prefix.size());
  const auto lo_code = sp->encode(prefix.span()) * sp->radix(extra);
  const auto hi_code = lo_code + sp->radix(extra);
  const auto& codes = sp->codes();
  auto it = std::lower_bound(codes.begin(), codes.end(), lo_code);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (; it != codes.end() && *it < hi_code; ++it) {
    const Word x = sp->word(static_cast<std::size_t>(it - codes.begin()));
    const double v = birkhoff_sum(tau, beta1.concat(x), N) - birkhoff_sum(tau, beta2.concat(x), N);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

inline double interval_gap(double lo1, double hi1, double lo2, double hi2) {
  return std::max(0.0, std::max(lo2 - hi1, lo1 - hi2));
}

/// Words of length `len` extending `prefix`, in lexicographic order.
inline std::vector<Word> extensions(const Subshift& shift, const Word& prefix, int len) {
  auto sp = shift.space(len);
  const int extra = len - static_cast<int>(prefix.size());
  const auto lo_code = sp->encode(prefix.span()) * sp->radix(extra);
  const auto hi_code = lo_code + sp->radix(extra);
  std::vector<Word> out;
  const auto& codes = sp->codes();
  for (auto it = std::lower_bound(codes.begin(), codes.end(), lo_code); it != codes.end() && *it < hi_code; ++it)
    out.push_back(sp->word(static_cast<std::size_t>(it - codes.begin())));
  return out;
}

}  // namespace detail

/// Representative set: for each m, add (i, m, j) over j in order until the Gamma masses reach
/// d4 / (4 d3) nu(C'_m). Variant v picks i = 1 + ((j + v) mod 2).
inline JSet representative_set(const DolgopyatFamily& fam, int variant = 0) {
  JSet J;
  const double need = fam.ledger.d4 / (4 * fam.ledger.d3);
  for (std::size_t m = 0; m < fam.cylinders.size(); ++m) {
    const auto& c = fam.cylinders[m];
    double acc = 0;
    for (std::size_t j = 0; j < c.pairs.size() && acc < need * c.mass; ++j) {
      const int i = 1 + static_cast<int>((j + static_cast<std::size_t>(variant)) % 2);
      J.push_back({i, m, j});
      acc += c.pairs[j].mass[i - 1];
    }
  }
  return J;
}

/// Representativeness: at most one i per (m, j) and the mass condition for every m.
inline bool is_representative(const DolgopyatFamily& fam, const JSet& J) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<double> acc(fam.cylinders.size(), 0.0);
  for (const auto& x : J) {
    if (x.m >= fam.cylinders.size() || x.j >= fam.cylinders[x.m].pairs.size() || (x.i != 1 && x.i != 2)) return false;
    if (!seen.insert({x.m, x.j}).second) return false;
    acc[x.m] += fam.cylinders[x.m].pairs[x.j].mass[x.i - 1];
  }
  const double need = fam.ledger.d4 / (4 * fam.ledger.d3);
  for (std::size_t m = 0; m < fam.cylinders.size(); ++m)
    if (acc[m] < need * fam.cylinders[m].mass * (1 - 1e-12)) return false;
  return true;
}

/// Builds the family for the model (taken at a = 0). K_0 is all of U, so V_b = U is covered by every
/// admissible word of length s with theta^s |b| closest to 1.
inline DolgopyatFamily build_family(const TwistModel& model, double b, const LabConfig& cfg = {}) {
  if (!(std::abs(b) >= std::exp(2.0))) throw InvalidArgument("build_family needs |b| >= e^2");
  if (cfg.N < 1) throw InvalidArgument("N must be >= 1");
  if (!(cfg.delta1 > 0)) throw InvalidArgument("delta1 must be positive");
  if (!(cfg.s > 1)) throw InvalidArgument("s must exceed 1");
  if (cfg.max_colength < 1) throw InvalidArgument("max_colength must be >= 1");
  const Subshift& shift = model.shift();
  const double theta = model.theta;
  const DepthFn<double>& tau = model.tau;
  const int kt = tau.depth();
  const double logb = std::log(std::abs(b));

  DolgopyatFamily fam;
  fam.b = b;
  fam.model = model;
  fam.length = std::max(1, static_cast<int>(std::lround(logb / std::log(1 / theta))));
  const int s = fam.length;
  const double scale = std::pow(theta, s);
  const double threshold = cfg.delta1 * scale;
  const auto branch_words = enumerate_words(shift, cfg.N);

  // Branches and the flatness test.
  const int psi_depth0 = std::max(kt - 1, s);
  bool any_variation = false;
  for (const auto& c : enumerate_words(shift, s)) {
    ScaleCylinder cyl;
    cyl.word = c;
    cyl.mass = model.gibbs.cylinder(c);
    std::vector<Word> branches;
    for (const auto& beta : branch_words)
      if (shift.allowed(beta[beta.size() - 1], c[0])) branches.push_back(beta);
    if (branches.size() < 2)
      throw SeparationFailure("cylinder " + c.str() + " has a single sigma^N branch", 0.0);
    const Word ref = shift.reference_point(c, static_cast<std::size_t>(psi_depth0));
    std::size_t imax = 0, imin = 0;
    std::vector<double> tn(branches.size());
    for (std::size_t t = 0; t < branches.size(); ++t) {
      tn[t] = birkhoff_sum(tau, branches[t].concat(ref), cfg.N);
      if (tn[t] > tn[imax]) imax = t;
      if (tn[t] < tn[imin]) imin = t;
    }
    if (imax == imin) imin = imax == 0 ? 1 : 0;
    cyl.branch[0] = branches[imax];
    cyl.branch[1] = branches[imin];
    cyl.branch_tau[0] = tn[imax];
    cyl.branch_tau[1] = tn[imin];
    if (!any_variation)
      for (std::size_t t = 1; t < branches.size() && !any_variation; ++t) {
        auto [lo, hi] = detail::psi_range(tau, cfg.N, branches[t], branches[0], c, psi_depth0);
        if (hi - lo > 1e-12 * std::max(1.0, std::abs(hi))) any_variation = true;
      }
    fam.cylinders.push_back(std::move(cyl));
  }
  if (!any_variation)
    throw FlatRoof("tau_N(v x) - tau_N(v' x) is constant on every cylinder for every pair of branches");

  // Sub-cylinder pairs: pick the co-length with the largest worst-case separation.
  double best_delta = -1;
  int best_cl = 0;
  std::vector<std::vector<SubCylinderPair>> best_pairs;
  for (int cl = 1; cl <= cfg.max_colength; ++cl) {
    const int depth = std::max(kt - 1, s + cl);
    double worst = std::numeric_limits<double>::infinity();
    std::vector<std::vector<SubCylinderPair>> all;
    for (const auto& cyl : fam.cylinders) {
      auto subs = detail::extensions(shift, cyl.word, s + cl);
      std::vector<std::pair<double, double>> range;
      for (const auto& g : subs) range.push_back(detail::psi_range(tau, cfg.N, cyl.branch[0], cyl.branch[1], g, depth));
      std::vector<std::size_t> order(subs.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return range[x].first + range[x].second < range[y].first + range[y].second;
      });
      std::vector<SubCylinderPair> pairs;
      double best_gap = 0;
      if (!order.empty()) {
        std::size_t lo = 0, hi = order.size() - 1;
        while (lo < hi) {
          const auto& r1 = range[order[lo]];
          const auto& r2 = range[order[hi]];
          const double gap = detail::interval_gap(r1.first, r1.second, r2.first, r2.second);
          best_gap = std::max(best_gap, gap);
          if (gap < threshold) break;
          SubCylinderPair p;
          p.gamma[0] = subs[order[lo]];
          p.gamma[1] = subs[order[hi]];
          p.lo[0] = r1.first, p.hi[0] = r1.second;
          p.lo[1] = r2.first, p.hi[1] = r2.second;
          p.gap = gap;
          for (int i = 0; i < 2; ++i) p.mass[i] = model.gibbs.cylinder(p.gamma[i]);
          pairs.push_back(std::move(p));
          ++lo;
          --hi;
        }
      }
      worst = std::min(worst, best_gap / scale);
      all.push_back(std::move(pairs));
    }
    if (worst > best_delta) {
      best_delta = worst;
      best_cl = cl;
      best_pairs = std::move(all);
    }
  }
  if (best_delta < cfg.delta1)
    throw SeparationFailure("no co-length <= " + std::to_string(cfg.max_colength) + " separates every cylinder at delta1 = " +
                                std::to_string(cfg.delta1),
                            std::max(best_delta, 0.0));
  fam.colength = best_cl;
  for (std::size_t m = 0; m < fam.cylinders.size(); ++m) {
    fam.cylinders[m].pairs = std::move(best_pairs[m]);
    for (const auto& p : fam.cylinders[m].pairs) fam.cylinders[m].best_gap = std::max(fam.cylinders[m].best_gap, p.gap);
  }

  // Measured d3, d4 and the ledger.
  ConstantLedger& L = fam.ledger;
  L.b = b;
  L.theta = theta;
  L.N = cfg.N;
  L.delta1 = cfg.delta1;
  L.eps2 = theta;
  L.C6 = 1 / theta;
  double d4 = 1, d3 = 1;
  for (const auto& c : fam.cylinders) {
    double g1 = 0, g2 = 0, mn = std::numeric_limits<double>::infinity(), mx = 0;
    for (const auto& p : c.pairs) {
      g1 += p.mass[0];
      g2 += p.mass[1];
      for (double v : p.mass) mn = std::min(mn, v), mx = std::max(mx, v);
    }
    d4 = std::min(d4, std::min(g1, g2) / c.mass);
    d3 = std::max(d3, mx / mn);
  }
  L.d3 = d3;
  L.d4 = d4;
  L.eps3 = ledger::eps3(cfg.delta1, L.eps2, false);
  L.mu0 = ledger::mu0(L.eps3);
  L.gamma2 = 0.5;  // nu(V_b) = 1
  const auto& f0 = model.fa();
  L.f_sup = f0.sup_norm();
  L.f_lip = lip_seminorm(f0, theta);
  L.tau_lip = lip_seminorm(tau, theta);
  L.T0 = std::max({L.f_sup, L.f_lip, L.tau_lip});
  L.E = ledger::E_min(L.T0, theta);
  L.C10 = ledger::C10(L.E, L.d4);
  L.D1 = std::max(1.0, s / logb);
  L.D2 = logb / s;
  L.a0 = ledger::a0(L.mu0, L.gamma2, L.N, L.T0, L.C10, L.D1);
  L.rho3 = ledger::rho3(L.a0, L.N, L.T0, L.mu0, L.C10);
  L.S0 = ledger::S0(L.a0, L.N, L.T0);
  L.lambda2 = subdominant_modulus(f0);
  L.beta3 = L.lambda2 > 0 ? std::min(1.0, -std::log(L.lambda2)) : 1.0;
  L.rho4 = std::exp(-L.beta3);
  L.r = L.lambda2 > 0 ? std::min(1.0, -L.N * std::log(L.lambda2)) : 1.0;
  L.beta = std::exp(-L.r);
  L.s = cfg.s;
  L.k = ledger::k(L.s, L.C10, L.r, L.D1);
  L.k_tilde = ledger::k_tilde(L.s, L.C10, L.D1, L.N, L.T0, L.mu0, L.gamma2, L.r, L.beta3);
  L.M = std::ceil(L.k_tilde * logb);
  L.decay_bound = 2 / std::pow(std::abs(b), 8 * L.s);

  fam.J = representative_set(fam, 0);
  return fam;
}

/// omega_J = 1 - mu0 sum over J of the indicator of X_{i,j} = v_{i,j}(Gamma_{i,j}).
inline DepthFn<double> omega_J(const DolgopyatFamily& fam, const JSet& J) {
  const int depth = fam.N() + fam.gamma_length();
  auto sp = fam.shift().space(depth);
  std::vector<double> v(sp->size(), 1.0);
  for (const auto& x : J) {
    const Word X = fam.branch(x).concat(fam.gamma(x));
    for (const auto& w : detail::extensions(fam.shift(), X, depth)) v[sp->index_of(w)] -= fam.ledger.mu0;
  }
  return DepthFn<double>(fam.shift(), depth, std::move(v));
}

/// Normalized f^(a) for the family's model.
inline DepthFn<double> normalized_potential(const DolgopyatFamily& fam, double a) {
  if (a == 0) return fam.model.fa();
  return rpf_solve(fam.model.fa() - a * fam.model.tau).normalized;
}

/// M_a^N h with M_a = L_{f^(a)}.
inline DepthFn<double> apply_MN(const DepthFn<double>& h, const DepthFn<double>& fa, int N) {
  return transfer_power(fa.map([](double x) { return std::exp(x); }), h, N);
}

/// N_J h = M_a^N(omega_J h).
inline DepthFn<double> apply_NJ(const DepthFn<double>& h, const DolgopyatFamily& fam, const JSet& J, double a = 0) {
  return apply_MN(omega_J(fam, J) * h, normalized_potential(fam, a), fam.N());
}

inline DepthFn<double> apply_NJ(const DepthFn<double>& h, const DolgopyatFamily& fam, double a = 0) {
  return apply_NJ(h, fam, fam.J, a);
}

/// The metric D of a representative set J on cylinder representatives.
class MetricD {
 public:
  MetricD(const DolgopyatFamily& fam, const JSet& J) : theta_(fam.theta()), k_(fam.shift().alphabet_size()) {
    for (const auto& x : J) {
      const Word& g = fam.gamma(x);
      std::uint64_t c = 0;
      for (int sym : g.span()) c = c * static_cast<std::uint64_t>(k_) + static_cast<std::uint64_t>(sym);
      gammas_[static_cast<int>(g.size())].insert(c);
    }
  }

  double operator()(const Word& u, const Word& v) const {
    if (u == v) return 0.0;
    const std::size_t l = common_prefix(u, v);
    // Largest p with sigma^p(Y(u, v)) inside some Gamma: the common prefix read from p starts with Gamma.
    for (std::size_t p = l + 1; p-- > 0;) {
      for (const auto& [len, set] : gammas_) {
        if (p + static_cast<std::size_t>(len) > l) continue;
        std::uint64_t c = 0;
        for (std::size_t t = p; t < p + static_cast<std::size_t>(len); ++t) c = c * static_cast<std::uint64_t>(k_) + static_cast<std::uint64_t>(u[t]);
        if (set.count(c)) return std::pow(theta_, static_cast<double>(l) - len);
      }
    }
    return 1.0;
  }

  /// 0 for case (i), 2 when some Gamma is found (case (ii)), 3 otherwise.
  int which_case(const Word& u, const Word& v) const {
    if (u == v) return 1;
    return (*this)(u, v) < 1.0 || matched(u, v) ? 2 : 3;
  }

 private:
  bool matched(const Word& u, const Word& v) const {
    const std::size_t l = common_prefix(u, v);
    for (std::size_t p = 0; p <= l; ++p)
      for (const auto& [len, set] : gammas_) {
        if (p + static_cast<std::size_t>(len) > l) continue;
        std::uint64_t c = 0;
        for (std::size_t t = p; t < p + static_cast<std::size_t>(len); ++t) c = c * static_cast<std::uint64_t>(k_) + static_cast<std::uint64_t>(u[t]);
        if (set.count(c)) return true;
      }
    return false;
  }

  double theta_;
  int k_;
  std::map<int, std::unordered_set<std::uint64_t>> gammas_;
};

inline double metric_D(const Word& u, const Word& v, const DolgopyatFamily& fam, const JSet& J) {
  return MetricD(fam, J)(u, v);
}

inline double metric_D(const Word& u, const Word& v, const DolgopyatFamily& fam) { return metric_D(u, v, fam, fam.J); }

/// Largest |H(u) - H(u')| / (E D(u, u') H(u')) over pairs of blocks inside a common C'_m; H is in K_E
/// iff this is <= 1.
inline double cone_KE_ratio(const DepthFn<double>& H, const DolgopyatFamily& fam, double E, const JSet& J) {
  for (double v : H.values())
    if (!(v > 0)) throw NonPositive("cone test needs H > 0");
  const int depth = std::max({H.depth(), fam.gamma_length(), fam.length});
  const auto Hd = H.lift(depth);
  const auto& sp = Hd.space();
  const MetricD D(fam, J);
  const auto group = sp.radix(depth - fam.length);
  double worst = 0;
  std::size_t start = 0;
  while (start < sp.size()) {
    std::size_t end = start;
    while (end < sp.size() && sp.code(end) / group == sp.code(start) / group) ++end;
    for (std::size_t i = start; i < end; ++i) {
      const Word u = sp.word(i);
      for (std::size_t j = start; j < end; ++j) {
        if (i == j) continue;
        const double num = std::abs(Hd[i] - Hd[j]);
        if (num == 0) continue;
        worst = std::max(worst, num / (E * D(u, sp.word(j)) * Hd[j]));
      }
    }
    start = end;
  }
  return worst;
}

inline bool cone_KE_test(const DepthFn<double>& H, const DolgopyatFamily& fam, double E, const JSet& J,
                         double rel_tol = 1e-12) {
  return cone_KE_ratio(H, fam, E, J) <= 1 + rel_tol;
}

inline bool cone_KE_test(const DepthFn<double>& H, const DolgopyatFamily& fam, double E) {
  return cone_KE_test(H, fam, E, fam.J);
}

/// Random member of K_E: exp of a random function with theta-seminorm `scale`.
inline DepthFn<double> random_cone_member(const DolgopyatFamily& fam, int depth, double scale, std::mt19937_64& rng) {
  auto g = random_lipschitz<double>(fam.shift(), depth, fam.theta(), rng);
  const double lip = lip_seminorm(g, fam.theta());
  const double c = lip > 0 ? scale / lip : 0.0;
  return g.map([c](double x) { return std::exp(c * x); });
}

struct MetricStepReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;        ///< all cases
  std::size_t violations_case2 = 0;  ///< D(u, u') from case (ii)
  std::size_t violations_case3 = 0;  ///< D(u, u') = 1 from case (iii)
  double worst_ratio = 0;            ///< max D(v, v') / (theta^N D(u, u'))
  double worst_case2 = 0;
  double worst_case3 = 0;
};

/// D(v, v') <= theta^N D(u, u') for v = beta u, v' = beta u' over all blocks u != u' of the given depth.
inline MetricStepReport metric_step_check(const DolgopyatFamily& fam, const JSet& J, int depth) {
  const Subshift& shift = fam.shift();
  const MetricD D(fam, J);
  const double tN = std::pow(fam.theta(), fam.N());
  const auto words = enumerate_words(shift, depth);
  const auto betas = enumerate_words(shift, fam.N());
  MetricStepReport rep;
  for (std::size_t i = 0; i < words.size(); ++i)
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      const double du = D(words[i], words[j]);
      const int cs = D.which_case(words[i], words[j]);
      for (const auto& beta : betas) {
        const int last = beta[beta.size() - 1];
        if (!shift.allowed(last, words[i][0]) || !shift.allowed(last, words[j][0])) continue;
        const double dv = D(beta.concat(words[i]), beta.concat(words[j]));
        ++rep.pairs;
        const double ratio = dv / (tN * du);
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        double& w = cs == 3 ? rep.worst_case3 : rep.worst_case2;
        w = std::max(w, ratio);
        if (ratio > 1 + 1e-12) {
          ++rep.violations;
          (cs == 3 ? rep.violations_case3 : rep.violations_case2)++;
        }
      }
    }
  return rep;
}

struct ConeStepReport {
  double int_V_H2 = 0;
  double int_W_H2 = 0;
  double ratio_a = 0;  ///< int_V H^2 / int_W H^2, compared with C10
  bool a_holds = false;
  double lhs_b = 0;  ///< int_V (N_J H)^2
  double rhs_b = 0;  ///< rho3 int_V L^N_{f^(0)}(H^2)
  bool b_holds = false;
  bool cauchy_schwarz = false;  ///< (N_J H)^2 <= (M^N omega^2)(M^N H^2) on every block
  double cs_worst = 0;          ///< max of the left side over the right side
  bool chain = false;           ///< (M^N H)^2 <= M^N H^2 <= e^{a0 N T0} L^N_{f^(0)} H^2 on every block
  double chain_worst = 0;
};

/// Cone mass ratio (a) and one-step L2 contraction (b), together with the pointwise steps behind (b), all as exact cylinder sums.
inline ConeStepReport cone_step_checks(const DepthFn<double>& H, const DolgopyatFamily& fam, const JSet& J, double a = 0,
                                       double rel_tol = 1e-12) {
  if (J.empty()) throw InvalidArgument("cone_step_checks needs a nonempty representative set");
  const auto& gibbs = fam.model.gibbs;
  const auto fa = normalized_potential(fam, a);
  const auto& f0 = fam.model.fa();
  const int N = fam.N();
  const auto omega = omega_J(fam, J);
  const auto H2 = H * H;
  ConeStepReport rep;

  // (a)
  const int dW = std::max(H.depth(), fam.gamma_length());
  auto sp = fam.shift().space(dW);
  std::vector<double> w(sp->size(), 0.0);
  for (const auto& x : J)
    for (const auto& u : detail::extensions(fam.shift(), fam.gamma(x), dW)) w[sp->index_of(u)] = 1.0;
  const DepthFn<double> chiW(fam.shift(), dW, std::move(w));
  rep.int_V_H2 = gibbs.integrate(H2);
  rep.int_W_H2 = gibbs.integrate(H2 * chiW);
  rep.ratio_a = rep.int_V_H2 / rep.int_W_H2;
  rep.a_holds = rep.ratio_a <= fam.ledger.C10;

  // (b)
  const auto NJH = apply_MN(omega * H, fa, N);
  const auto NJH2 = NJH * NJH;
  rep.lhs_b = gibbs.integrate(NJH2);
  rep.rhs_b = fam.ledger.rho3 * gibbs.integrate(apply_MN(H2, f0, N));
  rep.b_holds = rep.lhs_b <= rep.rhs_b * (1 + rel_tol);

  // Cauchy-Schwarz step
  const auto A = apply_MN(omega * omega, fa, N);
  const auto B = apply_MN(H2, fa, N);
  {
    const int d = std::max({NJH2.depth(), A.depth(), B.depth()});
    const auto l = NJH2.lift(d), r = (A * B).lift(d);
    rep.cs_worst = 0;
    for (std::size_t i = 0; i < l.size(); ++i) rep.cs_worst = std::max(rep.cs_worst, l[i] / r[i]);
    rep.cauchy_schwarz = rep.cs_worst <= 1 + rel_tol;
  }
  // chain through M^N and L^N
  {
    const auto MH = apply_MN(H, fa, N);
    const auto lhs = MH * MH;
    const auto L0 = apply_MN(H2, f0, N);
    const double s0 = std::exp(fam.ledger.a0 * N * fam.ledger.T0);
    const int d = std::max({lhs.depth(), B.depth(), L0.depth()});
    const auto x = lhs.lift(d), y = B.lift(d), z = L0.lift(d);
    rep.chain_worst = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      rep.chain_worst = std::max({rep.chain_worst, x[i] / y[i], y[i] / (s0 * z[i])});
    rep.chain = rep.chain_worst <= 1 + rel_tol;
  }
  return rep;
}

inline ConeStepReport cone_step_checks(const DepthFn<double>& H, const DolgopyatFamily& fam, double a = 0) {
  return cone_step_checks(H, fam, fam.J, a);
}

/// N_J on a fixed block depth d >= max(block depth of f^(a), |Gamma|): N_J h = M^N h - mu0 S_J h with the
/// sparse correction S_J h(u) = e^{f_N(v_i u)} h(v_i u) for u in Gamma_{i,j}.
class ContractionEngine {
 public:
  ContractionEngine(const DolgopyatFamily& fam, const std::vector<JSet>& sequence, double a = 0)
      : mu0_(fam.ledger.mu0), N_(fam.N()) {
    const auto fa = normalized_potential(fam, a);
    const Subshift& shift = fam.shift();
    depth_ = std::max(fa.depth() - 1, fam.gamma_length());
    sp_ = shift.space(depth_);
    masses_ = fam.model.gibbs.masses(depth_).values();
    const int k = shift.alphabet_size();
    const auto top = sp_->radix(depth_);
    row_.assign(sp_->size() + 1, 0);
    for (std::size_t i = 0; i < sp_->size(); ++i) {
      const auto cu = sp_->code(i);
      const int u0 = static_cast<int>(cu / sp_->radix(depth_ - 1));
      for (int sym = 0; sym < k; ++sym) {
        if (!shift.allowed(sym, u0)) continue;
        const auto cv = static_cast<std::uint64_t>(sym) * top + cu;
        col_.push_back(sp_->find(cv / k));
        val_.push_back(std::exp(fa.at_code(cv, depth_ + 1)));
      }
      row_[i + 1] = col_.size();
    }
    for (const auto& J : sequence) {
      Correction c;
      for (const auto& x : J) {
        const Word& beta = fam.branch(x);
        for (const auto& u : detail::extensions(shift, fam.gamma(x), depth_)) {
          const Word v = beta.concat(u);
          c.at.push_back(sp_->index_of(u));
          c.from.push_back(sp_->index_of(v.prefix(static_cast<std::size_t>(depth_))));
          c.weight.push_back(std::exp(birkhoff_sum(fa, v, N_)));
        }
      }
      corrections_.push_back(std::move(c));
    }
  }

  int depth() const noexcept { return depth_; }
  std::size_t dim() const noexcept { return sp_->size(); }

  /// One application of N_{J_r}, r indexing the sequence cyclically.
  void step(std::vector<double>& h, std::size_t r) {
    tmp_.resize(h.size());
    cur_ = h;
    for (int n = 0; n < N_; ++n) {
      for (std::size_t i = 0; i < cur_.size(); ++i) {
        double s = 0;
        for (auto p = row_[i]; p < row_[i + 1]; ++p) s += val_[p] * cur_[col_[p]];
        tmp_[i] = s;
      }
      cur_.swap(tmp_);
    }
    const auto& c = corrections_[r % corrections_.size()];
    for (std::size_t t = 0; t < c.at.size(); ++t) cur_[c.at[t]] -= mu0_ * c.weight[t] * h[c.from[t]];
    h.swap(cur_);
  }

  double integral_sq(const std::vector<double>& h) const {
    double s = 0;
    for (std::size_t i = 0; i < h.size(); ++i) s += masses_[i] * h[i] * h[i];
    return s;
  }

 private:
  struct Correction {
    std::vector<std::size_t> at, from;
    std::vector<double> weight;
  };
  double mu0_;
  int N_;
  int depth_ = 1;
  std::shared_ptr<const WordSpace> sp_;
  std::vector<double> masses_;
  std::vector<std::size_t> row_, col_;
  std::vector<double> val_;
  std::vector<Correction> corrections_;
  std::vector<double> tmp_, cur_;
};

struct DecayCurve {
  std::vector<double> values;  ///< int (H^(r))^2 dnu, r = 0, 1, ...
  double M_budget = 0;         ///< ceil(k_tilde log|b|)
  double bound = 0;            ///< 2 / |b|^{8s}
  bool strictly_decreasing = false;
  bool halved = false;
  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
};

/// H^(0) = 1, H^(r+1) = N_{J_r} H^(r); runs min(max_steps, M) steps, stopping early once the integral falls
/// below stop_fraction times its initial value (stop_fraction = 0 never stops early).
inline DecayCurve iterate_NJ(const DolgopyatFamily& fam, const std::vector<JSet>& sequence, double a, std::size_t max_steps,
                             double stop_fraction = 0.0) {
  if (sequence.empty()) throw InvalidArgument("iterate_NJ needs at least one representative set");
  ContractionEngine eng(fam, sequence, a);
  DecayCurve curve;
  curve.M_budget = fam.ledger.M;
  curve.bound = fam.ledger.decay_bound;
  std::vector<double> h(eng.dim(), 1.0);
  curve.values.push_back(eng.integral_sq(h));
  const double target = stop_fraction * curve.values[0];
  const auto limit = static_cast<std::size_t>(std::min(static_cast<double>(max_steps), fam.ledger.M));
  curve.strictly_decreasing = true;
  for (std::size_t r = 0; r < limit; ++r) {
    eng.step(h, r);
    const double v = eng.integral_sq(h);
    if (!(v < curve.values.back())) curve.strictly_decreasing = false;
    curve.values.push_back(v);
    if (stop_fraction > 0 && v < target) break;
  }
  curve.halved = curve.values.back() < curve.values.front() / 2;
  return curve;
}

/// Cyclic sequence of representative sets alternating the preferred member of each pair.
inline std::vector<JSet> representative_sequence(const DolgopyatFamily& fam) {
  return {representative_set(fam, 0), representative_set(fam, 1)};
}

struct FamilyCheck {
  bool lengths = false;     ///< s_m in [log|b| / D2, D1 log|b|]
  bool diameters = false;   ///< theta^{s_m} |b| in [eps2, C6]
  bool separation = false;  ///< |psi(x) - psi(z)| >= delta1 theta^{s_m} on every pair, recomputed
  bool balance = false;     ///< masses within a factor d3
  bool representative = false;
  bool omega_range = false;  ///< 1/2 <= 1 - mu0 <= omega_J <= 1
  bool disjoint = false;     ///< sub-cylinders of one C'_m are pairwise disjoint
  double min_delta = 0;      ///< smallest recomputed gap / theta^{s_m}
  bool all() const { return lengths && diameters && separation && balance && representative && omega_range && disjoint; }
};

/// Re-verifies every family invariant from scratch.
inline FamilyCheck verify_family(const DolgopyatFamily& fam, const JSet& J) {
  FamilyCheck chk;
  const auto& L = fam.ledger;
  const double logb = std::log(std::abs(fam.b));
  const double scale = std::pow(fam.theta(), fam.length);
  chk.lengths = fam.length >= logb / L.D2 - 1e-12 && fam.length <= L.D1 * logb + 1e-12;
  chk.diameters = scale * std::abs(fam.b) >= L.eps2 - 1e-12 && scale * std::abs(fam.b) <= L.C6 + 1e-12;
  const int depth = std::max(fam.model.tau.depth() - 1, fam.gamma_length());
  chk.min_delta = std::numeric_limits<double>::infinity();
  chk.separation = chk.balance = chk.disjoint = true;
  for (const auto& c : fam.cylinders) {
    std::vector<Word> seen;
    double mn = std::numeric_limits<double>::infinity(), mx = 0;
    for (const auto& p : c.pairs) {
      auto r1 = detail::psi_range(fam.model.tau, fam.N(), c.branch[0], c.branch[1], p.gamma[0], depth);
      auto r2 = detail::psi_range(fam.model.tau, fam.N(), c.branch[0], c.branch[1], p.gamma[1], depth);
      const double gap = detail::interval_gap(r1.first, r1.second, r2.first, r2.second);
      chk.min_delta = std::min(chk.min_delta, gap / scale);
      if (gap < L.delta1 * scale * (1 - 1e-12)) chk.separation = false;
      for (const auto& g : p.gamma) {
        if (!g.starts_with(c.word)) chk.disjoint = false;
        for (const auto& o : seen)
          if (g.starts_with(o) || o.starts_with(g)) chk.disjoint = false;
        seen.push_back(g);
        const double m = fam.model.gibbs.cylinder(g);
        mn = std::min(mn, m);
        mx = std::max(mx, m);
      }
    }
    if (c.pairs.empty() || mx / mn > L.d3 * (1 + 1e-12)) chk.balance = false;
  }
  chk.representative = is_representative(fam, J);
  const auto omega = omega_J(fam, J);
  chk.omega_range = 0.5 <= 1 - L.mu0;
  for (double v : omega.values())
    if (v < 1 - L.mu0 - 1e-15 || v > 1) chk.omega_range = false;
  return chk;
}

// ---------------------------------------------------------------------------------------------------------
// Borel-Cantelli statistics

struct BorelCantelliOptions {
  double gamma2 = -1;  ///< default nu(V_b) / 2
  double beta = -1;    ///< default e^{-r}, r = min(1, -N log|lambda_2|)
  int cluster_n_max = 0;  ///< default ell + 12
  std::size_t samples = 1000000;
  std::uint64_t seed = 1;
  double exact_cap = 2e7;  ///< largest (block states) x (M + 1) handled exactly
  int threads = 0;
};

struct BorelCantelliReport {
  int N = 1;
  int M = 1;
  bool exact = true;
  std::size_t samples = 0;
  double nu_V = 0;
  double gamma2 = 0;
  std::vector<double> distribution;  ///< P(S_M = c), c = 0..M
  double second_moment = 0;          ///< int (S_M / M - nu(V))^2 dnu
  double epsilon = 0;                ///< second_moment / gamma2^2
  double nu_U_eps = 0;               ///< nu{S_M / M < gamma2}
  double nu_U_eps_se = 0;            ///< Monte Carlo standard error (0 in exact mode)
  bool verdict = false;              ///< nu(U_eps) < eps
  int ell = 1;                       ///< longest cylinder of V in sigma^N blocks
  double r = 1;
  double beta = 0;
  std::vector<double> cluster;       ///< nu(sigma^{-nN} V cap V) - nu(V)^2, n = 1..n_max
  double cluster_envelope = 0;       ///< max over n >= ell of |cluster_n| / (nu(V)^2 beta^{n - ell})
};

/// S_M(x) = #{0 <= j < M : sigma^{jN} x in V} (equal in law to the count over j = 1..M by invariance) for a
/// union V of cylinders; exact dynamic programming over block states, Monte Carlo beyond the cap.
inline BorelCantelliReport borel_cantelli_stats(const GibbsSolution& sol, const std::vector<Word>& V, int N, int M,
                                                const BorelCantelliOptions& opt = {}) {
  if (N < 1 || M < 1) throw InvalidArgument("borel_cantelli_stats needs N >= 1 and M >= 1");
  if (V.empty()) throw InvalidArgument("V must contain at least one cylinder");
  const Subshift& shift = sol.shift();
  int L = 0;
  for (const auto& w : V) L = std::max(L, static_cast<int>(w.size()));
  // Indicator of V at depth L.
  auto spL = shift.space(L);
  std::vector<double> ind(spL->size(), 0.0);
  for (const auto& w : V) {
    if (w.empty()) throw InvalidArgument("empty cylinder in V");
    for (const auto& x : detail::extensions(shift, w, L)) ind[spL->index_of(x)] = 1.0;
  }
  const DepthFn<double> chiV(shift, L, ind);
  BorelCantelliReport rep;
  rep.N = N;
  rep.M = M;
  rep.nu_V = sol.integrate(chiV);
  rep.gamma2 = opt.gamma2 > 0 ? opt.gamma2 : rep.nu_V / 2;
  rep.distribution.assign(static_cast<std::size_t>(M) + 1, 0.0);

  const auto& f0 = sol.normalized;
  const int q = sol.block_depth();
  const int W = std::max(L, q);
  auto spW = shift.space(W);
  const double states = static_cast<double>(spW->size()) * (M + 1);
  rep.exact = states <= opt.exact_cap;
  if (rep.exact) {
    const int k = shift.alphabet_size();
    const std::size_t S = spW->size();
    const std::size_t C = static_cast<std::size_t>(M) + 1;
    const auto divL = spW->radix(W - L);
    auto hit = [&](std::size_t i) { return static_cast<std::size_t>(ind[spL->find(spW->code(i) / divL)]); };
    // Transitions s -> a.s[0, W-1) with weight e^{f0(a.s[0, q))}.
    std::vector<std::size_t> to;
    std::vector<std::size_t> from;
    std::vector<double> wt;
    for (std::size_t i = 0; i < S; ++i) {
      const auto c = spW->code(i);
      const int s0 = static_cast<int>(c / spW->radix(W - 1));
      for (int a = 0; a < k; ++a) {
        if (!shift.allowed(a, s0)) continue;
        const auto ext = static_cast<std::uint64_t>(a) * spW->radix(W) + c;  // length W + 1
        from.push_back(i);
        to.push_back(spW->find(ext / static_cast<std::uint64_t>(k)));
        wt.push_back(std::exp(f0.at_code(ext / spW->radix(W - q), q + 1)));
      }
    }
    const auto& mW = sol.masses(W);
    std::vector<double> dist(S * C, 0.0), next(S * C);
    const int T = (M - 1) * N + W;
    int p = T - W;
    for (std::size_t i = 0; i < S; ++i) dist[i * C + hit(i)] = mW[i];
    for (; p > 0; --p) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t t = 0; t < to.size(); ++t) {
        const double* src = &dist[from[t] * C];
        double* dst = &next[to[t] * C];
        for (std::size_t c = 0; c < C; ++c) dst[c] += wt[t] * src[c];
      }
      if ((p - 1) % N == 0) {
        for (std::size_t i = 0; i < S; ++i) {
          if (!hit(i)) continue;
          double* row = &next[i * C];
          for (std::size_t c = C - 1; c > 0; --c) row[c] = row[c - 1];
          row[0] = 0;
        }
      }
      dist.swap(next);
    }
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t c = 0; c < C; ++c) rep.distribution[c] += dist[i * C + c];
  } else {
    const Sampler sampler(sol);
    const std::size_t n = opt.samples;
    const int T = (M - 1) * N + L;
    const std::size_t chunks = 64;
    std::vector<std::vector<double>> counts(chunks, std::vector<double>(rep.distribution.size(), 0.0));
    parallel_chunks(chunks, resolve_threads(opt.threads), [&](std::size_t chunk) {
      auto rng = make_rng(opt.seed, chunk + 1);
      auto& cnt_c = counts[chunk];
      for (std::size_t t = chunk * n / chunks; t < (chunk + 1) * n / chunks; ++t) {
        const auto x = sampler.sample(static_cast<std::size_t>(T), rng);
        int cnt = 0;
        for (int j = 0; j < M; ++j) {
          const auto code = spL->encode(std::span<const int>(x.data() + j * N, static_cast<std::size_t>(L)));
          cnt += static_cast<int>(ind[spL->find(code)]);
        }
        cnt_c[static_cast<std::size_t>(cnt)] += 1;
      }
    });
    for (const auto& c : counts)
      for (std::size_t i = 0; i < c.size(); ++i) rep.distribution[i] += c[i] / static_cast<double>(n);
    rep.samples = n;
  }
  for (std::size_t c = 0; c < rep.distribution.size(); ++c) {
    const double x = static_cast<double>(c) / M - rep.nu_V;
    rep.second_moment += rep.distribution[c] * x * x;
    if (static_cast<double>(c) / M < rep.gamma2) rep.nu_U_eps += rep.distribution[c];
  }
  if (!rep.exact)
    rep.nu_U_eps_se = std::sqrt(rep.nu_U_eps * (1 - rep.nu_U_eps) / static_cast<double>(rep.samples));
  rep.epsilon = rep.second_moment / (rep.gamma2 * rep.gamma2);
  rep.verdict = rep.nu_U_eps < rep.epsilon;

  // Cluster property in the sigma^N block system.
  rep.ell = (L + N - 1) / N;
  if (opt.beta > 0) {
    rep.beta = opt.beta;
    rep.r = -std::log(opt.beta);
  } else {
    const double l2 = subdominant_modulus(f0);
    rep.r = l2 > 0 ? std::min(1.0, -N * std::log(l2)) : 1.0;
    rep.beta = std::exp(-rep.r);
  }
  const int n_max = opt.cluster_n_max > 0 ? opt.cluster_n_max : rep.ell + 12;
  const auto ef0 = f0.map([](double x) { return std::exp(x); });
  DepthFn<double> g = chiV;
  const double nu2 = rep.nu_V * rep.nu_V;
  for (int n = 1; n <= n_max; ++n) {
    for (int t = 0; t < N; ++t) g = transfer_apply(ef0, g);
    const double joint = sol.integrate(chiV * g);
    const double disc = joint - nu2;
    rep.cluster.push_back(disc);
    if (n >= rep.ell && nu2 > 0)
      rep.cluster_envelope = std::max(rep.cluster_envelope, std::abs(disc) / (nu2 * std::pow(rep.beta, n - rep.ell)));
  }
  return rep;
}

/// Statistics for the family's V_b (all of U in the symbolic convention).
inline BorelCantelliReport borel_cantelli_stats(const DolgopyatFamily& fam, int M, const BorelCantelliOptions& opt = {}) {
  std::vector<Word> V;
  for (const auto& c : fam.cylinders) V.push_back(c.word);
  BorelCantelliOptions o = opt;
  if (o.gamma2 <= 0) o.gamma2 = fam.ledger.gamma2;
  return borel_cantelli_stats(fam.model.gibbs, V, fam.N(), M, o);
}

}  // namespace ruelle

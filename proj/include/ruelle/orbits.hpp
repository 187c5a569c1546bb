#pragma once

// Primitive periodic orbits, flow periods, Ruelle zeta truncations and prime orbit counting.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <numeric>
#include <optional>

#include "ruelle/thermo.hpp"

namespace ruelle {

struct PeriodicOrbit {
  Word word;  ///< lexicographically least rotation, primitive
  int n = 0;  ///< symbolic period
  double flow_period = 0;
};

/// #Fix(sigma^n) = trace(transition^n), exact.
inline std::uint64_t fixed_point_count(const Subshift& shift, int n) {
  const int k = shift.alphabet_size();
  std::uint64_t total = 0;
  for (int start = 0; start < k; ++start) {
    std::vector<std::uint64_t> v(static_cast<std::size_t>(k), 0);
    v[static_cast<std::size_t>(start)] = 1;
    for (int step = 0; step < n; ++step) {
      std::vector<std::uint64_t> nv(static_cast<std::size_t>(k), 0);
      for (int a = 0; a < k; ++a)
        if (v[static_cast<std::size_t>(a)])
          for (int b = 0; b < k; ++b)
            if (shift.allowed(a, b)) nv[static_cast<std::size_t>(b)] += v[static_cast<std::size_t>(a)];
      v = std::move(nv);
    }
    total += v[static_cast<std::size_t>(start)];
  }
  return total;
}

/// True if the cyclic word (including the wrap from last to first symbol) is admissible.
inline bool cyclically_admissible(const Subshift& shift, std::span<const int> w) {
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!shift.allowed(w[i], w[(i + 1) % w.size()])) return false;
  return true;
}

inline void check_orbit_capacity(const Subshift& shift, int n_max, double cap) {
  if (n_max < 1) throw InvalidArgument("n_max must be >= 1");
  double total = 0;
  for (int n = 1; n <= n_max; ++n) total += static_cast<double>(fixed_point_count(shift, n));
  if (total > cap) throw CapacityError("periodic points up to period " + std::to_string(n_max) + " exceed cap", total, cap);
}

/// Calls visit(span) once per primitive periodic orbit of period <= n_max with its least rotation, in
/// lexicographic order. Duval's Lyndon word generator, cut at the first forbidden transition.
template <class Visit>
void for_each_primitive_orbit(const Subshift& shift, int n_max, Visit&& visit, double cap = 1e8) {
  check_orbit_capacity(shift, n_max, cap);
  const int k = shift.alphabet_size();
  std::vector<int> w{-1};
  w.reserve(static_cast<std::size_t>(n_max));
  while (!w.empty()) {
    ++w.back();
    const std::size_t m = w.size();
    const bool inner_ok = m < 2 || shift.allowed(w[m - 2], w[m - 1]);
    if (inner_ok && shift.allowed(w[m - 1], w[0])) visit(std::span<const int>(w));
    if (inner_ok) {
      while (w.size() < static_cast<std::size_t>(n_max)) {
        const int next = w[w.size() - m];
        if (!shift.allowed(w.back(), next)) {
          w.push_back(next);  // everything extending this prefix is inadmissible
          break;
        }
        w.push_back(next);
      }
    }
    while (!w.empty() && w.back() == k - 1) w.pop_back();
  }
}

/// One representative (least rotation) of every primitive periodic orbit of symbolic period <= n_max, ordered
/// by period and then lexicographically. Flow periods are filled in when a roof is given.
inline std::vector<PeriodicOrbit> primitive_orbits(const Subshift& shift, int n_max,
                                                   const DepthFn<double>* roof = nullptr,
                                                   double cap = 1e8) {
  std::vector<PeriodicOrbit> out;
  for_each_primitive_orbit(shift, n_max, [&](std::span<const int> w) {
    PeriodicOrbit o;
    o.word = Word(std::vector<int>(w.begin(), w.end()));
    o.n = static_cast<int>(w.size());
    if (roof) o.flow_period = cyclic_birkhoff_sum(*roof, o.word);
    out.push_back(std::move(o));
  }, cap);
  std::stable_sort(out.begin(), out.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.n < b.n; });
  return out;
}

/// Flow period of the periodic point with period word w, read through codes.
inline double cyclic_sum_codes(const DepthFn<double>& g, std::span<const int> w) {
  const int k = g.depth();
  const std::size_t n = w.size();
  const auto& sp = g.space();
  const auto top = sp.radix(k - 1);
  std::uint64_t c = 0;
  for (int j = 0; j < k; ++j) c = c * static_cast<std::uint64_t>(g.shift().alphabet_size()) + static_cast<std::uint64_t>(w[static_cast<std::size_t>(j) % n]);
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s += g.at_code(c, k);
    c = (c % top) * static_cast<std::uint64_t>(g.shift().alphabet_size()) + static_cast<std::uint64_t>(w[(i + static_cast<std::size_t>(k)) % n]);
  }
  return s;
}

/// Primitive orbit counts P(1..n_max).
inline std::vector<std::uint64_t> primitive_counts(const std::vector<PeriodicOrbit>& orbits, int n_max) {
  std::vector<std::uint64_t> p(static_cast<std::size_t>(n_max) + 1, 0);
  for (const auto& o : orbits)
    if (o.n <= n_max) ++p[static_cast<std::size_t>(o.n)];
  return p;
}

/// h_T: the root of s -> Pr(-s tau).
inline double top_entropy(const DepthFn<double>& tau) {
  return solve_Pf(DepthFn<double>::constant(tau.shift(), 1, 0.0), tau);
}

inline double top_entropy(const Subshift& shift, const DepthFn<double>& tau) {
  if (tau.shift().alphabet_size() != shift.alphabet_size()) throw InvalidArgument("roof belongs to another shift");
  return top_entropy(tau);
}

struct ZetaEval {
  cplx s;
  int n_max = 0;
  int orbit_n_max = 0;          ///< period cutoff of the orbit product
  cplx partial_product;         ///< prod over primitive orbits with period <= orbit_n_max of (1 - e^{-s l})^{-1}
  cplx log_partial;             ///< sum_{n <= n_max} (1/n) sum_{sigma^n x = x} e^{-s tau_n(x)}
  cplx truncated;               ///< exp(log_partial)
  cplx tail;                    ///< geometric estimate of the omitted terms n > n_max
  cplx value;                   ///< exp(log_partial + tail)
  std::optional<cplx> determinant;  ///< 1 / det(I - L_s) on the block space
  double h_T = 0;
  bool divergent = false;       ///< Re s <= h_T: truncations carry no convergence claim
};

/// Traces tr(L_s^n), n = 1..n_max, of the block matrix with weights e^{-s tau}; these equal
/// sum over sigma^n x = x of e^{-s tau_n(x)}.
inline std::vector<cplx> zeta_traces(const DepthFn<double>& tau, cplx s, int n_max) {
  auto t = build_transfer(DepthFn<double>::constant(tau.shift(), 1, 0.0), tau, s);
  auto m = t.dense();
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
  std::vector<cplx> tr(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    p = p * m;
    tr[static_cast<std::size_t>(n)] = p.trace();
  }
  return tr;
}

inline ZetaEval zeta_eval(const DepthFn<double>& tau, cplx s, int n_max, int orbit_n_max = -1, double orbit_cap = 1e6) {
  if (n_max < 2) throw InvalidArgument("n_max must be >= 2");
  detail::check_roof(tau);
  const Subshift& shift = tau.shift();
  ZetaEval z;
  z.s = s;
  z.n_max = n_max;
  z.h_T = top_entropy(tau);
  z.divergent = s.real() <= z.h_T;

  auto tr = zeta_traces(tau, s, n_max);
  cplx log_sum = 0;
  for (int n = 1; n <= n_max; ++n) log_sum += tr[static_cast<std::size_t>(n)] / static_cast<double>(n);
  z.log_partial = log_sum;
  z.truncated = std::exp(log_sum);

  // Tail: tr(L^n) ~ c r^n with r estimated from the last two traces.
  const cplx last = tr[static_cast<std::size_t>(n_max)], prev = tr[static_cast<std::size_t>(n_max - 1)];
  cplx tail = 0;
  if (std::abs(prev) > 0 && !z.divergent) {
    const cplx r = last / prev;
    if (std::abs(r) < 1) {
      cplx term = last;
      for (int n = n_max + 1; n < n_max + 100000; ++n) {
        term *= r;
        const cplx add = term / static_cast<double>(n);
        tail += add;
        if (std::abs(add) < 1e-18 * std::max(1.0, std::abs(tail))) break;
      }
    }
  }
  z.tail = tail;
  z.value = std::exp(log_sum + tail);

  auto m = build_transfer(DepthFn<double>::constant(shift, 1, 0.0), tau, s).dense();
  const cplx det = (Eigen::MatrixXcd::Identity(m.rows(), m.cols()) - m).determinant();
  if (std::abs(det) > 0) z.determinant = 1.0 / det;

  // Orbit product over as many periods as the cap allows.
  if (orbit_n_max < 0) {
    double total = 0;
    orbit_n_max = 0;
    while (orbit_n_max < n_max) {
      total += static_cast<double>(fixed_point_count(shift, orbit_n_max + 1));
      if (total > orbit_cap) break;
      ++orbit_n_max;
    }
  }
  z.orbit_n_max = orbit_n_max;
  cplx log_prod = 0;
  if (orbit_n_max >= 1)
    for_each_primitive_orbit(shift, orbit_n_max, [&](std::span<const int> w) {
      log_prod -= std::log(1.0 - std::exp(-s * cyclic_sum_codes(tau, w)));
    }, orbit_cap);
  z.partial_product = std::exp(log_prod);
  return z;
}

/// Integral of du / log u over [lo, hi] with 1 < lo <= hi, in the variable t = log u.
inline double li_between(double lo, double hi) {
  if (!(lo > 1.0)) throw InvalidArgument("li: lower limit must exceed 1");
  double err = 0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double t) { return std::exp(t) / t; }, std::log(lo), std::log(hi), 15, 1e-13, &err);
  if (!(err <= std::max(1e-8, 1e-14 * std::abs(v)))) throw NoConvergence("li quadrature", err);
  return v;
}

/// li(x) = integral from 2 to x of du / log u.
inline double li(double x) {
  if (x == 2.0) return 0.0;
  if (x < 2.0) return -li_between(x, 2.0);
  return li_between(2.0, x);
}

struct PrimeOrbitRow {
  double lambda;
  std::uint64_t pi;
  double li;
  double ratio;
};

struct PrimeOrbitTable {
  double h_T = 0;
  int symbolic_cutoff = 0;
  std::vector<PrimeOrbitRow> rows;
};

/// pi(lambda) = #{primitive orbits with flow period <= lambda} against li(e^{h_T lambda}) on a grid.
inline PrimeOrbitTable prime_orbit_count(const DepthFn<double>& tau, const std::vector<double>& grid, double cap = 1e8) {
  detail::check_roof(tau);
  PrimeOrbitTable t;
  t.h_T = top_entropy(tau);
  const double lambda_max = *std::max_element(grid.begin(), grid.end());
  const double tau_min = detail::min_value(tau);
  t.symbolic_cutoff = static_cast<int>(std::floor(lambda_max / tau_min + 1e-12));
  std::vector<double> periods;
  if (t.symbolic_cutoff >= 1)
    for (const auto& o : primitive_orbits(tau.shift(), t.symbolic_cutoff, &tau, cap)) periods.push_back(o.flow_period);
  std::sort(periods.begin(), periods.end());
  for (double lam : grid) {
    PrimeOrbitRow r;
    r.lambda = lam;
    r.pi = static_cast<std::uint64_t>(std::upper_bound(periods.begin(), periods.end(), lam + 1e-12) - periods.begin());
    r.li = li(std::exp(t.h_T * lam));
    r.ratio = static_cast<double>(r.pi) / r.li;
    t.rows.push_back(r);
  }
  return t;
}

inline std::vector<double> uniform_grid(double lo, double hi, int steps) {
  std::vector<double> g;
  for (int i = 0; i <= steps; ++i) g.push_back(lo + (hi - lo) * i / std::max(steps, 1));
  return g;
}

}  // namespace ruelle

#pragma once

// RPF eigendata, pressure, normalized potentials, Gibbs cylinder measures and a Gibbs sampler.

#include <Eigen/Eigenvalues>
#include <map>
#include <mutex>
#include <random>

#include "ruelle/stats.hpp"
#include "ruelle/transfer.hpp"

namespace ruelle {

struct PerronVectors {
  double lambda = 0;
  std::vector<double> right;
  std::vector<double> left;
  double residual = 0;
  int iterations = 0;
};

namespace detail {

// Power iteration for x -> step(x) on a nonnegative primitive operator.
template <class Step>
std::pair<double, std::vector<double>> perron_iterate(std::size_t dim, Step step, double tol, int max_iter,
                                                     double& residual, int& iterations) {
  std::vector<double> x(dim, 1.0 / static_cast<double>(dim));
  double lambda = 0;
  int polish = -1;
  for (int it = 1; it <= max_iter; ++it) {
    auto y = step(x);
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      sx += x[i];
      sy += y[i];
    }
    lambda = sy / sx;
    double res = 0, scale = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      res = std::max(res, std::abs(y[i] - lambda * x[i]));
      scale = std::max(scale, std::abs(lambda * x[i]));
    }
    residual = scale > 0 ? res / scale : res;
    for (std::size_t i = 0; i < dim; ++i) x[i] = y[i] / sy;
    iterations = it;
    if (polish < 0 && residual <= tol) polish = 20;
    if (polish >= 0 && polish-- == 0) return {lambda, x};
  }
  if (polish >= 0) return {lambda, x};
  throw NoConvergence("power iteration did not converge", residual);
}

}  // namespace detail

/// Perron root and normalized right/left eigenvectors (sum left = 1, sum right*left = 1).
inline PerronVectors perron_vectors(const TransferMatrix<double>& t, double tol = 1e-12, int max_iter = 100000) {
  PerronVectors pv;
  double res_r = 0, res_l = 0;
  int it_r = 0, it_l = 0;
  auto [lam, right] = detail::perron_iterate(t.dim(), [&](const std::vector<double>& x) { return t.apply(x); }, tol,
                                             max_iter, res_r, it_r);
  auto [lam_l, left] = detail::perron_iterate(t.dim(), [&](const std::vector<double>& x) { return t.apply_left(x); },
                                              tol, max_iter, res_l, it_l);
  (void)lam_l;
  double sl = 0;
  for (double v : left) sl += v;
  for (double& v : left) v /= sl;
  double dot = 0;
  for (std::size_t i = 0; i < t.dim(); ++i) dot += right[i] * left[i];
  for (double& v : right) v /= dot;
  pv.lambda = lam;
  pv.right = std::move(right);
  pv.left = std::move(left);
  pv.residual = std::max(res_r, res_l);
  pv.iterations = std::max(it_r, it_l);
  return pv;
}

/// RPF eigendata of a real transfer operator together with the Gibbs measure it determines.
class GibbsSolution {
 public:
  double lambda = 0;
  DepthFn<double> h;           ///< right eigenfunction on q-blocks
  DepthFn<double> nu_hat;      ///< left eigenmeasure weights on q-blocks
  DepthFn<double> normalized;  ///< log w + ln h - ln h o sigma - ln lambda, depth q + 1
  DepthFn<double> block_mass;  ///< nu on q-blocks
  double P_f = 0;
  double a = 0;
  double residual = 0;
  int iterations = 0;

  const Subshift& shift() const { return h.shift(); }
  int block_depth() const { return h.depth(); }

  /// nu(C[w]) for every admissible w of length m, lexicographic order.
  const DepthFn<double>& masses(int m) const {
    std::lock_guard<std::recursive_mutex> lock(cache_->mutex);
    auto it = cache_->levels.find(m);
    if (it != cache_->levels.end()) return it->second;
    const int q = block_depth();
    if (m <= q) {
      auto sp = shift().space(m);
      std::vector<double> v(sp->size(), 0.0);
      const auto div = block_mass.space().radix(q - m);
      for (std::size_t i = 0; i < block_mass.size(); ++i) v[sp->find(block_mass.space().code(i) / div)] += block_mass[i];
      return cache_->levels.emplace(m, DepthFn<double>(shift(), m, std::move(v))).first->second;
    }
    const DepthFn<double>& prev = masses(m - 1);
    auto sp = shift().space(m);
    std::vector<double> v(sp->size());
    const auto tail = sp->radix(m - 1);
    for (std::size_t i = 0; i < sp->size(); ++i) {
      const auto c = sp->code(i);
      v[i] = std::exp(normalized.at_code(c, m)) * prev[prev.space().find(c % tail)];
    }
    return cache_->levels.emplace(m, DepthFn<double>(shift(), m, std::move(v))).first->second;
  }

  /// nu(C[w]); zero for non-admissible words.
  double cylinder(const Word& w) const {
    if (w.empty()) return 1.0;
    if (!shift().admissible(w)) return 0.0;
    const int q = block_depth();
    const int n = static_cast<int>(w.size());
    if (n < q) return masses(n)(w);
    double log_weight = 0;
    for (int i = 0; i + q < n; ++i) log_weight += normalized(w.suffix_from(static_cast<std::size_t>(i)));
    return std::exp(log_weight) * block_mass(w.suffix_from(static_cast<std::size_t>(n - q)));
  }

  /// Integral of H against nu, exact at the resolution of H.
  template <class T>
  T integrate(const DepthFn<T>& H) const {
    return ruelle::integrate(H, masses(H.depth()));
  }

 private:
  struct Cache {
    std::recursive_mutex mutex;
    std::map<int, DepthFn<double>> levels;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// RPF solve of a real nonnegative block matrix.
inline GibbsSolution rpf_solve(const TransferMatrix<double>& t, double tol = 1e-12, int max_iter = 100000) {
  auto pv = perron_vectors(t, tol, max_iter);
  const Subshift& shift = t.shift();
  const int q = t.block_depth();
  GibbsSolution sol;
  sol.lambda = pv.lambda;
  sol.residual = pv.residual;
  sol.iterations = pv.iterations;
  std::vector<double> mass(t.dim());
  for (std::size_t i = 0; i < t.dim(); ++i) mass[i] = pv.right[i] * pv.left[i];
  sol.h = DepthFn<double>(shift, q, std::move(pv.right));
  sol.nu_hat = DepthFn<double>(shift, q, std::move(pv.left));
  sol.block_mass = DepthFn<double>(shift, q, std::move(mass));
  for (double v : sol.h.values())
    if (!(v > 0)) throw NoConvergence("right eigenvector is not positive", sol.residual);

  auto w = t.weight_fn();
  const auto& sp = w.space();
  std::vector<double> f(w.size());
  const double log_lambda = std::log(sol.lambda);
  const auto tail = sp.radix(q);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto c = sp.code(i);
    if (w[i] <= 0) throw NonPositive("transfer weights must be positive");
    f[i] = std::log(w[i]) + std::log(sol.h.at_code(c, q + 1)) - std::log(sol.h[sol.h.space().find(c % tail)]) - log_lambda;
  }
  sol.normalized = DepthFn<double>(shift, q + 1, std::move(f));
  return sol;
}

inline GibbsSolution rpf_solve(const DepthFn<double>& g) { return rpf_solve(build_transfer(g)); }

/// Topological pressure log lambda of L_g.
inline double pressure(const DepthFn<double>& g) {
  auto t = build_transfer(g);
  double res = 0;
  int it = 0;
  auto lam = detail::perron_iterate(t.dim(), [&](const std::vector<double>& x) { return t.apply(x); }, 1e-12, 100000,
                                    res, it)
                 .first;
  return std::log(lam);
}

inline double pressure(const Subshift& shift, const DepthFn<double>& g) {
  if (g.shift().alphabet_size() != shift.alphabet_size()) throw InvalidArgument("potential belongs to another shift");
  return pressure(g);
}

namespace detail {
inline double min_value(const DepthFn<double>& f) { return *std::min_element(f.values().begin(), f.values().end()); }
inline double max_value(const DepthFn<double>& f) { return *std::max_element(f.values().begin(), f.values().end()); }

inline void check_roof(const DepthFn<double>& tau) {
  if (!(min_value(tau) > 0)) throw InvalidArgument("roof function must be positive on every word");
}
}  // namespace detail

/// The unique P with Pr(f - P tau) = 0.
inline double solve_Pf(const DepthFn<double>& f, const DepthFn<double>& tau, double tol = 1e-13) {
  detail::check_roof(tau);
  const double tau_min = detail::min_value(tau);
  const double h_top = std::log(f.shift().perron_root());
  const double K = f.sup_norm() / tau_min + h_top / tau_min + 1.0;
  auto pr = [&](double s) { return pressure(f - (s * tau)); };
  double lo = -K, hi = K;
  double p_lo = pr(lo), p_hi = pr(hi);
  if (!(p_lo > 0 && p_hi < 0))
    throw BracketFailure("pressure does not change sign on [-" + std::to_string(K) + ", " + std::to_string(K) + "]");
  // Bisection to a narrow bracket, then secant steps kept inside it.
  while (hi - lo > 1e-4) {
    double mid = 0.5 * (lo + hi);
    double pm = pr(mid);
    if (pm > 0) {
      lo = mid;
      p_lo = pm;
    } else {
      hi = mid;
      p_hi = pm;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double s = lo - p_lo * (hi - lo) / (p_hi - p_lo);
    if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
    double ps = pr(s);
    x = s;
    if (std::abs(ps) <= tol || hi - lo <= 1e-15 * std::max(1.0, std::abs(s))) return x;
    if (ps > 0) {
      lo = s;
      p_lo = ps;
    } else {
      hi = s;
      p_hi = ps;
    }
  }
  if (std::abs(pr(x)) > 1e-10) throw NoConvergence("P_f refinement stalled", std::abs(pr(x)));
  return x;
}

/// Gibbs state of g_a = f - (P_f + a) tau; its `normalized` member is f^(a).
inline GibbsSolution gibbs_state(const DepthFn<double>& f, const DepthFn<double>& tau, double a, double P_f) {
  auto sol = rpf_solve(f - ((P_f + a) * tau));
  sol.P_f = P_f;
  sol.a = a;
  return sol;
}

/// f^(a) = f - (P_f + a) tau + ln h_a - ln h_a o sigma - ln lambda_a, with M_a 1 = 1.
inline DepthFn<double> normalize_fa(const DepthFn<double>& f, const DepthFn<double>& tau, double a, double P_f) {
  return gibbs_state(f, tau, a, P_f).normalized;
}

/// max over blocks of |(M 1)(u) - 1| for a normalized potential.
inline double markov_defect(const DepthFn<double>& normalized) {
  auto e = normalized.map([](double x) { return std::exp(x); });
  auto one = DepthFn<double>::constant(normalized.shift(), 1, 1.0);
  auto m1 = transfer_apply(e, one);
  double d = 0;
  for (double v : m1.values()) d = std::max(d, std::abs(v - 1.0));
  return d;
}

inline double gibbs_cylinder(const GibbsSolution& sol, const Word& w) { return sol.cylinder(w); }

struct GibbsRow {
  Word word;
  double nu;
  double e_gm;
  double ratio;
};

struct GibbsReport {
  int m = 0;
  double c1 = 0;
  double c2 = 0;
  std::vector<GibbsRow> rows;
};

/// Observed envelope of nu(C) / exp(g_m(y) - m Pr(g)) over all m-cylinders C, y the reference point of C.
inline GibbsReport gibbs_property_report(const GibbsSolution& sol, const DepthFn<double>& g, int m,
                                         bool keep_rows = false) {
  const double P = pressure(g);
  const auto& masses = sol.masses(m);
  const Subshift& shift = sol.shift();
  GibbsReport rep;
  rep.m = m;
  rep.c1 = std::numeric_limits<double>::infinity();
  rep.c2 = 0;
  const std::size_t need = static_cast<std::size_t>(m + g.depth() - 1);
  for (std::size_t i = 0; i < masses.size(); ++i) {
    Word w = masses.space().word(i);
    Word y = shift.reference_point(w, need);
    double e_gm = std::exp(birkhoff_sum(g, y, m) - m * P);
    double ratio = masses[i] / e_gm;
    rep.c1 = std::min(rep.c1, ratio);
    rep.c2 = std::max(rep.c2, ratio);
    if (keep_rows) rep.rows.push_back({std::move(w), masses[i], e_gm, ratio});
  }
  return rep;
}

/// Pressure of successive depth-k truncations of a Lipschitz potential.
inline std::vector<std::pair<int, double>> truncation_report(const std::function<DepthFn<double>(int)>& truncation,
                                                             const std::vector<int>& depths) {
  std::vector<std::pair<int, double>> out;
  for (int k : depths) out.emplace_back(k, pressure(truncation(k)));
  return out;
}

/// Draws words distributed according to nu. The last q-block comes from nu on blocks; each earlier
/// symbol a is prepended to the current block u with probability exp(f0(a.u)).
class Sampler {
 public:
  explicit Sampler(const GibbsSolution& sol) : shift_(sol.shift()), q_(sol.block_depth()) {
    const auto& blocks = sol.block_mass.space();
    const int k0 = shift_.alphabet_size();
    const auto top = blocks.radix(q_);
    double acc = 0;
    for (double v : sol.block_mass.values()) {
      acc += v;
      block_cdf_.push_back(acc);
    }
    for (auto& v : block_cdf_) v /= acc;
    offsets_.push_back(0);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto cu = blocks.code(i);
      const int u0 = static_cast<int>(cu / blocks.radix(q_ - 1));
      double sum = 0;
      const std::size_t start = cdf_.size();
      for (int a = 0; a < k0; ++a) {
        if (!shift_.allowed(a, u0)) continue;
        const auto cv = static_cast<std::uint64_t>(a) * top + cu;
        sum += std::exp(sol.normalized.at_code(cv, q_ + 1));
        cdf_.push_back(sum);
        symbol_.push_back(a);
        next_.push_back(blocks.find(cv / blocks.radix(1)));
      }
      for (std::size_t p = start; p < cdf_.size(); ++p) cdf_[p] /= sum;
      offsets_.push_back(cdf_.size());
    }
    block_symbols_.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      auto w = blocks.word(i);
      block_symbols_[i] = w.symbols();
    }
  }

  int block_depth() const noexcept { return q_; }

  /// A word of length n >= 1 drawn from nu.
  std::vector<int> sample(std::size_t n, std::mt19937_64& rng) const {
    std::vector<int> out(std::max<std::size_t>(n, static_cast<std::size_t>(q_)));
    std::size_t state = pick(block_cdf_.begin(), block_cdf_.end(), uniform01(rng));
    const std::size_t len = out.size();
    std::copy(block_symbols_[state].begin(), block_symbols_[state].end(), out.begin() + static_cast<std::ptrdiff_t>(len - q_));
    for (std::size_t pos = len - q_; pos-- > 0;) {
      const auto b = offsets_[state], e = offsets_[state + 1];
      const auto p = b + pick(cdf_.begin() + static_cast<std::ptrdiff_t>(b), cdf_.begin() + static_cast<std::ptrdiff_t>(e), uniform01(rng));
      out[pos] = symbol_[p];
      state = next_[p];
    }
    if (out.size() > n) out.erase(out.begin() + static_cast<std::ptrdiff_t>(n), out.end());
    return out;
  }

 private:
  template <class It>
  static std::size_t pick(It begin, It end, double u) {
    auto it = std::upper_bound(begin, end, u);
    if (it == end) --it;
    return static_cast<std::size_t>(it - begin);
  }

  Subshift shift_;
  int q_;
  std::vector<double> block_cdf_;
  std::vector<std::size_t> offsets_;
  std::vector<double> cdf_;
  std::vector<int> symbol_;
  std::vector<std::size_t> next_;
  std::vector<std::vector<int>> block_symbols_;
};

inline Word sample_trajectory(const GibbsSolution& sol, std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return Word(Sampler(sol).sample(n, rng));
}

/// Largest modulus among the eigenvalues of the normalized operator other than the leading eigenvalue 1.
inline double subdominant_modulus(const DepthFn<double>& normalized) {
  auto m = build_transfer(normalized).dense();
  if (m.rows() < 2) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  std::vector<double> mods;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mods.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(mods.begin(), mods.end(), std::greater<>());
  return mods[1];
}

}  // namespace ruelle

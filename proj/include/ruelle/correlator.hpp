#pragma once

// Suspension semiflow over (U, sigma, nu) with roof tau: flow-invariant sampling, Monte Carlo correlation
// functions with jackknife errors, exponential decay fits, and exact base-map correlations.

#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "ruelle/thermo.hpp"

namespace ruelle {

/// Piecewise polynomial on [0, 1): piece p covers [breaks[p], breaks[p+1]) with coefficients in u.
class Profile {
 public:
  static constexpr std::size_t kMaxPieces = 8;

  Profile() : Profile({0.0, 1.0}, {{1.0}}) {}
  Profile(std::vector<double> breaks, std::vector<std::vector<double>> coeffs)
      : breaks_(std::move(breaks)), coeffs_(std::move(coeffs)) {
    if (coeffs_.empty() || coeffs_.size() > kMaxPieces) throw InvalidArgument("profile needs 1..8 pieces");
    if (breaks_.size() != coeffs_.size() + 1) throw InvalidArgument("profile needs one more break than pieces");
    if (breaks_.front() != 0.0 || breaks_.back() != 1.0) throw InvalidArgument("profile breaks must run from 0 to 1");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
      if (!(breaks_[i] > breaks_[i - 1])) throw InvalidArgument("profile breaks must increase");
    for (auto& c : coeffs_) {
      if (c.empty()) c.push_back(0.0);
      for (double v : c)
        if (!std::isfinite(v)) throw InvalidArgument("profile coefficients must be finite");
    }
  }

  static Profile constant(double c) { return Profile({0.0, 1.0}, {{c}}); }
  /// u - 1/2.
  static Profile centered_ramp() { return Profile({0.0, 1.0}, {{-0.5, 1.0}}); }

  const std::vector<double>& breaks() const noexcept { return breaks_; }
  const std::vector<std::vector<double>>& coeffs() const noexcept { return coeffs_; }

  double operator()(double u) const {
    auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, u);
    const auto& c = coeffs_[static_cast<std::size_t>(it - breaks_.begin() - 1)];
    double v = 0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * u + c[i];
    return v;
  }

  double integral() const { return product_integral(*this, constant(1.0)); }

  /// Exact integral of p q over [0, 1).
  static double product_integral(const Profile& p, const Profile& q) {
    std::vector<double> br = p.breaks_;
    br.insert(br.end(), q.breaks_.begin(), q.breaks_.end());
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    double total = 0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      const double mid = (br[i] + br[i + 1]) / 2;
      const auto& a = p.piece_at(mid);
      const auto& b = q.piece_at(mid);
      std::vector<double> c(a.size() + b.size() - 1, 0.0);
      for (std::size_t x = 0; x < a.size(); ++x)
        for (std::size_t y = 0; y < b.size(); ++y) c[x + y] += a[x] * b[y];
      for (std::size_t e = 0; e < c.size(); ++e)
        total += c[e] * (std::pow(br[i + 1], static_cast<double>(e + 1)) - std::pow(br[i], static_cast<double>(e + 1))) /
                 static_cast<double>(e + 1);
    }
    return total;
  }

 private:
  const std::vector<double>& piece_at(double u) const {
    auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, u);
    return coeffs_[static_cast<std::size_t>(it - breaks_.begin() - 1)];
  }

  std::vector<double> breaks_;
  std::vector<std::vector<double>> coeffs_;
};

/// A(x, s) = base(x) profile(s / tau(x)).
struct SuspensionObservable {
  DepthFn<double> base;
  Profile profile;

  double operator()(std::span<const int> x, double s, double roof) const {
    return base.at_code(base.space().encode(x.first(static_cast<std::size_t>(base.depth()))), base.depth()) *
           profile(s / roof);
  }
};

/// The flow-invariant probability m = (nu x ds) / int tau dnu.
class SuspensionMeasure {
 public:
  SuspensionMeasure(const GibbsSolution& gibbs, const DepthFn<double>& tau)
      : gibbs_(gibbs), tau_(tau), sampler_(gibbs), tau_max_(detail::max_value(tau)), tau_min_(detail::min_value(tau)) {
    detail::check_roof(tau);
    mean_roof_ = gibbs_.integrate(tau_);
  }

  const GibbsSolution& gibbs() const noexcept { return gibbs_; }
  const DepthFn<double>& roof() const noexcept { return tau_; }
  double mean_roof() const noexcept { return mean_roof_; }
  double roof_min() const noexcept { return tau_min_; }
  double roof_max() const noexcept { return tau_max_; }

  double roof_at(std::span<const int> x) const {
    return tau_.at_code(tau_.space().encode(x.first(static_cast<std::size_t>(tau_.depth()))), tau_.depth());
  }

  /// One point (x, s): x a word of length len from nu reweighted by tau (rejection), s uniform on [0, tau(x)).
  double draw(std::vector<int>& x, std::size_t len, std::mt19937_64& rng) const {
    for (;;) {
      x = sampler_.sample(len, rng);
      const double t = roof_at(x);
      if (uniform01(rng) * tau_max_ < t) return uniform01(rng) * t;
    }
  }

  /// int A dm, exact.
  double integrate(const SuspensionObservable& A) const {
    return gibbs_.integrate(A.base * tau_) * A.profile.integral() / mean_roof_;
  }

  /// int A B dm, exact.
  double integrate_product(const SuspensionObservable& A, const SuspensionObservable& B) const {
    return gibbs_.integrate(A.base * B.base * tau_) * Profile::product_integral(A.profile, B.profile) / mean_roof_;
  }

 private:
  GibbsSolution gibbs_;
  DepthFn<double> tau_;
  Sampler sampler_;
  double tau_max_, tau_min_;
  double mean_roof_ = 0;
};

struct FlowSample {
  Word x;
  double s = 0;
};

/// n points from m, deterministic under seed.
inline std::vector<FlowSample> suspension_measure_sample(const GibbsSolution& gibbs, const DepthFn<double>& tau, std::size_t n,
                                                         std::uint64_t seed, std::size_t word_length = 0) {
  const SuspensionMeasure m(gibbs, tau);
  const std::size_t len = std::max<std::size_t>(word_length, static_cast<std::size_t>(tau.depth()));
  auto rng = make_rng(seed);
  std::vector<FlowSample> out;
  out.reserve(n);
  std::vector<int> x;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = m.draw(x, len, rng);
    out.push_back({Word(x), s});
  }
  return out;
}

struct DecayFit {
  bool accepted = false;  ///< enough points and the 95% interval for c lies above 0
  std::size_t points = 0;
  double C = 0;
  double c = 0;
  double c_se = 0;
  double c_lo = 0;
  double c_hi = 0;
  double r2 = 0;
};

struct CorrelationCurve {
  std::vector<double> t;
  std::vector<double> rho;
  std::vector<double> se;
  double mean_A = 0;  ///< exact int A dm
  double mean_B = 0;
  std::size_t samples = 0;
  std::size_t blocks = 0;
  DecayFit fit;
};

struct CorrelationOptions {
  std::size_t samples = 1000000;
  std::uint64_t seed = 1;
  std::size_t blocks = 100;
  int threads = 0;
};

/// Least squares of log|rho| against t over the points with |rho| > 3 SE; |rho(t)| ~ C e^{-ct}.
inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& rho, const std::vector<double>& se) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(rho[i]) > 3 * se[i] && rho[i] != 0) {
      x.push_back(t[i]);
      y.push_back(std::log(std::abs(rho[i])));
    }
  DecayFit f;
  f.points = x.size();
  if (x.size() < 3) return f;
  const auto lf = fit_line(x, y);
  f.c = -lf.slope;
  f.C = std::exp(lf.intercept);
  f.c_se = lf.slope_se;
  f.r2 = lf.r2;
  const double q = boost::math::quantile(boost::math::students_t(static_cast<double>(x.size() - 2)), 0.975);
  f.c_lo = f.c - q * f.c_se;
  f.c_hi = f.c + q * f.c_se;
  f.accepted = f.c_lo > 0;
  return f;
}

/// rho(t) = int A (B o phi_t) dm - int A dm int B dm by Monte Carlo over m, with jackknife errors over
/// sample blocks. The exact means are subtracted, so each rho(t) is unbiased.
inline CorrelationCurve correlation(const SuspensionMeasure& m, const SuspensionObservable& A, const SuspensionObservable& B,
                                    std::vector<double> t_grid, const CorrelationOptions& opt = {}) {
  if (t_grid.empty()) throw InvalidArgument("empty time grid");
  if (opt.samples < 2 || opt.blocks < 2 || opt.blocks > opt.samples) throw InvalidArgument("need 2 <= blocks <= samples");
  for (double t : t_grid)
    if (!(t >= 0) || !std::isfinite(t)) throw InvalidArgument("times must be finite and >= 0");
  std::vector<std::size_t> order(t_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t_grid[a] < t_grid[b]; });
  const double t_max = t_grid[order.back()];
  const int depth = std::max({m.roof().depth(), A.base.depth(), B.base.depth()});
  const auto len = static_cast<std::size_t>(std::ceil((m.roof_max() + t_max) / m.roof_min())) + static_cast<std::size_t>(depth) + 2;

  CorrelationCurve curve;
  curve.t = t_grid;
  curve.mean_A = m.integrate(A);
  curve.mean_B = m.integrate(B);
  curve.samples = opt.samples;
  curve.blocks = opt.blocks;
  const std::size_t T = t_grid.size();
  std::vector<std::vector<double>> block_sum(opt.blocks, std::vector<double>(T, 0.0));
  std::vector<std::size_t> block_n(opt.blocks, 0);

  parallel_chunks(opt.blocks, resolve_threads(opt.threads), [&](std::size_t blk) {
    auto rng = make_rng(opt.seed, blk);
    const std::size_t begin = blk * opt.samples / opt.blocks, end = (blk + 1) * opt.samples / opt.blocks;
    std::vector<int> x;
    std::vector<KahanSum> acc(T);
    for (std::size_t i = begin; i < end; ++i) {
      const double s = m.draw(x, len, rng);
      const std::span<const int> xs(x);
      const double a = A(xs, s, m.roof_at(xs));
      // Walk forward through the fibers; `floor` is the flow time at the base of fiber k.
      std::size_t k = 0;
      KahanSum floor;
      floor.add(-s);
      double roof = m.roof_at(xs);
      for (std::size_t j : order) {
        const double t = t_grid[j];
        while (floor.value() + roof <= t) {
          floor.add(roof);
          ++k;
          roof = m.roof_at(xs.subspan(k));
        }
        const double h = t - floor.value();
        acc[j].add(a * B(xs.subspan(k), h, roof));
      }
    }
    for (std::size_t j = 0; j < T; ++j) block_sum[blk][j] = acc[j].value();
    block_n[blk] = end - begin;
  });

  const double mAB = curve.mean_A * curve.mean_B;
  curve.rho.assign(T, 0.0);
  curve.se.assign(T, 0.0);
  const double nb = static_cast<double>(opt.blocks);
  for (std::size_t j = 0; j < T; ++j) {
    double total = 0;
    for (std::size_t b = 0; b < opt.blocks; ++b) total += block_sum[b][j];
    const double n = static_cast<double>(opt.samples);
    curve.rho[j] = total / n - mAB;
    double var = 0;
    for (std::size_t b = 0; b < opt.blocks; ++b) {
      const double loo = (total - block_sum[b][j]) / (n - static_cast<double>(block_n[b])) - mAB;
      var += (loo - curve.rho[j]) * (loo - curve.rho[j]);
    }
    curve.se[j] = std::sqrt((nb - 1) / nb * var);
  }
  curve.fit = fit_decay(curve.t, curve.rho, curve.se);
  return curve;
}

inline CorrelationCurve correlation(const GibbsSolution& gibbs, const DepthFn<double>& tau, const SuspensionObservable& A,
                                    const SuspensionObservable& B, std::vector<double> t_grid, const CorrelationOptions& opt = {}) {
  return correlation(SuspensionMeasure(gibbs, tau), A, B, std::move(t_grid), opt);
}

struct BaseCorrelation {
  double value = 0;  ///< int A (B o sigma^n) dnu - int A dnu int B dnu
  double rho4 = 0;   ///< subdominant eigenvalue modulus of the normalized operator
};

/// Exact, through int (L^n A) B dnu with the normalized operator.
inline double exact_base_correlation(const GibbsSolution& gibbs, const DepthFn<double>& A, const DepthFn<double>& B, int n) {
  if (n < 0) throw InvalidArgument("n must be >= 0");
  const auto w = gibbs.normalized.map([](double v) { return std::exp(v); });
  DepthFn<double> g = A;
  for (int i = 0; i < n; ++i) g = transfer_apply(w, g);
  return gibbs.integrate(g * B) - gibbs.integrate(A) * gibbs.integrate(B);
}

inline BaseCorrelation exact_base_correlation_report(const GibbsSolution& gibbs, const DepthFn<double>& A,
                                                     const DepthFn<double>& B, int n) {
  return {exact_base_correlation(gibbs, A, B, n), subdominant_modulus(gibbs.normalized)};
}

/// Evenly spaced grid lo, lo + step, ..., up to hi.
inline std::vector<double> time_grid(double lo, double hi, double step) {
  if (!(step > 0) || !(hi >= lo)) throw InvalidArgument("time grid needs step > 0 and hi >= lo");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

}  // namespace ruelle

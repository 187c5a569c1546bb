#pragma once

// Locally constant functions: one value per admissible word of a fixed depth.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <type_traits>
#include <vector>

#include "ruelle/subshift.hpp"

namespace ruelle {

using cplx = std::complex<double>;

template <class T>
class DepthFn {
 public:
  using value_type = T;

  DepthFn() = default;
  DepthFn(const Subshift& shift, int depth, std::vector<T> values)
      : shift_(std::make_shared<Subshift>(shift)), space_(shift.space(depth)), values_(std::move(values)) {
    if (values_.size() != space_->size()) throw InvalidArgument("value count does not match admissible words of the depth");
  }

  static DepthFn constant(const Subshift& shift, int depth, T c) {
    return DepthFn(shift, depth, std::vector<T>(shift.space(depth)->size(), c));
  }

  template <class F>
  static DepthFn from_function(const Subshift& shift, int depth, F&& fn) {
    auto sp = shift.space(depth);
    std::vector<T> v(sp->size());
    for (std::size_t i = 0; i < sp->size(); ++i) v[i] = static_cast<T>(fn(sp->word(i)));
    return DepthFn(shift, depth, std::move(v));
  }

  bool valid() const noexcept { return static_cast<bool>(space_); }
  const Subshift& shift() const { return *shift_; }
  int depth() const noexcept { return space_->length(); }
  std::size_t size() const noexcept { return values_.size(); }
  const WordSpace& space() const { return *space_; }
  std::shared_ptr<const WordSpace> space_ptr() const { return space_; }
  const std::vector<T>& values() const noexcept { return values_; }
  std::vector<T>& values() noexcept { return values_; }
  T operator[](std::size_t i) const { return values_[i]; }
  T& operator[](std::size_t i) { return values_[i]; }

  /// Value at a sequence represented by a word of length >= depth.
  T operator()(const Word& x) const {
    if (static_cast<int>(x.size()) < depth()) throw InvalidArgument("word shorter than function depth");
    auto idx = space_->find(space_->encode(x.span().first(static_cast<std::size_t>(depth()))));
    if (idx == WordSpace::npos) throw InvalidArgument("word " + x.str() + " is not admissible");
    return values_[idx];
  }

  /// Value at the word with the given code in a deeper space (reads the first depth() symbols).
  T at_code(std::uint64_t code, int code_length) const {
    return values_[space_->find(code / space_->radix(code_length - depth()))];
  }

  /// Same function, tabulated on a deeper block space.
  DepthFn lift(int new_depth) const {
    if (new_depth == depth()) return *this;
    if (new_depth < depth()) throw InvalidArgument("cannot lift to a smaller depth");
    auto sp = shift_->space(new_depth);
    std::vector<T> v(sp->size());
    const auto div = sp->radix(new_depth - depth());
    for (std::size_t i = 0; i < sp->size(); ++i) v[i] = values_[space_->find(sp->code(i) / div)];
    return DepthFn(*shift_, new_depth, std::move(v));
  }

  template <class F>
  auto map(F&& fn) const {
    using R = std::decay_t<decltype(fn(std::declval<T>()))>;
    std::vector<R> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(values_[i]);
    return DepthFn<R>(*shift_, depth(), std::move(v));
  }

  DepthFn<cplx> to_complex() const {
    return map([](T x) { return cplx(x); });
  }

  double sup_norm() const {
    double s = 0;
    for (const auto& x : values_) s = std::max(s, static_cast<double>(std::abs(x)));
    return s;
  }

  DepthFn<double> abs() const {
    return map([](T x) { return static_cast<double>(std::abs(x)); });
  }

  DepthFn& operator*=(T c) {
    for (auto& x : values_) x *= c;
    return *this;
  }

 private:
  std::shared_ptr<const Subshift> shift_;
  std::shared_ptr<const WordSpace> space_;
  std::vector<T> values_;
};

namespace detail {
template <class A, class B, class Op>
auto zip(const DepthFn<A>& x, const DepthFn<B>& y, Op op) {
  int d = std::max(x.depth(), y.depth());
  auto lx = x.lift(d);
  auto ly = y.lift(d);
  using R = std::decay_t<decltype(op(std::declval<A>(), std::declval<B>()))>;
  std::vector<R> v(lx.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(lx[i], ly[i]);
  return DepthFn<R>(x.shift(), d, std::move(v));
}
}  // namespace detail

template <class A, class B>
auto operator+(const DepthFn<A>& x, const DepthFn<B>& y) {
  return detail::zip(x, y, [](A a, B b) { return a + b; });
}
template <class A, class B>
auto operator-(const DepthFn<A>& x, const DepthFn<B>& y) {
  return detail::zip(x, y, [](A a, B b) { return a - b; });
}
template <class A, class B>
auto operator*(const DepthFn<A>& x, const DepthFn<B>& y) {
  return detail::zip(x, y, [](A a, B b) { return a * b; });
}
template <class T>
DepthFn<T> operator*(T c, DepthFn<T> x) {
  x *= c;
  return x;
}
template <class T>
DepthFn<T> operator+(DepthFn<T> x, T c) {
  for (auto& v : x.values()) v += c;
  return x;
}

/// One node of the prefix tree of a function's domain: the leaves in [begin, end) share a prefix of
/// length `level`; `spread` is max |h(x) - h(y)| over those leaves.
struct TreeNode {
  int level;
  std::size_t begin;
  std::size_t end;
  double spread;
};

namespace detail {

inline double cross(cplx o, cplx a, cplx b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

// Monotone chain hull; collinear points dropped.
inline std::vector<cplx> hull(std::vector<cplx> pts) {
  auto less = [](cplx a, cplx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); };
  std::sort(pts.begin(), pts.end(), less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;
  std::vector<cplx> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

inline double diameter(const std::vector<cplx>& h) {
  double d = 0;
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = i + 1; j < h.size(); ++j) d = std::max(d, std::abs(h[i] - h[j]));
  return d;
}

struct RealAgg {
  double lo, hi;
  explicit RealAgg(double x) : lo(x), hi(x) {}
  void merge(const RealAgg& o) {
    lo = std::min(lo, o.lo);
    hi = std::max(hi, o.hi);
  }
  double spread() const { return hi - lo; }
};

struct ComplexAgg {
  std::vector<cplx> pts;
  explicit ComplexAgg(cplx x) : pts{x} {}
  void merge(const ComplexAgg& o) { pts.insert(pts.end(), o.pts.begin(), o.pts.end()); }
  void finish() { pts = hull(std::move(pts)); }
  double spread() const { return diameter(pts); }
};

}  // namespace detail

/// Visits every prefix-tree node of levels [min_level, depth) bottom-up.
template <class T, class Visit>
void for_each_tree_node(const DepthFn<T>& h, Visit&& visit, int min_level = 0) {
  using Agg = std::conditional_t<std::is_same_v<T, cplx>, detail::ComplexAgg, detail::RealAgg>;
  const auto& sp = h.space();
  const int k = sp.length();
  struct Node {
    std::size_t begin, end;
    Agg agg;
  };
  std::vector<Node> level;
  level.reserve(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) level.push_back({i, i + 1, Agg(h[i])});
  for (int j = k - 1; j >= min_level; --j) {
    const auto div = sp.radix(k - j);
    std::vector<Node> up;
    for (std::size_t n = 0; n < level.size();) {
      Node node = std::move(level[n]);
      const auto key = sp.code(node.begin) / div;
      std::size_t m = n + 1;
      while (m < level.size() && sp.code(level[m].begin) / div == key) {
        node.agg.merge(level[m].agg);
        node.end = level[m].end;
        ++m;
      }
      if constexpr (std::is_same_v<Agg, detail::ComplexAgg>) node.agg.finish();
      visit(TreeNode{j, node.begin, node.end, node.agg.spread()});
      up.push_back(std::move(node));
      n = m;
    }
    level = std::move(up);
  }
}

/// |h|_theta = sup |h(x) - h(y)| / D_theta(x, y), exact for locally constant h.
template <class T>
double lip_seminorm(const DepthFn<T>& h, double theta) {
  check_theta(theta);
  double best = 0;
  for_each_tree_node(h, [&](const TreeNode& n) { best = std::max(best, n.spread / std::pow(theta, n.level)); });
  return best;
}

/// Same supremum restricted to pairs sharing their first symbol.
template <class T>
double lip_seminorm_same_symbol(const DepthFn<T>& h, double theta) {
  check_theta(theta);
  double best = 0;
  for_each_tree_node(
      h, [&](const TreeNode& n) { best = std::max(best, n.spread / std::pow(theta, n.level)); }, 1);
  return best;
}

/// Integral of h against a measure tabulated on the same or a deeper block space.
template <class T>
T integrate(const DepthFn<T>& h, const DepthFn<double>& masses) {
  const auto& lifted = h.depth() == masses.depth() ? h : h.lift(masses.depth());
  T s{};
  for (std::size_t i = 0; i < lifted.size(); ++i) s += lifted[i] * masses[i];
  return s;
}

}  // namespace ruelle

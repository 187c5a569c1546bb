#pragma once

// Ruelle transfer operators (L_w h)(u) = sum over sigma(v) = u of w(v) h(v).

#include <Eigen/Dense>

#include "ruelle/depth_fn.hpp"

namespace ruelle {

/// Literal sum over preimages; the result has depth max(depth h - 1, depth w - 1, 1).
template <class W, class T>
auto transfer_apply(const DepthFn<W>& weight, const DepthFn<T>& h) {
  using R = decltype(std::declval<W>() * std::declval<T>());
  const Subshift& shift = h.shift();
  const int k0 = shift.alphabet_size();
  const int d = std::max({h.depth() - 1, weight.depth() - 1, 1});
  auto out_space = shift.space(d);
  const int dv = d + 1;
  const auto top = out_space->radix(d);
  std::vector<R> out(out_space->size(), R{});
  for (std::size_t i = 0; i < out_space->size(); ++i) {
    const auto cu = out_space->code(i);
    const int u0 = static_cast<int>(cu / out_space->radix(d - 1));
    R s{};
    for (int a = 0; a < k0; ++a) {
      if (!shift.allowed(a, u0)) continue;
      const auto cv = static_cast<std::uint64_t>(a) * top + cu;
      s += weight.at_code(cv, dv) * h.at_code(cv, dv);
    }
    out[i] = s;
  }
  return DepthFn<R>(shift, d, std::move(out));
}

/// m-fold application.
template <class W, class T>
auto transfer_power(const DepthFn<W>& weight, DepthFn<T> h, int m) {
  using R = decltype(std::declval<W>() * std::declval<T>());
  DepthFn<R> cur = h.map([](T x) { return R(x); });
  for (int i = 0; i < m; ++i) cur = transfer_apply(weight, cur);
  return cur;
}

/// The transfer operator of a depth-k weight restricted to functions of the q-blocks,
/// q = max(k - 1, 1). Row u holds the entries v = (a.u)[0, q) with value w(a.u).
template <class W>
class TransferMatrix {
 public:
  TransferMatrix() = default;

  explicit TransferMatrix(const DepthFn<W>& weight) : shift_(std::make_shared<Subshift>(weight.shift())) {
    potential_depth_ = weight.depth();
    block_depth_ = std::max(potential_depth_ - 1, 1);
    const int q = block_depth_;
    blocks_ = shift_->space(q);
    const int k0 = shift_->alphabet_size();
    const auto top = blocks_->radix(q);
    row_ptr_.assign(blocks_->size() + 1, 0);
    for (std::size_t i = 0; i < blocks_->size(); ++i) {
      const auto cu = blocks_->code(i);
      const int u0 = static_cast<int>(cu / blocks_->radix(q - 1));
      for (int a = 0; a < k0; ++a) {
        if (!shift_->allowed(a, u0)) continue;
        const auto cv = static_cast<std::uint64_t>(a) * top + cu;  // a.u, length q + 1
        cols_.push_back(blocks_->find(cv / blocks_->radix(1)));
        vals_.push_back(weight.at_code(cv, q + 1));
      }
      row_ptr_[i + 1] = cols_.size();
    }
  }

  int block_depth() const noexcept { return block_depth_; }
  int potential_depth() const noexcept { return potential_depth_; }
  std::size_t dim() const noexcept { return blocks_->size(); }
  const Subshift& shift() const { return *shift_; }
  std::shared_ptr<const WordSpace> blocks() const { return blocks_; }
  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::size_t>& cols() const noexcept { return cols_; }
  const std::vector<W>& vals() const noexcept { return vals_; }

  template <class T>
  auto apply(const std::vector<T>& x) const {
    using R = decltype(std::declval<W>() * std::declval<T>());
    std::vector<R> y(dim(), R{});
    for (std::size_t i = 0; i < dim(); ++i) {
      R s{};
      for (auto p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += vals_[p] * x[cols_[p]];
      y[i] = s;
    }
    return y;
  }

  /// Row-vector product x^T M.
  template <class T>
  auto apply_left(const std::vector<T>& x) const {
    using R = decltype(std::declval<W>() * std::declval<T>());
    std::vector<R> y(dim(), R{});
    for (std::size_t i = 0; i < dim(); ++i)
      for (auto p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) y[cols_[p]] += x[i] * vals_[p];
    return y;
  }

  template <class T>
  auto apply(const DepthFn<T>& h) const {
    if (h.depth() > block_depth_) return transfer_apply(weight_fn(), h);
    auto lifted = h.lift(block_depth_);
    auto y = apply(lifted.values());
    return DepthFn<typename decltype(y)::value_type>(*shift_, block_depth_, std::move(y));
  }

  Eigen::Matrix<W, Eigen::Dynamic, Eigen::Dynamic> dense() const {
    if (dim() > 4096) throw CapacityError("dense transfer matrix too large", static_cast<double>(dim()), 4096.0);
    Eigen::Matrix<W, Eigen::Dynamic, Eigen::Dynamic> m =
        Eigen::Matrix<W, Eigen::Dynamic, Eigen::Dynamic>::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < dim(); ++i)
      for (auto p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols_[p])) += vals_[p];
    return m;
  }

  /// The weight tabulated at depth q + 1, recovered from the matrix entries.
  DepthFn<W> weight_fn() const {
    auto sp = shift_->space(block_depth_ + 1);
    std::vector<W> v(sp->size(), W{});
    const int k0 = shift_->alphabet_size();
    const auto top = blocks_->radix(block_depth_);
    for (std::size_t i = 0; i < dim(); ++i) {
      const auto cu = blocks_->code(i);
      const int u0 = static_cast<int>(cu / blocks_->radix(block_depth_ - 1));
      auto p = row_ptr_[i];
      for (int a = 0; a < k0; ++a) {
        if (!shift_->allowed(a, u0)) continue;
        v[sp->find(static_cast<std::uint64_t>(a) * top + cu)] = vals_[p++];
      }
    }
    return DepthFn<W>(*shift_, block_depth_ + 1, std::move(v));
  }

 private:
  std::shared_ptr<const Subshift> shift_;
  std::shared_ptr<const WordSpace> blocks_;
  int block_depth_ = 1;
  int potential_depth_ = 1;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<W> vals_;
};

/// Matrix of L_{g - s tau}: weights e^{g - s tau}. With s = 0 and a real g this is the real operator L_g.
inline TransferMatrix<cplx> build_transfer(const DepthFn<double>& g, const DepthFn<double>& tau, cplx s) {
  auto w = detail::zip(g, tau, [s](double gv, double tv) { return std::exp(cplx(gv) - s * tv); });
  return TransferMatrix<cplx>(w);
}

inline TransferMatrix<double> build_transfer(const DepthFn<double>& g) {
  return TransferMatrix<double>(g.map([](double x) { return std::exp(x); }));
}

/// g_m(x) = g(x) + g(sigma x) + ... + g(sigma^{m-1} x); x must have length >= m + depth g - 1.
template <class T>
T birkhoff_sum(const DepthFn<T>& g, const Word& x, int m) {
  const int k = g.depth();
  if (static_cast<int>(x.size()) < m + k - 1) throw InvalidArgument("word too short for Birkhoff sum");
  const auto& sp = g.space();
  T s{};
  for (int i = 0; i < m; ++i) {
    auto idx = sp.find(sp.encode(x.span().subspan(static_cast<std::size_t>(i), static_cast<std::size_t>(k))));
    if (idx == WordSpace::npos) throw InvalidArgument("word " + x.str() + " is not admissible");
    s += g[idx];
  }
  return s;
}

/// The Birkhoff sum g_m tabulated as a function of depth `depth` >= m + depth g - 1.
template <class T>
DepthFn<T> birkhoff_table(const DepthFn<T>& g, int m, int depth) {
  const int k = g.depth();
  if (m < 1 || depth < m + k - 1) throw InvalidArgument("birkhoff_table depth too small");
  const Subshift& shift = g.shift();
  // g_j on depth j + k - 1 from g_{j-1}: g_j(x) = g(x) + g_{j-1}(sigma x).
  DepthFn<T> cur = g;
  for (int j = 2; j <= m; ++j) {
    const int d = j + k - 1;
    auto sp = shift.space(d);
    std::vector<T> v(sp->size());
    const auto tail = sp->radix(d - 1);
    for (std::size_t i = 0; i < sp->size(); ++i) {
      const auto c = sp->code(i);
      v[i] = g.at_code(c, d) + cur.at_code(c % tail, d - 1);
    }
    cur = DepthFn<T>(shift, d, std::move(v));
  }
  return cur.lift(depth);
}

/// Birkhoff sum along the periodic point with period word w (each site reads the cyclic extension).
template <class T>
T cyclic_birkhoff_sum(const DepthFn<T>& g, const Word& w) {
  const std::size_t n = w.size();
  const std::size_t k = static_cast<std::size_t>(g.depth());
  std::vector<int> s(n + k - 1);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = w[i % n];
  return birkhoff_sum(g, Word(std::move(s)), static_cast<int>(n));
}

}  // namespace ruelle

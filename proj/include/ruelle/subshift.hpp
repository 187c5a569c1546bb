#pragma once

// Subshifts of finite type, admissible words and the shared block spaces that
// every locally constant function in the library is indexed by.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ruelle/error.hpp"

namespace ruelle {

inline constexpr std::size_t kDefaultWordCap = 100'000'000;

/// A finite word over the alphabet {0, ..., k0-1}; names the cylinder of sequences with this prefix.
class Word {
 public:
  Word() = default;
  Word(std::initializer_list<int> symbols) : symbols_(symbols) {}
  explicit Word(std::vector<int> symbols) : symbols_(std::move(symbols)) {}

  /// Parses "0110" (alphabets up to 10) or "10,3,4".
  static Word parse(const std::string& text) {
    std::vector<int> out;
    if (text.find(',') != std::string::npos) {
      std::size_t pos = 0;
      while (pos <= text.size()) {
        auto next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        out.push_back(std::stoi(text.substr(pos, next - pos)));
        pos = next + 1;
      }
    } else {
      for (char c : text) {
        if (c < '0' || c > '9') throw InvalidArgument("bad symbol '" + std::string(1, c) + "' in word");
        out.push_back(c - '0');
      }
    }
    return Word(std::move(out));
  }

  std::size_t size() const noexcept { return symbols_.size(); }
  bool empty() const noexcept { return symbols_.empty(); }
  int operator[](std::size_t i) const { return symbols_[i]; }
  const std::vector<int>& symbols() const noexcept { return symbols_; }
  std::span<const int> span() const noexcept { return symbols_; }

  Word prefix(std::size_t n) const {
    return Word(std::vector<int>(symbols_.begin(), symbols_.begin() + std::min(n, size())));
  }
  Word suffix_from(std::size_t start) const {
    return Word(std::vector<int>(symbols_.begin() + std::min(start, size()), symbols_.end()));
  }
  Word prepend(int a) const {
    std::vector<int> s;
    s.reserve(size() + 1);
    s.push_back(a);
    s.insert(s.end(), symbols_.begin(), symbols_.end());
    return Word(std::move(s));
  }
  Word append(int a) const {
    auto s = symbols_;
    s.push_back(a);
    return Word(std::move(s));
  }
  Word concat(const Word& other) const {
    auto s = symbols_;
    s.insert(s.end(), other.symbols_.begin(), other.symbols_.end());
    return Word(std::move(s));
  }
  bool starts_with(const Word& p) const {
    return p.size() <= size() && std::equal(p.symbols_.begin(), p.symbols_.end(), symbols_.begin());
  }

  std::string str() const {
    std::string out;
    bool wide = std::any_of(symbols_.begin(), symbols_.end(), [](int s) { return s > 9; });
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (wide && i > 0) out += ',';
      out += std::to_string(symbols_[i]);
    }
    return out;
  }

  auto operator<=>(const Word&) const = default;

 private:
  std::vector<int> symbols_;
};

/// Length of the longest common prefix.
inline std::size_t common_prefix(const Word& x, const Word& y) {
  std::size_t n = std::min(x.size(), y.size());
  std::size_t i = 0;
  while (i < n && x[i] == y[i]) ++i;
  return i;
}

class Subshift;

/// The admissible words of one fixed length, in lexicographic order.
///
/// Words are stored as base-k0 codes so that lexicographic order equals numeric
/// order and prefixes are integer divisions. Lookup from code to index uses a
/// dense table when k0^length is small and binary search otherwise.
class WordSpace {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  int length() const noexcept { return length_; }
  int alphabet() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return codes_.size(); }
  std::uint64_t code(std::size_t i) const { return codes_[i]; }
  const std::vector<std::uint64_t>& codes() const noexcept { return codes_; }

  /// alphabet^e for every e with alphabet^e < 2^64.
  std::uint64_t radix(int e) const { return radix_[static_cast<std::size_t>(e)]; }

  int symbol(std::size_t i, int pos) const {
    return static_cast<int>((codes_[i] / radix(length_ - 1 - pos)) % static_cast<std::uint64_t>(alphabet_));
  }

  std::size_t find(std::uint64_t code) const {
    if (!table_.empty()) {
      if (code >= table_.size()) return npos;
      auto v = table_[code];
      return v < 0 ? npos : static_cast<std::size_t>(v);
    }
    auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
    if (it == codes_.end() || *it != code) return npos;
    return static_cast<std::size_t>(it - codes_.begin());
  }

  std::uint64_t encode(std::span<const int> symbols) const {
    std::uint64_t c = 0;
    for (int s : symbols) c = c * static_cast<std::uint64_t>(alphabet_) + static_cast<std::uint64_t>(s);
    return c;
  }

  /// Index of the word, or npos if it is not admissible. Requires symbols.size() == length.
  std::size_t index_of(const Word& w) const {
    if (static_cast<int>(w.size()) != length_) throw InvalidArgument("word length does not match block space");
    for (int s : w.symbols())
      if (s < 0 || s >= alphabet_) return npos;
    return find(encode(w.span()));
  }

  Word word(std::size_t i) const {
    std::vector<int> s(static_cast<std::size_t>(length_));
    std::uint64_t c = codes_[i];
    for (int p = length_ - 1; p >= 0; --p) {
      s[static_cast<std::size_t>(p)] = static_cast<int>(c % static_cast<std::uint64_t>(alphabet_));
      c /= static_cast<std::uint64_t>(alphabet_);
    }
    return Word(std::move(s));
  }

 private:
  friend class Subshift;
  WordSpace() = default;

  int length_ = 0;
  int alphabet_ = 0;
  std::vector<std::uint64_t> codes_;
  std::vector<std::uint64_t> radix_;
  std::vector<std::int32_t> table_;
};

/// A one-sided subshift of finite type given by a primitive 0/1 transition matrix.
class Subshift {
 public:
  Subshift(int alphabet_size, std::vector<std::vector<int>> transition, std::size_t word_cap = kDefaultWordCap)
      : data_(std::make_shared<Data>()) {
    if (alphabet_size < 2) throw InvalidArgument("alphabet_size must be >= 2");
    if (static_cast<int>(transition.size()) != alphabet_size)
      throw InvalidArgument("transition must have alphabet_size rows");
    data_->k = alphabet_size;
    data_->word_cap = word_cap;
    data_->allowed.assign(static_cast<std::size_t>(alphabet_size * alphabet_size), 0);
    for (int i = 0; i < alphabet_size; ++i) {
      if (static_cast<int>(transition[static_cast<std::size_t>(i)].size()) != alphabet_size)
        throw InvalidArgument("transition row " + std::to_string(i) + " has wrong length");
      for (int j = 0; j < alphabet_size; ++j) {
        int v = transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (v != 0 && v != 1) throw InvalidArgument("transition entries must be 0 or 1");
        data_->allowed[static_cast<std::size_t>(i * alphabet_size + j)] = static_cast<char>(v);
      }
    }
    for (int i = 0; i < alphabet_size; ++i) {
      bool row = false, col = false;
      for (int j = 0; j < alphabet_size; ++j) {
        row = row || allowed(i, j);
        col = col || allowed(j, i);
      }
      if (!row || !col) throw InvalidArgument("every row and column of the transition matrix needs a 1");
    }
    data_->mixing_power = compute_mixing_power();
    if (data_->mixing_power == 0) throw NonPrimitive("transition matrix is not primitive (no positive power)");
  }

  static Subshift full(int k) {
    return Subshift(k, std::vector<std::vector<int>>(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(k), 1)));
  }
  static Subshift golden_mean() { return Subshift(2, {{1, 1}, {1, 0}}); }

  int alphabet_size() const noexcept { return data_->k; }
  int mixing_power() const noexcept { return data_->mixing_power; }
  std::size_t word_cap() const noexcept { return data_->word_cap; }

  bool allowed(int a, int b) const { return data_->allowed[static_cast<std::size_t>(a * data_->k + b)] != 0; }

  std::vector<std::vector<int>> transition() const {
    std::vector<std::vector<int>> t(static_cast<std::size_t>(data_->k), std::vector<int>(static_cast<std::size_t>(data_->k)));
    for (int i = 0; i < data_->k; ++i)
      for (int j = 0; j < data_->k; ++j) t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = allowed(i, j) ? 1 : 0;
    return t;
  }

  bool admissible(const Word& w) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] < 0 || w[i] >= data_->k) return false;
      if (i + 1 < w.size() && !allowed(w[i], w[i + 1])) return false;
    }
    return true;
  }

  /// Number of admissible words of length m (entry sum of transition^(m-1)), as a double.
  double word_count(int m) const {
    std::vector<double> v(static_cast<std::size_t>(data_->k), 1.0);
    for (int step = 1; step < m; ++step) {
      std::vector<double> next(static_cast<std::size_t>(data_->k), 0.0);
      for (int a = 0; a < data_->k; ++a)
        for (int b = 0; b < data_->k; ++b)
          if (allowed(a, b)) next[static_cast<std::size_t>(a)] += v[static_cast<std::size_t>(b)];
      v = std::move(next);
    }
    double s = 0;
    for (double x : v) s += x;
    return s;
  }

  /// Block space of admissible words of length m, shared between copies of this subshift.
  std::shared_ptr<const WordSpace> space(int m) const {
    if (m < 1) throw InvalidArgument("word length must be >= 1");
    std::lock_guard<std::mutex> lock(data_->mutex);
    auto it = data_->spaces.find(m);
    if (it != data_->spaces.end()) return it->second;
    auto sp = build_space(m);
    data_->spaces.emplace(m, sp);
    return sp;
  }

  /// Smallest admissible extension of w to length n (w itself if already long enough).
  Word least_extension(const Word& w, std::size_t n) const {
    Word out = w;
    while (out.size() < n) {
      int last = out[out.size() - 1];
      int b = 0;
      while (!allowed(last, b)) ++b;
      out = out.append(b);
    }
    return out;
  }

  /// The point used to evaluate functionals on the cylinder of w: its periodic extension when the
  /// wrap transition is admissible, otherwise the lexicographically least admissible extension.
  Word reference_point(const Word& w, std::size_t n) const {
    if (w.empty()) throw InvalidArgument("reference_point of empty word");
    if (allowed(w[w.size() - 1], w[0])) {
      std::vector<int> s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = w[i % w.size()];
      return Word(std::move(s));
    }
    return least_extension(w, n);
  }

  /// Perron root of the transition matrix; its log is the topological entropy of the shift.
  double perron_root() const {
    std::vector<double> v(static_cast<std::size_t>(data_->k), 1.0);
    double lambda = 0;
    for (int it = 0; it < 100000; ++it) {
      std::vector<double> next(static_cast<std::size_t>(data_->k), 0.0);
      for (int a = 0; a < data_->k; ++a)
        for (int b = 0; b < data_->k; ++b)
          if (allowed(a, b)) next[static_cast<std::size_t>(a)] += v[static_cast<std::size_t>(b)];
      double norm = *std::max_element(next.begin(), next.end());
      for (auto& x : next) x /= norm;
      double diff = 0;
      for (int a = 0; a < data_->k; ++a) diff = std::max(diff, std::abs(next[static_cast<std::size_t>(a)] - v[static_cast<std::size_t>(a)]));
      v = std::move(next);
      if (std::abs(norm - lambda) <= 1e-15 * norm && diff < 1e-15) {
        lambda = norm;
        break;
      }
      lambda = norm;
    }
    return lambda;
  }

 private:
  struct Data {
    int k = 0;
    int mixing_power = 0;
    std::size_t word_cap = kDefaultWordCap;
    std::vector<char> allowed;
    std::mutex mutex;
    std::map<int, std::shared_ptr<const WordSpace>> spaces;
  };

  int compute_mixing_power() const {
    const int k = data_->k;
    auto idx = [k](int i, int j) { return static_cast<std::size_t>(i * k + j); };
    std::vector<char> power(data_->allowed);
    int bound = (k - 1) * (k - 1) + 1;  // Wielandt
    for (int p = 1; p <= bound; ++p) {
      if (std::all_of(power.begin(), power.end(), [](char c) { return c != 0; })) return p;
      std::vector<char> next(power.size(), 0);
      for (int i = 0; i < k; ++i)
        for (int m = 0; m < k; ++m)
          if (power[idx(i, m)])
            for (int j = 0; j < k; ++j)
              if (allowed(m, j)) next[idx(i, j)] = 1;
      power = std::move(next);
    }
    return 0;
  }

  std::shared_ptr<const WordSpace> build_space(int m) const {
    const int k = data_->k;
    double count = word_count(m);
    if (count > static_cast<double>(data_->word_cap))
      throw CapacityError("admissible words of length " + std::to_string(m) + " exceed cap", count,
                          static_cast<double>(data_->word_cap));
    if (static_cast<double>(m) * std::log2(static_cast<double>(k)) > 62.0)
      throw CapacityError("word codes of length " + std::to_string(m) + " overflow 64 bits", static_cast<double>(m), 62.0);

    auto sp = std::shared_ptr<WordSpace>(new WordSpace());
    sp->length_ = m;
    sp->alphabet_ = k;
    sp->radix_.assign(1, 1);
    while (sp->radix_.back() <= std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(k))
      sp->radix_.push_back(sp->radix_.back() * static_cast<std::uint64_t>(k));
    sp->codes_.reserve(static_cast<std::size_t>(count));

    // Depth-first enumeration in lexicographic order.
    std::vector<int> stack;
    std::vector<int> next_symbol;
    stack.reserve(static_cast<std::size_t>(m));
    std::uint64_t code = 0;
    for (int first = 0; first < k; ++first) {
      stack.assign(1, first);
      next_symbol.assign(1, 0);
      code = static_cast<std::uint64_t>(first);
      while (!stack.empty()) {
        if (static_cast<int>(stack.size()) == m) {
          sp->codes_.push_back(code);
          stack.pop_back();
          next_symbol.pop_back();
          code /= static_cast<std::uint64_t>(k);
          continue;
        }
        int& nb = next_symbol.back();
        while (nb < k && !allowed(stack.back(), nb)) ++nb;
        if (nb == k) {
          stack.pop_back();
          next_symbol.pop_back();
          code /= static_cast<std::uint64_t>(k);
          continue;
        }
        int b = nb++;
        stack.push_back(b);
        next_symbol.push_back(0);
        code = code * static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(b);
      }
    }
    if (sp->radix_[static_cast<std::size_t>(m)] <= (std::uint64_t{1} << 25)) {
      sp->table_.assign(sp->radix_[static_cast<std::size_t>(m)], -1);
      for (std::size_t i = 0; i < sp->codes_.size(); ++i) sp->table_[sp->codes_[i]] = static_cast<std::int32_t>(i);
    }
    return sp;
  }

  std::shared_ptr<Data> data_;
};

/// Admissible words of length m in lexicographic order.
inline std::vector<Word> enumerate_words(const Subshift& shift, int m) {
  auto sp = shift.space(m);
  std::vector<Word> out;
  out.reserve(sp->size());
  for (std::size_t i = 0; i < sp->size(); ++i) out.push_back(sp->word(i));
  return out;
}

/// d_theta on cylinder representatives: 0 if equal, 1 on different first symbols, theta^lcp otherwise.
inline double d_theta(const Word& x, const Word& y, double theta) {
  if (x == y) return 0.0;
  return std::pow(theta, static_cast<double>(common_prefix(x, y)));
}

/// All admissible one-symbol extensions a.w to the left, i.e. the preimages of the cylinder under sigma.
inline std::vector<Word> preimages(const Subshift& shift, const Word& w) {
  if (w.empty()) throw InvalidArgument("preimages of empty word");
  std::vector<Word> out;
  for (int a = 0; a < shift.alphabet_size(); ++a)
    if (shift.allowed(a, w[0])) out.push_back(w.prepend(a));
  return out;
}

inline void check_theta(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidArgument("theta must lie in (0,1)");
}

}  // namespace ruelle

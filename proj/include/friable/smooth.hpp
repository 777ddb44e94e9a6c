#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "friable/primes.hpp"

namespace friable {

struct resource_limit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Standing hypothesis: x >= y >= 2. x is capped at 2^62 so that products of
// prime powers up to x never overflow a signed 64-bit integer.
struct SmoothBound {
  std::int64_t x;
  std::int64_t y;

  SmoothBound(std::int64_t x_, std::int64_t y_) : x(x_), y(y_) {
    if (y < 2 || x < y) throw std::invalid_argument("SmoothBound: need x >= y >= 2");
    if (x > (std::int64_t{1} << 62)) throw std::invalid_argument("SmoothBound: x exceeds 2^62");
  }
};

// The coordinate system for everything downstream: the ordered set
// {(p, nu) : p <= y prime, 1 <= nu <= nu_p(x)}, sorted by (p, nu).
class IndexSpace {
 public:
  struct Entry {
    std::size_t prime_index;
    int nu;
  };

  explicit IndexSpace(const SmoothBound& bound)
      : bound_(bound), primes_(sieve_primes(bound.y)) {
    nu_.reserve(primes_.size());
    offset_.reserve(primes_.size() + 1);
    offset_.push_back(0);
    for (std::int64_t p : primes_) {
      int nu = max_exponent(bound.x, p);
      nu_.push_back(nu);
      offset_.push_back(offset_.back() + static_cast<std::size_t>(nu));
    }
    entries_.reserve(dim());
    for (std::size_t i = 0; i < primes_.size(); ++i)
      for (int nu = 1; nu <= nu_[i]; ++nu) entries_.push_back(Entry{i, nu});
  }

  const SmoothBound& bound() const { return bound_; }
  std::size_t dim() const { return offset_.back(); }
  std::size_t prime_count() const { return primes_.size(); }
  const std::vector<std::int64_t>& primes() const { return primes_; }
  std::int64_t prime(std::size_t i) const { return primes_[i]; }
  int max_nu(std::size_t i) const { return nu_[i]; }

  // index of (primes_[i], nu), nu in 1..nu_p
  std::size_t index_of(std::size_t i, int nu) const {
    return offset_[i] + static_cast<std::size_t>(nu - 1);
  }
  Entry entry(std::size_t k) const { return entries_[k]; }

  // position of p in the prime list, or npos if p is not a prime <= y
  std::size_t prime_index(std::int64_t p) const {
    auto it = std::lower_bound(primes_.begin(), primes_.end(), p);
    if (it == primes_.end() || *it != p) return npos;
    return static_cast<std::size_t>(it - primes_.begin());
  }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  SmoothBound bound_;
  std::vector<std::int64_t> primes_;
  std::vector<int> nu_;
  std::vector<std::size_t> offset_;
  std::vector<Entry> entries_;
};

// Depth-first product generation over the prime list: each smooth integer is
// built once, in canonical factored form, without factoring any candidate.
// Visitor signature: void(std::int64_t n).
template <class Visitor>
void for_each_smooth(const SmoothBound& bound, Visitor&& visit) {
  const std::vector<std::int64_t> primes = sieve_primes(bound.y);
  const std::int64_t x = bound.x;

  // explicit recursion via lambda; depth <= log2(x)
  auto rec = [&](auto&& self, std::size_t j0, std::int64_t n) -> void {
    visit(n);
    for (std::size_t j = j0; j < primes.size(); ++j) {
      if (n > x / primes[j]) break;
      std::int64_t m = n;
      while (m <= x / primes[j]) {
        m *= primes[j];
        self(self, j + 1, m);
      }
    }
  };
  rec(rec, 0, 1);
}

// Same walk, but the visitor also receives the index-space coordinates of the
// current integer: visit(n, coords) with coords listing the space index of
// (p, v_p(n)) for every p | n.
template <class Visitor>
void for_each_smooth_indexed(const IndexSpace& space, Visitor&& visit) {
  const std::int64_t x = space.bound().x;
  const auto& primes = space.primes();
  std::vector<std::size_t> coords;
  coords.reserve(64);

  auto rec = [&](auto&& self, std::size_t j0, std::int64_t n) -> void {
    visit(static_cast<std::int64_t>(n), std::span<const std::size_t>(coords));
    for (std::size_t j = j0; j < primes.size(); ++j) {
      if (n > x / primes[j]) break;
      std::int64_t m = n;
      int e = 0;
      while (m <= x / primes[j]) {
        m *= primes[j];
        ++e;
        coords.push_back(space.index_of(j, e));
        self(self, j + 1, m);
        coords.pop_back();
      }
    }
  };
  rec(rec, 0, 1);
}

inline std::vector<std::int64_t> smooth_integers(const SmoothBound& bound, bool sorted = true) {
  std::vector<std::int64_t> out;
  for_each_smooth(bound, [&](std::int64_t n) { out.push_back(n); });
  if (sorted) std::sort(out.begin(), out.end());
  return out;
}

// Memoized Buchstab recurrence Psi(x, p_k) = Psi(x, p_{k-1}) + Psi(x/p_k, p_k),
// unrolled as Psi(v, k) = 1 + sum_{j<=k} Psi(v/p_j, j) so recursion depth is
// bounded by log2(v) even for very long prime lists. The memo is keyed on
// (floor quotient, prime index); exceeding the cap is a reported error, never
// a silent fallback.
class SmoothCounter {
 public:
  explicit SmoothCounter(const SmoothBound& bound, std::size_t memo_cap = default_memo_cap())
      : bound_(bound), primes_(sieve_primes(bound.y)), cap_(memo_cap) {}

  // Psi(v, y) for any v <= bound.x
  std::int64_t psi(std::int64_t v) { return rec(v, primes_.size()); }

  // Psi_m(v, y) with m the product of the distinct primes in excl, by
  // inclusion-exclusion over subsets; primes above y cannot divide a
  // y-smooth integer, so they are skipped.
  std::int64_t psi_coprime(std::int64_t v, std::span<const std::int64_t> excl) {
    std::vector<std::int64_t> ps;
    for (std::int64_t p : excl)
      if (p <= bound_.y) ps.push_back(p);
    if (ps.size() > 8) throw std::invalid_argument("psi_coprime: more than 8 excluded primes");
    std::int64_t total = 0;
    for (std::uint32_t mask = 0; mask < (1u << ps.size()); ++mask) {
      std::int64_t q = v;
      int bits = 0;
      for (std::size_t i = 0; i < ps.size(); ++i)
        if (mask >> i & 1u) {
          q /= ps[i];
          ++bits;
        }
      std::int64_t term = rec(q, primes_.size());
      total += (bits & 1) ? -term : term;
    }
    return total;
  }

  std::size_t memo_size() const { return memo_.size(); }

  static std::size_t default_memo_cap() {
    if (const char* env = std::getenv("FRIABLE_MEMO_CAP")) {
      char* end = nullptr;
      unsigned long long v = std::strtoull(env, &end, 10);
      if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 100'000'000;  // ~10^8 entries
  }

 private:
  struct Key {
    std::int64_t v;
    std::uint32_t k;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& key) const {
      std::uint64_t h = static_cast<std::uint64_t>(key.v) * 0x9e3779b97f4a7c15ull;
      h ^= (static_cast<std::uint64_t>(key.k) + 0x517cc1b727220a95ull) + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };

  std::int64_t rec(std::int64_t v, std::size_t k) {
    if (v < 1) return 0;
    // If the first k primes cover every prime <= v, all of 1..v counts.
    if (k == primes_.size() ? v <= bound_.y : primes_[k] > v) return v;
    Key key{v, static_cast<std::uint32_t>(k)};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::int64_t s = 1;
    for (std::size_t j = 0; j < k; ++j) {
      if (primes_[j] > v) break;
      s += rec(v / primes_[j], j + 1);
    }
    if (memo_.size() >= cap_)
      throw resource_limit_error("SmoothCounter: memo table exceeded cap of " +
                                 std::to_string(cap_) + " entries");
    memo_.emplace(key, s);
    return s;
  }

  SmoothBound bound_;
  std::vector<std::int64_t> primes_;
  std::size_t cap_;
  std::unordered_map<Key, std::int64_t, KeyHash> memo_;
};

enum class PsiMethod { enumerate, recurrence };

inline std::int64_t psi(const SmoothBound& bound, PsiMethod method = PsiMethod::recurrence) {
  if (method == PsiMethod::enumerate) {
    std::int64_t count = 0;
    for_each_smooth(bound, [&](std::int64_t) { ++count; });
    return count;
  }
  SmoothCounter counter(bound);
  return counter.psi(bound.x);
}

inline std::int64_t psi_coprime(const SmoothBound& bound, std::span<const std::int64_t> excl) {
  SmoothCounter counter(bound);
  return counter.psi_coprime(bound.x, excl);
}

// Number of n in S(x,y) with v_p(n) = nu exactly. Equals
// Psi_p(floor(x/p^nu), y), or 0 once p^nu exceeds x.
inline std::int64_t valuation_count(SmoothCounter& counter, const SmoothBound& bound,
                                    std::int64_t p, int nu) {
  if (nu < 0) throw std::invalid_argument("valuation_count: nu must be >= 0");
  if (nu > 0 && nu > max_exponent(bound.x, p)) return 0;
  std::int64_t v = bound.x / checked_pow(p, nu);
  const std::int64_t excl[1] = {p};
  return counter.psi_coprime(v, excl);
}

// Number of n in S(x,y) with v_p(n) = nu and v_q(n) = mu (p != q). Equals
// Psi_pq(floor(x/(p^nu q^mu)), y) when p^nu q^mu <= x, else 0.
inline std::int64_t joint_valuation_count(SmoothCounter& counter, const SmoothBound& bound,
                                          std::int64_t p, int nu, std::int64_t q, int mu) {
  if (p == q) throw std::invalid_argument("joint_valuation_count: p and q must differ");
  if (nu < 0 || mu < 0) throw std::invalid_argument("joint_valuation_count: exponents must be >= 0");
  if (nu > 0 && nu > max_exponent(bound.x, p)) return 0;
  std::int64_t v = bound.x / checked_pow(p, nu);
  std::int64_t qmu = 1;
  for (int i = 0; i < mu; ++i) {
    if (qmu > v / q) return 0;  // p^nu q^mu > x
    qmu *= q;
  }
  v /= qmu;
  const std::int64_t excl[2] = {p, q};
  return counter.psi_coprime(v, excl);
}

inline std::int64_t valuation_count(const SmoothBound& bound, std::int64_t p, int nu) {
  SmoothCounter counter(bound);
  return valuation_count(counter, bound, p, nu);
}

inline std::int64_t joint_valuation_count(const SmoothBound& bound, std::int64_t p, int nu,
                                          std::int64_t q, int mu) {
  SmoothCounter counter(bound);
  return joint_valuation_count(counter, bound, p, nu, q, mu);
}

}  // namespace friable

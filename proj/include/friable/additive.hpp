#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "friable/numeric.hpp"
#include "friable/smooth.hpp"

namespace friable {

// A real additive function restricted to S(x,y), stored as its coefficient
// table f(p^nu) over the index space. f(1) = 0 implicitly, and f(p^nu) = 0
// for p^nu > x by convention, so this table determines f on all of S(x,y).
class AdditiveFunction {
 public:
  AdditiveFunction(std::shared_ptr<const IndexSpace> space, std::vector<double> coeffs)
      : space_(std::move(space)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != space_->dim())
      throw std::invalid_argument("AdditiveFunction: coefficient count != space dim");
    for (double c : coeffs_)
      if (!std::isfinite(c)) throw std::invalid_argument("AdditiveFunction: non-finite coefficient");
  }

  static AdditiveFunction zero(std::shared_ptr<const IndexSpace> space) {
    std::vector<double> c(space->dim(), 0.0);
    return AdditiveFunction(std::move(space), std::move(c));
  }

  const IndexSpace& space() const { return *space_; }
  std::shared_ptr<const IndexSpace> space_ptr() const { return space_; }
  std::size_t dim() const { return coeffs_.size(); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double coeff(std::size_t k) const { return coeffs_[k]; }
  double coeff(std::size_t prime_index, int nu) const {
    return coeffs_[space_->index_of(prime_index, nu)];
  }

  // f(n) = sum over p | n of f(p^{v_p(n)}), by trial division over the
  // context primes. n must lie in S(x,y).
  double eval(std::int64_t n) const {
    if (n < 1 || n > space_->bound().x)
      throw std::domain_error("AdditiveFunction::eval: n outside [1, x]");
    double total = 0.0;
    std::int64_t m = n;
    for (std::size_t i = 0; i < space_->prime_count() && m > 1; ++i) {
      std::int64_t p = space_->prime(i);
      int nu = 0;
      while (m % p == 0) {
        m /= p;
        ++nu;
      }
      if (nu > 0) total += coeff(i, nu);
    }
    if (m != 1)
      throw std::domain_error("AdditiveFunction::eval: n has a prime factor > y");
    return total;
  }

 private:
  std::shared_ptr<const IndexSpace> space_;
  std::vector<double> coeffs_;
};

// h(p^nu) = value(p) for all nu.
inline AdditiveFunction strongly_additive(std::shared_ptr<const IndexSpace> space,
                                          std::span<const double> prime_values) {
  if (prime_values.size() != space->prime_count())
    throw std::invalid_argument("strongly_additive: need one value per prime");
  std::vector<double> c(space->dim());
  for (std::size_t i = 0; i < space->prime_count(); ++i)
    for (int nu = 1; nu <= space->max_nu(i); ++nu)
      c[space->index_of(i, nu)] = prime_values[i];
  return AdditiveFunction(std::move(space), std::move(c));
}

// Single coefficient 1 at (p, nu), 0 elsewhere.
inline AdditiveFunction delta_at(std::shared_ptr<const IndexSpace> space, std::int64_t p, int nu) {
  std::size_t i = space->prime_index(p);
  if (i == IndexSpace::npos || nu < 1 || nu > space->max_nu(i))
    throw std::invalid_argument("delta_at: (p, nu) not in index space");
  std::vector<double> c(space->dim(), 0.0);
  c[space->index_of(i, nu)] = 1.0;
  return AdditiveFunction(std::move(space), std::move(c));
}

// f(2) = 1 and f(p^nu) = 0 everywhere else. The simplest lower-bound witness:
// its cross-prime variance terms vanish identically.
inline AdditiveFunction delta_at_two(std::shared_ptr<const IndexSpace> space) {
  return delta_at(std::move(space), 2, 1);
}

// Exponent floor(log x / (h log 2)) of the balanced spike, by exact integer
// arithmetic: the largest nu with 2^(nu*h) <= x.
inline int spike_exponent(const SmoothBound& bound, int h) {
  int nu = 0;
  std::int64_t v = 1;
  while (true) {
    bool ok = true;
    std::int64_t next = v;
    for (int i = 0; i < h; ++i) {
      if (next > bound.x / 2) {
        ok = false;
        break;
      }
      next *= 2;
    }
    if (!ok) break;
    v = next;
    ++nu;
  }
  return nu;
}

// The spike witness: coefficient 1 at (2, floor(log x/(h log 2))), 0 elsewhere.
// Requires 2^h <= x so that the spike exponent is at least 1.
inline AdditiveFunction spike_function(std::shared_ptr<const IndexSpace> space) {
  int h = static_cast<int>(space->prime_count());
  int nu = spike_exponent(space->bound(), h);
  if (nu < 1)
    throw std::domain_error("spike_function: 2^h > x, spike exponent would be 0");
  return delta_at(std::move(space), 2, nu);
}

// e (1 - 1/h)^(h-1), the limiting value the spike's variance ratio approaches
// for fixed y as x grows; equals e itself when h = 1.
inline double spike_limit_constant(int h) {
  if (h < 1) throw std::invalid_argument("spike_limit_constant: h must be >= 1");
  if (h == 1) return std::exp(1.0);
  return std::exp(1.0) * std::pow(1.0 - 1.0 / h, h - 1);
}

// Deterministic test-fixture generator: coefficients i.i.d. uniform in
// [-scale, scale], driven entirely by the seed.
inline AdditiveFunction random_function(std::shared_ptr<const IndexSpace> space,
                                        std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("random_function: scale must be positive");
  std::mt19937_64 eng(seed);
  std::vector<double> c(space->dim());
  for (double& v : c) {
    double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0,1)
    v = scale * (2.0 * u - 1.0);
  }
  return AdditiveFunction(std::move(space), std::move(c));
}

// Text fixture format: one "p nu value" line per coefficient.
inline void write_additive(std::ostream& os, const AdditiveFunction& f) {
  const IndexSpace& s = f.space();
  for (std::size_t k = 0; k < s.dim(); ++k) {
    auto e = s.entry(k);
    os << s.prime(e.prime_index) << ' ' << e.nu << ' ' << format_double(f.coeff(k)) << '\n';
  }
}

inline std::string additive_to_text(const AdditiveFunction& f) {
  std::ostringstream os;
  write_additive(os, f);
  return os.str();
}

// Missing entries default to 0; unknown (p, nu) pairs are an error.
inline AdditiveFunction parse_additive(std::istream& is,
                                       std::shared_ptr<const IndexSpace> space) {
  std::vector<double> c(space->dim(), 0.0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::int64_t p;
    int nu;
    double value;
    if (!(ls >> p)) continue;  // blank line
    if (!(ls >> nu >> value))
      throw std::invalid_argument("parse_additive: malformed line " + std::to_string(lineno));
    std::size_t i = space->prime_index(p);
    if (i == IndexSpace::npos || nu < 1 || nu > space->max_nu(i))
      throw std::invalid_argument("parse_additive: (p, nu) outside index space at line " +
                                  std::to_string(lineno));
    c[space->index_of(i, static_cast<int>(nu))] = value;
  }
  return AdditiveFunction(std::move(space), std::move(c));
}

inline AdditiveFunction parse_additive(const std::string& text,
                                       std::shared_ptr<const IndexSpace> space) {
  std::istringstream is(text);
  return parse_additive(is, std::move(space));
}

}  // namespace friable

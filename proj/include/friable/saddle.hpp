#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "friable/numeric.hpp"
#include "friable/smooth.hpp"

namespace friable {

struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PhiValue {
  double value;       // sum_{p<=y} log p / (p^a - 1)
  double derivative;  // d/da of the above, always negative
};

// Left-hand side of the saddle equation and its derivative. expm1 keeps
// p^a - 1 accurate when a*log p is small; compensated summation keeps the
// residual test meaningful at 1e-13 relative.
inline PhiValue phi(double alpha, std::span<const std::int64_t> primes) {
  if (!(alpha > 0.0)) throw std::domain_error("phi: alpha must be positive");
  KahanSum value, deriv;
  for (std::int64_t p : primes) {
    double lp = std::log(static_cast<double>(p));
    double em = std::expm1(alpha * lp);  // p^alpha - 1
    value.add(lp / em);
    double pa = em + 1.0;
    deriv.add(-lp * lp * pa / (em * em));
  }
  return PhiValue{value.value(), deriv.value()};
}

// Unique positive root of sum_{p<=y} log p/(p^alpha - 1) = log x. The sum is
// strictly decreasing from +inf to 0, so a sign-change bracket always exists:
// bisection narrows it to relative width 1e-3, then Newton finishes, falling
// back to bisection whenever a step leaves the bracket.
inline double solve_alpha(std::span<const std::int64_t> primes, std::int64_t x,
                          double rel_tol = 1e-13) {
  if (rel_tol < 1e-15 || rel_tol > 1e-6)
    throw std::invalid_argument("solve_alpha: tol must lie in [1e-15, 1e-6]");
  const double log_x = std::log(static_cast<double>(x));
  const double target = rel_tol * log_x;

  double lo = 1e-9;
  double hi = 1.0;
  while (phi(hi, primes).value > log_x) hi *= 2.0;

  while (hi - lo > 1e-3 * hi) {
    double mid = 0.5 * (lo + hi);
    (phi(mid, primes).value > log_x ? lo : hi) = mid;
  }

  double a = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    PhiValue pv = phi(a, primes);
    double residual = pv.value - log_x;
    if (std::fabs(residual) <= target) return a;
    (residual > 0.0 ? lo : hi) = a;
    double next = a - residual / pv.derivative;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == a) {
      if (hi - lo <= 4.0 * std::fabs(a) * 1e-16) break;  // bracket at machine width
      next = 0.5 * (lo + hi);
      if (next == a) break;
    }
    a = next;
  }
  if (std::fabs(phi(a, primes).value - log_x) <= target) return a;
  throw convergence_error("solve_alpha: no convergence, bracket [" +
                          format_double(lo) + ", " + format_double(hi) + "]");
}

inline double solve_alpha(const SmoothBound& bound, double rel_tol = 1e-13) {
  return solve_alpha(sieve_primes(bound.y), bound.x, rel_tol);
}

// g_m(s) = prod_{p|m} (1 - p^{-s}); empty set gives 1.
inline double g_factor(std::span<const std::int64_t> primes, double s) {
  if (!(s > 0.0)) throw std::domain_error("g_factor: s must be positive");
  double prod = 1.0;
  for (std::int64_t p : primes) prod *= -std::expm1(-s * std::log(static_cast<double>(p)));
  return prod;
}

// Everything derived from the saddle point at one (x, y): alpha, per-prime
// g_p(alpha) and bias weights w_p = p^{-alpha nu_p}, the second derivative
// sigma2, and the sizes h = pi(y), u = log x/log y, ubar = min(h, u).
// Immutable after build; the build itself checks the w_p envelope
//   x^{-a} <= w_p <= min{(y/x)^a, x^{-a/2}},  (xy)^{-a} <= w_p/p^a <= x^{-a}
// and fails loudly on violation, since that would mean a solver bug.
class SaddleContext {
 public:
  SaddleContext(const SmoothBound& bound, double alpha_tol = 1e-13)
      : space_(std::make_shared<IndexSpace>(bound)), alpha_tol_(alpha_tol) {
    const auto& primes = space_->primes();
    alpha_ = solve_alpha(primes, bound.x, alpha_tol);
    log_x_ = std::log(static_cast<double>(bound.x));
    log_p_.reserve(primes.size());
    g_.reserve(primes.size());
    w_.reserve(primes.size());
    for (std::size_t i = 0; i < primes.size(); ++i) {
      double lp = std::log(static_cast<double>(primes[i]));
      log_p_.push_back(lp);
      g_.push_back(-std::expm1(-alpha_ * lp));
      w_.push_back(std::exp(-alpha_ * space_->max_nu(i) * lp));
    }
    KahanSum s2;
    for (std::size_t i = 0; i < primes.size(); ++i) {
      double em = std::expm1(alpha_ * log_p_[i]);
      s2.add(log_p_[i] * log_p_[i] * (em + 1.0) / (em * em));
    }
    sigma2_ = s2.value();
    u_ = log_x_ / std::log(static_cast<double>(bound.y));
    ubar_ = std::min(static_cast<double>(prime_count()), u_);
    auto violations = weight_envelope_violations();
    if (!violations.empty())
      throw std::logic_error("SaddleContext: " + violations.front());
  }

  const IndexSpace& space() const { return *space_; }
  std::shared_ptr<const IndexSpace> space_ptr() const { return space_; }
  const SmoothBound& bound() const { return space_->bound(); }

  double alpha() const { return alpha_; }
  double alpha_tol() const { return alpha_tol_; }
  double sigma2() const { return sigma2_; }
  std::size_t prime_count() const { return space_->prime_count(); }
  std::int64_t prime(std::size_t i) const { return space_->prime(i); }
  int max_nu(std::size_t i) const { return space_->max_nu(i); }
  double log_prime(std::size_t i) const { return log_p_[i]; }
  double log_x() const { return log_x_; }

  double g(std::size_t i) const { return g_[i]; }
  double w(std::size_t i) const { return w_[i]; }
  int h() const { return static_cast<int>(prime_count()); }
  double u() const { return u_; }
  double ubar() const { return ubar_; }

  // p_i^{-nu * alpha}
  double power_weight(std::size_t i, int nu) const {
    return std::exp(-alpha_ * nu * log_p_[i]);
  }
  // t_p(nu) = log(p^nu)/log x
  double t_value(std::size_t i, int nu) const { return nu * log_p_[i] / log_x_; }
  // v_{p^nu}(alpha) = nu log p - log p/(p^alpha - 1); zero when nu = 0
  double v_value(std::size_t i, int nu) const {
    if (nu == 0) return 0.0;
    return nu * log_p_[i] - log_p_[i] / std::expm1(alpha_ * log_p_[i]);
  }

  // Checks both chains of the bias-weight envelope,
  //   x^{-a} <= w_p <= min{(y/x)^a, x^{-a/2}},  (xy)^{-a} <= w_p/p^a <= x^{-a},
  // against the stored table (or a caller-supplied override, so broken tables
  // can be diagnosed). Returns one message per violating prime; a tiny
  // multiplicative slack absorbs rounding at exact-power boundaries.
  std::vector<std::string> weight_envelope_violations(
      std::span<const double> w_override = {}) const {
    const double slack = 1.0 + 1e-12;
    const double x = static_cast<double>(bound().x);
    const double y = static_cast<double>(bound().y);
    const double x_ma = std::exp(-alpha_ * log_x_);  // x^{-alpha}
    const double upper1 = std::min(std::pow(y / x, alpha_), std::exp(-0.5 * alpha_ * log_x_));
    const double lower2 = std::exp(-alpha_ * std::log(x * y));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < prime_count(); ++i) {
      double wp = w_override.empty() ? w_[i] : w_override[i];
      double wp_over_pa = wp * std::exp(-alpha_ * log_p_[i]);
      std::string msg;
      if (!(wp * slack >= x_ma))
        msg = "w_p below x^-alpha";
      else if (!(wp <= upper1 * slack))
        msg = "w_p above min{(y/x)^alpha, x^-alpha/2}";
      else if (!(wp_over_pa * slack >= lower2))
        msg = "w_p/p^alpha below (xy)^-alpha";
      else if (!(wp_over_pa <= x_ma * slack))
        msg = "w_p/p^alpha above x^-alpha";
      if (!msg.empty())
        out.push_back("bias weight envelope violated at p = " + std::to_string(prime(i)) +
                      ": " + msg);
    }
    return out;
  }

 private:
  std::shared_ptr<const IndexSpace> space_;
  double alpha_tol_;
  double alpha_ = 0.0;
  double log_x_ = 0.0;
  double sigma2_ = 0.0;
  double u_ = 0.0;
  double ubar_ = 0.0;
  std::vector<double> log_p_;
  std::vector<double> g_;
  std::vector<double> w_;
};

inline SaddleContext build_context(const SmoothBound& bound, double alpha_tol = 1e-13) {
  return SaddleContext(bound, alpha_tol);
}

// v_k(alpha) = log k - sum_{p|k} log p/(p^alpha - 1) for k given by its
// factorization into powers of distinct primes; entries with nu = 0 drop out.
inline double v_value(const SaddleContext& ctx,
                      std::span<const std::pair<std::int64_t, int>> factorization) {
  double total = 0.0;
  for (const auto& [p, nu] : factorization) {
    if (nu == 0) continue;
    std::size_t i = ctx.space().prime_index(p);
    if (i == IndexSpace::npos) throw std::invalid_argument("v_value: prime not in context");
    total += ctx.v_value(i, nu);
  }
  return total;
}

}  // namespace friable

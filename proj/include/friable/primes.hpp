#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace friable {

// Sieve of Eratosthenes. Desk-scale bounds only (y up to ~10^7), so a plain
// byte sieve is all we need.
inline std::vector<std::int64_t> sieve_primes(std::int64_t y) {
  if (y < 2) throw std::invalid_argument("sieve_primes: y must be >= 2");
  std::vector<char> is_prime(static_cast<std::size_t>(y) + 1, 1);
  is_prime[0] = is_prime[1] = 0;
  for (std::int64_t i = 2; i * i <= y; ++i)
    if (is_prime[static_cast<std::size_t>(i)])
      for (std::int64_t j = i * i; j <= y; j += i)
        is_prime[static_cast<std::size_t>(j)] = 0;
  std::vector<std::int64_t> primes;
  for (std::int64_t i = 2; i <= y; ++i)
    if (is_prime[static_cast<std::size_t>(i)]) primes.push_back(i);
  return primes;
}

// Largest nu with p^nu <= x, by exact integer multiplication. Floating-point
// floor(log x/log p) misclassifies exact powers, so it is never used here.
inline int max_exponent(std::int64_t x, std::int64_t p) {
  if (x < 2 || p < 2) throw std::invalid_argument("max_exponent: need x >= 2, p >= 2");
  int nu = 0;
  std::int64_t v = 1;
  while (v <= x / p) {
    v *= p;
    ++nu;
  }
  return nu;
}

// p^nu, guarded against 64-bit overflow.
inline std::int64_t checked_pow(std::int64_t p, int nu) {
  std::int64_t v = 1;
  for (int i = 0; i < nu; ++i) {
    if (v > (std::int64_t{1} << 62) / p)
      throw std::overflow_error("checked_pow: p^nu exceeds 2^62");
    v *= p;
  }
  return v;
}

}  // namespace friable

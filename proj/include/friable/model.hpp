#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "friable/additive.hpp"
#include "friable/numeric.hpp"
#include "friable/saddle.hpp"

namespace friable {

enum class Variant { biased, unbiased };

inline const char* variant_name(Variant v) {
  return v == Variant::biased ? "biased" : "unbiased";
}

// Mass the model puts on exponent nu of prime p_i:
//   biased    g_p / p^{nu a}        (nu in N, tail handled by the caller)
//   unbiased  g_p                   at nu = 0
//             g_p/((1-w_p) p^{nu a}) for 1 <= nu <= nu_p
inline double exponent_mass(const SaddleContext& ctx, std::size_t i, int nu, Variant variant) {
  double base = ctx.g(i) * ctx.power_weight(i, nu);
  if (variant == Variant::unbiased) return nu == 0 ? ctx.g(i) : base / (1.0 - ctx.w(i));
  return base;
}

// The per-prime law as a finite table over nu = 0..nu_p. The biased model's
// infinite tail nu > nu_p carries value 0 (f vanishes past x), so lumping its
// mass w_p/p^a onto nu = 0 is value-exact.
struct PrimeLaw {
  std::size_t prime_index;
  std::int64_t p;
  Variant variant;
  std::vector<double> masses;  // index nu = 0..nu_p
  std::vector<double> values;  // f(p^nu), values[0] = 0

  double mass_sum() const {
    KahanSum s;
    for (double m : masses) s.add(m);
    return s.value();
  }
};

inline PrimeLaw make_prime_law(const AdditiveFunction& f, std::size_t i,
                               const SaddleContext& ctx, Variant variant) {
  int nu_p = ctx.max_nu(i);
  PrimeLaw law{i, ctx.prime(i), variant, {}, {}};
  law.masses.resize(static_cast<std::size_t>(nu_p) + 1);
  law.values.resize(static_cast<std::size_t>(nu_p) + 1);
  for (int nu = 0; nu <= nu_p; ++nu) {
    law.masses[static_cast<std::size_t>(nu)] = exponent_mass(ctx, i, nu, variant);
    law.values[static_cast<std::size_t>(nu)] = nu == 0 ? 0.0 : f.coeff(i, nu);
  }
  if (variant == Variant::biased)
    law.masses[0] += ctx.w(i) * ctx.power_weight(i, 1);  // lumped tail, value 0
  return law;
}

struct Moments {
  double mean;
  double variance;
};

// Per-prime mean and variance, straight from the exponent sums (never from a
// value-grouped distribution; grouping equal values cannot change the sums).
// The unbiased variance follows g_p E^2 + sum g_p F(nu)^2/((1-w_p) p^{nu a}).
inline Moments xi_moments(const AdditiveFunction& f, std::size_t i, const SaddleContext& ctx,
                          Variant variant) {
  int nu_p = ctx.max_nu(i);
  KahanSum mean;
  for (int nu = 1; nu <= nu_p; ++nu)
    mean.add(exponent_mass(ctx, i, nu, variant) * f.coeff(i, nu));
  double m = mean.value();
  if (variant == Variant::biased) {
    KahanSum second;
    for (int nu = 1; nu <= nu_p; ++nu) {
      double c = f.coeff(i, nu);
      second.add(exponent_mass(ctx, i, nu, variant) * c * c);
    }
    return Moments{m, second.value() - m * m};
  }
  KahanSum var;
  var.add(ctx.g(i) * m * m);
  for (int nu = 1; nu <= nu_p; ++nu) {
    double F = f.coeff(i, nu) - m;
    var.add(exponent_mass(ctx, i, nu, variant) * F * F);
  }
  return Moments{m, var.value()};
}

// Centered table F_p(nu) = f(p^nu) - E(xi_p*), nu = 0..nu_p (so F_p(0) is
// minus the unbiased mean).
inline std::vector<double> centered_table(const AdditiveFunction& f, std::size_t i,
                                          const SaddleContext& ctx) {
  double mean = xi_moments(f, i, ctx, Variant::unbiased).mean;
  int nu_p = ctx.max_nu(i);
  std::vector<double> F(static_cast<std::size_t>(nu_p) + 1);
  F[0] = -mean;
  for (int nu = 1; nu <= nu_p; ++nu) F[static_cast<std::size_t>(nu)] = f.coeff(i, nu) - mean;
  return F;
}

// | sum_{0<=nu<=nu_p} F_p(nu) g_p/p^{nu a}  +  g_p w_p E(xi_p*) |.
// Telescoping the geometric sum makes this vanish identically; anything above
// rounding noise indicates a broken weight table.
inline double bias_identity_residual(const AdditiveFunction& f, std::size_t i,
                                     const SaddleContext& ctx) {
  double mean = xi_moments(f, i, ctx, Variant::unbiased).mean;
  int nu_p = ctx.max_nu(i);
  KahanSum s;
  s.add(ctx.g(i) * -mean);  // nu = 0 term
  for (int nu = 1; nu <= nu_p; ++nu)
    s.add(ctx.g(i) * ctx.power_weight(i, nu) * (f.coeff(i, nu) - mean));
  return std::fabs(s.value() + ctx.g(i) * ctx.w(i) * mean);
}

struct ModelMoments {
  Variant variant;
  std::vector<Moments> per_prime;
  double mean;      // E(Z)
  double variance;  // V(Z) = sum of per-prime variances (independence)
};

inline ModelMoments model_moments(const AdditiveFunction& f, const SaddleContext& ctx,
                                  Variant variant) {
  ModelMoments out{variant, {}, 0.0, 0.0};
  out.per_prime.reserve(ctx.prime_count());
  KahanSum mean, var;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    Moments m = xi_moments(f, i, ctx, variant);
    out.per_prime.push_back(m);
    mean.add(m.mean);
    var.add(m.variance);
  }
  out.mean = mean.value();
  out.variance = var.value();
  return out;
}

// The same variance as one double sum over all prime powers minus the sum of
// squared per-prime means; an independent arithmetic route used to cross-check
// model_moments.
inline double model_variance_double_sum(const AdditiveFunction& f, const SaddleContext& ctx,
                                        Variant variant) {
  KahanSum second, squares;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    KahanSum mean_i;
    for (int nu = 1; nu <= ctx.max_nu(i); ++nu) {
      double c = f.coeff(i, nu);
      double mass = exponent_mass(ctx, i, nu, variant);
      second.add(mass * c * c);
      mean_i.add(mass * c);
    }
    double m = mean_i.value();
    squares.add(m * m);
  }
  return second.value() - squares.value();
}

// Canonical split f = g + h with h strongly additive, h(p^nu) = p^a E(xi_p*).
// The residual part g then has mean-zero model coordinates.
inline std::pair<AdditiveFunction, AdditiveFunction> canonical_decomposition(
    const AdditiveFunction& f, const SaddleContext& ctx) {
  std::vector<double> prime_values(ctx.prime_count());
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    double mean = xi_moments(f, i, ctx, Variant::unbiased).mean;
    prime_values[i] = std::exp(ctx.alpha() * ctx.log_prime(i)) * mean;
  }
  AdditiveFunction h = strongly_additive(f.space_ptr(), prime_values);
  std::vector<double> gc(f.dim());
  for (std::size_t k = 0; k < f.dim(); ++k) gc[k] = f.coeff(k) - h.coeff(k);
  return {AdditiveFunction(f.space_ptr(), std::move(gc)), std::move(h)};
}

// n_draws independent samples of Z = sum_p xi_p, one inverse-CDF draw per
// prime per sample. Entirely determined by the seed.
inline std::vector<double> sample_model_sum(const AdditiveFunction& f, const SaddleContext& ctx,
                                            Variant variant, std::uint64_t seed,
                                            std::size_t n_draws) {
  if (n_draws < 1) throw std::invalid_argument("sample_model_sum: need n_draws >= 1");
  std::vector<PrimeLaw> laws;
  laws.reserve(ctx.prime_count());
  for (std::size_t i = 0; i < ctx.prime_count(); ++i)
    laws.push_back(make_prime_law(f, i, ctx, variant));

  std::mt19937_64 eng(seed);
  std::vector<double> draws(n_draws);
  for (double& z : draws) {
    double total = 0.0;
    for (const PrimeLaw& law : laws) {
      double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
      double cum = 0.0;
      std::size_t pick = law.masses.size() - 1;
      for (std::size_t nu = 0; nu < law.masses.size(); ++nu) {
        cum += law.masses[nu];
        if (u < cum) {
          pick = nu;
          break;
        }
      }
      total += law.values[pick];
    }
    z = total;
  }
  return draws;
}

}  // namespace friable

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "friable/additive.hpp"
#include "friable/linalg.hpp"
#include "friable/model.hpp"
#include "friable/numeric.hpp"
#include "friable/saddle.hpp"
#include "friable/smooth.hpp"

namespace friable {

// Exact valuation counts shared by the counting-path assembly, the A+B split
// and the pair-ratio diagnostics. The index space is extended with a nu = 0
// slot per prime, since centered sums range over 0 <= nu <= nu_p:
//   single[(p,nu)]        = Psi_p(x/p^nu, y)
//   pair[(p,nu),(q,mu)]   = Psi_pq(x/(p^nu q^mu), y)   (p != q)
struct CountTables {
  std::int64_t psi_count = 0;
  std::size_t ext_dim = 0;
  std::vector<std::size_t> ext_offset;  // per prime: index of its nu = 0 slot
  std::vector<std::int64_t> single;
  std::vector<std::int64_t> pair;  // ext_dim x ext_dim, same-prime entries unused (0)

  std::size_t ext_index(std::size_t prime_index, int nu) const {
    return ext_offset[prime_index] + static_cast<std::size_t>(nu);
  }
  std::int64_t pair_at(std::size_t a, std::size_t b) const { return pair[a * ext_dim + b]; }
};

inline CountTables build_count_tables(const SaddleContext& ctx, SmoothCounter& counter) {
  const SmoothBound& bound = ctx.bound();
  CountTables t;
  t.psi_count = counter.psi(bound.x);
  t.ext_offset.resize(ctx.prime_count());
  std::size_t off = 0;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    t.ext_offset[i] = off;
    off += static_cast<std::size_t>(ctx.max_nu(i)) + 1;
  }
  t.ext_dim = off;
  t.single.assign(t.ext_dim, 0);
  t.pair.assign(t.ext_dim * t.ext_dim, 0);

  for (std::size_t i = 0; i < ctx.prime_count(); ++i)
    for (int nu = 0; nu <= ctx.max_nu(i); ++nu)
      t.single[t.ext_index(i, nu)] = valuation_count(counter, bound, ctx.prime(i), nu);

  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    for (std::size_t j = i + 1; j < ctx.prime_count(); ++j) {
      for (int nu = 0; nu <= ctx.max_nu(i); ++nu) {
        for (int mu = 0; mu <= ctx.max_nu(j); ++mu) {
          std::int64_t c =
              joint_valuation_count(counter, bound, ctx.prime(i), nu, ctx.prime(j), mu);
          t.pair[t.ext_index(i, nu) * t.ext_dim + t.ext_index(j, mu)] = c;
          t.pair[t.ext_index(j, mu) * t.ext_dim + t.ext_index(i, nu)] = c;
        }
      }
    }
  }
  return t;
}

inline CountTables build_count_tables(const SaddleContext& ctx) {
  SmoothCounter counter(ctx.bound());
  return build_count_tables(ctx, counter);
}

// (1/Psi) sum_{n in S(x,y)} (f(n) - E(Z))^2 for several functions in one
// enumeration pass. Pairwise summation: Psi can reach 10^7 terms and naive
// accumulation would cost ~3 digits.
inline std::vector<double> empirical_variances(std::span<const AdditiveFunction> fs,
                                               const SaddleContext& ctx, Variant variant,
                                               std::int64_t node_cap = 2'000'000'000) {
  std::vector<double> means;
  means.reserve(fs.size());
  for (const AdditiveFunction& f : fs) means.push_back(model_moments(f, ctx, variant).mean);

  std::vector<PairwiseSum> acc(fs.size());
  std::int64_t nodes = 0;
  for_each_smooth_indexed(ctx.space(), [&](std::int64_t, std::span<const std::size_t> coords) {
    if (++nodes > node_cap)
      throw resource_limit_error("empirical_variances: enumeration cap exceeded");
    for (std::size_t jf = 0; jf < fs.size(); ++jf) {
      double val = 0.0;
      for (std::size_t k : coords) val += fs[jf].coeff(k);
      double d = val - means[jf];
      acc[jf].add(d * d);
    }
  });

  std::vector<double> out(fs.size());
  for (std::size_t jf = 0; jf < fs.size(); ++jf)
    out[jf] = acc[jf].value() / static_cast<double>(nodes);
  return out;
}

inline double empirical_variance(const AdditiveFunction& f, const SaddleContext& ctx,
                                 Variant variant, std::int64_t node_cap = 2'000'000'000) {
  return empirical_variances(std::span<const AdditiveFunction>(&f, 1), ctx, variant, node_cap)[0];
}

// The exact split of the unbiased semi-empirical variance into the diagonal
// part A (one prime) and the cross part B (two primes):
//   A = sum_p sum_nu F_p(nu)^2 Psi_p(x/p^nu, y)/Psi
//   B = sum_{p != q} sum_{nu,mu} F_p(nu) F_q(mu) Psi_pq(x/(p^nu q^mu), y)/Psi
// A + B recovers the variance up to floating rounding.
struct ABSplit {
  double a_term;
  double b_term;
};

inline ABSplit ab_decomposition(const AdditiveFunction& f, const SaddleContext& ctx,
                                const CountTables& tables) {
  const double psi_d = static_cast<double>(tables.psi_count);
  std::vector<std::vector<double>> F(ctx.prime_count());
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) F[i] = centered_table(f, i, ctx);

  KahanSum a;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i)
    for (int nu = 0; nu <= ctx.max_nu(i); ++nu) {
      double Fi = F[i][static_cast<std::size_t>(nu)];
      a.add(Fi * Fi * static_cast<double>(tables.single[tables.ext_index(i, nu)]) / psi_d);
    }

  KahanSum b;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i)
    for (std::size_t j = 0; j < ctx.prime_count(); ++j) {
      if (i == j) continue;
      for (int nu = 0; nu <= ctx.max_nu(i); ++nu)
        for (int mu = 0; mu <= ctx.max_nu(j); ++mu) {
          std::int64_t c = tables.pair_at(tables.ext_index(i, nu), tables.ext_index(j, mu));
          if (c == 0) continue;
          b.add(F[i][static_cast<std::size_t>(nu)] * F[j][static_cast<std::size_t>(mu)] *
                static_cast<double>(c) / psi_d);
        }
    }
  return ABSplit{a.value(), b.value()};
}

inline ABSplit ab_decomposition(const AdditiveFunction& f, const SaddleContext& ctx) {
  CountTables tables = build_count_tables(ctx);
  return ab_decomposition(f, ctx, tables);
}

// The pair of quadratic forms over the index space:
//   c'Qc = semi-empirical variance of the function with coefficients c
//   c'Mc = model variance V(Z)
// M is block diagonal per prime, D_p - r_p r_p'. Q is assembled from the
// joint-count matrix S plus rank-one corrections,
//   Q = S/Psi - m L' - L m' + L L',
// with m the empirical valuation frequencies and L the model mass vector;
// this keeps the counting path fully independent of enumeration.
struct FormPair {
  std::shared_ptr<const IndexSpace> space;
  Variant variant;
  Matrix Q;
  Matrix M;
};

enum class AssemblyPath { enumeration, counting };

namespace detail {

inline Matrix model_form(const SaddleContext& ctx, Variant variant) {
  const IndexSpace& space = ctx.space();
  Matrix M(space.dim());
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    int nu_p = ctx.max_nu(i);
    for (int nu = 1; nu <= nu_p; ++nu) {
      double lnu = exponent_mass(ctx, i, nu, variant);
      std::size_t knu = space.index_of(i, nu);
      for (int mu = 1; mu <= nu_p; ++mu) {
        std::size_t kmu = space.index_of(i, mu);
        double val = -lnu * exponent_mass(ctx, i, mu, variant);
        if (nu == mu) val += lnu;
        M.at(knu, kmu) = val;
      }
    }
  }
  return M;
}

inline Matrix empirical_form(const SaddleContext& ctx, Variant variant,
                             const std::vector<std::int64_t>& s_counts,
                             const std::vector<std::int64_t>& m_counts, std::int64_t psi_count) {
  const IndexSpace& space = ctx.space();
  const std::size_t d = space.dim();
  const double psi_d = static_cast<double>(psi_count);
  std::vector<double> L(d), m(d);
  for (std::size_t k = 0; k < d; ++k) {
    auto e = space.entry(k);
    L[k] = exponent_mass(ctx, e.prime_index, e.nu, variant);
    m[k] = static_cast<double>(m_counts[k]) / psi_d;
  }
  Matrix Q(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      Q.at(i, j) = static_cast<double>(s_counts[i * d + j]) / psi_d - m[i] * L[j] - L[i] * m[j] +
                   L[i] * L[j];
  return Q;
}

}  // namespace detail

inline FormPair assemble_forms(const SaddleContext& ctx, Variant variant, AssemblyPath path,
                               const CountTables* tables = nullptr,
                               std::int64_t node_cap = 2'000'000'000) {
  const IndexSpace& space = ctx.space();
  const std::size_t d = space.dim();
  std::vector<std::int64_t> s_counts(d * d, 0);
  std::vector<std::int64_t> m_counts(d, 0);
  std::int64_t psi_count = 0;

  if (path == AssemblyPath::enumeration) {
    std::int64_t nodes = 0;
    for_each_smooth_indexed(space, [&](std::int64_t, std::span<const std::size_t> coords) {
      if (++nodes > node_cap)
        throw resource_limit_error("assemble_forms: enumeration cap exceeded");
      for (std::size_t a : coords) {
        ++m_counts[a];
        for (std::size_t b : coords) ++s_counts[a * d + b];
      }
    });
    psi_count = nodes;
  } else {
    CountTables local;
    if (tables == nullptr) {
      local = build_count_tables(ctx);
      tables = &local;
    }
    psi_count = tables->psi_count;
    for (std::size_t k = 0; k < d; ++k) {
      auto e = space.entry(k);
      m_counts[k] = tables->single[tables->ext_index(e.prime_index, e.nu)];
      s_counts[k * d + k] = m_counts[k];
    }
    for (std::size_t k1 = 0; k1 < d; ++k1) {
      auto e1 = space.entry(k1);
      for (std::size_t k2 = 0; k2 < d; ++k2) {
        auto e2 = space.entry(k2);
        if (e1.prime_index == e2.prime_index) continue;  // same-prime off-diagonal stays 0
        s_counts[k1 * d + k2] =
            tables->pair_at(tables->ext_index(e1.prime_index, e1.nu),
                            tables->ext_index(e2.prime_index, e2.nu));
      }
    }
  }

  FormPair out{ctx.space_ptr(), variant, Matrix(), Matrix()};
  out.Q = detail::empirical_form(ctx, variant, s_counts, m_counts, psi_count);
  out.M = detail::model_form(ctx, variant);
  return out;
}

// y_p = sqrt(sum_{0<=nu<=nu_p} g_p F_p(nu)^2 / p^{nu a}); never exceeds the
// per-prime model standard deviation, since the nu >= 1 terms of the variance
// carry the extra 1/(1-w_p) and its nu = 0 term is g_p E^2 exactly.
inline double centered_mass_norm(const AdditiveFunction& f, std::size_t i,
                                 const SaddleContext& ctx) {
  std::vector<double> F = centered_table(f, i, ctx);
  KahanSum s;
  for (int nu = 0; nu <= ctx.max_nu(i); ++nu) {
    double Fi = F[static_cast<std::size_t>(nu)];
    s.add(ctx.g(i) * Fi * Fi * ctx.power_weight(i, nu));
  }
  return std::sqrt(s.value());
}

// z_p(j) = sqrt(sum_{0<=nu<=nu_p} g_p t_p(nu)^{2j} / p^{nu a}), 0 <= j <= 5.
// At j = 0 the sum telescopes to 1 - w_p/p^a, a sub-probability mass.
inline double scale_moment(const SaddleContext& ctx, std::size_t i, int j) {
  if (j < 0 || j > 5) throw std::invalid_argument("scale_moment: j must be in 0..5");
  KahanSum s;
  for (int nu = 0; nu <= ctx.max_nu(i); ++nu) {
    double t = ctx.t_value(i, nu);
    double tpow = 1.0;
    for (int r = 0; r < 2 * j; ++r) tpow *= t;
    s.add(ctx.g(i) * tpow * ctx.power_weight(i, nu));
  }
  return std::sqrt(s.value());
}

// Compares the exact pair ratio Psi_pq(x/(p^nu q^mu), y)/Psi(x, y) with its
// three-term expansion and reports the normalized residual together with the
// shape R = 1/ubar^2 + ubar^2 (t_p+t_q)^4 + ubar^{5/2} (t_p+t_q)^5. Purely a
// diagnostic: the implied constant in front of R is not known, so nothing is
// asserted against it.
struct PairRatioDiagnostic {
  double residual;
  double r_shape;
};

inline PairRatioDiagnostic pair_ratio_residual(const SaddleContext& ctx,
                                               const CountTables& tables, std::size_t i, int nu,
                                               std::size_t j, int mu) {
  if (i == j) throw std::invalid_argument("pair_ratio_residual: need distinct primes");
  const double psi_d = static_cast<double>(tables.psi_count);
  double pw = ctx.power_weight(i, nu) * ctx.power_weight(j, mu);
  double lead = ctx.g(i) * ctx.g(j) * pw;
  double lhs =
      static_cast<double>(tables.pair_at(tables.ext_index(i, nu), tables.ext_index(j, mu))) /
      psi_d;
  double main = lead * (1.0 - ctx.v_value(i, nu) * ctx.v_value(j, mu) / ctx.sigma2()) +
                ctx.g(i) * ctx.power_weight(i, nu) *
                    static_cast<double>(tables.single[tables.ext_index(j, mu)]) / psi_d +
                ctx.g(j) * ctx.power_weight(j, mu) *
                    static_cast<double>(tables.single[tables.ext_index(i, nu)]) / psi_d;
  double tsum = ctx.t_value(i, nu) + ctx.t_value(j, mu);
  double t4 = tsum * tsum * tsum * tsum;
  double r = 1.0 / (ctx.ubar() * ctx.ubar()) + ctx.ubar() * ctx.ubar() * t4 +
             std::pow(ctx.ubar(), 2.5) * t4 * tsum;
  return PairRatioDiagnostic{std::fabs(lhs - main) / lead, r};
}

// Bookkeeping quantities whose comparison shapes carry unknown absolute
// constants. Each piece is computed exactly and reported next to its shape;
// none of them is a testable bound.
struct BoundDiagnostics {
  double cross_tail;        // |B restricted to p^nu q^mu > x^{1/(10 sqrt(ubar))}|
  double cross_tail_shape;  // V(Z*) e^{-sqrt(ubar)/60}
  double r_weighted;        // the three y_p z_p(j) bilinear sums
  double r_weighted_shape;  // h V(Z*) / ubar^2
  double mean_shift;        // sum_p g_p w_p |E_p| sum_{q!=p} sum_mu g_q|F_q(mu)|/q^{mu a}
  double mean_shift_shape;  // V(Z*) e^{-ubar/3}
  double cross_moment;      // -(1/sigma2) sum_{p != q} s_p s_q with s_p the v-weighted sums
  double cross_moment_shape;  // V(Z*) / ubar
};

inline BoundDiagnostics bound_diagnostics(const AdditiveFunction& f, const SaddleContext& ctx,
                                          const CountTables& tables) {
  const double psi_d = static_cast<double>(tables.psi_count);
  const double vz = model_moments(f, ctx, Variant::unbiased).variance;
  const double ub = ctx.ubar();

  std::vector<std::vector<double>> F(ctx.prime_count());
  std::vector<double> mean(ctx.prime_count());
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    F[i] = centered_table(f, i, ctx);
    mean[i] = xi_moments(f, i, ctx, Variant::unbiased).mean;
  }

  BoundDiagnostics d{};

  // cross tail: pairs whose product exceeds x^{1/(10 sqrt(ubar))}
  const double log_threshold = ctx.log_x() / (10.0 * std::sqrt(ub));
  KahanSum tail;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i)
    for (std::size_t j = 0; j < ctx.prime_count(); ++j) {
      if (i == j) continue;
      for (int nu = 0; nu <= ctx.max_nu(i); ++nu)
        for (int mu = 0; mu <= ctx.max_nu(j); ++mu) {
          if (nu * ctx.log_prime(i) + mu * ctx.log_prime(j) <= log_threshold) continue;
          std::int64_t c = tables.pair_at(tables.ext_index(i, nu), tables.ext_index(j, mu));
          if (c == 0) continue;
          tail.add(F[i][static_cast<std::size_t>(nu)] * F[j][static_cast<std::size_t>(mu)] *
                   static_cast<double>(c) / psi_d);
        }
    }
  d.cross_tail = std::fabs(tail.value());
  d.cross_tail_shape = vz * std::exp(-std::sqrt(ub) / 60.0);

  // the y_p z_p(j) bilinear sums
  KahanSum yz0, yz4, yz5;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    double yp = centered_mass_norm(f, i, ctx);
    yz0.add(yp * scale_moment(ctx, i, 0));
    yz4.add(yp * scale_moment(ctx, i, 4));
    yz5.add(yp * scale_moment(ctx, i, 5));
  }
  d.r_weighted = yz0.value() * yz0.value() / (ub * ub) + ub * ub * yz4.value() * yz0.value() +
                 std::pow(ub, 2.5) * yz5.value() * yz0.value();
  d.r_weighted_shape = ctx.h() * vz / (ub * ub);

  // contribution driven by the centered-mass identity
  KahanSum shift;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    KahanSum inner;
    for (std::size_t j = 0; j < ctx.prime_count(); ++j) {
      if (i == j) continue;
      for (int mu = 0; mu <= ctx.max_nu(j); ++mu)
        inner.add(ctx.g(j) * std::fabs(F[j][static_cast<std::size_t>(mu)]) *
                  ctx.power_weight(j, mu));
    }
    shift.add(ctx.g(i) * ctx.w(i) * std::fabs(mean[i]) * inner.value());
  }
  d.mean_shift = shift.value();
  d.mean_shift_shape = vz * std::exp(-ub / 3.0);

  // cross second-moment term
  KahanSum s_sum, s_sq;
  for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
    KahanSum si;
    for (int nu = 0; nu <= ctx.max_nu(i); ++nu)
      si.add(ctx.g(i) * F[i][static_cast<std::size_t>(nu)] * ctx.v_value(i, nu) *
             ctx.power_weight(i, nu));
    double s = si.value();
    s_sum.add(s);
    s_sq.add(s * s);
  }
  d.cross_moment = -(s_sum.value() * s_sum.value() - s_sq.value()) / ctx.sigma2();
  d.cross_moment_shape = vz / ub;
  return d;
}

}  // namespace friable

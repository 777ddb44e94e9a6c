#pragma once

// Verification suites behind `friable verify`: every library operation is
// exercised against an independent route (exhaustive enumeration, closed
// forms, or a second algebraic path) on a small grid of (x, y) points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "friable/friable.hpp"

namespace friable::verify {

struct CheckResult {
  std::string name;
  bool pass;
  std::string detail;
};

struct Report {
  std::vector<CheckResult> checks;
  std::vector<std::string> info;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void add(std::string name, bool pass, std::string detail = "") {
    checks.push_back(CheckResult{std::move(name), pass, std::move(detail)});
  }
};

struct VerifyConfig {
  std::vector<std::pair<std::int64_t, std::int64_t>> grid = {{1000, 5}, {10000, 7}};
  std::uint64_t seed = 42;
  int functions_per_point = 8;
  bool inject_wp_fault = false;
  bool with_diagnostics = false;
};

namespace detail {

inline std::string point_tag(std::int64_t x, std::int64_t y) {
  return "(x=" + std::to_string(x) + ",y=" + std::to_string(y) + ") ";
}

inline std::string rel_detail(double worst) {
  std::ostringstream os;
  os << "worst " << worst;
  return os.str();
}

// Exhaustive-scan oracle: smooth integers by trial division, no shared code
// with the depth-first generator.
inline std::vector<std::int64_t> scan_smooth(std::int64_t x, std::int64_t y) {
  std::vector<std::int64_t> out;
  for (std::int64_t n = 1; n <= x; ++n) {
    std::int64_t m = n;
    for (std::int64_t p = 2; p <= y && m > 1; ++p)
      while (m % p == 0) m /= p;
    if (m == 1) out.push_back(n);
  }
  return out;
}

inline std::vector<AdditiveFunction> seeded_functions(const SaddleContext& ctx,
                                                      std::uint64_t seed, int count) {
  std::vector<AdditiveFunction> fs;
  fs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    fs.push_back(random_function(ctx.space_ptr(), seed + static_cast<std::uint64_t>(i), 1.0));
  return fs;
}

}  // namespace detail

inline Report run_identities(const VerifyConfig& cfg) {
  Report rep;
  for (auto [x, y] : cfg.grid) {
    const std::string tag = detail::point_tag(x, y);
    SmoothBound bound(x, y);
    SaddleContext ctx(bound);
    SmoothCounter counter(bound);
    CountTables tables = build_count_tables(ctx, counter);
    auto fs = detail::seeded_functions(ctx, cfg.seed, cfg.functions_per_point);

    // counting machinery against itself and against enumeration
    std::int64_t psi_enum = psi(bound, PsiMethod::enumerate);
    std::int64_t psi_rec = tables.psi_count;
    rep.add(tag + "psi enumerate == recurrence", psi_enum == psi_rec,
            std::to_string(psi_enum) + " vs " + std::to_string(psi_rec));

    bool partition_ok = true;
    for (std::size_t i = 0; i < ctx.prime_count() && partition_ok; ++i) {
      std::int64_t total = 0;
      for (int nu = 0; nu <= ctx.max_nu(i); ++nu)
        total += tables.single[tables.ext_index(i, nu)];
      partition_ok = total == psi_rec;
    }
    rep.add(tag + "valuation counts partition Psi", partition_ok);

    {
      std::vector<std::int64_t> excl = {ctx.prime(ctx.prime_count() - 1), 2};
      std::int64_t by_ie = counter.psi_coprime(bound.x, excl);
      std::int64_t by_filter = 0;
      for_each_smooth(bound, [&](std::int64_t n) {
        if (n % excl[0] != 0 && n % excl[1] != 0) ++by_filter;
      });
      rep.add(tag + "psi_coprime inclusion-exclusion == filtered enumeration",
              by_ie == by_filter, std::to_string(by_ie) + " vs " + std::to_string(by_filter));
      std::int64_t big_prime[] = {bound.y + 1000};
      rep.add(tag + "excluded primes above y do not change the count",
              counter.psi_coprime(bound.x, big_prime) == psi_rec);
    }

    if (ctx.prime_count() >= 2) {
      std::int64_t total = 0;
      for (int nu = 0; nu <= ctx.max_nu(0); ++nu)
        for (int mu = 0; mu <= ctx.max_nu(1); ++mu)
          total += tables.pair_at(tables.ext_index(0, nu), tables.ext_index(1, mu));
      rep.add(tag + "joint counts partition Psi", total == psi_rec);
    }

    {
      PhiValue pv = phi(ctx.alpha(), ctx.space().primes());
      double resid = std::fabs(pv.value - ctx.log_x());
      rep.add(tag + "saddle equation residual within tolerance",
              resid <= ctx.alpha_tol() * ctx.log_x(), detail::rel_detail(resid));
      rep.add(tag + "sigma2 equals minus the saddle derivative",
              rel_close(ctx.sigma2(), -pv.derivative, 1e-12));
    }

    {
      const std::int64_t p2[] = {2};
      const std::int64_t p3[] = {3};
      const std::int64_t p23[] = {2, 3};
      double prod = g_factor(p2, ctx.alpha()) *
                    (ctx.prime_count() > 1 ? g_factor(p3, ctx.alpha()) : 1.0);
      double joint = ctx.prime_count() > 1 ? g_factor(p23, ctx.alpha()) : g_factor(p2, ctx.alpha());
      bool scalars_ok = rel_close(prod, joint, 1e-14) && ctx.t_value(0, 0) == 0.0 &&
                        ctx.v_value(0, 0) == 0.0;
      // v additivity over distinct primes
      if (ctx.prime_count() > 1) {
        std::pair<std::int64_t, int> fac[] = {{2, 2}, {3, 1}};
        scalars_ok = scalars_ok &&
                     rel_close(v_value(ctx, fac), ctx.v_value(0, 2) + ctx.v_value(1, 1), 1e-12);
      }
      rep.add(tag + "scalar definitions (g multiplicativity, t/v at nu=0, v additivity)",
              scalars_ok);
    }

    // per-prime law mass normalization
    {
      double worst = 0.0;
      for (Variant variant : {Variant::biased, Variant::unbiased})
        for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
          PrimeLaw law = make_prime_law(fs[0], i, ctx, variant);
          worst = std::fmax(worst, std::fabs(law.mass_sum() - 1.0));
        }
      rep.add(tag + "prime law masses sum to 1", worst <= 1e-12, detail::rel_detail(worst));
    }

    // centered-mass identity, all functions, all primes
    {
      double worst = 0.0;
      bool ok = true;
      for (const auto& f : fs)
        for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
          double mean = xi_moments(f, i, ctx, Variant::unbiased).mean;
          double resid = bias_identity_residual(f, i, ctx);
          double scaled = resid / (1.0 + std::fabs(mean));
          worst = std::fmax(worst, scaled);
          ok = ok && scaled <= 1e-12;
        }
      rep.add(tag + "centered-mass identity residual <= 1e-12 scaled", ok,
              detail::rel_detail(worst));
    }

    // model moments: two algebraic routes
    {
      double worst = 0.0;
      for (const auto& f : fs)
        for (Variant variant : {Variant::biased, Variant::unbiased}) {
          ModelMoments mm = model_moments(f, ctx, variant);
          double alt = model_variance_double_sum(f, ctx, variant);
          double rel = std::fabs(mm.variance - alt) /
                       std::fmax(std::fabs(mm.variance), std::fabs(alt));
          worst = std::fmax(worst, rel);
        }
      rep.add(tag + "model variance: per-prime sum == double-sum formula", worst <= 1e-12,
              detail::rel_detail(worst));
    }

    // unbiased per-prime variance: formula route vs direct law moments;
    // value-grouping invariance with forced collisions
    {
      AdditiveFunction f = fs[0];
      std::vector<double> c = f.coeffs();
      for (std::size_t i = 0; i < ctx.prime_count(); ++i)
        if (ctx.max_nu(i) >= 3) {
          c[ctx.space().index_of(i, 3)] = c[ctx.space().index_of(i, 1)];  // force a collision
          c[ctx.space().index_of(i, 2)] = 0.0;                            // collide with f(1)=0
        }
      AdditiveFunction fc(ctx.space_ptr(), c);
      double worst = 0.0;
      for (Variant variant : {Variant::biased, Variant::unbiased})
        for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
          PrimeLaw law = make_prime_law(fc, i, ctx, variant);
          std::map<double, double> grouped;
          for (std::size_t nu = 0; nu < law.masses.size(); ++nu)
            grouped[law.values[nu]] += law.masses[nu];
          double mean = 0.0, second = 0.0;
          for (auto [value, mass] : grouped) {
            mean += mass * value;
            second += mass * value * value;
          }
          Moments m = xi_moments(fc, i, ctx, variant);
          worst = std::fmax(worst, std::fabs(m.mean - mean));
          worst = std::fmax(worst, std::fabs(m.variance - (second - mean * mean)));
        }
      rep.add(tag + "moments invariant under grouping equal values", worst <= 1e-12,
              detail::rel_detail(worst));
    }

    // canonical decomposition
    {
      double worst = 0.0;
      for (const auto& f : fs) {
        auto [gpart, hpart] = canonical_decomposition(f, ctx);
        for (std::size_t k = 0; k < f.dim(); ++k)
          worst = std::fmax(worst, std::fabs(gpart.coeff(k) + hpart.coeff(k) - f.coeff(k)));
        for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
          double mean = xi_moments(f, i, ctx, Variant::unbiased).mean;
          double pa = std::exp(ctx.alpha() * ctx.log_prime(i));
          std::vector<double> F = centered_table(f, i, ctx);
          for (int nu = 1; nu <= ctx.max_nu(i); ++nu) {
            double direct = f.coeff(i, nu) - pa * mean;
            double via_centered = F[static_cast<std::size_t>(nu)] - ctx.g(i) * pa * mean;
            worst = std::fmax(worst, std::fabs(direct - via_centered));
            worst = std::fmax(worst, std::fabs(gpart.coeff(i, nu) - direct));
          }
        }
      }
      rep.add(tag + "canonical split f = g + h reconstructs (both g expressions)",
              worst <= 1e-12, detail::rel_detail(worst));
    }

    // A + B against the enumerated variance
    {
      double worst = 0.0;
      std::vector<double> vstars = empirical_variances(fs, ctx, Variant::unbiased);
      for (std::size_t jf = 0; jf < fs.size(); ++jf) {
        ABSplit ab = ab_decomposition(fs[jf], ctx, tables);
        worst = std::fmax(worst, std::fabs(ab.a_term + ab.b_term - vstars[jf]) / vstars[jf]);
      }
      AdditiveFunction d2 = delta_at_two(ctx.space_ptr());
      ABSplit ab2 = ab_decomposition(d2, ctx, tables);
      bool b_vanishes = ab2.b_term == 0.0;
      rep.add(tag + "A + B == V* (1e-9 relative)", worst <= 1e-9, detail::rel_detail(worst));
      rep.add(tag + "cross part B vanishes for the one-coefficient witness", b_vanishes);
    }

    // quadratic forms: counting path against direct computations, and the
    // two assembly paths against each other
    {
      FormPair fc_b = assemble_forms(ctx, Variant::biased, AssemblyPath::counting, &tables);
      FormPair fc_u = assemble_forms(ctx, Variant::unbiased, AssemblyPath::counting, &tables);
      FormPair fe_u = assemble_forms(ctx, Variant::unbiased, AssemblyPath::enumeration);

      double worst_q = 0.0;
      for (std::size_t i = 0; i < fe_u.Q.dim(); ++i)
        for (std::size_t j = 0; j < fe_u.Q.dim(); ++j) {
          double a = fc_u.Q.at(i, j), b = fe_u.Q.at(i, j);
          double scale = std::max({std::fabs(a), std::fabs(b), 1e-30});
          worst_q = std::fmax(worst_q, std::fabs(a - b) / scale);
        }
      rep.add(tag + "counting-path Q == enumeration-path Q (1e-9 entrywise)", worst_q <= 1e-9,
              detail::rel_detail(worst_q));

      double worst = 0.0;
      std::vector<double> v_b = empirical_variances(fs, ctx, Variant::biased);
      std::vector<double> v_u = empirical_variances(fs, ctx, Variant::unbiased);
      for (std::size_t jf = 0; jf < fs.size(); ++jf) {
        const auto& c = fs[jf].coeffs();
        double qb = quadratic_form(fc_b.Q, c), qu = quadratic_form(fc_u.Q, c);
        double mb = quadratic_form(fc_b.M, c), mu = quadratic_form(fc_u.M, c);
        double vzb = model_moments(fs[jf], ctx, Variant::biased).variance;
        double vzu = model_moments(fs[jf], ctx, Variant::unbiased).variance;
        worst = std::fmax(worst, std::fabs(qb - v_b[jf]) / v_b[jf]);
        worst = std::fmax(worst, std::fabs(qu - v_u[jf]) / v_u[jf]);
        worst = std::fmax(worst, std::fabs(mb - vzb) / vzb);
        worst = std::fmax(worst, std::fabs(mu - vzu) / vzu);
      }
      rep.add(tag + "c'Qc == empirical variance, c'Mc == model variance (1e-10)",
              worst <= 1e-10, detail::rel_detail(worst));

      // eigen solver: dominance, extremal consistency, scale invariance
      TkResult tk_b = tk_constant(fc_b);
      TkResult tk_u = tk_constant(fc_u);
      bool dominance = true;
      for (const auto& f : fs) {
        dominance = dominance && rayleigh(f, fc_b) <= tk_b.constant + 1e-10;
        dominance = dominance && rayleigh(f, fc_u) <= tk_u.constant + 1e-10;
      }
      rep.add(tag + "largest eigenvalue dominates random Rayleigh quotients", dominance);
      rep.add(tag + "extremal function attains the constant",
              rel_close(rayleigh(tk_b.extremal, fc_b), tk_b.constant, 1e-10) &&
                  rel_close(rayleigh(tk_u.extremal, fc_u), tk_u.constant, 1e-10));
      rep.add(tag + "eigen residual ||Qv - CMv|| <= 1e-8 ||Qv||",
              tk_b.residual <= 1e-8 && tk_u.residual <= 1e-8,
              detail::rel_detail(std::fmax(tk_b.residual, tk_u.residual)));

      std::vector<double> scaled = fs[0].coeffs();
      for (double& v : scaled) v *= 17.0;
      AdditiveFunction f17(ctx.space_ptr(), scaled);
      rep.add(tag + "Rayleigh quotient is scale invariant",
              rel_close(rayleigh(f17, fc_u), rayleigh(fs[0], fc_u), 1e-12));

      SpikeLowerBound spike = spike_lower_bound(ctx, fc_b);
      rep.add(tag + "spike witness ratio <= C", spike.ratio <= tk_b.constant + 1e-10,
              "ratio " + format_double(spike.ratio) + " vs C " + format_double(tk_b.constant));
    }
  }
  return rep;
}

inline Report run_bounds(const VerifyConfig& cfg) {
  Report rep;
  for (auto [x, y] : cfg.grid) {
    const std::string tag = detail::point_tag(x, y);
    SmoothBound bound(x, y);
    SaddleContext ctx(bound);
    auto fs = detail::seeded_functions(ctx, cfg.seed, cfg.functions_per_point);

    {
      std::vector<std::string> violations;
      if (cfg.inject_wp_fault) {
        std::vector<double> w(ctx.prime_count());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = ctx.w(i);
        w.back() = 0.5 * std::exp(-ctx.alpha() * ctx.log_x());  // push below x^-alpha
        violations = ctx.weight_envelope_violations(w);
      } else {
        violations = ctx.weight_envelope_violations();
      }
      rep.add(tag + "bias weight envelope (both chains, all primes)", violations.empty(),
              violations.empty() ? "" : violations.front());
    }

    {
      bool ok = true;
      double worst = 0.0;
      for (const auto& f : fs)
        for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
          double yp = centered_mass_norm(f, i, ctx);
          double sd = std::sqrt(xi_moments(f, i, ctx, Variant::unbiased).variance);
          worst = std::fmax(worst, yp - sd);
          ok = ok && yp <= sd + 1e-12;
        }
      rep.add(tag + "centered mass norm <= per-prime standard deviation", ok,
              detail::rel_detail(worst));
    }

    {
      bool ok = true;
      for (std::size_t i = 0; i < ctx.prime_count(); ++i) {
        double z0 = scale_moment(ctx, i, 0);
        double expect = std::sqrt(1.0 - ctx.w(i) * ctx.power_weight(i, 1));
        ok = ok && z0 * z0 <= 1.0 + 1e-15 && rel_close(z0, expect, 1e-12);
        double prev = z0;
        for (int j = 1; j <= 5; ++j) {
          double zj = scale_moment(ctx, i, j);
          ok = ok && zj <= prev + 1e-15;
          prev = zj;
        }
      }
      rep.add(tag + "scale moments: z(0)^2 telescopes below 1, nonincreasing in j", ok);
    }

    rep.add(tag + "alpha log x / ubar >= 0.05 (soft order check)",
            ctx.alpha() * ctx.log_x() / ctx.ubar() >= 0.05,
            format_double(ctx.alpha() * ctx.log_x() / ctx.ubar()));
    {
      double ratio = ctx.sigma2() * ctx.ubar() /
                     ((ctx.u() * std::log(static_cast<double>(y))) *
                      (ctx.u() * std::log(static_cast<double>(y))));
      rep.add(tag + "sigma2 ubar/(u log y)^2 within [0.02, 50] (soft order check)",
              ratio >= 0.02 && ratio <= 50.0, format_double(ratio));
    }

    {
      double a_bigger_x = solve_alpha(SmoothBound(4 * x, y));
      bool mono = a_bigger_x < ctx.alpha();
      std::int64_t y_next = y + 1;
      while (sieve_primes(y_next).size() == ctx.prime_count()) ++y_next;
      if (y_next <= x) mono = mono && solve_alpha(SmoothBound(x, y_next)) > ctx.alpha();
      rep.add(tag + "alpha decreasing in x, increasing in y", mono);

      std::int64_t p0 = psi(bound);
      bool psi_mono = psi(SmoothBound(2 * x, y)) >= p0;
      if (y_next <= x) psi_mono = psi_mono && psi(SmoothBound(x, y_next)) >= p0;
      rep.add(tag + "Psi nondecreasing in x and y", psi_mono);
    }

    rep.add(tag + "ubar == min(h, u) <= h",
            ctx.ubar() == std::min(static_cast<double>(ctx.h()), ctx.u()) &&
                ctx.ubar() <= static_cast<double>(ctx.h()));
  }
  return rep;
}

inline Report run_sampling(const VerifyConfig& cfg) {
  Report rep;
  for (auto [x, y] : cfg.grid) {
    const std::string tag = detail::point_tag(x, y);
    SmoothBound bound(x, y);
    SaddleContext ctx(bound);

    AdditiveFunction zero = AdditiveFunction::zero(ctx.space_ptr());
    auto zero_draws = sample_model_sum(zero, ctx, Variant::unbiased, cfg.seed, 200);
    bool all_zero = std::all_of(zero_draws.begin(), zero_draws.end(),
                                [](double v) { return v == 0.0; });
    rep.add(tag + "zero function samples to zero", all_zero);

    auto a = sample_model_sum(delta_at_two(ctx.space_ptr()), ctx, Variant::biased, cfg.seed, 100);
    auto b = sample_model_sum(delta_at_two(ctx.space_ptr()), ctx, Variant::biased, cfg.seed, 100);
    rep.add(tag + "identical seed reproduces the stream", a == b);

    std::vector<AdditiveFunction> fs = detail::seeded_functions(ctx, cfg.seed, 2);
    fs.push_back(delta_at_two(ctx.space_ptr()));
    const std::size_t n_draws = 20000;
    for (Variant variant : {Variant::biased, Variant::unbiased}) {
      bool ok = true;
      std::string detail_str;
      for (std::size_t jf = 0; jf < fs.size(); ++jf) {
        ModelMoments mm = model_moments(fs[jf], ctx, variant);
        auto draws =
            sample_model_sum(fs[jf], ctx, variant, cfg.seed + 100 + jf, n_draws);
        double mean = 0.0;
        for (double v : draws) mean += v;
        mean /= static_cast<double>(n_draws);
        double var = 0.0;
        for (double v : draws) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n_draws - 1);
        double se = std::sqrt(mm.variance / static_cast<double>(n_draws));
        bool mean_ok = std::fabs(mean - mm.mean) <= 5.0 * se;
        bool var_ok = std::fabs(var - mm.variance) <= 0.10 * mm.variance;
        if (!(mean_ok && var_ok))
          detail_str = "f#" + std::to_string(jf) + " mean " + format_double(mean) + " vs " +
                       format_double(mm.mean) + ", var " + format_double(var) + " vs " +
                       format_double(mm.variance);
        ok = ok && mean_ok && var_ok;
      }
      rep.add(tag + std::string(variant_name(variant)) +
                  " sample mean within 5 SE, variance within 10%",
              ok, detail_str);
    }
  }
  return rep;
}

// Diagnostics carry no assertions at all: the implied constants are unknown.
inline void run_diagnostics(const VerifyConfig& cfg, Report& rep) {
  for (auto [x, y] : cfg.grid) {
    const std::string tag = detail::point_tag(x, y);
    SmoothBound bound(x, y);
    SaddleContext ctx(bound);
    SmoothCounter counter(bound);
    CountTables tables = build_count_tables(ctx, counter);

    double worst_resid = 0.0, worst_ratio = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < ctx.prime_count(); ++i)
      for (std::size_t j = 0; j < ctx.prime_count(); ++j) {
        if (i == j) continue;
        for (int nu = 0; nu <= ctx.max_nu(i); ++nu)
          for (int mu = 0; mu <= ctx.max_nu(j); ++mu) {
            if (nu * ctx.log_prime(i) + mu * ctx.log_prime(j) > ctx.log_x() + 1e-9) continue;
            PairRatioDiagnostic d = pair_ratio_residual(ctx, tables, i, nu, j, mu);
            worst_resid = std::fmax(worst_resid, d.residual);
            worst_ratio = std::fmax(worst_ratio, d.residual / d.r_shape);
            ++pairs;
          }
      }
    rep.info.push_back(tag + "pair ratio expansion over " + std::to_string(pairs) +
                       " admissible pairs: max residual " + format_double(worst_resid) +
                       ", max residual/R " + format_double(worst_ratio));

    AdditiveFunction f = random_function(ctx.space_ptr(), cfg.seed, 1.0);
    BoundDiagnostics d = bound_diagnostics(f, ctx, tables);
    rep.info.push_back(tag + "cross tail " + format_double(d.cross_tail) + " | shape V* e^{-sqrt(ubar)/60} = " +
                       format_double(d.cross_tail_shape));
    rep.info.push_back(tag + "R-weighted bilinear sums " + format_double(d.r_weighted) +
                       " | shape h V*/ubar^2 = " + format_double(d.r_weighted_shape));
    rep.info.push_back(tag + "mean-shift contribution " + format_double(d.mean_shift) +
                       " | shape V* e^{-ubar/3} = " + format_double(d.mean_shift_shape));
    rep.info.push_back(tag + "cross second-moment term " + format_double(d.cross_moment) +
                       " | shape V*/ubar = " + format_double(d.cross_moment_shape));
  }
}

}  // namespace friable::verify

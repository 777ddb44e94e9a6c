#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "friable/additive.hpp"
#include "friable/forms.hpp"
#include "friable/linalg.hpp"
#include "friable/model.hpp"
#include "friable/saddle.hpp"

namespace friable {

// c'Qc / c'Mc. Undefined as c -> 0, so a vanishing denominator is rejected
// rather than returned as 0/0 noise.
inline double rayleigh(const AdditiveFunction& f, const FormPair& forms) {
  const auto& c = f.coeffs();
  double den = quadratic_form(forms.M, c);
  double norm_sq = 0.0;
  for (double v : c) norm_sq += v * v;
  if (den <= static_cast<double>(c.size()) * 1e-14 * norm_sq)
    throw std::domain_error("rayleigh: model variance degenerate (f is ~0)");
  return quadratic_form(forms.Q, c) / den;
}

struct GeneralizedEigenResult {
  double lambda_max;
  std::vector<double> eigvec;  // M-norm 1, first component above 1e-10 made positive
  int sweeps;
  double residual;  // ||Q v - lambda M v|| / ||Q v||
};

// Largest generalized eigenvalue of (Q, M) with M positive definite:
// Cholesky M = L L', cyclic Jacobi on L^{-1} Q L^{-T}, back-transform.
// A Cholesky failure here means the model form lost positive definiteness,
// which signals an assembly bug upstream.
inline GeneralizedEigenResult max_generalized_eigen(const FormPair& forms, double tol = 1e-12) {
  const std::size_t n = forms.Q.dim();
  Matrix L = cholesky(forms.M);

  // B = L^{-1} Q L^{-T}, built column by column, then symmetrized to scrub
  // the last bits of rounding asymmetry.
  Matrix B(n);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = forms.Q.at(i, j);
    std::vector<double> y = forward_solve(L, col);
    for (std::size_t i = 0; i < n; ++i) B.at(i, j) = y[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) col[j] = B.at(i, j);
    std::vector<double> y = forward_solve(L, col);
    for (std::size_t j = 0; j < n; ++j) B.at(i, j) = y[j];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.5 * (B.at(i, j) + B.at(j, i));
      B.at(i, j) = B.at(j, i) = s;
    }

  EigenDecomposition eig = jacobi_eigen(B, tol);
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (eig.values[k] > eig.values[best]) best = k;

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = eig.vectors.at(i, best);
  std::vector<double> v = backward_solve_transposed(L, w);

  double mnorm = std::sqrt(quadratic_form(forms.M, v));
  for (double& vi : v) vi /= mnorm;
  for (double vi : v) {
    if (std::fabs(vi) > 1e-10) {
      if (vi < 0.0)
        for (double& vj : v) vj = -vj;
      break;
    }
  }

  double lambda = eig.values[best];
  std::vector<double> qv = mat_vec(forms.Q, v);
  std::vector<double> mv = mat_vec(forms.M, v);
  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = qv[i] - lambda * mv[i];
    num += r * r;
  }
  double qn = norm2(qv);
  return GeneralizedEigenResult{lambda, std::move(v), eig.sweeps,
                                qn > 0.0 ? std::sqrt(num) / qn : 0.0};
}

struct TkResult {
  double constant;  // C(x,y) or C*(x,y)
  AdditiveFunction extremal;
  Variant variant;
  int iterations;
  double residual;
};

struct TkOptions {
  double alpha_tol = 1e-13;
  double eigen_tol = 1e-12;
  AssemblyPath path = AssemblyPath::counting;
};

inline TkResult tk_constant(const FormPair& forms, double eigen_tol = 1e-12) {
  GeneralizedEigenResult eig = max_generalized_eigen(forms, eigen_tol);
  return TkResult{eig.lambda_max, AdditiveFunction(forms.space, std::move(eig.eigvec)),
                  forms.variant, eig.sweeps, eig.residual};
}

// Full pipeline: saddle context -> count tables -> forms -> largest
// generalized eigenvalue, with the extremal function attached.
inline TkResult tk_constant(const SmoothBound& bound, Variant variant,
                            const TkOptions& opts = {}) {
  SaddleContext ctx(bound, opts.alpha_tol);
  FormPair forms = assemble_forms(ctx, variant, opts.path);
  return tk_constant(forms, opts.eigen_tol);
}

struct SpikeLowerBound {
  double ratio;           // variance ratio of the spike witness (biased forms)
  double limit_constant;  // e (1 - 1/h)^(h-1), the fixed-y limiting value
};

inline SpikeLowerBound spike_lower_bound(const SaddleContext& ctx, const FormPair& biased_forms) {
  if (biased_forms.variant != Variant::biased)
    throw std::invalid_argument("spike_lower_bound: needs the biased form pair");
  AdditiveFunction spike = spike_function(ctx.space_ptr());
  return SpikeLowerBound{rayleigh(spike, biased_forms),
                         spike_limit_constant(static_cast<int>(ctx.prime_count()))};
}

inline SpikeLowerBound spike_lower_bound(const SmoothBound& bound, const TkOptions& opts = {}) {
  SaddleContext ctx(bound, opts.alpha_tol);
  FormPair forms = assemble_forms(ctx, Variant::biased, opts.path);
  return spike_lower_bound(ctx, forms);
}

}  // namespace friable

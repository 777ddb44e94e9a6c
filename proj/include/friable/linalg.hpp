#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "friable/numeric.hpp"
#include "friable/saddle.hpp"  // convergence_error

namespace friable {

// Dense square matrix, row-major. Dimensions stay in the hundreds here, so
// nothing sparse or blocked is warranted.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

  std::size_t dim() const { return n_; }
  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  const std::vector<double>& data() const { return a_; }

  double max_asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        worst = std::fmax(worst, std::fabs(at(i, j) - at(j, i)));
    return worst;
  }

  double frobenius() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
  }

  double offdiag_frobenius() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (i != j) s += at(i, j) * at(i, j);
    return std::sqrt(s);
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

inline double quadratic_form(const Matrix& m, std::span<const double> c) {
  if (c.size() != m.dim()) throw std::invalid_argument("quadratic_form: size mismatch");
  KahanSum s;
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) s.add(c[i] * m.at(i, j) * c[j]);
  return s.value();
}

inline std::vector<double> mat_vec(const Matrix& m, std::span<const double> v) {
  std::vector<double> out(m.dim(), 0.0);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    KahanSum row;
    for (std::size_t j = 0; j < m.dim(); ++j) row.add(m.at(i, j) * v[j]);
    out[i] = row.value();
  }
  return out;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
// A non-positive pivot throws: for the matrices assembled here that always
// signals an upstream assembly bug, not an unlucky input.
inline Matrix cholesky(const Matrix& m) {
  std::size_t n = m.dim();
  Matrix L(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m.at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
      if (i == j) {
        if (!(s > 0.0))
          throw std::runtime_error("cholesky: non-positive pivot at row " + std::to_string(i));
        L.at(i, i) = std::sqrt(s);
      } else {
        L.at(i, j) = s / L.at(j, j);
      }
    }
  }
  return L;
}

// Solve L y = b (L lower triangular).
inline std::vector<double> forward_solve(const Matrix& L, std::span<const double> b) {
  std::size_t n = L.dim();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= L.at(i, k) * y[k];
    y[i] = s / L.at(i, i);
  }
  return y;
}

// Solve L^T x = b.
inline std::vector<double> backward_solve_transposed(const Matrix& L, std::span<const double> b) {
  std::size_t n = L.dim();
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= L.at(k, i) * x[k];
    x[i] = s / L.at(i, i);
  }
  return x;
}

struct EigenDecomposition {
  std::vector<double> values;  // unsorted, in final diagonal order
  Matrix vectors;              // column k pairs with values[k]
  int sweeps;
};

// Cyclic-by-row Jacobi for symmetric matrices. The sweep order is fixed, so
// results are bitwise reproducible. Converged when the off-diagonal Frobenius
// norm drops below tol times the (rotation-invariant) Frobenius norm.
inline EigenDecomposition jacobi_eigen(Matrix a, double tol = 1e-12, int max_sweeps = 100) {
  std::size_t n = a.dim();
  Matrix v(n);
  for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

  const double scale = a.frobenius();
  EigenDecomposition out{std::vector<double>(n), Matrix(n), 0};
  if (scale == 0.0 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a.at(i, i);
    out.vectors = v;
    return out;
  }

  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    if (a.offdiag_frobenius() <= tol * scale) {
      for (std::size_t i = 0; i < n; ++i) out.values[i] = a.at(i, i);
      out.vectors = v;
      out.sweeps = sweep - 1;
      return out;
    }
    for (std::size_t p = 0; p < n - 1; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a.at(p, q);
        if (apq == 0.0) continue;
        double theta = 0.5 * (a.at(q, q) - a.at(p, p)) / apq;
        double t = 1.0 / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        double tau = s / (1.0 + c);

        double app = a.at(p, p), aqq = a.at(q, q);
        a.at(p, p) = app - t * apq;
        a.at(q, q) = aqq + t * apq;
        a.at(p, q) = a.at(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = a.at(p, k) = akp - s * (akq + tau * akp);
          a.at(k, q) = a.at(q, k) = akq + s * (akp - tau * akq);
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = vkp - s * (vkq + tau * vkp);
          v.at(k, q) = vkq + s * (vkp - tau * vkq);
        }
      }
    }
  }
  throw convergence_error("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                          " sweeps");
}

// Largest eigenvalue of a PSD matrix by plain power iteration; kept only as a
// cross-check on the Jacobi path.
inline double power_iteration_max(const Matrix& a, double tol = 1e-12, int max_iter = 20000) {
  std::size_t n = a.dim();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> w = mat_vec(a, v);
    double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) w[i] /= nw;
    double next = 0.0;
    std::vector<double> aw = mat_vec(a, w);
    for (std::size_t i = 0; i < n; ++i) next += w[i] * aw[i];
    if (std::fabs(next - lambda) <= tol * std::fmax(1.0, std::fabs(next))) return next;
    lambda = next;
    v = std::move(w);
  }
  return lambda;
}

}  // namespace friable

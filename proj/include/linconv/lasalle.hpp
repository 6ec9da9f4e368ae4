#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "family.hpp"
#include "feasibility.hpp"
#include "linalg.hpp"

namespace linconv {

struct WeakKernelResult {
  Vector x;
  bool feasible = false;
  Vector w;
  double residual = std::numeric_limits<double>::infinity();
};

inline WeakKernelResult weak_kernel_membership(const MatrixFamily& f, const Vector& x, const Tolerances& tol = {}) {
  if (f.mode() != Mode::CT) throw InputError("the weak kernel is defined for continuous-time families");
  if (x.size() != f.dim()) throw InputError("query point has the wrong dimension");
  require_finite(x, "query point");
  Matrix m(f.dim(), static_cast<Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) m.col(static_cast<Index>(i)) = f[i] * x;
  WeakKernelResult r;
  r.x = x;
  if (auto w = lp_simplex_membership(m, tol)) {
    r.feasible = true;
    r.w = *w;
    r.residual = (m * *w).norm();
  }
  return r;
}

struct TrivialityScan {
  bool witness_found = false;  // false means "likely trivial", which is not a certificate
  Vector x;
  Vector w;
  std::string source;
  std::size_t sphere_samples = 0;
  std::size_t grid_points = 0;
};

namespace detail {

inline void simplex_grid(std::size_t m, int res, std::vector<int>& cur, std::size_t pos, int left,
                         const std::function<void(const std::vector<int>&)>& visit) {
  if (pos + 1 == m) {
    cur[pos] = left;
    visit(cur);
    return;
  }
  for (int k = 0; k <= left; ++k) {
    cur[pos] = k;
    simplex_grid(m, res, cur, pos + 1, left - k, visit);
  }
}

inline int grid_resolution(std::size_t m) {
  switch (m) {
    case 1: return 1;
    case 2: return 200;
    case 3: return 40;
    case 4: return 16;
    case 5: return 10;
    default: return 4;
  }
}

}  // namespace detail

// Heuristic search for a nonzero weak-kernel point: random unit vectors, then a determinant
// sign scan over a simplex grid with bisection on sign changes.
inline TrivialityScan weak_kernel_triviality_scan(const MatrixFamily& f, std::size_t samples, std::uint64_t seed,
                                                  const Tolerances& tol = {}) {
  if (f.mode() != Mode::CT) throw InputError("the weak kernel is defined for continuous-time families");
  TrivialityScan out;
  const Index n = f.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto try_point = [&](const Vector& x, const char* src) {
    if (!(x.norm() > 0)) return false;
    const WeakKernelResult r = weak_kernel_membership(f, x, tol);
    if (!r.feasible) return false;
    out.witness_found = true;
    out.x = x;
    out.w = r.w;
    out.source = src;
    return true;
  };
  for (std::size_t s = 0; s < samples; ++s) {
    Vector x(n);
    for (Index i = 0; i < n; ++i) x(i) = g(rng);
    x /= x.norm();
    ++out.sphere_samples;
    if (try_point(x, "sphere-sample")) return out;
  }

  const std::size_t m = f.size();
  const int res = detail::grid_resolution(m);
  auto weight = [&](const std::vector<int>& c) {
    Vector w(static_cast<Index>(m));
    for (std::size_t i = 0; i < m; ++i) w(static_cast<Index>(i)) = static_cast<double>(c[i]) / res;
    return w;
  };
  auto matrix_at = [&](const Vector& w) {
    Matrix a = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < m; ++i) a += w(static_cast<Index>(i)) * f[i];
    return a;
  };
  auto det_scale = [&](const Matrix& a) { return std::pow(std::max(1.0, induced_norm_1(a)), static_cast<double>(n)); };
  auto null_vector = [&](const Vector& w) {
    Eigen::JacobiSVD<Matrix> svd(matrix_at(w), Eigen::ComputeFullV);
    Vector x = svd.matrixV().col(n - 1);
    Matrix xm = x;
    normalize_signs(xm);
    return Vector(xm.col(0));
  };
  std::vector<int> cur(m, 0);
  bool found = false;
  detail::simplex_grid(m, res, cur, 0, res, [&](const std::vector<int>& c) {
    if (found) return;
    ++out.grid_points;
    const Vector w = weight(c);
    const Matrix a = matrix_at(w);
    const double d0 = a.determinant();
    if (std::abs(d0) <= 1e-12 * det_scale(a)) {
      found = try_point(null_vector(w), "determinant-scan");
      if (found) return;
    }
    for (std::size_t i = 0; i < m && !found; ++i) {
      if (c[i] == 0) continue;
      for (std::size_t j = 0; j < m && !found; ++j) {
        if (j == i) continue;
        Vector step = Vector::Zero(static_cast<Index>(m));
        step(static_cast<Index>(i)) = -1.0 / res;
        step(static_cast<Index>(j)) = 1.0 / res;
        const double d1 = matrix_at(w + step).determinant();
        if ((d0 < 0) == (d1 < 0)) continue;
        double lo = 0.0, hi = 1.0, dlo = d0;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double dm = matrix_at(w + mid * step).determinant();
          if ((dm < 0) == (dlo < 0)) {
            lo = mid;
            dlo = dm;
          } else {
            hi = mid;
          }
        }
        Vector ws = (w + 0.5 * (lo + hi) * step).cwiseMax(0.0);
        ws /= ws.sum();
        found = try_point(null_vector(ws), "determinant-scan");
      }
    }
  });
  return out;
}

struct LaSalleSet {
  std::vector<Subspace> components;  // the set is their union
  std::string provenance;

  double distance(const Vector& x) const {
    double d = x.norm();
    for (const auto& s : components) d = std::min(d, s.distance(x));
    return d;
  }
};

// Union of ker(Q_i), Q_i = -(A_i^T P + P A_i), for a weak quadratic Lyapunov function x^T P x.
inline LaSalleSet lasalle_set_quadratic(const MatrixFamily& f, const Matrix& p, const Tolerances& tol = {}) {
  if (f.mode() != Mode::CT) throw InputError("lasalle_set_quadratic needs a continuous-time family");
  require_finite(p, "P");
  if (p.rows() != f.dim() || p.cols() != f.dim()) throw InputError("P has the wrong size");
  if (!(p - p.transpose()).isZero(1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff()))) {
    throw InputError("P must be symmetric");
  }
  const double pscale = std::max(1.0, sym_eigenvalues(p).cwiseAbs().maxCoeff());
  if (min_eigenvalue_sym(p) < tol.psd_margin * pscale) throw PreconditionError("P is not positive definite");
  LaSalleSet set;
  set.provenance = "union of ker(-(A_i^T P + P A_i)) for a weak quadratic Lyapunov function";
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Matrix q = -sym(f[i].transpose() * p + p * f[i]);
    const double scale = std::max(1.0, 2.0 * pscale * induced_norm_1(f[i]));
    if (min_eigenvalue_sym(q) < -tol.residual_tol * scale) {
      throw PreconditionError("P is not a weak quadratic Lyapunov function: A_i^T P + P A_i is not negative "
                              "semidefinite at vertex " + std::to_string(i));
    }
    Subspace k = rank_and_kernel(q, tol, scale).kernel;
    bool dup = false;
    for (const auto& s : set.components) {
      dup = dup || (s.dim() == k.dim() && s.contains(k, 1e-9));
    }
    if (!dup) set.components.push_back(std::move(k));
  }
  return set;
}

namespace detail {

// Euclidean projection onto the unit simplex (sort-based).
inline Vector project_simplex(const Vector& v) {
  const Index m = v.size();
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (Index k = 0; k < m; ++k) {
    css += u[static_cast<std::size_t>(k)];
    const double t = (css - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - t > 0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

// min over the simplex of w^T G w with G = Y^T P Y, by accelerated projected gradient.
// Stops on a Frank-Wolfe duality gap below `gap_tol`.
inline double min_quadratic_on_simplex(const Matrix& y, const Matrix& p, double gap_tol) {
  const Index m = y.cols();
  const Matrix g = sym(y.transpose() * p * y);
  const double lmax = max_eigenvalue_sym(g);
  Vector w = Vector::Constant(m, 1.0 / static_cast<double>(m));
  auto value = [&](const Vector& v) { return v.dot(g * v); };
  if (!(lmax > 1e-300)) return value(w);
  const double step = 1.0 / (2.0 * lmax);
  Vector z = w;
  double t = 1.0;
  for (int it = 0; it < 10000; ++it) {
    const Vector grad = 2.0 * g * w;
    const double fw_gap = grad.dot(w) - grad.minCoeff();
    if (fw_gap <= gap_tol) return value(w);
    const Vector wn = project_simplex(z - step * (2.0 * g * z));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = wn + ((t - 1.0) / tn) * (wn - w);
    // Restart the momentum when it stops helping.
    if (value(wn) > value(w)) {
      z = wn;
      t = 1.0;
    } else {
      t = tn;
    }
    w = wn;
  }
  const Vector grad = 2.0 * g * w;
  if (grad.dot(w) - grad.minCoeff() <= gap_tol) return value(w);
  throw NumericalError("simplex minimization did not converge in 10000 iterations");
}

}  // namespace detail

// min over w of V(A(w) x) - V(x) with V(x) = x^T P x.
inline double lasalle_gap_dt(const MatrixFamily& f, const Matrix& p, const Vector& x) {
  if (f.mode() != Mode::DT) throw InputError("lasalle_gap_dt needs a discrete-time family");
  if (p.rows() != f.dim() || p.cols() != f.dim() || x.size() != f.dim()) throw InputError("dimension mismatch");
  require_finite(p, "P");
  require_finite(x, "x");
  Matrix y(f.dim(), static_cast<Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) y.col(static_cast<Index>(i)) = f[i] * x;
  const double vx = x.dot(p * x);
  return detail::min_quadratic_on_simplex(y, p, 1e-8 * std::max(1.0, std::abs(vx))) - vx;
}

// min over w of (V(x + tau A(w) x) - V(x)) / tau.
inline double euler_gap(const MatrixFamily& f, const Matrix& p, double tau, const Vector& x) {
  if (f.mode() != Mode::CT) throw InputError("euler_gap needs a continuous-time family");
  if (!(tau > 0.0)) throw InputError("euler_gap: tau must be positive");
  if (p.rows() != f.dim() || p.cols() != f.dim() || x.size() != f.dim()) throw InputError("dimension mismatch");
  require_finite(p, "P");
  require_finite(x, "x");
  Matrix y(f.dim(), static_cast<Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) y.col(static_cast<Index>(i)) = x + tau * (f[i] * x);
  const double vx = x.dot(p * x);
  return (detail::min_quadratic_on_simplex(y, p, 1e-8 * tau * std::max(1.0, std::abs(vx))) - vx) / tau;
}

}  // namespace linconv

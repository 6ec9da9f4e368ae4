#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "feasibility.hpp"
#include "linalg.hpp"
#include "lmi.hpp"
#include "verdict.hpp"

namespace linconv {

// Eigenvalues this close to the stability boundary (but not at the critical point) are
// not classified.
constexpr double kBoundaryBand = 1e-8;
// ...unless they sit on the boundary to working precision, which is a clear violation.
constexpr double kOnBoundary = 1e-12;

struct SpectralReport {
  Mode mode = Mode::DT;
  std::vector<Complex> eigenvalues;
  Index critical_count = 0;   // eigenvalues clustered at 1 (DT) or 0 (CT)
  Index kernel_dim = 0;       // dim ker(A - I) or dim ker(A)
  Index kernel_dim_sq = 0;    // same for the squared shift
  std::vector<Complex> offending;
  std::string reason;
};

struct LtiVerdict {
  Status status = Status::Unknown;
  SpectralReport report;
};

inline Matrix dt_aux(const Matrix& a, double eta) {
  require_square(a, "dt_aux argument");
  if (!(eta > 0.0 && eta < 1.0)) throw InputError("dt_aux: eta must lie in (0,1), got " + std::to_string(eta));
  return a / eta - ((1.0 - eta) / eta) * Matrix::Identity(a.rows(), a.cols());
}

inline Matrix ct_aux(const Matrix& a, double eps) {
  require_square(a, "ct_aux argument");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("ct_aux: epsilon must be positive");
  const Matrix m = Matrix::Identity(a.rows(), a.cols()) + eps * a;
  Eigen::FullPivLU<Matrix> lu(m);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw InputError("ct_aux: I + eps*A is singular for eps = " + std::to_string(eps));
  }
  return a * lu.inverse();
}

inline Matrix eas(const Matrix& a, double tau) {
  require_square(a, "eas argument");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("eas: tau must be positive");
  return Matrix::Identity(a.rows(), a.cols()) + tau * a;
}

inline LtiVerdict lti_convergent(const Matrix& a, Mode mode, const Tolerances& tol = {}) {
  require_square(a, "LTI matrix");
  require_finite(a, "LTI matrix");
  LtiVerdict v;
  auto& r = v.report;
  r.mode = mode;
  r.eigenvalues = eigenvalues(a);
  const double norm = induced_norm_1(a);
  const double radius = cluster_radius(a);
  const Complex critical = mode == Mode::DT ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
  const Matrix shift = critical_shift(a, mode);
  const double scale = 1.0 + norm;
  const Subspace k1 = rank_and_kernel(shift, tol, scale).kernel;
  const Subspace k2 = rank_and_kernel(shift * shift, tol, scale * scale).kernel;
  r.kernel_dim = k1.dim();
  r.kernel_dim_sq = k2.dim();

  bool unknown = false;
  for (const Complex& lambda : r.eigenvalues) {
    if (std::abs(lambda - critical) <= radius) {
      ++r.critical_count;
      continue;
    }
    // Signed distance to the boundary: negative inside the stability region.
    const double d = mode == Mode::DT ? std::abs(lambda) - 1.0 : lambda.real();
    if (d < -kBoundaryBand) continue;
    if (d > kBoundaryBand || std::abs(d) <= kOnBoundary * scale) {
      r.offending.push_back(lambda);
      if (r.reason.empty()) r.reason = d > kBoundaryBand ? "unstable eigenvalue" : "eigenvalue on the stability boundary";
    } else {
      unknown = true;
    }
  }
  if (r.kernel_dim_sq > r.kernel_dim) {
    // The squared shift can lose rank just from a near-critical eigenvalue (sigma below the
    // square root of the cut). A real Jordan chain maps ker(S^2) off ker(S) by a visible amount.
    Matrix extra = k2.basis() - k1.basis() * (k1.basis().transpose() * k2.basis());
    const double chain = norm2(shift * extra) / std::max(norm2(extra), 1e-300);
    const double cut = std::sqrt(tol.rank_rel * static_cast<double>(a.rows())) * scale;
    if (chain > cut) {
      r.offending.push_back(critical);
      r.reason = mode == Mode::DT ? "eigenvalue 1 is not semi-simple" : "eigenvalue 0 is not semi-simple";
    } else {
      unknown = true;
      if (r.reason.empty()) r.reason = "critical eigenvalue too close to tell semi-simplicity";
    }
  }
  if (!r.offending.empty()) {
    v.status = Status::Disproven;
  } else if (unknown) {
    v.status = Status::Unknown;
    if (r.reason.empty()) r.reason = "eigenvalue inside the boundary tolerance band";
  } else if (r.critical_count != r.kernel_dim) {
    v.status = Status::Unknown;
    r.reason = "eigenvalue cluster at the critical point is ambiguous";
  } else {
    v.status = Status::Proven;
  }
  return v;
}

inline LtiVerdict lti_convergent_dt(const Matrix& a, const Tolerances& tol = {}) {
  return lti_convergent(a, Mode::DT, tol);
}
inline LtiVerdict lti_convergent_ct(const Matrix& a, const Tolerances& tol = {}) {
  return lti_convergent(a, Mode::CT, tol);
}

inline std::string describe(const SpectralReport& r) {
  std::string s = r.reason.empty() ? "convergent spectrum" : r.reason;
  s += " (eigenvalues:";
  for (const auto& l : r.eigenvalues) {
    s += " " + std::to_string(l.real());
    if (l.imag() != 0.0) s += (l.imag() > 0 ? "+" : "") + std::to_string(l.imag()) + "i";
  }
  return s + ")";
}

struct Decomposition {
  Matrix T;     // orthonormal: [complement basis, kernel basis]
  Matrix A_as;  // (n-m) x (n-m)
  Matrix A_r;   // m x (n-m)
  Index m = 0;
  double residual = 0.0;
};

// Blocks of T^T A T for a given orthonormal split; the residual measures the deviation
// from the shape [[A_as, 0], [A_r, I or 0]].
inline Decomposition decompose_with(const Matrix& a, Mode mode, const Subspace& kernel) {
  const Index n = a.rows();
  const Index m = kernel.dim();
  const Matrix w = orthogonal_complement(kernel).basis();
  Decomposition d;
  d.m = m;
  d.T.resize(n, n);
  d.T << w, kernel.basis();
  const Matrix b = d.T.transpose() * a * d.T;
  d.A_as = b.topLeftCorner(n - m, n - m);
  d.A_r = b.bottomLeftCorner(m, n - m);
  Matrix shape = Matrix::Zero(n, n);
  shape.topLeftCorner(n - m, n - m) = d.A_as;
  shape.bottomLeftCorner(m, n - m) = d.A_r;
  if (mode == Mode::DT) shape.bottomRightCorner(m, m).setIdentity();
  d.residual = (b - shape).cwiseAbs().maxCoeff();
  if (n == 0) d.residual = 0.0;
  return d;
}

inline Decomposition lti_decompose(const Matrix& a, Mode mode, const Tolerances& tol = {}) {
  const LtiVerdict v = lti_convergent(a, mode, tol);
  if (v.status != Status::Proven) {
    throw PreconditionError("decomposition needs a convergent matrix: " + describe(v.report));
  }
  Decomposition d = decompose_with(a, mode, generator_kernel(a, mode, tol));
  if (d.residual > tol.residual_tol * std::max(1.0, induced_norm_1(a))) {
    throw NumericalError("decomposition residual " + std::to_string(d.residual) + " exceeds tolerance");
  }
  return d;
}

inline Decomposition lti_decompose_dt(const Matrix& a, const Tolerances& tol = {}) {
  return lti_decompose(a, Mode::DT, tol);
}
inline Decomposition lti_decompose_ct(const Matrix& a, const Tolerances& tol = {}) {
  return lti_decompose(a, Mode::CT, tol);
}

inline LmiAttempt lti_lmi_dt_e(const Matrix& a, const Tolerances& tol = {}, const SolverOptions& opt = {},
                               unsigned threads = 1) {
  require_square(a, "LTI matrix");
  const std::vector<Matrix> mats{a};
  return scan_grid(kEtaGrid, [&](double eta) { return weak_lmi_problem(mats, Mode::DT, eta, tol); }, tol, opt,
                   threads);
}

inline LmiAttempt lti_lmi_ct_f(const Matrix& a, const Tolerances& tol = {}, const SolverOptions& opt = {},
                               unsigned threads = 1) {
  require_square(a, "LTI matrix");
  const std::vector<Matrix> mats{a};
  return scan_grid(kEpsilonGrid, [&](double eps) { return weak_lmi_problem(mats, Mode::CT, eps, tol); }, tol,
                   opt, threads);
}

inline LmiAttempt lti_lmi_rank_reduced(const Matrix& a, Mode mode, const Tolerances& tol = {},
                                       const SolverOptions& opt = {}) {
  require_square(a, "LTI matrix");
  const std::vector<Matrix> mats{a};
  return solve_once(strong_lmi_problem(mats, mode, generator_kernel(a, mode, tol), tol), tol, opt);
}

inline LmiAttempt lti_lmi_dt_f(const Matrix& a, const Tolerances& tol = {}, const SolverOptions& opt = {}) {
  return lti_lmi_rank_reduced(a, Mode::DT, tol, opt);
}
inline LmiAttempt lti_lmi_ct_g(const Matrix& a, const Tolerances& tol = {}, const SolverOptions& opt = {}) {
  return lti_lmi_rank_reduced(a, Mode::CT, tol, opt);
}

inline Vector lti_limit(const Matrix& a, const Vector& x0, Mode mode, const Tolerances& tol = {}) {
  if (x0.size() != a.rows()) throw InputError("lti_limit: x0 has the wrong dimension");
  require_finite(x0, "x0");
  const Decomposition d = lti_decompose(a, mode, tol);
  const Index n = a.rows();
  const Index r = n - d.m;
  const Vector z = d.T.transpose() * x0;
  Vector zbar = Vector::Zero(n);
  if (d.m == 0) return zbar;
  Vector z2 = z.tail(d.m);
  if (r > 0) {
    const Vector z1 = z.head(r);
    if (mode == Mode::DT) {
      z2 += d.A_r * (Matrix::Identity(r, r) - d.A_as).partialPivLu().solve(z1);
    } else {
      z2 -= d.A_r * d.A_as.partialPivLu().solve(z1);
    }
  }
  zbar.tail(d.m) = z2;
  return d.T * zbar;
}

}  // namespace linconv

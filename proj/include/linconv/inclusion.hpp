#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "family.hpp"
#include "feasibility.hpp"
#include "linalg.hpp"
#include "lmi.hpp"
#include "lti.hpp"
#include "sim.hpp"
#include "verdict.hpp"

namespace linconv {

inline std::vector<Subspace> generator_kernels(const MatrixFamily& f, const Tolerances& tol = {}) {
  std::vector<Subspace> ks;
  for (const auto& a : f.matrices()) ks.push_back(generator_kernel(a, f.mode(), tol));
  return ks;
}

// Intersection of ker(A_i - I) (DT) or ker(A_i) (CT).
inline Subspace common_fixed_kernel(const MatrixFamily& f, const Tolerances& tol = {}) {
  const auto ks = generator_kernels(f, tol);
  return subspace_intersection(ks, tol);
}

struct KspResult {
  bool holds = false;
  Subspace common;
  std::vector<Subspace> kernels;
  std::vector<Index> kernel_dims;
  std::optional<std::size_t> violating_vertex;
  Vector direction;  // unit vector in that vertex kernel, orthogonal to the common kernel
};

inline KspResult ksp_check(const MatrixFamily& f, const Tolerances& tol = {}) {
  KspResult r;
  r.kernels = generator_kernels(f, tol);
  r.common = subspace_intersection(r.kernels, tol);
  r.holds = true;
  for (std::size_t i = 0; i < r.kernels.size(); ++i) {
    r.kernel_dims.push_back(r.kernels[i].dim());
    if (r.kernels[i].dim() != r.common.dim() && r.holds) {
      r.holds = false;
      r.violating_vertex = i;
      // Largest component of the vertex kernel outside the common kernel.
      const Matrix k = r.kernels[i].basis();
      const Matrix out = k - r.common.projector() * k;
      Eigen::JacobiSVD<Matrix> svd(out, Eigen::ComputeThinU);
      Vector d = svd.matrixU().col(0);
      d -= r.common.projector() * d;
      d /= d.norm();
      Matrix dm = d;
      normalize_signs(dm);
      r.direction = dm.col(0);
    }
  }
  return r;
}

struct FamilyDecomposition {
  Matrix T;  // [complement of the common kernel, common kernel], orthonormal
  std::vector<Matrix> A_as;
  std::vector<Matrix> A_r;
  Index m = 0;
  double residual = 0.0;
};

inline FamilyDecomposition decompose_family_with(const MatrixFamily& f, const Subspace& common) {
  FamilyDecomposition d;
  d.m = common.dim();
  for (const auto& a : f.matrices()) {
    Decomposition one = decompose_with(a, f.mode(), common);
    if (d.T.size() == 0) d.T = one.T;
    d.A_as.push_back(std::move(one.A_as));
    d.A_r.push_back(std::move(one.A_r));
    d.residual = std::max(d.residual, one.residual);
  }
  return d;
}

inline FamilyDecomposition strong_decompose(const MatrixFamily& f, const Tolerances& tol = {}) {
  const KspResult k = ksp_check(f, tol);
  if (!k.holds) {
    throw PreconditionError("kernel sharing fails at vertex " + std::to_string(*k.violating_vertex) +
                            ": the vertices do not have exactly the same kernel, so no common block "
                            "decomposition exists and strong convergence is impossible");
  }
  FamilyDecomposition d = decompose_family_with(f, k.common);
  if (d.residual > tol.residual_tol * std::max(1.0, f.max_norm_1())) {
    throw NumericalError("family decomposition residual " + std::to_string(d.residual) + " exceeds tolerance");
  }
  return d;
}

inline LmiAttempt cqlf_stability(std::span<const Matrix> blocks, Mode mode, const Tolerances& tol = {},
                                 const SolverOptions& opt = {}) {
  if (blocks.empty()) throw InputError("cqlf_stability needs at least one block");
  for (const auto& b : blocks) {
    require_square(b, "block");
    if (b.rows() != blocks.front().rows()) throw InputError("cqlf_stability blocks differ in size");
  }
  return solve_once(cqlf_problem(blocks, mode), tol, opt);
}

inline LmiAttempt strong_lmi(const MatrixFamily& f, const Tolerances& tol = {}, const SolverOptions& opt = {}) {
  const KspResult k = ksp_check(f, tol);
  if (!k.holds) {
    throw PreconditionError("strong LMI not applicable: kernel sharing fails at vertex " +
                            std::to_string(*k.violating_vertex));
  }
  return solve_once(strong_lmi_problem(f.matrices(), f.mode(), k.common, tol), tol, opt);
}

// Full P = W P1 W^T from a solved rank-reduced problem.
inline Matrix expand_rank_reduced(const Matrix& p1, const Subspace& fixed) {
  const Matrix w = orthogonal_complement(fixed).basis();
  return w * p1 * w.transpose();
}

struct WeakCertificate {
  Mode mode = Mode::DT;
  double parameter = 0.0;  // eta (DT) or epsilon (CT)
  Matrix P;
};

inline LmiAttempt weak_lmi_attempt(const MatrixFamily& f, const Tolerances& tol = {}, const SolverOptions& opt = {},
                                   unsigned threads = 1) {
  return scan_grid(
      parameter_grid(f.mode()),
      [&](double param) { return weak_lmi_problem(f.matrices(), f.mode(), param, tol); }, tol, opt, threads);
}

inline std::optional<WeakCertificate> weak_lmi(const MatrixFamily& f, const Tolerances& tol = {},
                                               const SolverOptions& opt = {}, unsigned threads = 1) {
  LmiAttempt a = weak_lmi_attempt(f, tol, opt, threads);
  if (a.status != FeasibilityStatus::Feasible) return std::nullopt;
  return WeakCertificate{f.mode(), *a.parameter, a.result.values.front()};
}

struct PolyhedralReport {
  bool pass = false;
  Index m = 0;
  std::vector<Matrix> P;
  std::vector<double> fixed_residual;  // |A_i X2 - X2| (DT) or |A_i X2| (CT) on the trailing m columns
  std::vector<double> solve_residual;  // |A_i X - X P_i|
  std::vector<double> contraction;     // |P_i^as|_1 (DT) or mu_1(P_i^as) (CT)
  std::string reason;
};

// The trailing m = dim(common kernel) columns of X play the role of the identity (DT) or zero (CT)
// block; the remaining columns of P_i are the minimum-norm solution of X P = A_i X1.
inline PolyhedralReport verify_polyhedral_strong(const MatrixFamily& f, const Matrix& x, const Tolerances& tol = {}) {
  require_finite(x, "candidate X");
  const Index n = f.dim();
  if (x.rows() != n) throw InputError("candidate X must have one row per state");
  if (rank_and_kernel(x.transpose(), tol).rank != n) throw InputError("candidate X is not full row rank");
  PolyhedralReport rep;
  const Index r = x.cols();
  rep.m = common_fixed_kernel(f, tol).dim();
  const Index m = rep.m;
  if (m > r) {
    rep.reason = "X has fewer columns than the common kernel dimension";
    return rep;
  }
  const Index k = r - m;
  const Matrix x1 = x.leftCols(k);
  const Matrix x2 = x.rightCols(m);
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(x);
  const double scale = std::max(1.0, f.max_norm_1()) * std::max(1.0, x.cwiseAbs().maxCoeff());
  rep.pass = true;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Matrix& a = f[i];
    Matrix p = Matrix::Zero(r, r);
    if (f.mode() == Mode::DT) p.bottomRightCorner(m, m).setIdentity();
    p.leftCols(k) = cod.solve(a * x1);
    const double fixed = m ? (f.mode() == Mode::DT ? (a * x2 - x2).norm() : (a * x2).norm()) : 0.0;
    const double solve = (a * x - x * p).norm();
    const Matrix pas = p.topLeftCorner(k, k);
    const double c = f.mode() == Mode::DT ? induced_norm_1(pas) : lozinski_measure_1(pas);
    rep.P.push_back(p);
    rep.fixed_residual.push_back(fixed);
    rep.solve_residual.push_back(solve);
    rep.contraction.push_back(c);
    const bool ok_fixed = fixed <= tol.residual_tol * scale;
    const bool ok_solve = solve <= tol.residual_tol * scale;
    const bool ok_c = k == 0 || (f.mode() == Mode::DT ? c < 1.0 : c < 0.0);
    if (!(ok_fixed && ok_solve && ok_c) && rep.pass) {
      rep.pass = false;
      rep.reason = "vertex " + std::to_string(i) + ": " +
                   (!ok_fixed ? "trailing columns are not fixed" : !ok_solve ? "A_i X = X P_i has no solution"
                                                                            : "P_i^as is not contractive");
    }
  }
  return rep;
}

struct StrongCertificate {
  std::string method;  // "decomposition+cqlf", "strong-lmi" or "weak-lmi+kernel-sharing"
  Subspace common_kernel;
  FamilyDecomposition decomposition;
  std::optional<Matrix> cqlf_P;  // on the A_as coordinates
  std::optional<Matrix> lmi_P;   // full n x n, rank n - m
  std::optional<Matrix> lmi_Q;
};

struct RateEstimate {
  Mode mode = Mode::CT;
  double beta = 0.0;
  double rho = 0.0;  // DT contraction factor, exp(-beta)
  double c0 = 1.0;
  double c1 = 0.0;
  Matrix P;

  // Bound on |x2(t) - x2(inf)| per unit |x1(0)|.
  double bound(double t) const {
    if (c1 == 0.0) return 0.0;
    if (mode == Mode::CT) return c0 * c1 / beta * std::exp(-beta * t);
    return c0 * c1 * std::pow(rho, t) / (1.0 - rho);
  }
};

namespace detail {

inline Matrix inverse_sqrt_spd(const Matrix& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(p));
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0) {
    throw PreconditionError("rate estimate needs a positive definite P");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace detail

// Closed-form rate for a quadratic function on the A_as coordinates:
//   CT  beta = min_i lambda_min(-P^{-1/2}(A^T P + P A)P^{-1/2}) / 2
//   DT  rho^2 = max_i lambda_max(P^{-1/2} A^T P A P^{-1/2}), beta = -ln rho
inline RateEstimate rate_from_quadratic(const MatrixFamily& f, const FamilyDecomposition& d, const Matrix& p) {
  RateEstimate r;
  r.mode = f.mode();
  r.P = p;
  const Index k = f.dim() - d.m;
  for (const auto& ar : d.A_r) r.c1 = std::max(r.c1, norm2(ar));
  if (k == 0) {
    r.beta = std::numeric_limits<double>::infinity();
    r.rho = 0.0;
    r.c0 = 1.0;
    r.c1 = 0.0;
    return r;
  }
  const Matrix s = detail::inverse_sqrt_spd(p);
  const Vector pe = sym_eigenvalues(p);
  r.c0 = std::sqrt(pe.maxCoeff() / pe.minCoeff());
  if (f.mode() == Mode::CT) {
    r.beta = std::numeric_limits<double>::infinity();
    for (const auto& a : d.A_as) {
      r.beta = std::min(r.beta, 0.5 * min_eigenvalue_sym(-(s * (a.transpose() * p + p * a) * s)));
    }
    r.rho = std::exp(-r.beta);
  } else {
    double rho2 = 0.0;
    for (const auto& a : d.A_as) rho2 = std::max(rho2, max_eigenvalue_sym(s * a.transpose() * p * a * s));
    r.rho = std::sqrt(rho2);
    r.beta = -std::log(r.rho);
  }
  if (!(r.beta > 0.0)) throw PreconditionError("P does not certify exponential stability of the A_as blocks");
  return r;
}

inline RateEstimate convergence_rate(const MatrixFamily& f, const StrongCertificate& cert) {
  const Index k = f.dim() - cert.decomposition.m;
  if (cert.cqlf_P) return rate_from_quadratic(f, cert.decomposition, *cert.cqlf_P);
  if (cert.lmi_P && k > 0) {
    // The compressed rank-reduced P is a strict quadratic function for the A_as blocks.
    const Matrix w = cert.decomposition.T.leftCols(k);
    return rate_from_quadratic(f, cert.decomposition, w.transpose() * *cert.lmi_P * w);
  }
  if (k == 0) return rate_from_quadratic(f, cert.decomposition, Matrix());
  throw PreconditionError("convergence rate needs a quadratic certificate for the A_as blocks");
}

// Evidence records carry every number needed for an independent re-check.
struct VertexSpectrumEvidence {
  std::size_t vertex = 0;
  SpectralReport report;
};

struct KernelMismatchEvidence {
  std::size_t vertex = 0;
  Vector direction;
  Index common_dim = 0;
};

struct QuadraticRecord {
  Matrix P;
  Vector P_spectrum;
  std::vector<Vector> constraint_spectra;
};

struct DecompositionEvidence {
  FamilyDecomposition decomposition;
  std::optional<QuadraticRecord> cqlf;  // absent when m = n
};

struct StrongLmiEvidence {
  Index m = 0;
  Matrix P;
  Matrix Q;
  Vector P_spectrum;
  Vector Q_spectrum;
  std::vector<Vector> constraint_spectra;
};

struct WeakLmiEvidence {
  double parameter = 0.0;
  QuadraticRecord record;
};

struct WitnessEvidence {
  PeriodicWitness witness;
};

struct ImpliedEvidence {
  std::string reason;
};

struct PolyhedralEvidence {
  Matrix X;
  std::vector<Matrix> P;
  Index m = 0;
};

using Evidence = std::variant<std::monostate, VertexSpectrumEvidence, KernelMismatchEvidence, DecompositionEvidence,
                              StrongLmiEvidence, WeakLmiEvidence, WitnessEvidence, ImpliedEvidence,
                              PolyhedralEvidence>;

struct Verdict {
  Status status = Status::Unknown;
  std::string method;
  Evidence evidence;
};

struct AnalyzeOptions {
  Tolerances tol;
  SolverOptions solver;
  WitnessConfig witness;
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

struct AnalysisReport {
  Mode mode = Mode::DT;
  std::vector<LtiVerdict> vertices;
  KspResult ksp;
  Verdict strong;
  Verdict weak;
  std::optional<StrongCertificate> strong_certificate;
  std::optional<WeakCertificate> weak_certificate;
  std::optional<PeriodicWitness> witness;
  std::optional<RateEstimate> rate;
  std::vector<std::string> diagnostics;
  AnalyzeOptions options;
};

inline Vector spectrum_of_sym(const Matrix& s) { return sym_eigenvalues(s); }

inline QuadraticRecord record_quadratic(const LmiProblem& prob, const std::vector<Matrix>& values) {
  QuadraticRecord q;
  q.P = values.front();
  q.P_spectrum = spectrum_of_sym(q.P);
  for (Index j = 0; j < static_cast<Index>(prob.constraints().size()); ++j) {
    q.constraint_spectra.push_back(spectrum_of_sym(prob.evaluate(j, values)));
  }
  return q;
}

inline StrongLmiEvidence record_strong_lmi(const MatrixFamily& f, const Matrix& p, const Matrix& q, Index m) {
  StrongLmiEvidence e;
  e.m = m;
  e.P = p;
  e.Q = q;
  e.P_spectrum = spectrum_of_sym(p);
  e.Q_spectrum = spectrum_of_sym(q);
  const Matrix id = Matrix::Identity(f.dim(), f.dim());
  for (const auto& a : f.matrices()) {
    const Matrix c = f.mode() == Mode::DT ? Matrix(a.transpose() * p * a - p + (a - id).transpose() * q * (a - id))
                                          : Matrix(a.transpose() * p + p * a + a.transpose() * q * a);
    e.constraint_spectra.push_back(spectrum_of_sym(c));
  }
  return e;
}

inline AnalysisReport analyze(const MatrixFamily& f, const AnalyzeOptions& opt = {}) {
  opt.tol.validate();
  const Tolerances& tol = opt.tol;
  AnalysisReport rep;
  rep.mode = f.mode();
  rep.options = opt;

  // (1) Every vertex must be convergent on its own (constant signals).
  for (std::size_t i = 0; i < f.size(); ++i) {
    rep.vertices.push_back(lti_convergent(f[i], f.mode(), tol));
    const auto& v = rep.vertices.back();
    if (v.status == Status::Disproven && rep.weak.status != Status::Disproven) {
      rep.weak = {Status::Disproven, "vertex-spectrum", VertexSpectrumEvidence{i, v.report}};
      rep.strong = rep.weak;
    } else if (v.status == Status::Unknown) {
      rep.diagnostics.push_back("vertex " + std::to_string(i) + ": " + v.report.reason);
    }
  }

  // (2) Kernel sharing is necessary for strong convergence.
  rep.ksp = ksp_check(f, tol);
  if (!rep.ksp.holds && rep.strong.status != Status::Disproven) {
    rep.strong = {Status::Disproven, "kernel-sharing",
                  KernelMismatchEvidence{*rep.ksp.violating_vertex, rep.ksp.direction, rep.ksp.common.dim()}};
  }

  // (3) Strong path: common decomposition with a quadratic function on the A_as blocks, then the rank-reduced LMI.
  if (rep.ksp.holds && rep.strong.status == Status::Unknown) {
    FamilyDecomposition d = decompose_family_with(f, rep.ksp.common);
    const Index k = f.dim() - d.m;
    if (d.residual > tol.residual_tol * std::max(1.0, f.max_norm_1())) {
      rep.diagnostics.push_back("decomposition residual " + std::to_string(d.residual) + " exceeds tolerance");
    } else if (k == 0) {
      StrongCertificate c{"decomposition+cqlf", rep.ksp.common, d, std::nullopt, std::nullopt, std::nullopt};
      rep.strong = {Status::Proven, c.method, DecompositionEvidence{d, std::nullopt}};
      rep.strong_certificate = std::move(c);
    } else {
      LmiAttempt cq = cqlf_stability(d.A_as, f.mode(), tol, opt.solver);
      if (cq.status == FeasibilityStatus::Feasible) {
        StrongCertificate c{"decomposition+cqlf", rep.ksp.common, d, cq.result.values.front(), std::nullopt,
                            std::nullopt};
        rep.strong = {Status::Proven, c.method,
                      DecompositionEvidence{d, record_quadratic(cq.problem, cq.result.values)}};
        rep.strong_certificate = std::move(c);
      } else {
        rep.diagnostics.push_back(std::string("common quadratic function on A_as blocks: ") + to_string(cq.status));
        LmiAttempt sl = solve_once(strong_lmi_problem(f.matrices(), f.mode(), rep.ksp.common, tol), tol, opt.solver);
        if (sl.status == FeasibilityStatus::Feasible) {
          const Matrix p = expand_rank_reduced(sl.result.values[0], rep.ksp.common);
          const Matrix& q = sl.result.values[1];
          StrongCertificate c{"strong-lmi", rep.ksp.common, d, std::nullopt, p, q};
          rep.strong = {Status::Proven, c.method, record_strong_lmi(f, p, q, d.m)};
          rep.strong_certificate = std::move(c);
        } else {
          rep.diagnostics.push_back(std::string("rank-reduced strong LMI: ") + to_string(sl.status));
        }
      }
    }
  }
  if (rep.strong.status == Status::Proven) {
    rep.weak = {Status::Proven, "implied-by-strong", ImpliedEvidence{"strong convergence implies weak convergence"}};
  }

  // (4) Weak path.
  if (rep.weak.status == Status::Unknown) {
    LmiAttempt wk = weak_lmi_attempt(f, tol, opt.solver, opt.threads);
    if (wk.status == FeasibilityStatus::Feasible) {
      rep.weak_certificate = WeakCertificate{f.mode(), *wk.parameter, wk.result.values.front()};
      WeakLmiEvidence e{*wk.parameter, record_quadratic(wk.problem, wk.result.values)};
      rep.weak = {Status::Proven, "weak-lmi", e};
      if (rep.ksp.holds && rep.strong.status == Status::Unknown) {
        // Weak convergence plus kernel sharing is strong convergence.
        rep.strong = {Status::Proven, "weak-lmi+kernel-sharing", e};
      }
    } else {
      rep.diagnostics.push_back(std::string("weak LMI grid: ") + to_string(wk.status));
    }
  }

  // (5) Periodic-orbit search.
  if (rep.weak.status == Status::Unknown) {
    rep.witness = find_nonconvergence_witness(f, opt.witness, tol);
    if (rep.witness) {
      rep.weak = {Status::Disproven, "periodic-orbit", WitnessEvidence{*rep.witness}};
      if (rep.strong.status != Status::Disproven) rep.strong = rep.weak;
    } else {
      rep.diagnostics.push_back("no periodic non-convergence witness found");
    }
  }

  if (rep.strong_certificate) {
    try {
      rep.rate = convergence_rate(f, *rep.strong_certificate);
    } catch (const PreconditionError& e) {
      rep.diagnostics.push_back(std::string("rate: ") + e.what());
    }
  }
  return rep;
}

}  // namespace linconv

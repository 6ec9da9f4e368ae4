#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "feasibility.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "verdict.hpp"

namespace linconv {

// Scan grids for the auxiliary-system parameters, ordered from most to least demanding.
inline const std::array<double, 4> kEtaGrid = {1.0 - 0.5011872336272722, 0.9, 0.99, 0.999};
inline const std::array<double, 4> kEpsilonGrid = {1e-1, 1e-2, 1e-3, 1e-4};

inline std::span<const double> parameter_grid(Mode mode) {
  return mode == Mode::DT ? std::span<const double>(kEtaGrid) : std::span<const double>(kEpsilonGrid);
}

inline Matrix critical_shift(const Matrix& a, Mode mode) {
  return mode == Mode::DT ? Matrix(a - Matrix::Identity(a.rows(), a.cols())) : a;
}

// ker(A - I) in DT, ker(A) in CT.
inline Subspace generator_kernel(const Matrix& a, Mode mode, const Tolerances& tol = {}) {
  return rank_and_kernel(critical_shift(a, mode), tol, 1.0 + induced_norm_1(a)).kernel;
}

// Vertex inequalities with P > 0:
//   DT  eta (A^T P A - P) + (1 - eta)(A - I)^T P (A - I) <= 0
//   CT  A^T P + P A + eps A^T P A <= 0
inline LmiProblem weak_lmi_problem(std::span<const Matrix> mats, Mode mode, double param,
                                   const Tolerances& tol = {}) {
  LmiProblem prob;
  const Index n = mats.front().rows();
  const Matrix id = Matrix::Identity(n, n);
  const Index p = prob.add_variable("P", n, Definiteness::PositiveDefinite);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const Matrix& a = mats[i];
    const Index c = prob.add_constraint("vertex " + std::to_string(i), n);
    if (mode == Mode::DT) {
      prob.add_term(c, p, a, a, param);
      prob.add_term(c, p, id, id, -param);
      prob.add_term(c, p, a - id, a - id, 1.0 - param);
    } else {
      prob.add_term(c, p, a, id, 2.0);
      prob.add_term(c, p, a, a, param);
    }
    const Subspace k = generator_kernel(a, mode, tol);
    if (k.dim()) prob.set_forced_null(c, k.basis());
  }
  return prob;
}

// Rank-reduced pair with P = W P1 W^T, W spanning the complement of `fixed`:
//   DT  A^T P A - P + (A - I)^T Q (A - I) <= 0
//   CT  A^T P + P A + A^T Q A <= 0
inline LmiProblem strong_lmi_problem(std::span<const Matrix> mats, Mode mode, const Subspace& fixed,
                                     const Tolerances& tol = {}) {
  LmiProblem prob;
  const Index n = mats.front().rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix w = orthogonal_complement(fixed).basis();
  const Matrix wt = w.transpose();
  const Index p1 = prob.add_variable("P1", w.cols(), Definiteness::PositiveDefinite);
  const Index q = prob.add_variable("Q", n, Definiteness::PositiveDefinite);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const Matrix& a = mats[i];
    const Index c = prob.add_constraint("vertex " + std::to_string(i), n);
    if (mode == Mode::DT) {
      prob.add_term(c, p1, wt * a, wt * a, 1.0);
      prob.add_term(c, p1, wt, wt, -1.0);
      prob.add_term(c, q, a - id, a - id, 1.0);
    } else {
      prob.add_term(c, p1, wt * a, wt, 2.0);
      prob.add_term(c, q, a, a, 1.0);
    }
    const Subspace k = generator_kernel(a, mode, tol);
    if (k.dim()) prob.set_forced_null(c, k.basis());
  }
  return prob;
}

// Common quadratic Lyapunov function: A^T P A - P < 0 (DT) or A^T P + P A < 0 (CT), P > 0.
inline LmiProblem cqlf_problem(std::span<const Matrix> blocks, Mode mode) {
  LmiProblem prob;
  const Index r = blocks.front().rows();
  const Matrix id = Matrix::Identity(r, r);
  const Index p = prob.add_variable("P", r, Definiteness::PositiveDefinite);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Index c = prob.add_constraint("block " + std::to_string(i), r, true);
    if (mode == Mode::DT) {
      prob.add_term(c, p, blocks[i], blocks[i], 1.0);
      prob.add_term(c, p, id, id, -1.0);
    } else {
      prob.add_term(c, p, blocks[i], id, 2.0);
    }
  }
  return prob;
}

struct LmiAttempt {
  FeasibilityStatus status = FeasibilityStatus::Infeasible;
  std::optional<double> parameter;
  LmiProblem problem;
  FeasibilityResult result;
  std::vector<std::pair<double, FeasibilityStatus>> tried;
};

inline LmiAttempt solve_once(LmiProblem problem, const Tolerances& tol, const SolverOptions& opt) {
  LmiAttempt a;
  a.result = sdp_feasible(problem, tol, opt);
  a.status = a.result.status;
  a.problem = std::move(problem);
  return a;
}

// Solves one problem per grid value and keeps the first feasible one in grid order.
// Any MaxIterations outcome makes the overall status MaxIterations rather than Infeasible.
template <typename Build>
LmiAttempt scan_grid(std::span<const double> grid, Build&& build, const Tolerances& tol,
                     const SolverOptions& opt, unsigned threads = 1) {
  std::vector<std::optional<LmiAttempt>> slots(grid.size());
  if (threads <= 1) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      slots[g] = solve_once(build(grid[g]), tol, opt);
      if (slots[g]->status == FeasibilityStatus::Feasible) break;
    }
  } else {
    parallel_for(grid.size(), threads, [&](std::size_t g) { slots[g] = solve_once(build(grid[g]), tol, opt); });
  }
  LmiAttempt out;
  bool any_max = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!slots[g]) continue;
    out.tried.emplace_back(grid[g], slots[g]->status);
    if (slots[g]->status == FeasibilityStatus::MaxIterations) any_max = true;
    if (slots[g]->status == FeasibilityStatus::Feasible) {
      LmiAttempt found = std::move(*slots[g]);
      found.parameter = grid[g];
      found.tried = std::move(out.tried);
      return found;
    }
  }
  out.status = any_max ? FeasibilityStatus::MaxIterations : FeasibilityStatus::Infeasible;
  return out;
}

}  // namespace linconv

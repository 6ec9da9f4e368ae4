#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"

namespace linconv {

enum class Definiteness { PositiveDefinite, PositiveSemidefinite };

struct LmiVariable {
  std::string name;
  Index size = 0;
  Definiteness kind = Definiteness::PositiveDefinite;
};

// Contributes scale * sym(left^T X right), with left and right of shape (variable size) x (constraint size).
struct LmiTerm {
  Index variable = 0;
  Matrix left;
  Matrix right;
  double scale = 1.0;
};

struct LmiConstraint {
  std::string name;
  Index size = 0;
  bool strict = false;
  std::vector<LmiTerm> terms;
  Matrix constant;     // empty means zero
  Matrix forced_null;  // columns span a subspace on which the constraint must vanish identically
};

class LmiProblem {
 public:
  Index add_variable(std::string name, Index size, Definiteness kind) {
    if (size < 0) throw InputError("LMI variable size must be nonnegative");
    variables_.push_back({std::move(name), size, kind});
    return static_cast<Index>(variables_.size()) - 1;
  }

  Index add_constraint(std::string name, Index size, bool strict = false) {
    if (size < 0) throw InputError("LMI constraint size must be nonnegative");
    LmiConstraint c;
    c.name = std::move(name);
    c.size = size;
    c.strict = strict;
    constraints_.push_back(std::move(c));
    return static_cast<Index>(constraints_.size()) - 1;
  }

  void add_term(Index constraint, Index variable, Matrix left, Matrix right, double scale = 1.0) {
    auto& c = constraint_at(constraint);
    const auto& v = variable_at(variable);
    if (left.rows() != v.size || right.rows() != v.size || left.cols() != c.size || right.cols() != c.size) {
      throw InputError("LMI term dimensions do not match constraint '" + c.name + "'");
    }
    require_finite(left, "LMI term");
    require_finite(right, "LMI term");
    if (v.size == 0) return;
    c.terms.push_back({variable, std::move(left), std::move(right), scale});
  }

  void set_constant(Index constraint, Matrix value) {
    auto& c = constraint_at(constraint);
    if (value.rows() != c.size || value.cols() != c.size) throw InputError("LMI constant has wrong size");
    require_finite(value, "LMI constant");
    c.constant = sym(value);
  }

  void set_forced_null(Index constraint, Matrix basis) {
    auto& c = constraint_at(constraint);
    if (basis.rows() != c.size) throw InputError("forced null basis has wrong row count");
    c.forced_null = std::move(basis);
  }

  const std::vector<LmiVariable>& variables() const { return variables_; }
  const std::vector<LmiConstraint>& constraints() const { return constraints_; }

  bool homogeneous() const {
    for (const auto& c : constraints_) {
      if (c.constant.size() != 0 && c.constant.cwiseAbs().maxCoeff() > 0) return false;
    }
    return true;
  }

  Index scalar_unknowns() const {
    Index total = 0;
    for (const auto& v : variables_) total += v.size * (v.size + 1) / 2;
    return total;
  }

  void check_values(std::span<const Matrix> values) const {
    if (values.size() != variables_.size()) throw InputError("LMI value count does not match variable count");
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k].rows() != variables_[k].size || values[k].cols() != variables_[k].size) {
        throw InputError("LMI value for '" + variables_[k].name + "' has wrong size");
      }
      require_finite(values[k], "LMI value");
    }
  }

  Matrix evaluate(Index constraint, std::span<const Matrix> values) const {
    const auto& c = constraint_at(constraint);
    Matrix f = c.constant.size() ? c.constant : Matrix::Zero(c.size, c.size);
    for (const auto& t : c.terms) {
      f += t.scale * sym(t.left.transpose() * values[static_cast<std::size_t>(t.variable)] * t.right);
    }
    return f;
  }

  // Bound on the operator norm of the linear part, used to scale tolerances.
  double data_scale(Index constraint) const {
    const auto& c = constraint_at(constraint);
    double s = 0.0;
    for (const auto& t : c.terms) s += std::abs(t.scale) * norm2(t.left) * norm2(t.right);
    return s;
  }

 private:
  LmiConstraint& constraint_at(Index i) {
    if (i < 0 || i >= static_cast<Index>(constraints_.size())) throw InputError("LMI constraint index out of range");
    return constraints_[static_cast<std::size_t>(i)];
  }
  const LmiConstraint& constraint_at(Index i) const {
    if (i < 0 || i >= static_cast<Index>(constraints_.size())) throw InputError("LMI constraint index out of range");
    return constraints_[static_cast<std::size_t>(i)];
  }
  const LmiVariable& variable_at(Index i) const {
    if (i < 0 || i >= static_cast<Index>(variables_.size())) throw InputError("LMI variable index out of range");
    return variables_[static_cast<std::size_t>(i)];
  }

  std::vector<LmiVariable> variables_;
  std::vector<LmiConstraint> constraints_;
};

struct ResidualReport {
  std::vector<double> constraint_max_eig;
  std::vector<double> constraint_threshold;
  std::vector<double> variable_min_eig;
  std::vector<double> variable_threshold;
  double scale = 1.0;
  bool pass = false;
};

// Pass rules, with s = max(1, max_k ||X_k||_2), c_j the data scale of constraint j and r the
// smallest eigenvalue over the PD variables (s if there are none):
//   strict constraint      lambda_max <= -psd_margin   * max(1, s c_j)
//   non-strict constraint  lambda_max <=  residual_tol * max(1, r c_j)
// Scaling non-strict residuals by r rather than s keeps an ill-conditioned X from hiding a
// violation along its small eigenvectors.
//   PD variable            lambda_min >=  psd_margin   * s
//   PSD variable           lambda_min >= -residual_tol * s
inline ResidualReport verify_lmi(const LmiProblem& problem, std::span<const Matrix> values,
                                 const Tolerances& tol = {}) {
  problem.check_values(values);
  ResidualReport r;
  double s = 1.0;
  for (const auto& x : values) {
    if (x.size() == 0) continue;
    const Vector ev = sym_eigenvalues(x);
    s = std::max(s, ev.cwiseAbs().maxCoeff());
  }
  r.scale = s;
  r.pass = true;
  double floor_scale = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double lmin = min_eigenvalue_sym(values[k]);
    const bool pd = problem.variables()[k].kind == Definiteness::PositiveDefinite;
    if (pd && values[k].size() != 0) floor_scale = std::min(floor_scale, std::max(lmin, 0.0));
    const double thr = pd ? tol.psd_margin * s : -tol.residual_tol * s;
    r.variable_min_eig.push_back(lmin);
    r.variable_threshold.push_back(thr);
    if (values[k].size() != 0 && (!(values[k] - values[k].transpose()).isZero(1e-12 * s) || !(lmin >= thr))) {
      r.pass = false;
    }
  }
  if (!std::isfinite(floor_scale)) floor_scale = s;
  for (Index j = 0; j < static_cast<Index>(problem.constraints().size()); ++j) {
    const auto& c = problem.constraints()[static_cast<std::size_t>(j)];
    const double lmax = max_eigenvalue_sym(problem.evaluate(j, values));
    const double thr = c.strict ? -tol.psd_margin * std::max(1.0, s * problem.data_scale(j))
                                : tol.residual_tol * std::max(1.0, floor_scale * problem.data_scale(j));
    r.constraint_max_eig.push_back(lmax);
    r.constraint_threshold.push_back(thr);
    if (c.size > 0 && !(lmax <= thr)) r.pass = false;
  }
  return r;
}

enum class FeasibilityStatus { Feasible, Infeasible, MaxIterations };

inline const char* to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::Feasible: return "feasible";
    case FeasibilityStatus::Infeasible: return "infeasible-at-tolerance";
    case FeasibilityStatus::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::MaxIterations;
  std::vector<Matrix> values;
  std::vector<double> residuals;
  Index iterations = 0;
  double gap = 0.0;
};

struct SolverOptions {
  Index max_iter = 20000;
  Index check_every = 10;
  Index stall_window = 400;
  double stall_ratio = 0.995;
  double relaxation = 1.0;  // Douglas-Rachford step, in (0, 2)
  Index max_unknowns = 2000;
};

namespace detail {

constexpr double kSqrt2 = 1.4142135623730951;

inline Index svec_dim(Index n) { return n * (n + 1) / 2; }

inline void svec(const Matrix& s, Eigen::Ref<Vector> out) {
  Index k = 0;
  for (Index j = 0; j < s.cols(); ++j) {
    out(k++) = s(j, j);
    for (Index i = j + 1; i < s.rows(); ++i) out(k++) = kSqrt2 * 0.5 * (s(i, j) + s(j, i));
  }
}

inline Matrix smat(const Eigen::Ref<const Vector>& v, Index n) {
  Matrix s(n, n);
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    s(j, j) = v(k++);
    for (Index i = j + 1; i < n; ++i) {
      s(i, j) = s(j, i) = v(k++) / kSqrt2;
    }
  }
  return s;
}

// Projection onto {S : S >= shift I}.
inline Matrix project_shifted_psd(const Matrix& s, double shift) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(s));
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed in cone projection");
  const Vector d = es.eigenvalues().cwiseMax(shift);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

struct Block {
  Index offset = 0;
  Index size = 0;
  double shift = 0.0;
};

}  // namespace detail

// Number of sdp_feasible calls in this process (used to show that verification never solves).
inline std::atomic<std::uint64_t>& sdp_call_count() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}

// Douglas-Rachford splitting between the affine set
//   U_j^T F_j(X) U_j + S_j = 0,  F_j(X) N_j = 0
// (N_j the forced null space, U_j its complement) and the product of shifted cones
// X_k >= m I (PD variables), S_j >= m I (strict constraints), where m = 1 for homogeneous
// problems (any strict solution can be rescaled) and psd_margin otherwise.
inline FeasibilityResult sdp_feasible(const LmiProblem& problem, const Tolerances& tol = {},
                                      const SolverOptions& opt = {}) {
  ++sdp_call_count();
  tol.validate();
  if (!(opt.relaxation > 0.0 && opt.relaxation < 2.0)) throw InputError("solver relaxation must lie in (0, 2)");
  if (problem.scalar_unknowns() > opt.max_unknowns) {
    throw CapabilityError("LMI has " + std::to_string(problem.scalar_unknowns()) +
                          " scalar unknowns, limit is " + std::to_string(opt.max_unknowns));
  }
  const auto& vars = problem.variables();
  const auto& cons = problem.constraints();
  const double margin = problem.homogeneous() ? 1.0 : tol.psd_margin;

  std::vector<detail::Block> blocks;
  Index dim = 0;
  for (const auto& v : vars) {
    blocks.push_back({dim, v.size, v.kind == Definiteness::PositiveDefinite ? margin : 0.0});
    dim += detail::svec_dim(v.size);
  }
  std::vector<Matrix> reduced(cons.size());
  Index rows = 0;
  for (std::size_t j = 0; j < cons.size(); ++j) {
    const auto& c = cons[j];
    Subspace forced = c.forced_null.cols() ? Subspace::span_of(c.forced_null, tol) : Subspace(c.size);
    reduced[j] = orthogonal_complement(forced).basis();
    const Index r = reduced[j].cols();
    blocks.push_back({dim, r, c.strict ? margin : 0.0});
    dim += detail::svec_dim(r);
    rows += detail::svec_dim(r) + c.size * forced.dim();
  }
  std::vector<Matrix> forced_bases(cons.size());
  for (std::size_t j = 0; j < cons.size(); ++j) {
    forced_bases[j] = orthogonal_complement(Subspace::from_orthonormal(reduced[j])).basis();
  }

  // Assemble G z = h column by column from unit svec perturbations.
  Matrix g = Matrix::Zero(rows, dim);
  Vector h = Vector::Zero(rows);
  {
    Index row = 0;
    for (std::size_t j = 0; j < cons.size(); ++j) {
      const auto& c = cons[j];
      const Matrix& u = reduced[j];
      const Matrix& nb = forced_bases[j];
      const Index r = u.cols();
      const Index e1 = detail::svec_dim(r);
      const Index e2 = c.size * nb.cols();
      const Matrix cst = c.constant.size() ? c.constant : Matrix::Zero(c.size, c.size);
      for (std::size_t k = 0; k < vars.size(); ++k) {
        const Index nk = vars[k].size;
        bool used = false;
        for (const auto& t : c.terms) used = used || t.variable == static_cast<Index>(k);
        if (!used) continue;
        for (Index col = 0; col < detail::svec_dim(nk); ++col) {
          Vector unit = Vector::Zero(detail::svec_dim(nk));
          unit(col) = 1.0;
          const Matrix e = detail::smat(unit, nk);
          Matrix f = Matrix::Zero(c.size, c.size);
          for (const auto& t : c.terms) {
            if (t.variable == static_cast<Index>(k)) f += t.scale * sym(t.left.transpose() * e * t.right);
          }
          const Index zc = blocks[k].offset + col;
          if (e1) detail::svec(u.transpose() * f * u, g.col(zc).segment(row, e1));
          if (e2) {
            const Matrix fn = f * nb;
            g.col(zc).segment(row + e1, e2) = Eigen::Map<const Vector>(fn.data(), e2);
          }
        }
      }
      const detail::Block& sb = blocks[vars.size() + j];
      for (Index q = 0; q < e1; ++q) g(row + q, sb.offset + q) = 1.0;
      if (e1) {
        Vector tmp(e1);
        detail::svec(u.transpose() * cst * u, tmp);
        h.segment(row, e1) = -tmp;
      }
      if (e2) {
        const Matrix cn = cst * nb;
        h.segment(row + e1, e2) = -Eigen::Map<const Vector>(cn.data(), e2);
      }
      row += e1 + e2;
    }
  }

  Matrix null_proj = Matrix::Identity(dim, dim);
  Vector offset = Vector::Zero(dim);
  FeasibilityResult result;
  if (rows > 0 && dim > 0) {
    Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double cut = 1e-12 * static_cast<double>(std::max(rows, dim)) * (sv.size() ? sv(0) : 0.0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > cut) ++rank;
    }
    const Matrix ur = svd.matrixU().leftCols(rank);
    const Matrix vr = svd.matrixV().leftCols(rank);
    const Vector uh = ur.transpose() * h;
    if ((h - ur * uh).norm() > 1e-9 * std::max(1.0, h.norm())) {
      // The equality part alone is inconsistent.
      result.status = FeasibilityStatus::Infeasible;
      return result;
    }
    null_proj -= vr * vr.transpose();
    offset = vr * (sv.head(rank).cwiseInverse().asDiagonal() * uh);
  }

  auto project_affine = [&](const Vector& z) -> Vector { return null_proj * z + offset; };
  auto project_cone = [&](const Vector& z) -> Vector {
    Vector out(z.size());
    for (const auto& b : blocks) {
      if (b.size == 0) continue;
      const Index d = detail::svec_dim(b.size);
      const Matrix p = detail::project_shifted_psd(detail::smat(z.segment(b.offset, d), b.size), b.shift);
      detail::svec(p, out.segment(b.offset, d));
    }
    return out;
  };
  auto extract = [&](const Vector& z) {
    std::vector<Matrix> xs;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      xs.push_back(detail::smat(z.segment(blocks[k].offset, detail::svec_dim(vars[k].size)), vars[k].size));
    }
    return xs;
  };

  Vector x = Vector::Zero(dim);
  for (std::size_t k = 0; k < vars.size(); ++k) {
    detail::svec(Matrix::Identity(vars[k].size, vars[k].size) * std::max(margin, 1.0),
                 x.segment(blocks[k].offset, detail::svec_dim(vars[k].size)));
  }
  Vector z = x, y = x;
  double window_gap = std::numeric_limits<double>::infinity();

  auto accept = [&](const Vector& z, Index it) {
    std::vector<Matrix> xs = extract(z);
    const ResidualReport rep = verify_lmi(problem, xs, tol);
    if (!rep.pass) return false;
    result.status = FeasibilityStatus::Feasible;
    result.values = std::move(xs);
    result.residuals = rep.constraint_max_eig;
    result.iterations = it;
    return true;
  };

  if (accept(x, 0)) return result;
  for (Index it = 1; it <= opt.max_iter; ++it) {
    y = project_affine(z);
    x = project_cone(2.0 * y - z);
    z += opt.relaxation * (x - y);
    result.gap = (y - x).norm();
    if (it % opt.check_every == 0) {
      if (accept(y, it) || accept(x, it)) return result;
    }
    if (it % opt.stall_window == 0) {
      const double rel = result.gap / std::max(1.0, x.norm());
      if (rel > 1e-6 && result.gap > opt.stall_ratio * window_gap) {
        result.status = FeasibilityStatus::Infeasible;
        result.values = extract(x);
        result.iterations = it;
        return result;
      }
      window_gap = result.gap;
    }
  }
  result.status = FeasibilityStatus::MaxIterations;
  result.values = extract(x);
  result.iterations = opt.max_iter;
  return result;
}

// Phase-1 simplex for: w >= 0, 1^T w = 1, M w = 0. Bland's rule prevents cycling.
inline std::optional<Vector> lp_simplex_membership(const Matrix& m, const Tolerances& tol = {}) {
  require_finite(m, "LP matrix");
  const Index n = m.rows();
  const Index k = m.cols();
  if (k == 0) throw InputError("lp_simplex_membership needs at least one column");
  const Index rows = n + 1;
  const Index cols = k + rows;  // structural then artificial
  // Tableau: rows x (cols + 1), last column is the right-hand side.
  Matrix t = Matrix::Zero(rows, cols + 1);
  t.topLeftCorner(n, k) = m;
  t.block(n, 0, 1, k).setOnes();
  t(n, cols) = 1.0;
  for (Index i = 0; i < n; ++i) {
    if (t(i, cols) < 0) t.row(i) *= -1.0;
  }
  t.block(0, k, rows, rows).setIdentity();
  std::vector<Index> basis(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = k + i;

  // Reduced costs of the phase-1 objective sum(artificials).
  Vector cost = Vector::Zero(cols + 1);
  for (Index i = 0; i < rows; ++i) cost -= t.row(i).transpose();
  cost.segment(k, rows).setZero();

  const double piv_eps = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  const Index cap = 50 * (rows + cols) + 1000;
  Index it = 0;
  for (;; ++it) {
    if (it > cap) throw NumericalError("phase-1 simplex exceeded its pivot cap");
    Index enter = -1;
    for (Index j = 0; j < cols; ++j) {
      if (cost(j) < -piv_eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < rows; ++i) {
      if (t(i, enter) > piv_eps) {
        const double ratio = t(i, cols) / t(i, enter);
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw NumericalError("phase-1 simplex is unbounded, which cannot happen");
    t.row(leave) /= t(leave, enter);
    for (Index i = 0; i < rows; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    cost -= cost(enter) * t.row(leave).transpose();
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  Vector w = Vector::Zero(k);
  for (Index i = 0; i < rows; ++i) {
    const Index b = basis[static_cast<std::size_t>(i)];
    if (b < k) w(b) = std::max(0.0, t(i, cols));
  }
  const double s = w.sum();
  if (!(s > 0.5)) return std::nullopt;
  w /= s;
  const double bound = tol.residual_tol * std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m * w).norm() > bound) return std::nullopt;
  return w;
}

}  // namespace linconv

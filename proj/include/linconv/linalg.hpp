#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace linconv {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

struct Tolerances {
  double rank_rel = 1e-10;
  double psd_margin = 1e-8;
  double residual_tol = 1e-7;
  double sim_tol = 1e-8;

  void validate() const {
    if (!(rank_rel > 0) || !(psd_margin > 0) || !(residual_tol > 0) || !(sim_tol > 0) ||
        !std::isfinite(rank_rel) || !std::isfinite(psd_margin) ||
        !std::isfinite(residual_tol) || !std::isfinite(sim_tol)) {
      throw InputError("tolerances must be finite and strictly positive");
    }
  }
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + " has non-finite entries");
  }
}

inline void require_square(const Matrix& a, std::string_view what) {
  if (a.rows() != a.cols()) {
    throw InputError(std::string(what) + " must be square, got " + std::to_string(a.rows()) +
                     "x" + std::to_string(a.cols()));
  }
}

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Largest singular value; zero for empty matrices.
// Largest entry in absolute value; 0 for an empty matrix.
inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline double norm2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

inline Vector sym_eigenvalues(const Matrix& s) {
  if (s.size() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(s), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return es.eigenvalues();
}

inline double max_eigenvalue_sym(const Matrix& s) {
  Vector ev = sym_eigenvalues(s);
  return ev.size() ? ev(ev.size() - 1) : -std::numeric_limits<double>::infinity();
}

inline double min_eigenvalue_sym(const Matrix& s) {
  Vector ev = sym_eigenvalues(s);
  return ev.size() ? ev(0) : std::numeric_limits<double>::infinity();
}

// Flip each column so its first clearly nonzero entry is positive.
inline void normalize_signs(Matrix& basis) {
  for (Index j = 0; j < basis.cols(); ++j) {
    const double cut = 1e-8 * basis.col(j).norm();
    for (Index i = 0; i < basis.rows(); ++i) {
      if (std::abs(basis(i, j)) > cut) {
        if (basis(i, j) < 0) basis.col(j) *= -1.0;
        break;
      }
    }
  }
}

class Subspace {
 public:
  explicit Subspace(Index ambient_dim = 0) : basis_(ambient_dim, 0) {}

  static Subspace whole(Index n) { return Subspace(Matrix::Identity(n, n), 0); }

  // Wraps a basis whose columns are already orthonormal.
  static Subspace from_orthonormal(Matrix basis) {
    require_finite(basis, "subspace basis");
    if (basis.cols() > basis.rows()) throw InputError("subspace basis has more columns than rows");
    const Matrix gram = basis.transpose() * basis;
    if (basis.cols() > 0 && (gram - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff() > 1e-10) {
      throw InputError("subspace basis is not orthonormal");
    }
    return Subspace(std::move(basis), 0);
  }

  // Orthonormal basis of the column span, sign-normalized.
  static Subspace span_of(const Matrix& vectors, const Tolerances& tol = {});

  Index ambient_dim() const { return basis_.rows(); }
  Index dim() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  Matrix projector() const { return basis_ * basis_.transpose(); }

  double distance(const Vector& x) const {
    return (x - basis_ * (basis_.transpose() * x)).norm();
  }
  bool contains(const Vector& x, double tol) const { return distance(x) <= tol * std::max(1.0, x.norm()); }
  bool contains(const Subspace& other, double tol) const {
    for (Index j = 0; j < other.dim(); ++j) {
      if (!contains(Vector(other.basis().col(j)), tol)) return false;
    }
    return true;
  }

 private:
  Subspace(Matrix basis, int) : basis_(std::move(basis)) {}
  Matrix basis_;
};

struct RankKernel {
  Index rank = 0;
  Subspace kernel;
};

// Singular values below rank_rel * max(rows, cols) * max(sigma_max, scale) count as zero.
// A nonzero scale keeps a tiny matrix such as A - I for A ~ I from looking full rank.
inline RankKernel rank_and_kernel(const Matrix& a, const Tolerances& tol = {}, double scale = 0.0) {
  require_finite(a, "matrix");
  RankKernel out;
  if (a.cols() == 0) {
    out.kernel = Subspace(0);
    return out;
  }
  if (a.rows() == 0) {
    out.kernel = Subspace::whole(a.cols());
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double cut = tol.rank_rel * static_cast<double>(std::max(a.rows(), a.cols())) * std::max(smax, scale);
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++out.rank;
  }
  Matrix k = svd.matrixV().rightCols(a.cols() - out.rank);
  normalize_signs(k);
  out.kernel = Subspace::from_orthonormal(std::move(k));
  return out;
}

inline Subspace Subspace::span_of(const Matrix& vectors, const Tolerances& tol) {
  require_finite(vectors, "spanning set");
  if (vectors.cols() == 0) return Subspace(vectors.rows());
  Eigen::JacobiSVD<Matrix> svd(vectors, Eigen::ComputeFullU);
  const Vector& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double cut = tol.rank_rel * static_cast<double>(std::max(vectors.rows(), vectors.cols())) * smax;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  Matrix b = svd.matrixU().leftCols(r);
  normalize_signs(b);
  return Subspace(std::move(b), 0);
}

inline Subspace orthogonal_complement(const Subspace& s) {
  const Index n = s.ambient_dim();
  if (s.dim() == 0) return Subspace::whole(n);
  if (s.dim() == n) return Subspace(n);
  // Left singular vectors of the basis beyond its rank span the complement.
  Eigen::JacobiSVD<Matrix> svd(s.basis(), Eigen::ComputeFullU);
  Matrix c = svd.matrixU().rightCols(n - s.dim());
  normalize_signs(c);
  return Subspace::from_orthonormal(std::move(c));
}

// Kernel of the stacked complement projectors I - V_k V_k^T.
inline Subspace subspace_intersection(std::span<const Subspace> spaces, const Tolerances& tol = {}) {
  if (spaces.empty()) throw InputError("subspace_intersection needs at least one subspace");
  const Index n = spaces.front().ambient_dim();
  for (const auto& s : spaces) {
    if (s.ambient_dim() != n) throw InputError("subspace_intersection: mismatched ambient dimensions");
  }
  if (spaces.size() == 1) return spaces.front();
  Matrix stacked(n * static_cast<Index>(spaces.size()), n);
  for (std::size_t k = 0; k < spaces.size(); ++k) {
    stacked.middleRows(static_cast<Index>(k) * n, n) = Matrix::Identity(n, n) - spaces[k].projector();
  }
  return rank_and_kernel(stacked, tol, 1.0).kernel;
}

inline double induced_norm_1(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

inline double lozinski_measure_1(const Matrix& a) {
  require_square(a, "lozinski_measure_1 argument");
  if (a.size() == 0) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < a.cols(); ++j) {
    double s = a(j, j);
    for (Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += std::abs(a(i, j));
    }
    best = std::max(best, s);
  }
  return best;
}

namespace detail {

inline Index kernel_dim_complex(const ComplexMatrix& b, const Tolerances& tol, double scale) {
  if (b.cols() == 0) return 0;
  Eigen::JacobiSVD<ComplexMatrix> svd(b);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double cut = tol.rank_rel * static_cast<double>(std::max(b.rows(), b.cols())) * std::max(smax, scale);
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return b.cols() - r;
}

inline ComplexMatrix shifted(const Matrix& a, Complex lambda) {
  ComplexMatrix b = a.cast<Complex>();
  b.diagonal().array() -= lambda;
  return b;
}

}  // namespace detail

// dim ker(A - lambda I), computed in complex arithmetic.
inline Index geometric_multiplicity(const Matrix& a, Complex lambda, const Tolerances& tol = {}) {
  const double scale = induced_norm_1(a) + std::abs(lambda);
  return detail::kernel_dim_complex(detail::shifted(a, lambda), tol, scale);
}

inline bool is_semisimple_at(const Matrix& a, Complex lambda, const Tolerances& tol = {}) {
  require_square(a, "is_semisimple_at argument");
  const double scale = induced_norm_1(a) + std::abs(lambda);
  const ComplexMatrix b = detail::shifted(a, lambda);
  const Index k1 = detail::kernel_dim_complex(b, tol, scale);
  if (k1 == 0) return true;
  const Index k2 = detail::kernel_dim_complex(b * b, tol, scale * scale);
  return k1 == k2;
}

struct EigenCluster {
  Complex center;
  Index algebraic = 0;
  Index geometric = 0;
};

struct Spectrum {
  std::vector<Complex> eigenvalues;
  std::vector<Index> geometric;  // parallel to eigenvalues: multiplicity of the owning cluster
  std::vector<EigenCluster> clusters;
  double cluster_radius = 0.0;
};

inline double cluster_radius(const Matrix& a) { return 1e-6 * (1.0 + induced_norm_1(a)); }

// Eigenvalues sorted by descending real part, then descending imaginary part.
inline std::vector<Complex> eigenvalues(const Matrix& a) {
  require_square(a, "eigenvalue argument");
  require_finite(a, "eigenvalue argument");
  std::vector<Complex> out;
  if (a.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigenvalue iteration did not converge (n=" + std::to_string(a.rows()) +
                         ", norm1=" + std::to_string(induced_norm_1(a)) + ")");
  }
  const auto ev = es.eigenvalues();
  out.assign(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), [](Complex x, Complex y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return out;
}

inline Spectrum spectrum(const Matrix& a, const Tolerances& tol = {}) {
  Spectrum s;
  s.eigenvalues = eigenvalues(a);
  s.cluster_radius = cluster_radius(a);
  const std::size_t n = s.eigenvalues.size();
  // Single-linkage clustering with union-find.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(s.eigenvalues[i] - s.eigenvalues[j]) <= s.cluster_radius) parent[find(i)] = find(j);
    }
  }
  std::vector<std::ptrdiff_t> cluster_of_root(n, -1);
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (cluster_of_root[r] < 0) {
      cluster_of_root[r] = static_cast<std::ptrdiff_t>(s.clusters.size());
      s.clusters.push_back({});
    }
    auto& c = s.clusters[static_cast<std::size_t>(cluster_of_root[r])];
    c.center += s.eigenvalues[i];
    ++c.algebraic;
    owner[i] = static_cast<std::size_t>(cluster_of_root[r]);
  }
  for (auto& c : s.clusters) {
    c.center /= static_cast<double>(c.algebraic);
    // Real input: a cluster straddling the real axis is real.
    if (std::abs(c.center.imag()) <= s.cluster_radius) c.center = Complex(c.center.real(), 0.0);
    c.geometric = std::min(geometric_multiplicity(a, c.center, tol), c.algebraic);
  }
  s.geometric.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.geometric[i] = s.clusters[owner[i]].geometric;
  return s;
}

namespace detail {

template <std::size_t N>
inline void pade_terms(const Matrix& a, const double (&b)[N], Matrix& u, Matrix& v) {
  const Index n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  Matrix podd = b[1] * id;
  Matrix peven = b[0] * id;
  Matrix pw = id;
  for (std::size_t k = 2; k < N; k += 2) {
    pw = pw * a2;
    peven += b[k] * pw;
    if (k + 1 < N) podd += b[k + 1] * pw;
  }
  u = a * podd;
  v = peven;
}

}  // namespace detail

// Scaling and squaring with a diagonal Pade approximant of degree 3..13.
inline Matrix matrix_exponential(const Matrix& a) {
  require_square(a, "matrix_exponential argument");
  require_finite(a, "matrix_exponential argument");
  const Index n = a.rows();
  if (n == 0) return Matrix();
  static constexpr double b3[] = {120., 60., 12., 1.};
  static constexpr double b5[] = {30240., 15120., 3360., 420., 30., 1.};
  static constexpr double b7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static constexpr double b9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                  2162160., 110880., 3960., 90., 1.};
  static constexpr double b13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                                   1187353796428800., 129060195264000., 10559470521600.,
                                   670442572800., 33522128640., 1323241920., 40840800.,
                                   960960., 16380., 182., 1.};
  const double norm = induced_norm_1(a);
  Matrix u, v;
  int squarings = 0;
  if (norm <= 1.495585217958292e-2) {
    detail::pade_terms(a, b3, u, v);
  } else if (norm <= 2.539398330063230e-1) {
    detail::pade_terms(a, b5, u, v);
  } else if (norm <= 9.504178996162932e-1) {
    detail::pade_terms(a, b7, u, v);
  } else if (norm <= 2.097847961257068) {
    detail::pade_terms(a, b9, u, v);
  } else {
    const double theta13 = 5.371920351148152;
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    if (squarings > 1000) throw NumericalError("matrix_exponential: norm too large");
    const Matrix as = a / std::ldexp(1.0, squarings);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix tu = b13[13] * a6 + b13[11] * a4 + b13[9] * a2;
    u = as * (a6 * tu + b13[7] * a6 + b13[5] * a4 + b13[3] * a2 + b13[1] * id);
    const Matrix tv = b13[12] * a6 + b13[10] * a4 + b13[8] * a2;
    v = a6 * tv + b13[6] * a6 + b13[4] * a4 + b13[2] * a2 + b13[0] * id;
  }
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  if (!r.allFinite()) throw NumericalError("matrix_exponential overflowed (norm1=" + std::to_string(norm) + ")");
  return r;
}

}  // namespace linconv

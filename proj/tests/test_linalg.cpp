#include <gtest/gtest.h>

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "test_support.hpp"

using namespace linconv;
using linconv::testing::random_matrix;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

}  // namespace

TEST(Tolerances, DefaultsArePositive) {
  Tolerances t;
  EXPECT_DOUBLE_EQ(t.rank_rel, 1e-10);
  EXPECT_DOUBLE_EQ(t.psd_margin, 1e-8);
  EXPECT_DOUBLE_EQ(t.residual_tol, 1e-7);
  EXPECT_DOUBLE_EQ(t.sim_tol, 1e-8);
  EXPECT_NO_THROW(t.validate());
  t.psd_margin = 0;
  EXPECT_THROW(t.validate(), InputError);
}

TEST(RankKernel, RankOneSymmetric) {
  const RankKernel r = rank_and_kernel(m2(1, 1, 1, 1));
  EXPECT_EQ(r.rank, 1);
  ASSERT_EQ(r.kernel.dim(), 1);
  EXPECT_NEAR(std::abs(r.kernel.basis().col(0).dot(v2(1, -1) / std::sqrt(2.0))), 1.0, 1e-12);
}

TEST(RankKernel, Identity) {
  const RankKernel r = rank_and_kernel(Matrix::Identity(3, 3));
  EXPECT_EQ(r.rank, 3);
  EXPECT_EQ(r.kernel.dim(), 0);
  EXPECT_EQ(r.kernel.ambient_dim(), 3);
}

TEST(RankKernel, SusceptibleNodeOnPath) {
  const RankKernel r = rank_and_kernel(m2(1, -1, 0, 0));
  ASSERT_EQ(r.kernel.dim(), 1);
  EXPECT_NEAR(r.kernel.basis()(0, 0), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.kernel.basis()(1, 0), 1 / std::sqrt(2.0), 1e-12);
}

TEST(RankKernel, RejectsNonFinite) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = std::nan("");
  EXPECT_THROW(rank_and_kernel(a), InputError);
  a(0, 1) = INFINITY;
  EXPECT_THROW(rank_and_kernel(a), InputError);
}

TEST(RankKernel, RankPlusNullityRandom) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + trial % 5;
    const Index r = trial % (n + 1);
    const Matrix a = random_matrix(rng, n, r) * random_matrix(rng, r, n);
    const RankKernel rk = rank_and_kernel(a);
    EXPECT_EQ(rk.rank + rk.kernel.dim(), n);
    EXPECT_EQ(rk.rank, r);
    EXPECT_LE(max_abs(a * rk.kernel.basis()), 1e-10 * std::max(1.0, a.norm()));
    const Matrix gram = rk.kernel.basis().transpose() * rk.kernel.basis();
    EXPECT_LE(max_abs(gram - Matrix::Identity(gram.rows(), gram.cols())), 1e-10);
  }
}

TEST(SubspaceIntersection, Examples) {
  const Subspace e1 = Subspace::span_of(v2(1, 0));
  const Subspace e2 = Subspace::span_of(v2(0, 1));
  const std::vector<Subspace> same{e1, e1};
  const Subspace s = subspace_intersection(same);
  ASSERT_EQ(s.dim(), 1);
  EXPECT_TRUE(s.contains(e1, 1e-12));
  const std::vector<Subspace> orth{e1, e2};
  EXPECT_EQ(subspace_intersection(orth).dim(), 0);

  // Kernels of A1 L and A2 L for the 2-node path.
  const Matrix l = path_laplacian(2);
  Matrix a1 = Matrix::Zero(2, 2), a2 = Matrix::Zero(2, 2);
  a1(0, 0) = 1;
  a2(1, 1) = 1;
  const std::vector<Subspace> ks{rank_and_kernel(a1 * l).kernel, rank_and_kernel(a2 * l).kernel};
  const Subspace k = subspace_intersection(ks);
  ASSERT_EQ(k.dim(), 1);
  EXPECT_TRUE(k.contains(v2(1, 1) / std::sqrt(2.0), 1e-12));
}

TEST(SubspaceIntersection, MismatchedAmbient) {
  const std::vector<Subspace> bad{Subspace::whole(2), Subspace::whole(3)};
  EXPECT_THROW(subspace_intersection(bad), InputError);
}

TEST(SubspaceIntersection, AlgebraicProperties) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 4;
    // Subspaces sharing a random common line, plus random extra directions.
    const Matrix common = random_matrix(rng, n, 1);
    auto make = [&](Index extra) {
      Matrix b(n, 1 + extra);
      b.col(0) = common;
      b.rightCols(extra) = random_matrix(rng, n, extra);
      return Subspace::span_of(b);
    };
    const Subspace a = make(trial % 3), b = make((trial + 1) % 3), c = make((trial + 2) % 3);
    const std::vector<Subspace> ab{a, b}, ba{b, a}, bc{b, c};
    const Subspace sab = subspace_intersection(ab), sba = subspace_intersection(ba);
    EXPECT_EQ(sab.dim(), sba.dim());
    EXPECT_TRUE(sab.contains(sba, 1e-8));
    const std::vector<Subspace> ab_c{sab, c}, a_bc{a, subspace_intersection(bc)};
    const Subspace left = subspace_intersection(ab_c), right = subspace_intersection(a_bc);
    EXPECT_EQ(left.dim(), right.dim());
    EXPECT_TRUE(left.contains(right, 1e-8));
    EXPECT_LE(sab.dim(), std::min(a.dim(), b.dim()));
    EXPECT_LE(left.dim(), sab.dim());
    for (Index j = 0; j < sab.dim(); ++j) {
      EXPECT_TRUE(a.contains(Vector(sab.basis().col(j)), 1e-7));
      EXPECT_TRUE(b.contains(Vector(sab.basis().col(j)), 1e-7));
    }
    EXPECT_TRUE(sab.contains(common / common.norm(), 1e-8));
  }
}

TEST(OrthogonalComplement, Examples) {
  const Subspace c = orthogonal_complement(Subspace::span_of(v2(1, 0)));
  ASSERT_EQ(c.dim(), 1);
  EXPECT_NEAR(std::abs(c.basis()(1, 0)), 1.0, 1e-12);
  EXPECT_EQ(orthogonal_complement(Subspace(3)).dim(), 3);
  const Subspace d = orthogonal_complement(Subspace::span_of(v2(1, 1)));
  EXPECT_NEAR(std::abs(d.basis().col(0).dot(v2(1, -1) / std::sqrt(2.0))), 1.0, 1e-12);
}

TEST(OrthogonalComplement, DimensionsAndOrthogonality) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 5, k = trial % (n + 1);
    const Subspace s = Subspace::span_of(random_matrix(rng, n, k));
    const Subspace c = orthogonal_complement(s);
    EXPECT_EQ(s.dim() + c.dim(), n);
    EXPECT_LE(max_abs(s.basis().transpose() * c.basis()), 1e-10);
  }
}

TEST(Spectrum, TriangularRotationJordan) {
  const Spectrum s1 = spectrum(m2(0.5, 0, 1, 1));
  ASSERT_EQ(s1.eigenvalues.size(), 2u);
  EXPECT_NEAR(s1.eigenvalues[0].real(), 1.0, 1e-14);
  EXPECT_NEAR(s1.eigenvalues[1].real(), 0.5, 1e-14);
  for (auto g : s1.geometric) EXPECT_EQ(g, 1);

  const Spectrum s2 = spectrum(m2(0, -1, 1, 0));
  EXPECT_NEAR(std::abs(s2.eigenvalues[0] - Complex(0, 1)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(s2.eigenvalues[1] - Complex(0, -1)), 0.0, 1e-14);

  const Spectrum s3 = spectrum(m2(1, 1, 0, 1));
  ASSERT_EQ(s3.clusters.size(), 1u);
  EXPECT_EQ(s3.clusters[0].algebraic, 2);
  EXPECT_EQ(s3.clusters[0].geometric, 1);
  EXPECT_NEAR(std::abs(s3.clusters[0].center - Complex(1, 0)), 0.0, 1e-8);
}

TEST(Spectrum, TransposeAndConjugatePairs) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 6;
    const Matrix a = random_matrix(rng, n, n);
    const auto ev = eigenvalues(a);
    ASSERT_EQ(static_cast<Index>(ev.size()), n);
    EXPECT_LE(linconv::testing::spectrum_distance(ev, eigenvalues(a.transpose())), 1e-8);
    std::vector<Complex> conj;
    for (auto z : ev) conj.push_back(std::conj(z));
    EXPECT_LE(linconv::testing::spectrum_distance(ev, conj), 1e-10);
    // Oracle: Eigen's complex Schur-based solver.
    Eigen::ComplexEigenSolver<ComplexMatrix> ces(a.cast<Complex>());
    std::vector<Complex> oracle(ces.eigenvalues().data(), ces.eigenvalues().data() + n);
    EXPECT_LE(linconv::testing::spectrum_distance(ev, oracle), 1e-8);
  }
}

TEST(Spectrum, EulerSpectralMapping) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 5;
    const Matrix a = random_matrix(rng, n, n);
    const double tau = u(rng);
    std::vector<Complex> mapped;
    for (auto z : eigenvalues(a)) mapped.push_back(1.0 + tau * z);
    EXPECT_LE(linconv::testing::spectrum_distance(eigenvalues(eas(a, tau)), mapped), 1e-8);
  }
}

TEST(Semisimple, Examples) {
  EXPECT_TRUE(is_semisimple_at(Matrix::Identity(2, 2), 1.0));
  EXPECT_FALSE(is_semisimple_at(m2(1, 1, 0, 1), 1.0));
  EXPECT_TRUE(is_semisimple_at(m2(0.5, 0, 1, 1), 1.0));
  EXPECT_TRUE(is_semisimple_at(m2(0.5, 0, 1, 1), 7.0));  // not an eigenvalue
  EXPECT_EQ(geometric_multiplicity(Matrix::Identity(3, 3), 1.0), 3);
}

TEST(MatrixExponential, Examples) {
  EXPECT_LE(max_abs(matrix_exponential(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)), 0.0);
  const Matrix e = matrix_exponential(m2(-1, 0, 0, 0));
  EXPECT_NEAR(e(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(e(1, 1), 1.0, 1e-15);
  EXPECT_EQ(e(0, 1), 0.0);
}

TEST(MatrixExponential, MatchesEigenOracle) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> norm(0.01, 10.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 1 + trial % 7;
    Matrix a = random_matrix(rng, n, n);
    a *= norm(rng) / induced_norm_1(a);
    const Matrix ours = matrix_exponential(a);
    const Matrix oracle = a.exp();
    EXPECT_LE((ours - oracle).norm() / oracle.norm(), 1e-12) << "trial " << trial;
  }
}

TEST(MatrixExponential, GroupInverse) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 5;
    const Matrix a = random_matrix(rng, n, n, 0.5);
    EXPECT_LE(max_abs(matrix_exponential(a) * matrix_exponential(-a) - Matrix::Identity(n, n)), 1e-10);
  }
}

TEST(MatrixExponential, OverflowIsNumericalError) {
  EXPECT_THROW(matrix_exponential(Matrix::Constant(2, 2, 1e6)), NumericalError);
}

TEST(Norms, Examples) {
  EXPECT_DOUBLE_EQ(lozinski_measure_1(m2(-2, 1, 1, -2)), -1.0);
  EXPECT_DOUBLE_EQ(lozinski_measure_1(Matrix::Zero(2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(induced_norm_1(Matrix::Zero(2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(induced_norm_1(m2(0.5, 0, 1, 1)), 1.5);
}

TEST(Norms, MeasureBelowNorm) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const Matrix a = random_matrix(rng, 4, 4);
    EXPECT_LE(lozinski_measure_1(a), induced_norm_1(a) * (1 + 1e-14));
  }
}

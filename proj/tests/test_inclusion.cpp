#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace linconv;
using namespace linconv::testing;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Matrix s1(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST(Kernels, CommonKernelExamples) {
  const MatrixFamily a11(Mode::DT, {m2(0.5, 0, 1, 1), m2(0.75, 0, 1, 1)});
  const Subspace c = common_fixed_kernel(a11);
  ASSERT_EQ(c.dim(), 1);
  EXPECT_NEAR(std::abs(c.basis()(1, 0)), 1.0, 1e-14);

  const MatrixFamily diag(Mode::CT, {m2(-1, 0, 0, 0), m2(0, 0, 0, -1)});
  EXPECT_EQ(common_fixed_kernel(diag).dim(), 0);
  const auto ks = generator_kernels(diag);
  ASSERT_EQ(ks.size(), 2u);
  EXPECT_EQ(ks[0].dim(), 1);
  EXPECT_EQ(ks[1].dim(), 1);
}

TEST(Kernels, KspExamples) {
  const KspResult same = ksp_check(MatrixFamily(Mode::CT, {m2(-1, 1, 0, 0), m2(0, 0, 1, -1)}));
  EXPECT_TRUE(same.holds);
  EXPECT_EQ(same.common.dim(), 1);
  EXPECT_FALSE(same.violating_vertex.has_value());

  const KspResult half = ksp_check(MatrixFamily(Mode::DT, {s1(0.5), s1(1.0)}));
  EXPECT_FALSE(half.holds);
  ASSERT_TRUE(half.violating_vertex.has_value());
  EXPECT_EQ(*half.violating_vertex, 1u);
  EXPECT_EQ(half.kernel_dims, (std::vector<Index>{0, 1}));
  EXPECT_NEAR(std::abs(half.direction(0)), 1.0, 1e-15);

  const KspResult col = ksp_check(catalogue("column-stochastic-ct").family);
  EXPECT_FALSE(col.holds);
  EXPECT_EQ(col.common.dim(), 0);
  EXPECT_EQ(col.kernel_dims, (std::vector<Index>{1, 1}));
}

TEST(Kernels, KspDirectionIsOutsideCommonKernel) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Mode mode = trial % 2 ? Mode::CT : Mode::DT;
    const MatrixFamily f = planted_family(rng, mode, 3 + trial % 2, 1 + trial % 2, 2, false, 0.5);
    const KspResult r = ksp_check(f);
    if (r.holds) continue;
    const std::size_t v = *r.violating_vertex;
    EXPECT_NEAR(r.direction.norm(), 1.0, 1e-12);
    EXPECT_TRUE(r.kernels[v].contains(r.direction, 1e-8));
    EXPECT_LE((r.common.projector() * r.direction).norm(), 1e-8);
  }
}

TEST(Kernels, PlantedSharedKernelIsFound) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Mode mode = trial % 2 ? Mode::CT : Mode::DT;
    const Index n = 2 + trial % 4, m = 1 + trial % (n - 1);
    const MatrixFamily f = planted_family(rng, mode, n, m, 3, true, 0.5);
    const KspResult r = ksp_check(f);
    EXPECT_TRUE(r.holds);
    EXPECT_EQ(r.common.dim(), m);
  }
}

TEST(StrongDecompose, ConsensusBlocks) {
  const FamilyDecomposition d = strong_decompose(MatrixFamily(Mode::CT, {m2(-1, 1, 0, 0), m2(0, 0, 1, -1)}));
  ASSERT_EQ(d.m, 1);
  ASSERT_EQ(d.A_as.size(), 2u);
  EXPECT_NEAR(d.A_as[0](0, 0), -1.0, 1e-10);
  EXPECT_NEAR(d.A_as[1](0, 0), -1.0, 1e-10);
  EXPECT_NEAR(std::abs(d.A_r[0](0, 0)), 1.0, 1e-10);
  EXPECT_NEAR(d.A_r[0](0, 0), -d.A_r[1](0, 0), 1e-10);
  EXPECT_LE(d.residual, 1e-12);
  EXPECT_LE(max_abs(d.T.transpose() * d.T - Matrix::Identity(2, 2)), 1e-14);
}

TEST(StrongDecompose, NeedsKernelSharing) {
  try {
    strong_decompose(MatrixFamily(Mode::DT, {s1(0.5), s1(1.0)}));
    FAIL() << "expected a precondition error";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("vertex 1"), std::string::npos);
  }
}

TEST(StrongDecompose, BlockTriangularFormOnPlantedFamilies) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const Mode mode = trial % 2 ? Mode::CT : Mode::DT;
    const Index n = 3 + trial % 3;
    const MatrixFamily f = planted_family(rng, mode, n, 1 + trial % 2, 2, true, 0.5);
    const FamilyDecomposition d = strong_decompose(f);
    const Index k = n - d.m;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Matrix b = d.T.transpose() * f[i] * d.T;
      EXPECT_LE(max_abs(b.topRightCorner(k, d.m)), 1e-10);
      EXPECT_LE(max_abs(b.topLeftCorner(k, k) - d.A_as[i]), 1e-12);
      EXPECT_LE(max_abs(b.bottomLeftCorner(d.m, k) - d.A_r[i]), 1e-12);
    }
  }
}

TEST(Cqlf, Examples) {
  const std::vector<Matrix> stable{s1(-1), s1(-3)};
  const LmiAttempt ok = cqlf_stability(stable, Mode::CT);
  ASSERT_EQ(ok.status, FeasibilityStatus::Feasible);
  EXPECT_TRUE(verify_lmi(ok.problem, ok.result.values).pass);
  EXPECT_EQ(cqlf_stability(std::vector<Matrix>{s1(2)}, Mode::CT).status, FeasibilityStatus::Infeasible);
  EXPECT_EQ(cqlf_stability(std::vector<Matrix>{s1(0.5), s1(-0.9)}, Mode::DT).status, FeasibilityStatus::Feasible);
  EXPECT_EQ(cqlf_stability(std::vector<Matrix>{s1(1.5)}, Mode::DT).status, FeasibilityStatus::Infeasible);
  EXPECT_THROW(cqlf_stability(std::vector<Matrix>{}, Mode::CT), InputError);
  EXPECT_THROW(cqlf_stability(std::vector<Matrix>{s1(-1), Matrix::Identity(2, 2)}, Mode::CT), InputError);
}

TEST(StrongLmi, ConsensusAndPreconditions) {
  const MatrixFamily f(Mode::CT, {m2(-1, 1, 0, 0), m2(0, 0, 1, -1)});
  const LmiAttempt a = strong_lmi(f);
  ASSERT_EQ(a.status, FeasibilityStatus::Feasible);
  EXPECT_TRUE(verify_lmi(a.problem, a.result.values).pass);
  const Matrix p = expand_rank_reduced(a.result.values[0], common_fixed_kernel(f));
  EXPECT_LE((p * Vector::Ones(2)).norm(), 1e-12 * std::max(1.0, max_abs(p)));
  EXPECT_THROW(strong_lmi(MatrixFamily(Mode::DT, {s1(0.5), s1(1.0)})), PreconditionError);
}

TEST(WeakLmi, Examples) {
  const auto half = weak_lmi(MatrixFamily(Mode::DT, {s1(0.5), s1(1.0)}));
  ASSERT_TRUE(half.has_value());
  EXPECT_GE(half->parameter, 0.25);
  EXPECT_GT(half->P(0, 0), 0.0);
  EXPECT_FALSE(weak_lmi(MatrixFamily(Mode::DT, {s1(-1.0), s1(1.0)})).has_value());
  EXPECT_FALSE(weak_lmi(MatrixFamily(Mode::CT, {m2(0, -1, 1, 0)})).has_value());
  const LmiAttempt diag = weak_lmi_attempt(catalogue("diag-kernels").family);
  ASSERT_EQ(diag.status, FeasibilityStatus::Feasible);
  EXPECT_TRUE(verify_lmi(diag.problem, diag.result.values).pass);
}

TEST(WeakLmi, CertificatesAreSoundAgainstSimulation) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 12; ++trial) {
    const Mode mode = trial % 2 ? Mode::CT : Mode::DT;
    const MatrixFamily f = planted_family(rng, mode, 3, 1, 2, trial % 3 != 0, 0.4);
    const LmiAttempt a = weak_lmi_attempt(f);
    if (a.status != FeasibilityStatus::Feasible) continue;
    EXPECT_TRUE(verify_lmi(a.problem, a.result.values).pass);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Vector x0 = random_matrix(rng, 3, 1);
      const SwitchingSignal sig = SwitchingSignal::random_dirichlet(seed, mode == Mode::DT ? 1.0 : 0.5);
      const Trajectory tr = mode == Mode::DT ? simulate_dt(f, sig, x0, 4000) : simulate_ct(f, sig, x0, 400.0, 0.5);
      EXPECT_TRUE(tr.converged) << "trial " << trial;
    }
  }
}

TEST(Polyhedral, Examples) {
  const MatrixFamily f(Mode::DT, {m2(0.5, 0, 1, 1), m2(0.75, 0, 1, 1)});
  const PolyhedralReport ok = verify_polyhedral_strong(f, Matrix::Identity(2, 2));
  EXPECT_TRUE(ok.pass) << ok.reason;
  EXPECT_EQ(ok.m, 1);
  ASSERT_EQ(ok.contraction.size(), 2u);
  EXPECT_NEAR(ok.contraction[0], 0.5, 1e-14);
  EXPECT_NEAR(ok.contraction[1], 0.75, 1e-14);

  const MatrixFamily g(Mode::DT, {m2(0.5, 0, 1, 1), m2(-1.5, 0, 1, 1)});
  const PolyhedralReport bad = verify_polyhedral_strong(g, Matrix::Identity(2, 2));
  EXPECT_FALSE(bad.pass);
  EXPECT_NE(bad.reason.find("vertex 1"), std::string::npos);

  const MatrixFamily ct(Mode::CT, {m2(-1, 1, 0, 0), m2(0, 0, 1, -1)});
  Matrix x(2, 2);
  x << 1, 1, -1, 1;
  EXPECT_TRUE(verify_polyhedral_strong(ct, x).pass);
  EXPECT_THROW(verify_polyhedral_strong(ct, Matrix::Ones(2, 2)), InputError);
  EXPECT_THROW(verify_polyhedral_strong(ct, Matrix::Identity(3, 3)), InputError);
}

TEST(Rate, Examples) {
  const AnalysisReport cons = analyze(MatrixFamily(Mode::CT, {m2(-1, 1, 0, 0), m2(0, 0, 1, -1)}));
  ASSERT_TRUE(cons.rate.has_value());
  EXPECT_NEAR(cons.rate->beta, 1.0, 1e-6);
  EXPECT_NEAR(cons.rate->c0, 1.0, 1e-6);
  EXPECT_NEAR(cons.rate->c1, 1.0, 1e-10);

  const AnalysisReport diag = analyze(MatrixFamily(Mode::CT, {s1(-2)}));
  ASSERT_TRUE(diag.rate.has_value());
  EXPECT_NEAR(diag.rate->beta, 2.0, 1e-6);
  EXPECT_EQ(diag.rate->c1, 0.0);
  EXPECT_EQ(diag.rate->bound(1.0), 0.0);

  const AnalysisReport dt = analyze(MatrixFamily(Mode::DT, {s1(0.5)}));
  ASSERT_TRUE(dt.rate.has_value());
  EXPECT_NEAR(dt.rate->rho, 0.5, 1e-6);
  EXPECT_NEAR(dt.rate->beta, std::log(2.0), 1e-6);

  const AnalysisReport id = analyze(MatrixFamily(Mode::DT, {Matrix::Identity(2, 2)}));
  ASSERT_TRUE(id.rate.has_value());
  EXPECT_TRUE(std::isinf(id.rate->beta));
}

TEST(Rate, BoundHoldsOnRandomSignals) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const Mode mode = trial % 2 ? Mode::CT : Mode::DT;
    const MatrixFamily f = planted_family(rng, mode, 3, 1, 2, true, 0.3);
    const AnalysisReport r = analyze(f);
    ASSERT_EQ(r.strong.status, Status::Proven) << "trial " << trial;
    ASSERT_TRUE(r.rate.has_value());
    const FamilyDecomposition& d = r.strong_certificate->decomposition;
    const Index k = f.dim() - d.m;
    const Vector x0 = random_matrix(rng, 3, 1);
    const SwitchingSignal sig = SwitchingSignal::random_vertex(static_cast<std::uint64_t>(trial), 1.0);
    const Trajectory tr = mode == Mode::DT ? simulate_dt(f, sig, x0, 400) : simulate_ct(f, sig, x0, 40.0, 1.0);
    ASSERT_TRUE(tr.converged);
    const Vector z2inf = (d.T.transpose() * tr.states.back()).tail(d.m);
    const double x1 = (d.T.transpose() * x0).head(k).norm();
    for (std::size_t s = 1; s < tr.states.size(); ++s) {
      const Vector z = d.T.transpose() * tr.states[s];
      EXPECT_LE((z.tail(d.m) - z2inf).norm(), 1.05 * r.rate->bound(tr.times[s]) * x1 + 1e-9);
    }
  }
}

TEST(Families, DualAndEuler) {
  std::mt19937_64 rng(3);
  const MatrixFamily f(Mode::CT, {random_matrix(rng, 3, 3), random_matrix(rng, 3, 3)}, {"a", "b"});
  EXPECT_TRUE(dual_family(dual_family(f)) == f);
  EXPECT_EQ(dual_family(f).labels(), f.labels());
  const MatrixFamily e = euler_family(f, 0.1);
  EXPECT_EQ(e.mode(), Mode::DT);
  ASSERT_TRUE(e.euler_tau().has_value());
  EXPECT_DOUBLE_EQ(*e.euler_tau(), 0.1);
  EXPECT_LE(max_abs(e[1] - (Matrix::Identity(3, 3) + 0.1 * f[1])), 0.0);
  EXPECT_THROW(euler_family(e, 0.1), InputError);
  EXPECT_THROW(euler_family(f, 0.0), InputError);
  EXPECT_THROW(MatrixFamily(Mode::CT, {}), InputError);
  EXPECT_THROW(MatrixFamily(Mode::CT, {Matrix::Identity(2, 2), Matrix::Identity(3, 3)}), InputError);
}

TEST(Analyze, Examples) {
  const AnalysisReport half = analyze(MatrixFamily(Mode::DT, {s1(0.5), s1(1.0)}));
  EXPECT_EQ(half.strong.status, Status::Disproven);
  EXPECT_EQ(half.strong.method, "kernel-sharing");
  EXPECT_EQ(half.weak.status, Status::Proven);
  EXPECT_EQ(half.weak.method, "weak-lmi");

  const AnalysisReport pm = analyze(MatrixFamily(Mode::DT, {s1(-1.0), s1(1.0)}));
  EXPECT_EQ(pm.weak.status, Status::Disproven);
  EXPECT_EQ(pm.weak.method, "vertex-spectrum");

  const AnalysisReport a11 = analyze(MatrixFamily(Mode::DT, {m2(0.5, 0, 1, 1), m2(0.75, 0, 1, 1)}));
  EXPECT_EQ(a11.strong.status, Status::Proven);
  EXPECT_EQ(a11.strong.method, "decomposition+cqlf");
  EXPECT_EQ(a11.weak.method, "implied-by-strong");
}

TEST(Analyze, LatticeAndVertexDuality) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    const Mode mode = trial % 2 ? Mode::CT : Mode::DT;
    const Index n = 2 + trial % 2;
    const MatrixFamily f = planted_family(rng, mode, n, 1, 2, trial % 3 != 0, 0.3 + 0.3 * (trial % 4));
    const AnalysisReport r = analyze(f);
    if (r.strong.status == Status::Proven) EXPECT_EQ(r.weak.status, Status::Proven);
    if (r.weak.status == Status::Disproven) EXPECT_EQ(r.strong.status, Status::Disproven);
    if (!r.ksp.holds) EXPECT_EQ(r.strong.status, Status::Disproven);
    const AnalysisReport d = analyze(dual_family(f));
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(d.vertices[i].status, r.vertices[i].status);
    // The strong path depends only on the vertex spectra and the shared-kernel block structure.
    if (r.strong.status == Status::Disproven && r.strong.method == "vertex-spectrum") {
      EXPECT_EQ(d.strong.status, Status::Disproven);
    }
  }
}

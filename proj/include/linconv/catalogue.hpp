#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "family.hpp"
#include "lmi.hpp"
#include "sim.hpp"
#include "verdict.hpp"

namespace linconv {

namespace detail {

inline void require_metzler(const Matrix& a, const std::string& what) {
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (i != j && a(i, j) < 0) throw InputError(what + " has a negative off-diagonal entry");
    }
  }
}

inline double entry_scale(const Matrix& a) { return std::max(1.0, a.cwiseAbs().maxCoeff()); }

}  // namespace detail

// Opinion dynamics with one susceptible agent per vertex: -A_i L (CT) or I - A_i L (DT), A_i = e_i e_i^T.
inline MatrixFamily opinion_family(const Matrix& laplacian, Mode mode = Mode::CT) {
  require_square(laplacian, "Laplacian");
  require_finite(laplacian, "Laplacian");
  const Index n = laplacian.rows();
  if (n == 0) throw InputError("Laplacian must be nonempty");
  const double s = detail::entry_scale(laplacian);
  if (laplacian.rowwise().sum().cwiseAbs().maxCoeff() > 1e-12 * s) throw InputError("Laplacian rows must sum to zero");
  detail::require_metzler(-laplacian, "negated Laplacian");
  std::vector<Matrix> mats;
  std::vector<std::string> labels;
  for (Index i = 0; i < n; ++i) {
    Matrix a = Matrix::Zero(n, n);
    a.row(i) = -laplacian.row(i);
    if (mode == Mode::DT) a += Matrix::Identity(n, n);
    mats.push_back(std::move(a));
    labels.push_back("agent " + std::to_string(i + 1));
  }
  return MatrixFamily(mode, std::move(mats), std::move(labels));
}

inline Matrix path_laplacian(Index n) {
  Matrix l = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) {
    l(i, i) += 1;
    l(i + 1, i + 1) += 1;
    l(i, i + 1) -= 1;
    l(i + 1, i) -= 1;
  }
  return l;
}

inline Matrix cycle_laplacian(Index n) {
  Matrix l = path_laplacian(n);
  if (n > 2) {
    l(0, 0) += 1;
    l(n - 1, n - 1) += 1;
    l(0, n - 1) -= 1;
    l(n - 1, 0) -= 1;
  }
  return l;
}

// Constant scalar input as an extra state: [[A_i, B], [0, 0]] (CT) or [[A_i, B], [0, 1]] (DT).
inline MatrixFamily persistent_input_augment(const MatrixFamily& f, const Matrix& b) {
  const Index n = f.dim();
  if (b.rows() != n || b.cols() != 1) throw InputError("B must be an n x 1 column");
  require_finite(b, "B");
  std::vector<Matrix> mats;
  for (const auto& a : f.matrices()) {
    Matrix m = Matrix::Zero(n + 1, n + 1);
    m.topLeftCorner(n, n) = a;
    m.topRightCorner(n, 1) = b;
    if (f.mode() == Mode::DT) m(n, n) = 1.0;
    mats.push_back(std::move(m));
  }
  return MatrixFamily(f.mode(), std::move(mats), f.labels());
}

struct SocialFamily {
  MatrixFamily family;
  bool unbiased = false;  // q = beta * Delta * 1 for some scalar beta
  double beta = 0.0;
};

// Augmented opinion model [[-Delta + lambda G_i, q], [0, 0]].
inline SocialFamily opinion_social_family(const Vector& delta, const std::vector<Matrix>& graphs, double lambda,
                                          const Vector& q) {
  const Index n = delta.size();
  if (n == 0 || graphs.empty()) throw InputError("opinion_social_family needs agents and at least one graph");
  if (!delta.allFinite() || (delta.array() <= 0).any()) throw InputError("Delta must be positive diagonal");
  if (!(lambda > 0) || !std::isfinite(lambda)) throw InputError("lambda must be positive");
  if (q.size() != n || !q.allFinite()) throw InputError("q must have one entry per agent");
  std::vector<Matrix> mats;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Matrix& g = graphs[i];
    if (g.rows() != n || g.cols() != n) throw InputError("graph matrix has the wrong size");
    require_finite(g, "graph matrix");
    detail::require_metzler(g, "graph matrix");
    if (g.colwise().sum().cwiseAbs().maxCoeff() > 1e-12 * detail::entry_scale(g)) {
      throw InputError("graph matrix columns must sum to zero");
    }
    Matrix m = Matrix::Zero(n + 1, n + 1);
    m.topLeftCorner(n, n) = lambda * g;
    m.topLeftCorner(n, n).diagonal() -= delta;
    m.topRightCorner(n, 1) = q;
    mats.push_back(std::move(m));
  }
  SocialFamily out{MatrixFamily(Mode::CT, std::move(mats)), false, 0.0};
  const Vector ratio = q.cwiseQuotient(delta);
  if ((ratio.array() - ratio(0)).abs().maxCoeff() <= 1e-12 * std::max(1.0, std::abs(ratio(0)))) {
    out.unbiased = true;
    out.beta = ratio(0);
  }
  return out;
}

// Generator matrices with zero row sums (row case) or zero column sums (column case).
inline MatrixFamily kolmogorov_family(bool row_case, const std::vector<Matrix>& rates) {
  if (rates.empty()) throw InputError("kolmogorov_family needs at least one rate matrix");
  for (const auto& a : rates) {
    require_square(a, "rate matrix");
    require_finite(a, "rate matrix");
    detail::require_metzler(a, "rate matrix");
    const Vector sums = row_case ? Vector(a.rowwise().sum()) : Vector(a.colwise().sum().transpose());
    if (sums.cwiseAbs().maxCoeff() > 1e-12 * detail::entry_scale(a)) {
      throw InputError(row_case ? "rate matrix rows must sum to zero" : "rate matrix columns must sum to zero");
    }
  }
  return MatrixFamily(Mode::CT, rates);
}

// Vertices -k [[a, -a], [-a, a + b]] over the box of (a, b).
inline MatrixFamily plant_tuning_family(double a_min, double a_max, double b_min, double b_max, double k) {
  if (!(0 < a_min && a_min <= a_max) || !(0 <= b_min && b_min <= b_max) || !(k > 0) ||
      !std::isfinite(a_max) || !std::isfinite(b_max) || !std::isfinite(k)) {
    throw InputError("plant_tuning_family needs 0 < a_min <= a_max, 0 <= b_min <= b_max, k > 0");
  }
  std::vector<Matrix> mats;
  std::vector<std::string> labels;
  for (double a : {a_min, a_max}) {
    for (double b : {b_min, b_max}) {
      Matrix m(2, 2);
      m << a, -a, -a, a + b;
      mats.push_back(-k * m);
      labels.push_back("a=" + std::to_string(a) + ",b=" + std::to_string(b));
    }
  }
  return MatrixFamily(Mode::CT, std::move(mats), std::move(labels));
}

// Spikes of A = -1 on [h, h + d_h] with d_h = ln2 / 2^(h+1), h = 0..h_max, on the family {0, -1}.
inline SwitchingSignal spike_schedule_signal(int h_max = 40) {
  std::vector<std::pair<double, Vector>> segs;
  const Vector zero = (Vector(2) << 1.0, 0.0).finished();
  const Vector minus = (Vector(2) << 0.0, 1.0).finished();
  for (int h = 0; h <= h_max; ++h) {
    const double d = std::log(2.0) * std::ldexp(1.0, -(h + 1));
    segs.emplace_back(d, minus);
    segs.emplace_back(1.0 - d, zero);
  }
  return SwitchingSignal::explicit_segments(std::move(segs));
}

struct ExampleSpec {
  std::string name;
  std::string summary;
  MatrixFamily family;
  Status expected_strong = Status::Unknown;
  Status expected_weak = Status::Unknown;
  std::optional<Status> expected_dual_strong;
  std::string rationale;
  nlohmann::json parameters = nlohmann::json::object();
};

namespace detail {

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline MatrixFamily column_stochastic_pair(double al, double be, double ga, double de) {
  return kolmogorov_family(false, {mat({{-al, be}, {al, -be}}), mat({{-ga, de}, {ga, -de}})});
}

}  // namespace detail

inline std::vector<std::string> catalogue_names() {
  return {"scalar-half-one", "pm-one-dt",      "rotation-dt", "rotation-ct",       "spike-schedule",
          "column-stochastic-ct", "diag-kernels", "dt-duality", "ct-duality",      "a11-switching",
          "path-consensus", "kolmogorov-row", "opinion-unbiased", "plant-tuning", "persistent-input"};
}

inline ExampleSpec catalogue(std::string_view name) {
  using detail::mat;
  const auto P = Status::Proven;
  const auto D = Status::Disproven;
  ExampleSpec e;
  e.name = std::string(name);
  if (name == "scalar-half-one") {
    e.summary = "scalar DT inclusion switching between 1/2 and 1";
    e.family = MatrixFamily(Mode::DT, {mat({{0.5}}), mat({{1.0}})});
    e.expected_strong = D;
    e.expected_weak = P;
    e.rationale = "x(k) is non-increasing in modulus so it converges, but the vertex kernels have dimensions 0 and 1";
  } else if (name == "pm-one-dt") {
    e.summary = "scalar DT inclusion switching between -1 and 1";
    e.family = MatrixFamily(Mode::DT, {mat({{-1.0}}), mat({{1.0}})});
    e.expected_strong = D;
    e.expected_weak = D;
    e.rationale = "x^2 never increases, yet alternating signs keep the state oscillating";
  } else if (name == "rotation-dt") {
    e.summary = "DT quarter rotation";
    e.family = MatrixFamily(Mode::DT, {mat({{0.0, -1.0}, {1.0, 0.0}})});
    e.expected_strong = D;
    e.expected_weak = D;
    e.rationale = "eigenvalues +-i lie on the unit circle away from 1; the infinity norm is constant";
  } else if (name == "rotation-ct") {
    e.summary = "CT rotation generator with w = 1";
    e.parameters = {{"w", 1.0}};
    e.family = MatrixFamily(Mode::CT, {mat({{0.0, -1.0}, {1.0, 0.0}})});
    e.expected_strong = D;
    e.expected_weak = D;
    e.rationale = "eigenvalues on the imaginary axis give persistent oscillations";
  } else if (name == "spike-schedule") {
    e.summary = "CT scalar inclusion {0, -1}; spikes of total length ln 2 drive x(0) to x(0)/2";
    e.parameters = {{"h_max", 40}, {"total_spike_length", std::log(2.0)}};
    e.family = MatrixFamily(Mode::CT, {mat({{0.0}}), mat({{-1.0}})});
    e.expected_strong = D;
    e.expected_weak = P;
    e.rationale = "|x| is non-increasing so every trajectory converges, but the limit x(0)/2 is not in the common kernel";
  } else if (name == "column-stochastic-ct" || name == "ct-duality") {
    e.summary = name == "ct-duality" ? "CT duality pair: column-stochastic generators, dual is row-stochastic"
                                     : "CT column-stochastic generators [[-a,b],[a,-b]], [[-g,d],[g,-d]]";
    e.parameters = {{"alpha", 1.0}, {"beta", 2.0}, {"gamma", 2.0}, {"delta", 1.0}};
    e.family = detail::column_stochastic_pair(1.0, 2.0, 2.0, 1.0);
    e.expected_strong = D;
    e.expected_weak = D;
    e.expected_dual_strong = P;
    e.rationale = "vertex kernels span [2,1] and [1,2]; x1 + x2 is conserved while switching moves the state "
                  "between the two equilibria; the transposed generators share the kernel span(1)";
  } else if (name == "diag-kernels") {
    e.summary = "CT inclusion {diag(-1,0), diag(0,-1)}";
    e.family = MatrixFamily(Mode::CT, {mat({{-1.0, 0.0}, {0.0, 0.0}}), mat({{0.0, 0.0}, {0.0, -1.0}})});
    e.expected_strong = D;
    e.expected_weak = P;
    e.rationale = "each coordinate is non-increasing in modulus; the kernels are the two axes";
  } else if (name == "dt-duality") {
    e.summary = "DT pair [[a,1],[0,1]], [[a,2],[0,1]] with a = 0.5";
    e.parameters = {{"a", 0.5}};
    e.family = MatrixFamily(Mode::DT, {mat({{0.5, 1.0}, {0.0, 1.0}}), mat({{0.5, 2.0}, {0.0, 1.0}})});
    e.expected_strong = D;
    e.expected_weak = D;
    e.expected_dual_strong = P;
    e.rationale = "alternating switching from x2 = 1 settles on the 2-cycle x1 in {8/3, 10/3}; the transposes are "
                  "block lower triangular with A_as = [a]";
  } else if (name == "a11-switching") {
    e.summary = "DT pair [[a11,0],[1,1]] with a11 in {1/2, 3/4}";
    e.family = MatrixFamily(Mode::DT, {mat({{0.5, 0.0}, {1.0, 1.0}}), mat({{0.75, 0.0}, {1.0, 1.0}})});
    e.expected_strong = P;
    e.expected_weak = P;
    e.rationale = "x1 decays geometrically and x2 accumulates a finite sum; both vertices fix span(e2)";
  } else if (name == "path-consensus") {
    e.summary = "CT consensus on a 2-node path with one susceptible node per vertex";
    e.parameters = {{"nodes", 2}};
    e.family = opinion_family(path_laplacian(2), Mode::CT);
    e.expected_strong = P;
    e.expected_weak = P;
    e.rationale = "both vertices have kernel span(1) and A_as = [-1]";
  } else if (name == "kolmogorov-row") {
    e.summary = "CT row-stochastic generators {[[-1,1],[2,-2]], [[-3,3],[1,-1]]}";
    e.family = kolmogorov_family(true, {mat({{-1.0, 1.0}, {2.0, -2.0}}), mat({{-3.0, 3.0}, {1.0, -1.0}})});
    e.expected_strong = P;
    e.expected_weak = P;
    e.rationale = "irreducible generators with zero row sums share the kernel span(1)";
  } else if (name == "opinion-unbiased") {
    e.summary = "augmented opinion model, two agents, path graph, unbiased input q = 0.5 * Delta * 1";
    e.parameters = {{"agents", 2}, {"lambda", 1.0}, {"beta", 0.5}};
    const Matrix g = mat({{-1.0, 1.0}, {1.0, -1.0}});
    e.family = opinion_social_family(Vector::Ones(2), {g, g}, 1.0, Vector::Constant(2, 0.5)).family;
    e.expected_strong = P;
    e.expected_weak = P;
    e.rationale = "the unbiased input gives the common kernel span([beta 1; 1])";
  } else if (name == "plant-tuning") {
    e.summary = "plant tuning -k [[a,-a],[-a,a+b]] with a in [1,2], b in [0,1], k = 1";
    e.parameters = {{"a_min", 1.0}, {"a_max", 2.0}, {"b_min", 0.0}, {"b_max", 1.0}, {"k", 1.0}};
    e.family = plant_tuning_family(1.0, 2.0, 0.0, 1.0, 1.0);
    e.expected_strong = D;
    e.expected_weak = P;
    e.rationale = "the b = 0 vertices are singular with kernel span([1,1]) while the b = 1 vertices are Hurwitz";
  } else if (name == "persistent-input") {
    e.summary = "CT system diag(-1,-2) with constant input through B = [1,0]";
    e.family = persistent_input_augment(MatrixFamily(Mode::CT, {mat({{-1.0, 0.0}, {0.0, -2.0}})}),
                                        mat({{1.0}, {0.0}}));
    e.expected_strong = P;
    e.expected_weak = P;
    e.rationale = "the augmented matrix has the one-dimensional kernel span([1,0,1])";
  } else {
    std::string names;
    for (const auto& n : catalogue_names()) names += (names.empty() ? "" : ", ") + n;
    throw InputError("unknown example \"" + std::string(name) + "\"; available: " + names);
  }
  return e;
}

}  // namespace linconv

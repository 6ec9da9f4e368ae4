#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "family.hpp"
#include "inclusion.hpp"
#include "lasalle.hpp"
#include "linalg.hpp"
#include "lmi.hpp"
#include "lti.hpp"
#include "sim.hpp"

namespace linconv {

using Json = nlohmann::json;

inline constexpr const char* kToolName = "linconv";
inline constexpr const char* kToolVersion = "1.0.0";

// ---- plain values ----

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const std::vector<Complex>& zs) {
  Json a = Json::array();
  for (const auto& z : zs) a.push_back(Json::array({z.real(), z.imag()}));
  return a;
}

inline double number_from_json(const Json& j, const std::string& what) {
  if (!j.is_number()) throw InputError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(what + " must be finite");
  return v;
}

inline Index integer_from_json(const Json& j, const std::string& what) {
  const double v = number_from_json(j, what);
  if (v != std::floor(v) || std::abs(v) > 1e15) throw InputError(what + " must be an integer");
  return static_cast<Index>(v);
}

inline Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + " must be an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number_from_json(j[i], what);
  return v;
}

// Row-major nested arrays. An empty array is a 0x0 matrix; `cols_hint` sizes empty rows.
inline Matrix matrix_from_json(const Json& j, const std::string& what, Index cols_hint = 0) {
  if (!j.is_array()) throw InputError(what + " must be a nested array");
  const auto rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, cols_hint);
  if (!j[0].is_array()) throw InputError(what + " rows must be arrays");
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& r = j[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Index>(r.size()) != cols) throw InputError(what + " is not rectangular");
    for (Index c = 0; c < cols; ++c) m(i, c) = number_from_json(r[static_cast<std::size_t>(c)], what);
  }
  return m;
}

inline std::vector<Complex> complex_list_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + " must be an array of [re, im] pairs");
  std::vector<Complex> out;
  for (const auto& z : j) {
    if (!z.is_array() || z.size() != 2) throw InputError(what + " must be an array of [re, im] pairs");
    out.emplace_back(number_from_json(z[0], what), number_from_json(z[1], what));
  }
  return out;
}

inline Json to_json(const Tolerances& t) {
  return {{"rank_rel", t.rank_rel}, {"psd_margin", t.psd_margin}, {"residual_tol", t.residual_tol},
          {"sim_tol", t.sim_tol}};
}

inline Tolerances tolerances_from_json(const Json& j) {
  Tolerances t;
  if (!j.is_object()) return t;
  if (j.contains("rank_rel")) t.rank_rel = number_from_json(j["rank_rel"], "rank_rel");
  if (j.contains("psd_margin")) t.psd_margin = number_from_json(j["psd_margin"], "psd_margin");
  if (j.contains("residual_tol")) t.residual_tol = number_from_json(j["residual_tol"], "residual_tol");
  if (j.contains("sim_tol")) t.sim_tol = number_from_json(j["sim_tol"], "sim_tol");
  t.validate();
  return t;
}

// ---- families ----

inline Json to_json(const MatrixFamily& f) {
  Json j = {{"mode", to_string(f.mode())}};
  Json mats = Json::array();
  for (const auto& a : f.matrices()) mats.push_back(to_json(a));
  j["matrices"] = std::move(mats);
  if (!f.labels().empty()) j["labels"] = f.labels();
  if (f.euler_tau()) j["euler_tau"] = *f.euler_tau();
  return j;
}

inline MatrixFamily family_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("family file must be a JSON object");
  if (!j.contains("mode") || !j["mode"].is_string()) throw InputError("family file needs a \"mode\" string");
  if (!j.contains("matrices") || !j["matrices"].is_array()) throw InputError("family file needs a \"matrices\" array");
  const Mode mode = parse_mode(j["mode"].get<std::string>());
  std::vector<Matrix> mats;
  for (std::size_t i = 0; i < j["matrices"].size(); ++i) {
    mats.push_back(matrix_from_json(j["matrices"][i], "matrix " + std::to_string(i)));
  }
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) throw InputError("\"labels\" must be an array of strings");
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) throw InputError("\"labels\" must be an array of strings");
      labels.push_back(l.get<std::string>());
    }
  }
  MatrixFamily f(mode, std::move(mats), std::move(labels));
  if (j.contains("euler_tau")) f.set_euler_tau(number_from_json(j["euler_tau"], "euler_tau"));
  return f;
}

inline MatrixFamily parse_family(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw InputError(std::string("family file is not valid JSON: ") + e.what());
  }
  return family_from_json(j);
}

// ---- evidence ----

inline Json to_json(const SpectralReport& r) {
  return {{"mode", to_string(r.mode)},
          {"eigenvalues", to_json(r.eigenvalues)},
          {"critical_count", r.critical_count},
          {"kernel_dim", r.kernel_dim},
          {"kernel_dim_sq", r.kernel_dim_sq},
          {"offending", to_json(r.offending)},
          {"reason", r.reason}};
}

inline Json to_json(const QuadraticRecord& q) {
  Json spectra = Json::array();
  for (const auto& s : q.constraint_spectra) spectra.push_back(to_json(s));
  return {{"P", to_json(q.P)}, {"P_spectrum", to_json(q.P_spectrum)}, {"constraint_spectra", spectra}};
}

inline Json to_json(const PeriodicWitness& w) {
  Json orbit = Json::array();
  for (const auto& x : w.orbit) orbit.push_back(to_json(x));
  return {{"cycle", w.cycle}, {"dwell", w.dwell}, {"orbit", orbit}, {"recurrence", w.recurrence},
          {"separation", w.separation}};
}

inline Json evidence_to_json(const Evidence& ev) {
  return std::visit(
      [](const auto& e) -> Json {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<E, VertexSpectrumEvidence>) {
          Json j = to_json(e.report);
          j["type"] = "vertex-spectrum";
          j["vertex"] = e.vertex;
          return j;
        } else if constexpr (std::is_same_v<E, KernelMismatchEvidence>) {
          return {{"type", "kernel-mismatch"}, {"vertex", e.vertex}, {"direction", to_json(e.direction)},
                  {"common_dim", e.common_dim}};
        } else if constexpr (std::is_same_v<E, DecompositionEvidence>) {
          Json blocks = Json::array();
          for (std::size_t i = 0; i < e.decomposition.A_as.size(); ++i) {
            blocks.push_back({{"A_as", to_json(e.decomposition.A_as[i])}, {"A_r", to_json(e.decomposition.A_r[i])}});
          }
          return {{"type", "decomposition"},
                  {"T", to_json(e.decomposition.T)},
                  {"m", e.decomposition.m},
                  {"blocks", blocks},
                  {"cqlf", e.cqlf ? to_json(*e.cqlf) : Json(nullptr)}};
        } else if constexpr (std::is_same_v<E, StrongLmiEvidence>) {
          Json spectra = Json::array();
          for (const auto& s : e.constraint_spectra) spectra.push_back(to_json(s));
          return {{"type", "strong-lmi"}, {"m", e.m}, {"P", to_json(e.P)}, {"Q", to_json(e.Q)},
                  {"P_spectrum", to_json(e.P_spectrum)}, {"Q_spectrum", to_json(e.Q_spectrum)},
                  {"constraint_spectra", spectra}};
        } else if constexpr (std::is_same_v<E, WeakLmiEvidence>) {
          Json j = to_json(e.record);
          j["type"] = "weak-lmi";
          j["parameter"] = e.parameter;
          return j;
        } else if constexpr (std::is_same_v<E, WitnessEvidence>) {
          Json j = to_json(e.witness);
          j["type"] = "periodic-orbit";
          return j;
        } else if constexpr (std::is_same_v<E, ImpliedEvidence>) {
          return {{"type", "implied-by-strong"}, {"reason", e.reason}};
        } else {
          Json ps = Json::array();
          for (const auto& p : e.P) ps.push_back(to_json(p));
          return {{"type", "polyhedral"}, {"X", to_json(e.X)}, {"m", e.m}, {"P", ps}};
        }
      },
      ev);
}

inline Json to_json(const Verdict& v) {
  return {{"status", to_string(v.status)}, {"method", v.method}, {"evidence", evidence_to_json(v.evidence)}};
}

inline Json to_json(const RateEstimate& r) {
  Json j = {{"mode", to_string(r.mode)}, {"beta", r.beta}, {"c0", r.c0}, {"c1", r.c1}};
  if (r.mode == Mode::DT) j["rho"] = r.rho;
  j["bound"] = r.mode == Mode::CT ? "c0*c1/beta*exp(-beta*t)*|x1(0)|" : "c0*c1*rho^k/(1-rho)*|x1(0)|";
  if (!std::isfinite(r.beta)) j["beta"] = nullptr;
  return j;
}

inline Json report_header(const Tolerances& tol, std::uint64_t seed, Mode mode, Index n, std::size_t m) {
  return {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
          {"seed", seed},
          {"tolerances", to_json(tol)},
          {"mode", to_string(mode)},
          {"dimension", n},
          {"vertices", m}};
}

inline Json to_json(const AnalysisReport& rep, const MatrixFamily& f) {
  Json j = report_header(rep.options.tol, rep.options.seed, f.mode(), f.dim(), f.size());
  j["strong"] = to_json(rep.strong);
  j["weak"] = to_json(rep.weak);
  Json dims = Json::array();
  for (auto d : rep.ksp.kernel_dims) dims.push_back(d);
  j["kernels"] = {{"common", to_json(rep.ksp.common.basis())},
                  {"common_dim", rep.ksp.common.dim()},
                  {"vertex_dims", dims},
                  {"kernel_sharing", rep.ksp.holds}};
  Json vs = Json::array();
  for (std::size_t i = 0; i < rep.vertices.size(); ++i) {
    vs.push_back({{"vertex", i}, {"status", to_string(rep.vertices[i].status)}, {"reason", rep.vertices[i].report.reason}});
  }
  j["vertex_verdicts"] = vs;
  j["rate"] = rep.rate ? to_json(*rep.rate) : Json(nullptr);
  j["diagnostics"] = rep.diagnostics;
  return j;
}

// One certificate search by name: "cqlf", "strong-lmi", "weak-lmi" or "polyhedral" (needs a candidate X).
// The result has the report header, "certificate_method", "strong", "weak" and "diagnostics".
inline Json certify_report(const MatrixFamily& f, const std::string& method, const Tolerances& tol = {},
                           const std::optional<Matrix>& candidate = std::nullopt, std::uint64_t seed = 0,
                           unsigned threads = 1) {
  Json j = report_header(tol, seed, f.mode(), f.dim(), f.size());
  j["certificate_method"] = method;
  Verdict strong, weak;
  std::vector<std::string> diag;
  const SolverOptions opt;
  if (method == "cqlf" || method == "strong-lmi") {
    const KspResult ksp = ksp_check(f, tol);
    if (!ksp.holds) {
      diag.push_back("kernel sharing fails at vertex " + std::to_string(*ksp.violating_vertex));
    } else if (method == "cqlf") {
      const FamilyDecomposition d = decompose_family_with(f, ksp.common);
      if (d.m == f.dim()) {
        strong = {Status::Proven, "decomposition+cqlf", DecompositionEvidence{d, std::nullopt}};
      } else {
        LmiAttempt a = cqlf_stability(d.A_as, f.mode(), tol, opt);
        if (a.status == FeasibilityStatus::Feasible) {
          strong = {Status::Proven, "decomposition+cqlf", DecompositionEvidence{d, record_quadratic(a.problem, a.result.values)}};
        } else {
          diag.push_back(std::string("common quadratic function: ") + to_string(a.status));
        }
      }
    } else {
      LmiAttempt a = solve_once(strong_lmi_problem(f.matrices(), f.mode(), ksp.common, tol), tol, opt);
      if (a.status == FeasibilityStatus::Feasible) {
        const Matrix p = expand_rank_reduced(a.result.values[0], ksp.common);
        strong = {Status::Proven, "strong-lmi", record_strong_lmi(f, p, a.result.values[1], ksp.common.dim())};
      } else {
        diag.push_back(std::string("rank-reduced strong LMI: ") + to_string(a.status));
      }
    }
  } else if (method == "weak-lmi") {
    LmiAttempt a = weak_lmi_attempt(f, tol, opt, threads);
    if (a.status == FeasibilityStatus::Feasible) {
      weak = {Status::Proven, "weak-lmi", WeakLmiEvidence{*a.parameter, record_quadratic(a.problem, a.result.values)}};
    } else {
      diag.push_back(std::string("weak LMI grid: ") + to_string(a.status));
    }
  } else if (method == "polyhedral") {
    if (!candidate) throw InputError("the polyhedral method needs a candidate X");
    const Matrix& x = *candidate;
    const PolyhedralReport r = verify_polyhedral_strong(f, x, tol);
    if (r.pass) {
      strong = {Status::Proven, "polyhedral", PolyhedralEvidence{x, r.P, r.m}};
    } else {
      diag.push_back("polyhedral candidate rejected: " + r.reason);
    }
  } else {
    throw InputError("unknown method '" + method + "'");
  }
  j["strong"] = to_json(strong);
  j["weak"] = to_json(weak);
  j["diagnostics"] = diag;
  return j;
}

// ---- independent verification ----

struct VerifyResult {
  bool pass = true;
  std::vector<std::string> failures;
  std::vector<std::string> checked;
};

namespace detail {

constexpr double kMatch = 1e-9;

class Checker {
 public:
  explicit Checker(VerifyResult& r) : r_(r) {}

  void fail(const std::string& what) {
    r_.pass = false;
    r_.failures.push_back(what);
  }
  bool expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
    return ok;
  }
  bool close(double recorded, double actual, double scale, const std::string& what) {
    return expect(std::abs(recorded - actual) <= kMatch * std::max(1.0, scale), what + " does not match");
  }
  bool close(const Matrix& recorded, const Matrix& actual, const std::string& what) {
    if (recorded.rows() != actual.rows() || recorded.cols() != actual.cols()) {
      fail(what + " has the wrong shape");
      return false;
    }
    if (recorded.size() == 0) return true;
    const double scale = std::max(1.0, max_abs(actual));
    return expect(max_abs(recorded - actual) <= kMatch * scale, what + " does not match");
  }
  bool close(const Vector& recorded, const Vector& actual, const std::string& what) {
    return close(Matrix(recorded), Matrix(actual), what);
  }
  bool symmetric(const Matrix& m, const std::string& what) {
    if (m.size() == 0) return true;
    return expect(max_abs(m - m.transpose()) <= 1e-12 * std::max(1.0, max_abs(m)),
                  what + " is not symmetric");
  }

 private:
  VerifyResult& r_;
};

inline double spectral_scale(const Matrix& m) {
  return m.size() ? std::max(1.0, max_abs(sym_eigenvalues(m))) : 1.0;
}

inline void check_spectrum(Checker& c, const Json& recorded, const Matrix& m, const std::string& what) {
  const Vector actual = sym_eigenvalues(m);
  c.close(vector_from_json(recorded, what), actual, what);
}

inline void verify_vertex_spectrum(Checker& c, const Json& e, const MatrixFamily& f, const Tolerances& tol) {
  const Index v = integer_from_json(e.at("vertex"), "vertex");
  if (!c.expect(v >= 0 && v < static_cast<Index>(f.size()), "vertex index out of range")) return;
  const Matrix& a = f[static_cast<std::size_t>(v)];
  const LtiVerdict lv = lti_convergent(a, f.mode(), tol);
  c.expect(lv.status == Status::Disproven, "vertex " + std::to_string(v) + " is not spectrally non-convergent");
  const auto ev = complex_list_from_json(e.at("eigenvalues"), "eigenvalues");
  const double scale = 1.0 + induced_norm_1(a);
  if (c.expect(ev.size() == lv.report.eigenvalues.size(), "eigenvalue count does not match")) {
    for (std::size_t i = 0; i < ev.size(); ++i) {
      c.expect(std::abs(ev[i] - lv.report.eigenvalues[i]) <= kMatch * scale, "eigenvalue " + std::to_string(i) + " does not match");
    }
  }
  const auto off = complex_list_from_json(e.at("offending"), "offending");
  if (c.expect(off.size() == lv.report.offending.size() && !off.empty(), "offending eigenvalues do not match")) {
    for (std::size_t i = 0; i < off.size(); ++i) {
      c.expect(std::abs(off[i] - lv.report.offending[i]) <= kMatch * scale, "offending eigenvalue does not match");
    }
  }
  c.expect(integer_from_json(e.at("critical_count"), "critical_count") == lv.report.critical_count, "critical count does not match");
  c.expect(integer_from_json(e.at("kernel_dim"), "kernel_dim") == lv.report.kernel_dim, "kernel dimension does not match");
  c.expect(integer_from_json(e.at("kernel_dim_sq"), "kernel_dim_sq") == lv.report.kernel_dim_sq, "squared kernel dimension does not match");
}

inline void verify_kernel_mismatch(Checker& c, const Json& e, const MatrixFamily& f, const Tolerances& tol) {
  const Index v = integer_from_json(e.at("vertex"), "vertex");
  if (!c.expect(v >= 0 && v < static_cast<Index>(f.size()), "vertex index out of range")) return;
  const Vector d = vector_from_json(e.at("direction"), "direction");
  if (!c.expect(d.size() == f.dim(), "direction has the wrong dimension")) return;
  const Matrix& a = f[static_cast<std::size_t>(v)];
  c.expect(std::abs(d.norm() - 1.0) <= kMatch, "direction is not a unit vector");
  c.expect((critical_shift(a, f.mode()) * d).norm() <= kMatch * (1.0 + induced_norm_1(a)),
           "direction is not in the vertex kernel");
  const Subspace common = common_fixed_kernel(f, tol);
  c.expect(integer_from_json(e.at("common_dim"), "common_dim") == common.dim(), "common kernel dimension does not match");
  c.expect((common.basis().transpose() * d).norm() <= 1e-6, "direction is not orthogonal to the common kernel");
}

inline Matrix block_shape(const Matrix& as, const Matrix& r, Index m, Mode mode) {
  const Index k = as.rows();
  Matrix s = Matrix::Zero(k + m, k + m);
  s.topLeftCorner(k, k) = as;
  s.bottomLeftCorner(m, k) = r;
  if (mode == Mode::DT) s.bottomRightCorner(m, m).setIdentity();
  return s;
}

inline void verify_quadratic(Checker& c, const Json& q, const LmiProblem& prob, const Tolerances& tol,
                             const std::string& what) {
  const Index r = prob.variables().front().size;
  const Matrix p = matrix_from_json(q.at("P"), what + " P", r);
  if (!c.expect(p.rows() == r && p.cols() == r, what + " P has the wrong size")) return;
  c.symmetric(p, what + " P");
  check_spectrum(c, q.at("P_spectrum"), p, what + " P spectrum");
  const Json& spectra = q.at("constraint_spectra");
  if (!c.expect(spectra.is_array() && spectra.size() == prob.constraints().size(), what + " constraint spectra count")) return;
  const std::vector<Matrix> values{p};
  for (std::size_t j = 0; j < spectra.size(); ++j) {
    check_spectrum(c, spectra[j], prob.evaluate(static_cast<Index>(j), values), what + " constraint " + std::to_string(j) + " spectrum");
  }
  const ResidualReport rep = verify_lmi(prob, values, tol);
  c.expect(rep.pass, what + " inequalities fail the eigenvalue check");
}

inline void verify_decomposition(Checker& c, const Json& e, const MatrixFamily& f, const Tolerances& tol) {
  const Index n = f.dim();
  const Index m = integer_from_json(e.at("m"), "m");
  if (!c.expect(m >= 0 && m <= n, "m out of range")) return;
  const Index k = n - m;
  const Matrix t = matrix_from_json(e.at("T"), "T");
  if (!c.expect(t.rows() == n && t.cols() == n, "T has the wrong size")) return;
  c.expect(max_abs(t.transpose() * t - Matrix::Identity(n, n)) <= kMatch, "T is not orthonormal");
  const Json& blocks = e.at("blocks");
  if (!c.expect(blocks.is_array() && blocks.size() == f.size(), "block count does not match the family")) return;
  std::vector<Matrix> as;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Matrix a_as = matrix_from_json(blocks[i].at("A_as"), "A_as", k);
    const Matrix a_r = matrix_from_json(blocks[i].at("A_r"), "A_r", k);
    if (!c.expect(a_as.rows() == k && a_as.cols() == k && a_r.rows() == m && a_r.cols() == k,
                  "block " + std::to_string(i) + " has the wrong shape")) {
      return;
    }
    const Matrix b = t.transpose() * f[i] * t;
    const double scale = std::max(1.0, induced_norm_1(f[i]));
    c.close(a_as, Matrix(b.topLeftCorner(k, k)), "A_as of vertex " + std::to_string(i));
    c.close(a_r, Matrix(b.bottomLeftCorner(m, k)), "A_r of vertex " + std::to_string(i));
    c.expect(max_abs(b - block_shape(a_as, a_r, m, f.mode())) <= tol.residual_tol * scale,
             "vertex " + std::to_string(i) + " is not in block form");
    as.push_back(a_as);
  }
  if (k == 0) {
    c.expect(e.at("cqlf").is_null(), "unexpected quadratic function for empty A_as blocks");
    return;
  }
  if (!c.expect(e.at("cqlf").is_object(), "missing quadratic function for the A_as blocks")) return;
  verify_quadratic(c, e.at("cqlf"), cqlf_problem(as, f.mode()), tol, "common quadratic function");
}

inline void verify_strong_lmi(Checker& c, const Json& e, const MatrixFamily& f, const Tolerances& tol) {
  const Index n = f.dim();
  const Index m = integer_from_json(e.at("m"), "m");
  const Matrix p = matrix_from_json(e.at("P"), "P");
  const Matrix q = matrix_from_json(e.at("Q"), "Q");
  if (!c.expect(p.rows() == n && p.cols() == n && q.rows() == n && q.cols() == n, "P or Q has the wrong size")) return;
  c.symmetric(p, "P");
  c.symmetric(q, "Q");
  check_spectrum(c, e.at("P_spectrum"), p, "P spectrum");
  check_spectrum(c, e.at("Q_spectrum"), q, "Q spectrum");
  c.expect(m == common_fixed_kernel(f, tol).dim(), "m does not match the common kernel dimension");
  const double s = std::max(spectral_scale(p), spectral_scale(q));
  const Vector pe = sym_eigenvalues(p);
  for (Index i = 0; i < n; ++i) {
    if (i < m) {
      c.expect(std::abs(pe(i)) <= kMatch * s, "P does not have rank n - m");
    } else {
      c.expect(pe(i) >= tol.psd_margin * s, "P is not positive on the complement of the common kernel");
    }
  }
  const double qmin = sym_eigenvalues(q).minCoeff();
  c.expect(qmin >= tol.psd_margin * s, "Q is not positive definite");
  const double r = std::max(0.0, m < n ? std::min(pe(m), qmin) : qmin);
  const Json& spectra = e.at("constraint_spectra");
  if (!c.expect(spectra.is_array() && spectra.size() == f.size(), "constraint spectra count")) return;
  const Matrix id = Matrix::Identity(n, n);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Matrix& a = f[i];
    Matrix cm;
    double data;
    if (f.mode() == Mode::DT) {
      cm = a.transpose() * p * a - p + (a - id).transpose() * q * (a - id);
      data = norm2(a) * norm2(a) + 1.0 + norm2(a - id) * norm2(a - id);
    } else {
      cm = a.transpose() * p + p * a + a.transpose() * q * a;
      data = 2.0 * norm2(a) + norm2(a) * norm2(a);
    }
    check_spectrum(c, spectra[i], cm, "constraint " + std::to_string(i) + " spectrum");
    c.expect(max_eigenvalue_sym(cm) <= tol.residual_tol * std::max(1.0, r * data),
             "constraint " + std::to_string(i) + " is not negative semidefinite");
  }
}

inline void verify_weak_lmi(Checker& c, const Json& e, const MatrixFamily& f, const Tolerances& tol) {
  const double param = number_from_json(e.at("parameter"), "parameter");
  const bool ok = f.mode() == Mode::DT ? (param > 0 && param < 1) : param > 0;
  if (!c.expect(ok, "scan parameter out of range")) return;
  verify_quadratic(c, e, weak_lmi_problem(f.matrices(), f.mode(), param, tol), tol, "weak quadratic function");
}

inline void verify_witness(Checker& c, const Json& e, const MatrixFamily& f) {
  std::vector<Index> cycle;
  for (const auto& v : e.at("cycle")) {
    const Index i = integer_from_json(v, "cycle entry");
    if (!c.expect(i >= 0 && i < static_cast<Index>(f.size()), "cycle entry out of range")) return;
    cycle.push_back(i);
  }
  if (!c.expect(!cycle.empty(), "empty cycle")) return;
  const double dwell = number_from_json(e.at("dwell"), "dwell");
  if (!c.expect(dwell > 0 && (f.mode() == Mode::CT || dwell == std::floor(dwell)), "invalid dwell")) return;
  const Json& orbit = e.at("orbit");
  if (!c.expect(orbit.is_array() && orbit.size() == cycle.size() + 1, "orbit length does not match the cycle")) return;
  const Vector x0 = vector_from_json(orbit[0], "orbit state");
  if (!c.expect(x0.size() == f.dim(), "orbit state has the wrong dimension")) return;
  const WitnessConfig cfg;
  const OrbitCheck chk = check_periodic_orbit(f, cycle, dwell, x0, cfg.periods);
  for (std::size_t k = 0; k < orbit.size(); ++k) {
    c.close(vector_from_json(orbit[k], "orbit state"), chk.orbit[k], "orbit state " + std::to_string(k));
  }
  c.close(number_from_json(e.at("recurrence"), "recurrence"), chk.recurrence, 0.0, "recurrence");
  c.close(number_from_json(e.at("separation"), "separation"), chk.separation, 1.0, "separation");
  c.expect(chk.recurrence <= cfg.recurrence_tol, "orbit does not recur");
  c.expect(chk.separation >= cfg.separation_tol, "orbit is constant");
}

inline void verify_polyhedral(Checker& c, const Json& e, const MatrixFamily& f, const Tolerances& tol) {
  const Matrix x = matrix_from_json(e.at("X"), "X");
  const Index n = f.dim();
  if (!c.expect(x.rows() == n && x.cols() >= n, "X has the wrong shape")) return;
  c.expect(rank_and_kernel(x.transpose(), tol).rank == n, "X is not full row rank");
  const Index r = x.cols();
  const Index m = integer_from_json(e.at("m"), "m");
  if (!c.expect(m >= 0 && m <= r, "m out of range")) return;
  const Index k = r - m;
  const Json& ps = e.at("P");
  if (!c.expect(ps.is_array() && ps.size() == f.size(), "P count does not match the family")) return;
  const double scale = std::max(1.0, f.max_norm_1()) * std::max(1.0, max_abs(x));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Matrix p = matrix_from_json(ps[i], "P_i");
    if (!c.expect(p.rows() == r && p.cols() == r, "P_i has the wrong size")) return;
    Matrix tail = Matrix::Zero(r, m);
    if (f.mode() == Mode::DT) tail.bottomRows(m).setIdentity();
    c.expect(m == 0 || max_abs(p.rightCols(m) - tail) == 0.0, "P_i trailing columns are not [0; I] or 0");
    c.expect((f[i] * x - x * p).norm() <= tol.residual_tol * scale, "A_i X = X P_i fails");
    const Matrix pas = p.topLeftCorner(k, k);
    c.expect(k == 0 || (f.mode() == Mode::DT ? induced_norm_1(pas) < 1.0 : lozinski_measure_1(pas) < 0.0),
             "P_i^as is not contractive");
  }
}

inline void verify_ksp_holds(Checker& c, const MatrixFamily& f, const Tolerances& tol) {
  c.expect(ksp_check(f, tol).holds, "kernel sharing does not hold");
}

}  // namespace detail

// Re-derives every claim in a report from the family using eigenvalue and kernel computations.
inline VerifyResult verify_report(const Json& report, const MatrixFamily& f) {
  VerifyResult out;
  detail::Checker c(out);
  try {
    if (!report.is_object()) throw InputError("report must be a JSON object");
    const Tolerances tol = tolerances_from_json(report.value("tolerances", Json::object()));
    if (report.contains("mode")) c.expect(report["mode"] == to_string(f.mode()), "report mode does not match the family");
    Status statuses[2] = {Status::Unknown, Status::Unknown};
    const char* names[2] = {"strong", "weak"};
    for (int which = 0; which < 2; ++which) {
      const std::string name = names[which];
      if (!report.contains(name)) continue;
      const Json& v = report[name];
      const Status st = parse_status(v.at("status").get<std::string>());
      statuses[which] = st;
      if (st == Status::Unknown) continue;
      const Json& e = v.at("evidence");
      if (!c.expect(e.is_object() && e.contains("type"), name + " verdict carries no evidence")) continue;
      const std::string type = e["type"].get<std::string>();
      const std::string method = v.value("method", "");
      out.checked.push_back(name + ":" + type);
      if (type == "vertex-spectrum") {
        c.expect(st == Status::Disproven, name + ": spectral evidence only disproves");
        detail::verify_vertex_spectrum(c, e, f, tol);
      } else if (type == "kernel-mismatch") {
        c.expect(st == Status::Disproven && which == 0, "kernel mismatch only disproves strong convergence");
        detail::verify_kernel_mismatch(c, e, f, tol);
      } else if (type == "periodic-orbit") {
        c.expect(st == Status::Disproven, name + ": a periodic orbit only disproves");
        detail::verify_witness(c, e, f);
      } else if (type == "decomposition") {
        c.expect(st == Status::Proven && which == 0, "decomposition evidence only proves strong convergence");
        detail::verify_decomposition(c, e, f, tol);
      } else if (type == "strong-lmi") {
        c.expect(st == Status::Proven && which == 0, "strong LMI evidence only proves strong convergence");
        detail::verify_strong_lmi(c, e, f, tol);
      } else if (type == "polyhedral") {
        c.expect(st == Status::Proven && which == 0, "polyhedral evidence only proves strong convergence");
        detail::verify_polyhedral(c, e, f, tol);
      } else if (type == "weak-lmi") {
        c.expect(st == Status::Proven, name + ": weak LMI evidence only proves");
        detail::verify_weak_lmi(c, e, f, tol);
        if (which == 0) detail::verify_ksp_holds(c, f, tol);
      } else if (type == "implied-by-strong") {
        c.expect(which == 1 && st == Status::Proven, "only weak convergence is implied by strong convergence");
      } else {
        c.fail(name + ": unknown evidence type \"" + type + "\"");
      }
    }
    c.expect(!(statuses[0] == Status::Proven && statuses[1] == Status::Disproven),
             "strong proven together with weak disproven is impossible");
    if (report.contains("weak") && report["weak"].value("evidence", Json()).is_object() &&
        report["weak"]["evidence"].value("type", "") == "implied-by-strong") {
      c.expect(statuses[0] == Status::Proven, "weak verdict relies on an unproven strong verdict");
    }
    if (report.contains("kernels") && report["kernels"].is_object()) {
      const Json& k = report["kernels"];
      const Subspace common = common_fixed_kernel(f, tol);
      const Matrix basis = matrix_from_json(k.at("common"), "common kernel basis", integer_from_json(k.at("common_dim"), "common_dim"));
      c.expect(integer_from_json(k.at("common_dim"), "common_dim") == common.dim(), "common kernel dimension does not match");
      if (c.expect(basis.rows() == f.dim() && basis.cols() == common.dim(), "common kernel basis has the wrong shape")) {
        c.expect(max_abs(basis.transpose() * basis - Matrix::Identity(basis.cols(), basis.cols())) <= detail::kMatch,
                 "common kernel basis is not orthonormal");
        for (const auto& a : f.matrices()) {
          c.expect(max_abs(critical_shift(a, f.mode()) * basis) <= detail::kMatch * (1.0 + induced_norm_1(a)),
                   "common kernel basis is not fixed by every vertex");
        }
      }
      const KspResult ksp = ksp_check(f, tol);
      c.expect(k.at("kernel_sharing").get<bool>() == ksp.holds, "kernel sharing flag does not match");
      const Json& dims = k.at("vertex_dims");
      if (c.expect(dims.is_array() && dims.size() == f.size(), "vertex kernel dimension count does not match")) {
        for (std::size_t i = 0; i < f.size(); ++i) {
          c.expect(integer_from_json(dims[i], "vertex kernel dimension") == ksp.kernel_dims[i],
                   "kernel dimension of vertex " + std::to_string(i) + " does not match");
        }
      }
    }
    if (report.contains("rate") && report["rate"].is_object() && report.contains("strong")) {
      const Json& e = report["strong"]["evidence"];
      std::optional<RateEstimate> expected;
      const KspResult ksp = ksp_check(f, tol);
      const FamilyDecomposition d = decompose_family_with(f, ksp.common);
      const Index k = f.dim() - d.m;
      if (e.is_object() && e.value("type", "") == "decomposition") {
        expected = rate_from_quadratic(f, d, k ? matrix_from_json(e.at("cqlf").at("P"), "P") : Matrix());
      } else if (e.is_object() && e.value("type", "") == "strong-lmi") {
        const Matrix w = d.T.leftCols(k);
        expected = rate_from_quadratic(f, d, Matrix(w.transpose() * matrix_from_json(e.at("P"), "P") * w));
      }
      if (c.expect(expected.has_value(), "rate estimate without a quadratic certificate")) {
        const Json& r = report["rate"];
        if (!r.at("beta").is_null()) c.close(number_from_json(r.at("beta"), "beta"), expected->beta, expected->beta, "beta");
        c.close(number_from_json(r.at("c0"), "c0"), expected->c0, expected->c0, "c0");
        c.close(number_from_json(r.at("c1"), "c1"), expected->c1, expected->c1, "c1");
        if (f.mode() == Mode::DT) c.close(number_from_json(r.at("rho"), "rho"), expected->rho, 1.0, "rho");
      }
    }
  } catch (const Json::exception& e) {
    c.fail(std::string("malformed report: ") + e.what());
  } catch (const Error& e) {
    c.fail(std::string("malformed report: ") + e.what());
  }
  return out;
}

// ---- trajectories and other command outputs ----

inline Json to_json(const Trajectory& t) {
  Json j = {{"mode", to_string(t.mode)}, {"samples", t.states.size()}, {"converged", t.converged}};
  j["t_final"] = t.times.back();
  j["x_final"] = to_json(t.states.back());
  j["limit"] = t.limit ? to_json(*t.limit) : Json(nullptr);
  return j;
}

inline Json to_json(const ResidualDiagnostics& d) {
  return {{"pointwise_final", d.pointwise.back()},
          {"pointwise_max_tail", *std::max_element(d.pointwise.begin() + static_cast<std::ptrdiff_t>(d.pointwise.size() / 2), d.pointwise.end())},
          {"running_average_final", d.running_average.back()},
          {"averaged_weight", to_json(d.averaged_weight)},
          {"averaged_residual", d.averaged_residual}};
}

inline Json to_json(const LaSalleSet& s) {
  Json comps = Json::array();
  for (const auto& c : s.components) comps.push_back({{"dim", c.dim()}, {"basis", to_json(c.basis())}});
  return {{"components", comps}, {"provenance", s.provenance}};
}

}  // namespace linconv

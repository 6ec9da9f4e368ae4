#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "verdict.hpp"

namespace linconv {

// Vertices A_1..A_M of a polytopic difference (DT) or differential (CT) inclusion.
class MatrixFamily {
 public:
  MatrixFamily() = default;

  MatrixFamily(Mode mode, std::vector<Matrix> matrices, std::vector<std::string> labels = {})
      : mode_(mode), matrices_(std::move(matrices)), labels_(std::move(labels)) {
    if (matrices_.empty()) throw InputError("a family needs at least one matrix");
    const Index n = matrices_.front().rows();
    for (std::size_t i = 0; i < matrices_.size(); ++i) {
      const Matrix& a = matrices_[i];
      if (a.rows() != a.cols()) throw InputError("matrix " + std::to_string(i) + " is not square");
      if (a.rows() != n) throw InputError("matrix " + std::to_string(i) + " has a different dimension");
      require_finite(a, "matrix " + std::to_string(i));
    }
    if (n == 0) throw InputError("matrices must have at least one row");
    if (!labels_.empty() && labels_.size() != matrices_.size()) {
      throw InputError("label count does not match matrix count");
    }
  }

  Mode mode() const { return mode_; }
  Index dim() const { return matrices_.front().rows(); }
  std::size_t size() const { return matrices_.size(); }
  const std::vector<Matrix>& matrices() const { return matrices_; }
  const Matrix& operator[](std::size_t i) const { return matrices_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }

  // Step size of the Euler map this family was derived from, if any.
  const std::optional<double>& euler_tau() const { return euler_tau_; }
  void set_euler_tau(double tau) { euler_tau_ = tau; }

  Matrix at(const Vector& w) const {
    check_weight(w);
    Matrix a = Matrix::Zero(dim(), dim());
    for (std::size_t i = 0; i < matrices_.size(); ++i) a += w(static_cast<Index>(i)) * matrices_[i];
    return a;
  }

  void check_weight(const Vector& w) const {
    if (w.size() != static_cast<Index>(size())) {
      throw InputError("weight has " + std::to_string(w.size()) + " entries, family has " +
                       std::to_string(size()) + " vertices");
    }
    if (!w.allFinite() || (w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > 1e-12) {
      throw InputError("weight is not in the unit simplex");
    }
  }

  double max_norm_1() const {
    double s = 0.0;
    for (const auto& a : matrices_) s = std::max(s, induced_norm_1(a));
    return s;
  }

  friend bool operator==(const MatrixFamily& x, const MatrixFamily& y) {
    if (x.mode_ != y.mode_ || x.matrices_.size() != y.matrices_.size() || x.labels_ != y.labels_) return false;
    for (std::size_t i = 0; i < x.matrices_.size(); ++i) {
      if (x.matrices_[i].rows() != y.matrices_[i].rows() || x.matrices_[i] != y.matrices_[i]) return false;
    }
    return true;
  }

 private:
  Mode mode_ = Mode::DT;
  std::vector<Matrix> matrices_;
  std::vector<std::string> labels_;
  std::optional<double> euler_tau_;
};

inline MatrixFamily dual_family(const MatrixFamily& f) {
  std::vector<Matrix> t;
  for (const auto& a : f.matrices()) t.push_back(a.transpose());
  return MatrixFamily(f.mode(), std::move(t), f.labels());
}

inline MatrixFamily euler_family(const MatrixFamily& f, double tau) {
  if (f.mode() != Mode::CT) throw InputError("euler_family needs a continuous-time family");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("euler_family: tau must be positive");
  std::vector<Matrix> m;
  for (const auto& a : f.matrices()) m.push_back(Matrix::Identity(a.rows(), a.cols()) + tau * a);
  MatrixFamily out(Mode::DT, std::move(m), f.labels());
  out.set_euler_tau(tau);
  return out;
}

}  // namespace linconv

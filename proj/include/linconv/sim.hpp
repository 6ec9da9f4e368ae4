#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "family.hpp"
#include "linalg.hpp"

namespace linconv {

class SwitchingSignal {
 public:
  struct Constant {
    Vector w;
  };
  // Vertex indices applied in turn, each for `dwell` steps (DT, integral) or time units (CT).
  struct VertexCycle {
    std::vector<Index> sequence;
    double dwell = 1.0;
  };
  // Independent draws per dwell interval: a uniformly chosen vertex, or a Dirichlet(1,..,1) weight.
  struct IidRandom {
    std::uint64_t seed = 0;
    bool dirichlet = false;
    double dwell = 1.0;
  };
  // (duration, weight) pairs; the last weight is held after the list ends.
  struct Explicit {
    std::vector<std::pair<double, Vector>> segments;
  };
  using Kind = std::variant<Constant, VertexCycle, IidRandom, Explicit>;

  SwitchingSignal() : kind_(Constant{}) {}
  explicit SwitchingSignal(Kind k) : kind_(std::move(k)) {}

  static SwitchingSignal constant(Vector w) { return SwitchingSignal(Constant{std::move(w)}); }
  static SwitchingSignal cycle(std::vector<Index> seq, double dwell = 1.0) {
    return SwitchingSignal(VertexCycle{std::move(seq), dwell});
  }
  static SwitchingSignal random_vertex(std::uint64_t seed, double dwell = 1.0) {
    return SwitchingSignal(IidRandom{seed, false, dwell});
  }
  static SwitchingSignal random_dirichlet(std::uint64_t seed, double dwell = 1.0) {
    return SwitchingSignal(IidRandom{seed, true, dwell});
  }
  static SwitchingSignal explicit_segments(std::vector<std::pair<double, Vector>> segs) {
    return SwitchingSignal(Explicit{std::move(segs)});
  }

  const Kind& kind() const { return kind_; }

  void validate(std::size_t vertices, Mode mode) const {
    auto check_duration = [&](double d) {
      if (!(d > 0.0) || !std::isfinite(d)) throw InputError("signal durations must be positive and finite");
      if (mode == Mode::DT && d != std::floor(d)) throw InputError("discrete-time durations must be whole steps");
    };
    auto check_w = [&](const Vector& w) {
      if (w.size() != static_cast<Index>(vertices) || !w.allFinite() || (w.array() < 0.0).any() ||
          std::abs(w.sum() - 1.0) > 1e-12) {
        throw InputError("signal weight is not in the unit simplex of the family");
      }
    };
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            check_w(k.w);
          } else if constexpr (std::is_same_v<K, VertexCycle>) {
            if (k.sequence.empty()) throw InputError("vertex cycle is empty");
            for (Index i : k.sequence) {
              if (i < 0 || i >= static_cast<Index>(vertices)) throw InputError("vertex index out of range");
            }
            check_duration(k.dwell);
          } else if constexpr (std::is_same_v<K, IidRandom>) {
            check_duration(k.dwell);
          } else {
            if (k.segments.empty()) throw InputError("explicit signal has no segments");
            for (const auto& [d, w] : k.segments) {
              check_duration(d);
              check_w(w);
            }
          }
        },
        kind_);
  }

  struct Segment {
    double duration = std::numeric_limits<double>::infinity();
    Vector w;
    long id = 0;  // distinguishes segments for caching
  };

  // Sequential reader over the piecewise-constant segments.
  class Cursor {
   public:
    Cursor(const SwitchingSignal& s, std::size_t vertices) : sig_(&s), m_(vertices) {
      if (const auto* r = std::get_if<IidRandom>(&s.kind_)) rng_.seed(r->seed);
    }

    Segment next() {
      Segment seg;
      seg.id = count_++;
      std::visit(
          [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Constant>) {
              seg.w = k.w;
            } else if constexpr (std::is_same_v<K, VertexCycle>) {
              seg.duration = k.dwell;
              seg.w = unit(k.sequence[static_cast<std::size_t>(seg.id) % k.sequence.size()]);
            } else if constexpr (std::is_same_v<K, IidRandom>) {
              seg.duration = k.dwell;
              if (k.dirichlet) {
                std::exponential_distribution<double> e(1.0);
                seg.w.resize(static_cast<Index>(m_));
                for (Index i = 0; i < seg.w.size(); ++i) seg.w(i) = e(rng_) + 1e-300;
                seg.w /= seg.w.sum();
              } else {
                std::uniform_int_distribution<std::size_t> u(0, m_ - 1);
                seg.w = unit(static_cast<Index>(u(rng_)));
              }
            } else {
              const auto idx = static_cast<std::size_t>(seg.id);
              if (idx < k.segments.size()) {
                seg.duration = k.segments[idx].first;
                seg.w = k.segments[idx].second;
              } else {
                seg.w = k.segments.back().second;
              }
            }
          },
          sig_->kind_);
      return seg;
    }

   private:
    Vector unit(Index i) const {
      Vector w = Vector::Zero(static_cast<Index>(m_));
      w(i) = 1.0;
      return w;
    }
    const SwitchingSignal* sig_;
    std::size_t m_;
    long count_ = 0;
    std::mt19937_64 rng_;
  };

 private:
  Kind kind_;
};

struct Trajectory {
  Mode mode = Mode::DT;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> weights;           // weight in effect from each sample onward
  std::vector<Vector> weight_integrals;  // sum_{j<k} w(j) or the integral of w over [0, t_k]
  SwitchingSignal signal;
  std::optional<Vector> limit;
  bool converged = false;
};

// Cauchy tail test: the trailing `window` samples stay within tol * max(1, |x_final|) of the final state.
inline std::optional<Vector> detect_limit(const Trajectory& traj, std::size_t window, double tol) {
  const std::size_t n = traj.states.size();
  if (window == 0 || n <= window) throw PreconditionError("trajectory is not longer than the window");
  const Vector& last = traj.states.back();
  if (!last.allFinite()) return std::nullopt;
  const double bound = tol * std::max(1.0, last.norm());
  for (std::size_t k = n - 1 - window; k < n; ++k) {
    if (!traj.states[k].allFinite() || (traj.states[k] - last).norm() > bound) return std::nullopt;
  }
  return last;
}

inline std::size_t default_window(std::size_t samples) { return std::max<std::size_t>(1, samples / 10); }

inline void finish_trajectory(Trajectory& t, const Tolerances& tol) {
  if (t.states.size() > 1) {
    t.limit = detect_limit(t, default_window(t.states.size()), tol.sim_tol);
    t.converged = t.limit.has_value();
  }
}

inline Trajectory simulate_dt(const MatrixFamily& f, const SwitchingSignal& sig, const Vector& x0, Index steps,
                              const Tolerances& tol = {}) {
  if (f.mode() != Mode::DT) throw InputError("simulate_dt needs a discrete-time family");
  if (steps < 1) throw InputError("simulate_dt needs at least one step");
  if (x0.size() != f.dim()) throw InputError("x0 has the wrong dimension");
  require_finite(x0, "x0");
  sig.validate(f.size(), Mode::DT);
  Trajectory t;
  t.mode = Mode::DT;
  t.signal = sig;
  SwitchingSignal::Cursor cur(sig, f.size());
  auto seg = cur.next();
  double left = seg.duration;
  Matrix a = f.at(seg.w);
  Vector x = x0;
  Vector acc = Vector::Zero(static_cast<Index>(f.size()));
  for (Index k = 0; k <= steps; ++k) {
    if (left <= 0) {
      seg = cur.next();
      left = seg.duration;
      a = f.at(seg.w);
    }
    t.times.push_back(static_cast<double>(k));
    t.states.push_back(x);
    t.weights.push_back(seg.w);
    t.weight_integrals.push_back(acc);
    if (k == steps) break;
    x = a * x;
    acc += seg.w;
    left -= 1.0;
  }
  finish_trajectory(t, tol);
  return t;
}

inline Trajectory simulate_ct(const MatrixFamily& f, const SwitchingSignal& sig, const Vector& x0, double t_end,
                              double sample_dt, const Tolerances& tol = {}) {
  if (f.mode() != Mode::CT) throw InputError("simulate_ct needs a continuous-time family");
  if (!(t_end > 0.0) || !(sample_dt > 0.0) || !std::isfinite(t_end) || !std::isfinite(sample_dt)) {
    throw InputError("simulate_ct needs positive horizon and sample spacing");
  }
  if (x0.size() != f.dim()) throw InputError("x0 has the wrong dimension");
  require_finite(x0, "x0");
  sig.validate(f.size(), Mode::CT);
  const auto samples = static_cast<Index>(std::floor(t_end / sample_dt + 1e-9));
  std::vector<double> grid;
  for (Index k = 0; k <= samples; ++k) grid.push_back(static_cast<double>(k) * sample_dt);
  if (t_end - grid.back() > 1e-12 * t_end) grid.push_back(t_end);

  Trajectory tr;
  tr.mode = Mode::CT;
  tr.signal = sig;
  SwitchingSignal::Cursor cur(sig, f.size());
  auto seg = cur.next();
  double seg_end = seg.duration;
  Matrix a = f.at(seg.w);
  std::optional<Matrix> cached;  // exp(A * sample_dt) for the current segment
  Vector x = x0;
  Vector acc = Vector::Zero(static_cast<Index>(f.size()));
  double t = 0.0;
  auto advance = [&](double h) {
    if (h <= 0) return;
    if (std::abs(h - sample_dt) <= 1e-15 * sample_dt) {
      if (!cached) cached = matrix_exponential(a * sample_dt);
      x = *cached * x;
    } else {
      x = matrix_exponential(a * h) * x;
    }
    acc += h * seg.w;
  };
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  tr.weights.push_back(seg.w);
  tr.weight_integrals.push_back(acc);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double ts = grid[k];
    const double eps = 1e-12 * std::max(1.0, ts);
    while (seg_end < ts - eps) {
      advance(seg_end - t);
      t = seg_end;
      seg = cur.next();
      seg_end = t + seg.duration;
      a = f.at(seg.w);
      cached.reset();
    }
    advance(ts - t);
    t = ts;
    if (std::abs(seg_end - ts) <= eps) {
      seg = cur.next();
      seg_end = t + seg.duration;
      a = f.at(seg.w);
      cached.reset();
    }
    if (!x.allFinite()) throw NumericalError("simulation overflowed at t = " + std::to_string(ts));
    tr.times.push_back(ts);
    tr.states.push_back(x);
    tr.weights.push_back(seg.w);
    tr.weight_integrals.push_back(acc);
  }
  finish_trajectory(tr, tol);
  return tr;
}

struct ResidualDiagnostics {
  std::vector<double> times;
  std::vector<double> pointwise;        // |(A(w(k)) - I) xbar| or |A(w(t)) xbar|
  std::vector<double> running_average;  // same with w replaced by its running mean
  Vector averaged_weight;               // mean weight over the whole horizon
  double averaged_residual = 0.0;
};

inline ResidualDiagnostics residual_diagnostics(const Trajectory& tr, const MatrixFamily& f) {
  if (!tr.limit) throw PreconditionError("residual diagnostics need a trajectory with a detected limit");
  const Vector& xbar = *tr.limit;
  const Index n = f.dim();
  auto op = [&](const Vector& w) {
    Matrix a = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < f.size(); ++i) a += w(static_cast<Index>(i)) * f[i];
    if (f.mode() == Mode::DT) a -= Matrix::Identity(n, n);
    return a;
  };
  ResidualDiagnostics d;
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    d.times.push_back(tr.times[k]);
    d.pointwise.push_back((op(tr.weights[k]) * xbar).norm());
    if (tr.times[k] > 0) {
      d.running_average.push_back((op(tr.weight_integrals[k] / tr.times[k]) * xbar).norm());
    } else {
      d.running_average.push_back(d.pointwise.back());
    }
  }
  const double tend = tr.times.back();
  d.averaged_weight = tend > 0 ? Vector(tr.weight_integrals.back() / tend) : tr.weights.front();
  d.averaged_residual = (op(d.averaged_weight) * xbar).norm();
  return d;
}

struct WitnessConfig {
  std::size_t max_period = 4;
  std::vector<double> dwell_dt = {1, 2, 3};
  std::vector<double> dwell_ct = {0.25, 0.5, 1.0, 2.0};
  double recurrence_tol = 1e-10;
  double separation_tol = 1e-3;
  std::size_t periods = 10;
};

struct PeriodicWitness {
  std::vector<Index> cycle;
  double dwell = 1.0;
  std::vector<Vector> orbit;  // states at each switch over one period; orbit.back() closes it
  double recurrence = 0.0;    // worst |x(k + period) - x(k)| over the checked periods
  double separation = 0.0;    // largest distance of an intermediate state from the start
  SwitchingSignal signal() const { return SwitchingSignal::cycle(cycle, dwell); }
};

// Map applied while vertex i is active for `dwell`: A_i^dwell (DT) or exp(A_i dwell) (CT).
inline Matrix dwell_map(const Matrix& a, Mode mode, double dwell) {
  if (mode == Mode::CT) return matrix_exponential(a * dwell);
  Matrix p = Matrix::Identity(a.rows(), a.cols());
  for (long s = 0; s < static_cast<long>(dwell); ++s) p = a * p;
  return p;
}

struct OrbitCheck {
  std::vector<Vector> orbit;
  double recurrence = std::numeric_limits<double>::infinity();
  double separation = 0.0;
};

// Re-simulates a vertex cycle from x0 for `periods` periods.
inline OrbitCheck check_periodic_orbit(const MatrixFamily& f, const std::vector<Index>& cycle, double dwell,
                                       const Vector& x0, std::size_t periods) {
  std::vector<Matrix> maps;
  for (Index i : cycle) maps.push_back(dwell_map(f[static_cast<std::size_t>(i)], f.mode(), dwell));
  OrbitCheck c;
  c.recurrence = 0.0;
  Vector x = x0;
  c.orbit.push_back(x);
  for (std::size_t p = 0; p < periods; ++p) {
    const Vector start = x;
    for (std::size_t j = 0; j < maps.size(); ++j) {
      x = maps[j] * x;
      if (p == 0) c.orbit.push_back(x);
      if (j + 1 < maps.size()) c.separation = std::max(c.separation, (x - start).norm());
    }
    if (!x.allFinite()) {
      c.recurrence = std::numeric_limits<double>::infinity();
      return c;
    }
    c.recurrence = std::max(c.recurrence, (x - start).norm());
  }
  return c;
}

namespace detail {

// Sequences over m symbols of the given length that are the smallest among their rotations.
inline std::vector<std::vector<Index>> necklaces(std::size_t m, std::size_t len) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> s(len, 0);
  for (;;) {
    bool canonical = true;
    for (std::size_t r = 1; r < len && canonical; ++r) {
      std::vector<Index> rot(s.begin() + static_cast<std::ptrdiff_t>(r), s.end());
      rot.insert(rot.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(r));
      if (rot < s) canonical = false;
    }
    if (canonical) out.push_back(s);
    std::size_t pos = len;
    while (pos > 0) {
      --pos;
      if (static_cast<std::size_t>(++s[pos]) < m) break;
      s[pos] = 0;
      if (pos == 0) return out;
    }
    if (len == 0) return out;
  }
}

}  // namespace detail

// Searches vertex cycles for a non-constant periodic orbit, found through the kernel of the
// monodromy map minus the identity and then re-simulated.
inline std::optional<PeriodicWitness> find_nonconvergence_witness(const MatrixFamily& f,
                                                                  const WitnessConfig& cfg = {},
                                                                  const Tolerances& tol = {}) {
  const auto& dwells = f.mode() == Mode::DT ? cfg.dwell_dt : cfg.dwell_ct;
  const Index n = f.dim();
  for (double dwell : dwells) {
    std::vector<Matrix> maps;
    for (const auto& a : f.matrices()) maps.push_back(dwell_map(a, f.mode(), dwell));
    if (std::any_of(maps.begin(), maps.end(), [](const Matrix& m) { return !m.allFinite(); })) continue;
    for (std::size_t len = 1; len <= cfg.max_period; ++len) {
      for (const auto& cycle : detail::necklaces(f.size(), len)) {
        Matrix phi = Matrix::Identity(n, n);
        for (Index i : cycle) phi = maps[static_cast<std::size_t>(i)] * phi;
        const Subspace k = rank_and_kernel(phi - Matrix::Identity(n, n), tol, 1.0).kernel;
        for (Index c = 0; c < k.dim(); ++c) {
          const Vector x0 = k.basis().col(c);
          const OrbitCheck chk = check_periodic_orbit(f, cycle, dwell, x0, cfg.periods);
          if (chk.recurrence <= cfg.recurrence_tol && chk.separation >= cfg.separation_tol) {
            PeriodicWitness w;
            w.cycle = cycle;
            w.dwell = dwell;
            w.orbit = chk.orbit;
            w.recurrence = chk.recurrence;
            w.separation = chk.separation;
            return w;
          }
        }
      }
    }
  }
  return std::nullopt;
}

inline void write_csv(std::ostream& os, const Trajectory& tr) {
  const Index n = tr.states.empty() ? 0 : tr.states.front().size();
  const Index m = tr.weights.empty() ? 0 : tr.weights.front().size();
  os << "t";
  for (Index i = 1; i <= n; ++i) os << ",x" << i;
  for (Index i = 1; i <= m; ++i) os << ",w" << i;
  os << "\n";
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    os << tr.times[k];
    for (Index i = 0; i < n; ++i) os << "," << tr.states[k](i);
    for (Index i = 0; i < m; ++i) os << "," << tr.weights[k](i);
    os << "\n";
  }
  os.precision(old);
}

}  // namespace linconv

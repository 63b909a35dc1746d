#pragma once

// Time evolution of i u_t + Delta^2 u + V u + lambda |u|^{p-1} u = 0, i.e.
// u_t = i (H u + lambda |u|^{p-1} u), by Strang splitting, plus an exponential
// Gauss collocation solver of the Duhamel formula used as an independent oracle
// and as the backward (final-state) solver.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nls4/quadrature.hpp"
#include "nls4/spectral_operator.hpp"

namespace nls4 {

/// 2n/(n-4) - 1.
inline double critical_power(int n) { return 2.0 * n / (n - 4) - 1.0; }

struct SimulationConfig {
  double lambda = 1;
  double p = 9;
  double dt = 1e-3;
  double t_end = 1;
  int monitor_stride = 10;
  double picard_tol = 1e-10;
  int picard_max_iter = 50;
  bool critical = false;
  /// Halt when the mass beyond 0.9 r_max exceeds this fraction of the total.
  double boundary_threshold = 1e-6;
  /// Halt when ||Delta u|| exceeds this multiple of its initial value.
  double blowup_factor = 1e6;
  /// Keep the state every this many steps (0: no snapshots).
  int snapshot_stride = 0;

  void validate(int n) const;
  long steps() const { return std::lround(t_end / dt); }
};

template <typename Real>
Real mass(const RadialField<Real>& u) {
  return u.grid().integrate(u.modulus_squared());
}

/// Mass summed with the plain trapezoid weights, the inner product in which
/// the discrete propagators are unitary.
template <typename Real>
Real scheme_mass(const RadialField<Real>& u) {
  const auto& g = u.grid();
  return g.surface_constant() * g.trapezoid_weights().dot(u.modulus_squared());
}

/// ||Delta u||^2.
template <typename Real>
Real h2dot(const RadialField<Real>& u) {
  return u.grid().integrate(radial_laplacian(u).modulus_squared());
}

/// ||(1 - Delta) u||_{L^2}.
template <typename Real>
Real h2_norm(const RadialField<Real>& u) {
  return std::sqrt(mass(u - radial_laplacian(u)));
}

/// |Delta u|^2 + V |u|^2 + (2 lambda / (p + 1)) |u|^{p+1} at the nodes.
template <typename Real>
RealVector<Real> energy_density(const RadialField<Real>& u, const RadialField<Real>& v, Real lambda, Real p) {
  require_same_grid(u.grid(), v.grid(), "energy");
  const RealVector<Real> mod2 = u.modulus_squared();
  RealVector<Real> density = radial_laplacian(u).modulus_squared();
  density += v.values().real().cwiseProduct(mod2);
  if (lambda != 0) density += (2 * lambda / (p + 1)) * mod2.array().pow((p + 1) / 2).matrix();
  return density;
}

/// (1/2) int |Delta u|^2 + V |u|^2 + (2 lambda / (p + 1)) |u|^{p+1}.
template <typename Real>
Real energy(const RadialField<Real>& u, const RadialField<Real>& v, Real lambda, Real p) {
  return u.grid().integrate(energy_density(u, v, lambda, p)) / 2;
}

/// The energy summed with the plain trapezoid weights, i.e. in the inner
/// product for which the discrete propagator is unitary.  Its drift isolates
/// the time-stepping error from the end correction of the quadrature.
template <typename Real>
Real scheme_energy(const RadialField<Real>& u, const RadialField<Real>& v, Real lambda, Real p) {
  const auto& g = u.grid();
  return g.surface_constant() * g.trapezoid_weights().dot(energy_density(u, v, lambda, p)) / 2;
}

template <typename Real>
Real energy(const SpectralOperator<Real>& op, const RadialField<Real>& u, Real lambda, Real p) {
  op.check_grid(u, "energy");
  return energy(u, RadialField<Real>(op.grid_ptr(), op.potential_values().template cast<Complex<Real>>()),
                lambda, p);
}

/// u <- exp(i lambda tau |u|^{p-1}) u; the exact flow of the nonlinear part.
template <typename Real>
void nonlinear_phase(ComplexVector<Real>& u, Real lambda, Real p, Real tau) {
  if (lambda == 0) return;
  for (Index j = 0; j < u.size(); ++j) {
    const Real a = std::pow(std::norm(u[j]), (p - 1) / 2);
    if (!std::isfinite(a)) throw BlowupError("nonlinear_phase: |u|^{p-1} overflowed", 0);
    u[j] *= std::polar(Real(1), lambda * tau * a);
  }
}

/// Repeated Strang steps with the propagator phases cached.
template <typename Real>
class StrangStepper {
 public:
  using Forcing = std::function<ComplexVector<Real>(Real)>;

  StrangStepper(OperatorPtr<Real> op, Real lambda, Real p, Real dt, Forcing forcing = {})
      : op_(std::move(op)), lambda_(lambda), p_(p), dt_(dt), forcing_(std::move(forcing)) {
    phase_.resize(op_->size());
    for (Index k = 0; k < op_->size(); ++k) phase_[k] = std::polar(Real(1), dt * op_->eigenvalues()[k]);
  }

  /// Advances u from time t to t + dt.
  void step(ComplexVector<Real>& u, Real t = 0) const {
    nonlinear_phase(u, lambda_, p_, dt_ / 2);
    // forcing e enters as u_t = ... - i e, integrated by the trapezoid rule
    // inside the linear propagator
    if (forcing_) u -= Complex<Real>(0, dt_ / 2) * forcing_(t);
    ComplexVector<Real> c = op_->to_spectral(u);
    c = c.cwiseProduct(phase_);
    u = op_->from_spectral(c);
    if (forcing_) u -= Complex<Real>(0, dt_ / 2) * forcing_(t + dt_);
    nonlinear_phase(u, lambda_, p_, dt_ / 2);
    if (!u.allFinite()) throw BlowupError("strang step produced non-finite values", double(t + dt_));
  }

  const SpectralOperator<Real>& op() const { return *op_; }

 private:
  OperatorPtr<Real> op_;
  Real lambda_, p_, dt_;
  Forcing forcing_;
  ComplexVector<Real> phase_;
};

template <typename Real>
RadialField<Real> step_strang(const RadialField<Real>& u, const OperatorPtr<Real>& op,
                              const SimulationConfig& cfg) {
  op->check_grid(u, "step_strang");
  const StrangStepper<Real> stepper(op, Real(cfg.lambda), Real(cfg.p), Real(cfg.dt));
  ComplexVector<Real> v = u.values();
  stepper.step(v);
  return RadialField<Real>(u.grid_ptr(), std::move(v));
}

/// Direction of integration for the Duhamel solver.
enum class TimeDirection { forward, backward };

struct DuhamelOptions {
  int nodes = 8;
  double tol = 1e-10;
  int max_iter = 50;
};

template <typename Real>
struct DuhamelResult {
  ComplexVector<Real> end_state;
  int iterations = 0;
  /// Ratio of the second to the first iterate distance (0 when one sweep sufficed).
  double contraction_factor = 0;
  std::vector<double> distances;
};

/// Exponential Gauss collocation weights of one window for every eigenvalue.
///
/// With s = a + sigma*Delta*theta and Lagrange basis l_i on the Gauss nodes,
///   inner(k)(j, i) = Delta * int_0^{theta_j} e^{i sigma mu_k Delta (theta_j - tau)} l_i(tau) dtau
/// and end(k)(i) is the same with theta_j replaced by 1.
template <typename Real>
class CollocationWeights {
 public:
  CollocationWeights(const RealVector<Real>& eigenvalues, Real window, int nodes, Real sigma);

  int nodes() const { return m_; }
  const RealVector<Real>& theta() const { return theta_; }
  /// Row block [k*m, (k+1)*m) holds inner(k); (m + 1) columns: inner then end.
  Complex<Real> inner(Index k, int j, int i) const { return w_(k * (m_ + 1) + j, i); }
  Complex<Real> end(Index k, int i) const { return w_(k * (m_ + 1) + m_, i); }
  Complex<Real> node_phase(Index k, int j) const { return ph_(k, j); }
  Complex<Real> end_phase(Index k) const { return ph_(k, m_); }

 private:
  int m_;
  RealVector<Real> theta_;
  ComplexMatrix<Real> w_;
  ComplexMatrix<Real> ph_;
};

template <typename Real>
CollocationWeights<Real>::CollocationWeights(const RealVector<Real>& eigenvalues, Real window,
                                             int nodes, Real sigma)
    : m_(nodes) {
  const auto rule = gauss_legendre_unit<Real>(nodes);
  theta_ = rule.nodes;
  const auto panel_rule = gauss_legendre_unit<Real>(16);
  const Index K = eigenvalues.size();
  w_.resize(K * (m_ + 1), m_);
  ph_.resize(K, m_ + 1);

  // barycentric-free Lagrange basis evaluation
  auto lagrange = [&](Real x, RealVector<Real>& out) {
    for (int i = 0; i < m_; ++i) {
      Real v = 1;
      for (int q = 0; q < m_; ++q)
        if (q != i) v *= (x - theta_[q]) / (theta_[i] - theta_[q]);
      out[i] = v;
    }
  };
  RealVector<Real> basis(m_);

  for (Index k = 0; k < K; ++k) {
    const Real omega = sigma * eigenvalues[k] * window;
    for (int j = 0; j <= m_; ++j) {
      const Real top = j < m_ ? theta_[j] : Real(1);
      ph_(k, j) = std::polar(Real(1), omega * top);
      const int panels = 1 + int(std::abs(omega * top) / 3);
      const Real width = top / Real(panels);
      Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1> acc =
          Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>::Zero(m_);
      for (int q = 0; q < panels; ++q) {
        for (Index g = 0; g < panel_rule.nodes.size(); ++g) {
          const Real tau = width * (Real(q) + panel_rule.nodes[g]);
          lagrange(tau, basis);
          const Complex<Real> kern = std::polar(width * panel_rule.weights[g], omega * (top - tau));
          for (int i = 0; i < m_; ++i) acc[i] += kern * basis[i];
        }
      }
      w_.row(k * (m_ + 1) + j) = (window * acc).transpose();
    }
  }
}

/// Solves u(a + sigma s) = e^{i sigma s H} u(a) + i lambda sigma int_0^s e^{i sigma (s - s') H} N(u(a + sigma s')) ds'
/// over [0, span] split into windows of the given length, with N(u) = |u|^{p-1} u.
/// Global Jacobi sweeps start from the linear flow.
template <typename Real>
DuhamelResult<Real> solve_duhamel(const SpectralOperator<Real>& op, const ComplexVector<Real>& start,
                                  Real lambda, Real p, Real span, Real window_length,
                                  TimeDirection direction, const DuhamelOptions& options = {}) {
  if (!(span > 0)) throw PreconditionError("solve_duhamel: time span must be positive");
  if (!(window_length > 0)) throw PreconditionError("solve_duhamel: window length must be positive");
  const Index windows = std::max<Index>(1, Index(std::ceil(span / window_length - 1e-9)));
  const Real delta = span / Real(windows);
  const Real sigma = direction == TimeDirection::forward ? Real(1) : Real(-1);
  const int m = options.nodes;
  const Index K = op.size();
  const CollocationWeights<Real> w(op.eigenvalues(), delta, m, sigma);

  const ComplexVector<Real> c0 = op.to_spectral(start);
  const Real scale = std::max(Real(1), c0.norm());
  const Complex<Real> coupling(0, lambda * sigma);

  // node coefficients, column w*m + j
  ComplexMatrix<Real> nodes_c(K, windows * m);
  ComplexVector<Real> end_c(K);
  auto sweep = [&](const ComplexMatrix<Real>* nonlinear) {
    ComplexVector<Real> c = c0;
    for (Index win = 0; win < windows; ++win) {
      for (Index k = 0; k < K; ++k) {
        const Complex<Real> ck = c[k];
        for (int j = 0; j < m; ++j) {
          Complex<Real> v = w.node_phase(k, j) * ck;
          if (nonlinear) {
            Complex<Real> acc = 0;
            for (int i = 0; i < m; ++i) acc += w.inner(k, j, i) * (*nonlinear)(k, win * m + i);
            v += coupling * acc;
          }
          nodes_c(k, win * m + j) = v;
        }
        Complex<Real> v = w.end_phase(k) * ck;
        if (nonlinear) {
          Complex<Real> acc = 0;
          for (int i = 0; i < m; ++i) acc += w.end(k, i) * (*nonlinear)(k, win * m + i);
          v += coupling * acc;
        }
        c[k] = v;
      }
    }
    end_c = c;
  };

  DuhamelResult<Real> result;
  sweep(nullptr);
  if (lambda == 0) {
    result.end_state = op.from_spectral(end_c);
    result.iterations = 1;
    result.distances.push_back(0);
    return result;
  }

  int rising = 0;
  for (int it = 1; it <= options.max_iter; ++it) {
    ComplexMatrix<Real> u = op.from_spectral(nodes_c);
    for (Index col = 0; col < u.cols(); ++col)
      for (Index j = 0; j < K; ++j) {
        const Real a = std::pow(std::norm(u(j, col)), (p - 1) / 2);
        u(j, col) *= a;
      }
    if (!u.allFinite()) throw BlowupError("solve_duhamel: nonlinearity overflowed", 0);
    const ComplexMatrix<Real> nonlinear = op.to_spectral(u);
    const ComplexMatrix<Real> previous = nodes_c;
    const ComplexVector<Real> previous_end = end_c;
    sweep(&nonlinear);

    // L^infty in time, L^2 in space (coefficients are orthonormal)
    Real dist = (end_c - previous_end).norm();
    for (Index col = 0; col < nodes_c.cols(); ++col)
      dist = std::max(dist, (nodes_c.col(col) - previous.col(col)).norm());
    result.distances.push_back(double(dist));
    result.iterations = it;
    const auto nd = result.distances.size();
    if (nd == 2 && result.distances[0] > 0) result.contraction_factor = result.distances[1] / result.distances[0];
    if (dist <= Real(options.tol) * scale) break;
    rising = (nd >= 2 && result.distances[nd - 1] > result.distances[nd - 2]) ? rising + 1 : 0;
    if (rising >= 3 || it == options.max_iter) {
      const double factor = result.distances[nd - 1] / result.distances[nd - 2];
      throw ContractionError(rising >= 3 ? "duhamel iteration is not contracting (time span too long)"
                                         : "duhamel iteration did not converge within the iteration limit",
                             factor, it);
    }
  }
  result.end_state = op.from_spectral(end_c);
  return result;
}

/// u(T) from the fixed point of the forward Duhamel map, one window per dt.
template <typename Real>
RadialField<Real> solve_picard(const RadialField<Real>& u0, const SpectralOperator<Real>& op,
                               const SimulationConfig& cfg, Real T, DuhamelResult<Real>* info = nullptr) {
  op.check_grid(u0, "solve_picard");
  DuhamelOptions opts;
  opts.tol = cfg.picard_tol;
  opts.max_iter = cfg.picard_max_iter;
  auto res = solve_duhamel(op, u0.values(), Real(cfg.lambda), Real(cfg.p), T, Real(cfg.dt),
                           TimeDirection::forward, opts);
  RadialField<Real> out(u0.grid_ptr(), res.end_state);
  if (info) *info = std::move(res);
  return out;
}

enum class RunStatus { completed, boundary_contaminated, blowup_suspected };
std::string to_string(RunStatus status);

template <typename Real>
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> mass_series;
  std::vector<double> energy_series;
  std::vector<double> scheme_energy_series;
  std::vector<double> h2dot_series;
  std::vector<double> boundary_mass_series;
  std::vector<double> snapshot_times;
  std::vector<RadialField<Real>> snapshots;
  RunStatus status = RunStatus::completed;
  double halt_time = 0;
  std::string message;
};

/// Strang evolution to cfg.t_end with monitors; abnormal ends are statuses.
template <typename Real>
TrajectoryRecord<Real> run_trajectory(const RadialField<Real>& u0, const OperatorPtr<Real>& op,
                                      const SimulationConfig& cfg,
                                      typename StrangStepper<Real>::Forcing forcing = {}) {
  op->check_grid(u0, "run_trajectory");
  cfg.validate(u0.grid().dimension());
  const Real lambda(cfg.lambda), p(cfg.p), dt(cfg.dt);
  const StrangStepper<Real> stepper(op, lambda, p, dt, std::move(forcing));
  const auto v = RadialField<Real>(op->grid_ptr(), op->potential_values().template cast<Complex<Real>>());

  TrajectoryRecord<Real> rec;
  const Real m0 = mass(u0);
  const Real d0 = std::sqrt(h2dot(u0));
  auto monitor = [&](const RadialField<Real>& u, Real t) {
    rec.times.push_back(double(t));
    rec.mass_series.push_back(double(mass(u)));
    rec.energy_series.push_back(double(energy(u, v, lambda, p)));
    rec.scheme_energy_series.push_back(double(scheme_energy(u, v, lambda, p)));
    rec.h2dot_series.push_back(double(h2dot(u)));
    rec.boundary_mass_series.push_back(double(boundary_mass(u)));
  };
  auto snapshot = [&](const RadialField<Real>& u, Real t) {
    rec.snapshot_times.push_back(double(t));
    rec.snapshots.push_back(u);
  };
  monitor(u0, 0);
  if (cfg.snapshot_stride > 0) snapshot(u0, 0);

  ComplexVector<Real> u = u0.values();
  const long steps = cfg.steps();
  for (long s = 1; s <= steps; ++s) {
    const Real t = dt * Real(s);
    try {
      stepper.step(u, dt * Real(s - 1));
    } catch (const BlowupError& e) {
      rec.status = RunStatus::blowup_suspected;
      rec.halt_time = double(t);
      rec.message = e.what();
      return rec;
    }
    const bool last = s == steps;
    const bool mon = last || (cfg.monitor_stride > 0 && s % cfg.monitor_stride == 0);
    const bool snap = cfg.snapshot_stride > 0 && (s % cfg.snapshot_stride == 0);
    if (!mon && !snap) continue;
    const RadialField<Real> field(op->grid_ptr(), u);
    if (snap) snapshot(field, t);
    if (!mon) continue;
    monitor(field, t);
    if (rec.boundary_mass_series.back() > cfg.boundary_threshold * double(m0)) {
      rec.status = RunStatus::boundary_contaminated;
      rec.halt_time = double(t);
      rec.message = "mass near the outer boundary exceeded the threshold";
      return rec;
    }
    if (d0 > 0 && std::sqrt(rec.h2dot_series.back()) > cfg.blowup_factor * double(d0)) {
      rec.status = RunStatus::blowup_suspected;
      rec.halt_time = double(t);
      rec.message = "||Delta u|| exceeded the blow-up factor";
      return rec;
    }
  }
  rec.halt_time = double(dt * Real(steps));
  return rec;
}

}  // namespace nls4

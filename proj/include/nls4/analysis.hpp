#pragma once

// Space-time norms, Sobolev equivalence ratios, decay fits, Strichartz
// quotients and the localized mass / Morawetz functionals.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nls4/nls_solver.hpp"

namespace nls4 {

/// Fields of a solution on the time interval [t_a, t_b].
template <typename Real>
struct SpaceTimeSample {
  std::vector<Real> times;
  std::vector<RadialField<Real>> fields;
  Real t_a = 0;
  Real t_b = 0;

  SpaceTimeSample() = default;
  SpaceTimeSample(std::vector<Real> ts, std::vector<RadialField<Real>> fs)
      : times(std::move(ts)), fields(std::move(fs)) {
    if (!times.empty()) {
      t_a = times.front();
      t_b = times.back();
    }
    validate();
  }

  void validate() const {
    if (times.size() != fields.size()) throw PreconditionError("space-time sample: times and fields differ in count");
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1])) throw PreconditionError("space-time sample: times must increase strictly");
    for (auto t : times)
      if (t < t_a || t > t_b) throw PreconditionError("space-time sample: time outside the interval");
    for (std::size_t k = 1; k < fields.size(); ++k)
      require_same_grid(fields[0].grid(), fields[k].grid(), "space-time sample");
  }

  bool uniform(Real rel_tol = Real(1e-9)) const {
    if (times.size() < 3) return true;
    const Real step = (times.back() - times.front()) / Real(times.size() - 1);
    for (std::size_t k = 1; k < times.size(); ++k)
      if (std::abs(times[k] - times[k - 1] - step) > rel_tol * step) return false;
    return true;
  }
};

enum class SpaceTimeNorm { M, W, Z, N };
std::string to_string(SpaceTimeNorm which);

struct Exponents {
  double q = 0;
  double r = 0;
};

/// Time and space exponents of the M, W, Z and N norms in dimension n.
Exponents spacetime_exponents(SpaceTimeNorm which, int n);

/// (int_I ||g(t)||_r^q dt)^{1/q} by the trapezoid rule; g_k >= 0 are spatial norms.
template <typename Real>
Real time_lebesgue(const std::vector<Real>& times, const std::vector<Real>& spatial, Real q) {
  if (times.size() < 2) return 0;
  const Real peak = *std::max_element(spatial.begin(), spatial.end());
  if (peak == 0) return 0;
  Real acc = 0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const Real a = std::pow(spatial[k - 1] / peak, q);
    const Real b = std::pow(spatial[k] / peak, q);
    acc += (times[k] - times[k - 1]) * (a + b) / 2;
  }
  return peak * std::pow(acc, Real(1) / q);
}

/// M: ||Delta u||, W: |||grad| u||, Z: ||u||, N: |||grad| u|| in their mixed norms.
/// W and N need the free operator for |grad| = (Delta^2)^{1/4}.
template <typename Real>
Real spacetime_norm(const SpaceTimeSample<Real>& s, SpaceTimeNorm which,
                    const SpectralOperator<Real>* op_free = nullptr) {
  s.validate();
  if (s.times.size() < 4) throw PreconditionError("spacetime_norm: need at least 4 time samples");
  const int n = s.fields.front().grid().dimension();
  const Exponents e = spacetime_exponents(which, n);
  const bool gradient = which == SpaceTimeNorm::W || which == SpaceTimeNorm::N;
  if (gradient && (!op_free || op_free->kind() != OperatorKind::free))
    throw PreconditionError("spacetime_norm: W and N norms need the free operator");

  std::vector<Real> spatial;
  spatial.reserve(s.fields.size());
  for (const auto& u : s.fields) {
    if (which == SpaceTimeNorm::M)
      spatial.push_back(lp_norm(radial_laplacian(u), Real(e.r)));
    else if (gradient)
      spatial.push_back(lp_norm(free_fractional_gradient(*op_free, Real(1), u), Real(e.r)));
    else
      spatial.push_back(lp_norm(u, Real(e.r)));
  }
  return time_lebesgue(s.times, spatial, Real(e.q));
}

/// ||H^{s/4} u||_p / |||grad|^s u||_p.
template <typename Real>
Real sobolev_equiv_ratio(const SpectralOperator<Real>& op_full, const SpectralOperator<Real>& op_free,
                         const RadialField<Real>& u, Real s, Real p) {
  const int n = u.grid().dimension();
  if (op_free.kind() != OperatorKind::free) throw PreconditionError("sobolev_equiv_ratio: second operator must be free");
  if (s < 0 || s > 2) throw PreconditionError("sobolev_equiv_ratio: s must lie in [0, 2]");
  if (!(p > 1) || !(p < Real(n) / 2)) throw PreconditionError("sobolev_equiv_ratio: p must lie in (1, n/2)");
  if (s == 0) return 1;
  const Real num = lp_norm(apply_function(op_full, SpectralFunction::power_s, s, u), p);
  const Real den = lp_norm(free_fractional_gradient(op_free, s, u), p);
  if (!(den > 0)) throw PreconditionError("sobolev_equiv_ratio: |grad|^s u vanishes");
  return num / den;
}

struct FitResult {
  double exponent = 0;   // fitted slope of log ||u(t)||_p against log t
  double amplitude = 0;  // exp(intercept)
  double residual = 0;   // RMS of the log-log fit
  double window_start = 0;
  double window_end = 0;
  std::vector<double> log_t;
  std::vector<double> log_norm;
};

struct DecayWindow {
  double t_start = 0.3;
  double t_end = 3.0;
  int samples = 41;
  double boundary_threshold = 1e-6;
};

/// Least-squares line through (x, y).
FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Linear-flow decay of ||e^{itH} u0||_{L^p} on log-spaced times; u0 is
/// rescaled to unit L^{p'} norm first.
template <typename Real>
FitResult fit_decay(const SpectralOperator<Real>& op, const RadialField<Real>& u0, Real p,
                    const DecayWindow& window = {}) {
  op.check_grid(u0, "fit_decay");
  if (!(p >= 2)) throw PreconditionError("fit_decay: p must be >= 2");
  if (!(window.t_start > 0) || !(window.t_end > window.t_start) || window.samples < 3)
    throw PreconditionError("fit_decay: bad time window");
  const Real dual = p / (p - 1);
  const Real scale = lp_norm(u0, dual);
  if (!(scale > 0)) throw PreconditionError("fit_decay: zero initial datum");

  const ComplexVector<Real> c0 = op.to_spectral(u0.values()) / scale;
  const Real m0 = mass(RadialField<Real>(u0.grid_ptr(), u0.values() / scale));
  const int count = window.samples;
  ComplexMatrix<Real> coeffs(op.size(), count);
  std::vector<double> times(count);
  for (int k = 0; k < count; ++k) {
    times[k] = window.t_start * std::pow(window.t_end / window.t_start, double(k) / (count - 1));
    for (Index j = 0; j < op.size(); ++j)
      coeffs(j, k) = std::polar(Real(1), Real(times[k]) * op.eigenvalues()[j]) * c0[j];
  }
  const ComplexMatrix<Real> fields = op.from_spectral(coeffs);

  std::vector<double> lt, ln;
  for (int k = 0; k < count; ++k) {
    const RadialField<Real> u(u0.grid_ptr(), fields.col(k));
    if (boundary_mass(u) > Real(window.boundary_threshold) * m0)
      throw ContaminationError("fit_decay: boundary reflection inside the window", times[k]);
    lt.push_back(std::log(times[k]));
    ln.push_back(std::log(double(lp_norm(u, p))));
  }
  FitResult fit = fit_line(lt, ln);
  fit.window_start = window.t_start;
  fit.window_end = window.t_end;
  fit.log_t = std::move(lt);
  fit.log_norm = std::move(ln);
  return fit;
}

/// Exact rational number for exponent bookkeeping.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);
  double value() const { return double(num) / double(den); }
  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a, Rational b);
  friend Rational operator*(Rational a, Rational b);
  friend Rational operator/(Rational a, Rational b);
  friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
  friend bool operator<(Rational a, Rational b);
  std::string str() const;
};

Rational parse_rational(const std::string& text);

struct AdmissiblePair {
  Rational q;
  Rational r;
};

/// Throws PreconditionError naming the violated rule unless 4/q + n/r = n/2,
/// q, r >= 2 and r < n/2 hold exactly.
void validate_b_admissible(int n, const AdmissiblePair& pair);

/// Pairs used for the M-type norm plus two more on the same line, for dimension n.
std::vector<AdmissiblePair> standard_b_pairs(int n);

/// ||Delta u||_{L^q(I, L^r)} / (||Delta u0||_2 + |||grad| h||_{L^2(I, L^{2n/(n+2)})}) for
/// u(t) = e^{itH} u0 + i int_0^t e^{i(t-s)H} h(s) ds with h(s) = e^{i nu s} g,
/// which is integrated in closed form.  The interval is [0, length].
template <typename Real>
Real strichartz_quotient(const SpectralOperator<Real>& op_full, const SpectralOperator<Real>& op_free,
                         const RadialField<Real>& u0, const std::optional<RadialField<Real>>& g, Real nu,
                         const AdmissiblePair& pair, Real length, int time_samples = 201) {
  const int n = u0.grid().dimension();
  validate_b_admissible(n, pair);
  op_full.check_grid(u0, "strichartz_quotient");
  if (time_samples < 4) throw PreconditionError("strichartz_quotient: need at least 4 time samples");
  if (!(length > 0)) throw PreconditionError("strichartz_quotient: interval length must be positive");

  const ComplexVector<Real> c0 = op_full.to_spectral(u0.values());
  ComplexVector<Real> cg = ComplexVector<Real>::Zero(op_full.size());
  Real forcing_norm = 0;
  if (g) {
    op_full.check_grid(*g, "strichartz_quotient");
    cg = op_full.to_spectral(g->values());
    // |e^{i nu s}| = 1, so the time integral is |I| times the spatial norm squared
    forcing_norm = std::sqrt(length) *
                   lp_norm(free_fractional_gradient(op_free, Real(1), *g), Real(2 * n) / Real(n + 2));
  }

  ComplexMatrix<Real> coeffs(op_full.size(), time_samples);
  std::vector<Real> times(time_samples);
  for (int k = 0; k < time_samples; ++k) {
    const Real t = length * Real(k) / Real(time_samples - 1);
    times[k] = t;
    for (Index j = 0; j < op_full.size(); ++j) {
      const Real mu = op_full.eigenvalues()[j];
      const Complex<Real> prop = std::polar(Real(1), mu * t);
      // int_0^t e^{i mu (t-s)} e^{i nu s} ds = e^{i mu t} t phi((nu - mu) t)
      const Real x = (nu - mu) * t;
      Complex<Real> phi;
      if (std::abs(x) < Real(1e-6))
        phi = Complex<Real>(1 - x * x / 6, x / 2);
      else
        phi = (std::polar(Real(1), x) - Real(1)) / Complex<Real>(0, x);
      coeffs(j, k) = prop * (c0[j] + Complex<Real>(0, 1) * cg[j] * t * phi);
    }
  }
  const ComplexMatrix<Real> fields = op_full.from_spectral(coeffs);
  std::vector<Real> spatial(time_samples);
  const Real r = Real(pair.r.value());
  for (int k = 0; k < time_samples; ++k)
    spatial[k] = lp_norm(radial_laplacian(RadialField<Real>(u0.grid_ptr(), fields.col(k))), r);
  const Real num = time_lebesgue(times, spatial, Real(pair.q.value()));
  const Real den = std::sqrt(h2dot(u0)) + forcing_norm;
  if (!(den > 0)) throw PreconditionError("strichartz_quotient: zero data and forcing");
  return num / den;
}

struct LocalizedMassRecord {
  double radius = 0;
  double constant = 0;  // sup |dM/dt| R / (E^{3/4} M_B^{1/4})
  double max_rate = 0;  // sup |dM/dt|
  double coarse_constant = 0;
  int samples_used = 0;
};

struct LocalizedMassReport {
  std::vector<LocalizedMassRecord> records;
  double max_consecutive_ratio = 1;
  bool stable = true;  // every consecutive ratio within [1/3, 3]
};

/// Central-difference rate of the localized mass on each radius.  Times where
/// M_B < floor * M are skipped.  With at least 5 snapshots the estimate is
/// repeated on every other snapshot and rejected when it moves by > 50%.
template <typename Real>
LocalizedMassReport localized_mass_rate_check(const std::vector<Real>& times,
                                              const std::vector<RadialField<Real>>& snaps,
                                              const std::vector<Real>& radii, Real floor = Real(1e-10)) {
  if (times.size() != snaps.size()) throw PreconditionError("localized_mass_rate_check: size mismatch");
  if (times.size() < 3) throw PreconditionError("localized_mass_rate_check: need at least 3 snapshots");
  for (auto r : radii)
    if (!(r > 0)) throw PreconditionError("localized_mass_rate_check: radius must be positive");

  std::vector<Real> total(snaps.size()), ecal(snaps.size());
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    total[k] = mass(snaps[k]);
    ecal[k] = h2dot(snaps[k]);
  }

  Real spacing = std::numeric_limits<Real>::infinity();
  for (std::size_t k = 1; k < times.size(); ++k) spacing = std::min(spacing, times[k] - times[k - 1]);
  const double noise = 1e-10 * double(*std::max_element(total.begin(), total.end()) / spacing);

  auto estimate = [&](Real radius, std::size_t stride, LocalizedMassRecord& rec) {
    std::vector<Real> mb(snaps.size(), 0);
    for (std::size_t k = 0; k < snaps.size(); k += stride) mb[k] = localized_mass(snaps[k], radius);
    Real best = 0, rate_max = 0;
    int used = 0;
    for (std::size_t k = stride; k + stride < snaps.size(); k += stride) {
      const Real rate = (mb[k + stride] - mb[k - stride]) / (times[k + stride] - times[k - stride]);
      rate_max = std::max(rate_max, std::abs(rate));
      if (mb[k] < floor * total[k] || !(ecal[k] > 0)) continue;
      best = std::max(best, std::abs(rate) * radius / (std::pow(ecal[k], Real(0.75)) * std::pow(mb[k], Real(0.25))));
      ++used;
    }
    if (stride == 1) {
      rec.constant = double(best);
      rec.max_rate = double(rate_max);
      rec.samples_used = used;
    } else {
      rec.coarse_constant = double(best);
    }
  };

  LocalizedMassReport report;
  for (auto radius : radii) {
    LocalizedMassRecord rec;
    rec.radius = double(radius);
    estimate(radius, 1, rec);
    if (snaps.size() >= 5) {
      estimate(radius, 2, rec);
      // rates at roundoff level (conserved localized mass) carry no resolution signal
      const double scale = std::max(rec.constant, rec.coarse_constant);
      if (rec.max_rate > noise && std::abs(rec.constant - rec.coarse_constant) > 0.5 * scale)
        throw PreconditionError("localized_mass_rate_check: snapshots too sparse (estimate moved > 50% under stride halving)");
    }
    report.records.push_back(rec);
  }
  for (std::size_t i = 1; i < report.records.size(); ++i) {
    const double a = report.records[i - 1].constant, b = report.records[i].constant;
    if (a <= 0 || b <= 0) continue;
    const double ratio = std::max(a / b, b / a);
    report.max_consecutive_ratio = std::max(report.max_consecutive_ratio, ratio);
  }
  report.stable = report.max_consecutive_ratio <= 3;
  for (const auto& r : report.records)
    if (!std::isfinite(r.constant)) report.stable = false;
  return report;
}

struct MorawetzRecord {
  double k = 0;
  double interval = 0;
  double lhs = 0;
  double rhs_core = 0;
  double constant = 0;
};

/// LHS = int_0^{|I|} int_{|x| <= K |I|^{1/4}} |u|^{2#} / |x| dx dt and the
/// core (K^3 + 1/K) sup_I (E + E^{2#/2}) |I|^{3/4}, E = ||Delta u||^2, on the
/// snapshots with t <= |I| (times measured from the first snapshot).
template <typename Real>
MorawetzRecord morawetz_check(const std::vector<Real>& times, const std::vector<RadialField<Real>>& snaps,
                              Real p, Real k, Real interval) {
  if (times.size() != snaps.size() || times.empty()) throw PreconditionError("morawetz_check: bad snapshots");
  const int n = snaps.front().grid().dimension();
  if (n <= 4 || std::abs(double(p) - critical_power(n)) > 1e-12)
    throw PreconditionError("morawetz_check: needs the energy-critical power p = 2n/(n-4) - 1");
  if (!(k > 0) || !(interval > 0)) throw PreconditionError("morawetz_check: K and |I| must be positive");
  const Real sharp = Real(2 * n) / Real(n - 4);
  const Real radius = k * std::pow(interval, Real(0.25));
  const Real t0 = times.front();

  std::vector<Real> ts, dens;
  Real sup_e = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] - t0 > interval * (1 + Real(1e-9))) break;
    const auto& u = snaps[i];
    const auto& g = u.grid();
    RealVector<Real> integrand = RealVector<Real>::Zero(u.size());
    for (Index j = 0; j < u.size(); ++j)
      if (g.nodes()[j] <= radius) integrand[j] = std::pow(std::abs(u[j]), sharp) / g.nodes()[j];
    ts.push_back(times[i] - t0);
    dens.push_back(g.integrate(integrand));
    const Real e = h2dot(u);
    sup_e = std::max(sup_e, e + std::pow(e, sharp / 2));
  }
  if (ts.size() < 2 || ts.back() < interval * (1 - Real(1e-9)))
    throw PreconditionError("morawetz_check: snapshots do not cover the interval");

  Real lhs = 0;
  for (std::size_t i = 1; i < ts.size(); ++i) lhs += (ts[i] - ts[i - 1]) * (dens[i] + dens[i - 1]) / 2;
  MorawetzRecord rec;
  rec.k = double(k);
  rec.interval = double(interval);
  rec.lhs = double(lhs);
  rec.rhs_core = double((k * k * k + 1 / k) * sup_e * std::pow(interval, Real(0.75)));
  rec.constant = rec.rhs_core > 0 ? rec.lhs / rec.rhs_core : 0;
  return rec;
}

}  // namespace nls4

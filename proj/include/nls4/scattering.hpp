#pragma once

// Finite-time wave operators, scattering-state extraction and the backward
// final-state solver.

#include <cmath>
#include <string>
#include <vector>

#include "nls4/analysis.hpp"

namespace nls4 {

template <typename Real>
struct WaveOperatorProbe {
  RadialField<Real> test_state;
  std::vector<double> times;
  std::vector<RadialField<Real>> series;  // e^{itH} e^{-it Delta^2} test_state
  std::vector<double> gaps;               // H^2 distance between consecutive entries
  bool convergent = false;
};

/// e^{itH} e^{-it Delta^2} applied to the test state for each time, with the
/// intermediate free state required to stay away from the outer boundary.
template <typename Real>
WaveOperatorProbe<Real> probe_wave_operator(const SpectralOperator<Real>& op_full,
                                            const SpectralOperator<Real>& op_free,
                                            const RadialField<Real>& test_state,
                                            const std::vector<double>& times,
                                            double boundary_threshold = 1e-6) {
  op_full.check_grid(test_state, "probe_wave_operator");
  op_free.check_grid(test_state, "probe_wave_operator");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw PreconditionError("probe_wave_operator: times must increase");
  const Real m0 = mass(test_state);
  WaveOperatorProbe<Real> probe{test_state, times, {}, {}, false};
  for (double t : times) {
    const auto free_state = apply_function(op_free, SpectralFunction::exp_it, Real(-t), test_state);
    if (boundary_mass(free_state) > Real(boundary_threshold) * m0)
      throw ContaminationError("probe_wave_operator: free evolution reaches the outer boundary", t);
    auto w = apply_function(op_full, SpectralFunction::exp_it, Real(t), free_state);
    if (boundary_mass(w) > Real(boundary_threshold) * m0)
      throw ContaminationError("probe_wave_operator: perturbed evolution reaches the outer boundary", t);
    probe.series.push_back(std::move(w));
  }
  for (std::size_t k = 1; k < probe.series.size(); ++k)
    probe.gaps.push_back(double(h2_norm(probe.series[k] - probe.series[k - 1])));
  const auto& g = probe.gaps;
  probe.convergent = g.size() >= 3;
  for (std::size_t k = g.size() >= 3 ? g.size() - 2 : g.size(); k < g.size(); ++k)
    if (!(g[k] < g[k - 1])) probe.convergent = false;
  return probe;
}

struct CauchyGap {
  double t1 = 0;
  double t2 = 0;
  double gap = 0;
};

struct ScatteringOptions {
  /// Smallest t1 of the doubling ladder t1, 2 t1, 4 t1, ... ending at the last snapshot.
  double first_time = 0.25;
  /// L^{2#} drop (relative to the initial value) that arms the energy identity.
  double energy_trigger = 0.1;
  double boundary_threshold = 1e-6;
  /// Z norm of the tail below which the run counts as scattered.
  double z_tail_threshold = 1e-3;
};

template <typename Real>
struct ScatteringReport {
  std::vector<CauchyGap> cauchy_series;
  RadialField<Real> u_plus;
  RadialField<Real> u_plus_free;
  double mass_identity_gap = 0;
  double energy_identity_gap = 0;
  bool energy_triggered = false;
  double energy_trigger_time = 0;
  double v_mass_drift = 0;  // max |M(v) - M(u)| / M(u0)
  double z_tail = 0;        // ||u||_Z on [t_last_doubling, T]
  double z_tail_start = 0;
  std::vector<double> free_comparison_times;
  std::vector<double> free_comparison_series;
  bool gaps_decreasing = false;
  bool scattered = false;
  std::string status;
};

/// v(t) = e^{-itH} u(t) on the snapshots; u+ is v at the last snapshot and
/// u+_* = e^{-iT Delta^2} e^{iTH} u+ for that time T.
template <typename Real>
ScatteringReport<Real> extract_scattering_state(const std::vector<Real>& times,
                                                const std::vector<RadialField<Real>>& snaps,
                                                const SpectralOperator<Real>& op_full,
                                                const SpectralOperator<Real>& op_free, Real lambda, Real p,
                                                const ScatteringOptions& options = {}) {
  if (times.size() != snaps.size() || snaps.size() < 2)
    throw PreconditionError("extract_scattering_state: need at least two snapshots");
  const auto& u0 = snaps.front();
  const Real m0 = mass(u0);
  for (std::size_t k = 0; k < snaps.size(); ++k)
    if (boundary_mass(snaps[k]) > Real(options.boundary_threshold) * m0)
      throw ContaminationError("extract_scattering_state: snapshot touches the outer boundary", double(times[k]));

  auto pull_back = [&](std::size_t k) {
    return apply_function(op_full, SpectralFunction::exp_it, -times[k], snaps[k]);
  };
  auto nearest = [&](double t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < times.size(); ++k)
      if (std::abs(double(times[k]) - t) < std::abs(double(times[best]) - t)) best = k;
    return best;
  };

  const std::size_t last = snaps.size() - 1;
  const Real t_last = times[last];
  ScatteringReport<Real> rep{{}, pull_back(last), u0, 0, 0, false, 0, 0, 0, 0, {}, {}, false, false, ""};

  // doubling ladder ending at the last snapshot
  std::vector<std::size_t> ladder{last};
  for (double t = double(t_last) / 2; t >= options.first_time * (1 - 1e-9); t /= 2) ladder.insert(ladder.begin(), nearest(t));
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    const auto a = ladder[i - 1], b = ladder[i];
    rep.cauchy_series.push_back({double(times[a]), double(times[b]), double(h2_norm(pull_back(b) - pull_back(a)))});
  }
  const auto& cs = rep.cauchy_series;
  rep.gaps_decreasing = cs.size() >= 3;
  for (std::size_t i = cs.size() >= 3 ? cs.size() - 2 : cs.size(); i < cs.size(); ++i)
    if (!(cs[i].gap < cs[i - 1].gap)) rep.gaps_decreasing = false;

  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const Real mu = scheme_mass(snaps[k]);
    rep.v_mass_drift = std::max(rep.v_mass_drift, double(std::abs(scheme_mass(pull_back(k)) - mu) / m0));
  }

  rep.mass_identity_gap = double(std::abs(m0 - mass(rep.u_plus)) / m0);
  const auto linear_at_last = apply_function(op_full, SpectralFunction::exp_it, t_last, rep.u_plus);
  rep.u_plus_free = apply_function(op_free, SpectralFunction::exp_it, -t_last, linear_at_last);
  const Real e0 = 2 * energy(op_full, u0, lambda, p);
  rep.energy_identity_gap = double(std::abs(e0 - h2dot(rep.u_plus_free)) / e0);

  const int n = u0.grid().dimension();
  const Real sharp = Real(2 * n) / Real(n - 4);
  const Real l0 = lp_norm(u0, sharp);
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    if (lp_norm(snaps[k], sharp) < Real(options.energy_trigger) * l0) {
      rep.energy_triggered = true;
      rep.energy_trigger_time = double(times[k]);
      break;
    }
  }

  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const auto free_t = apply_function(op_free, SpectralFunction::exp_it, times[k], rep.u_plus_free);
    rep.free_comparison_times.push_back(double(times[k]));
    rep.free_comparison_series.push_back(double(h2_norm(snaps[k] - free_t)));
  }

  // Z norm of the tail from the start of the last doubling
  const std::size_t tail_start = ladder.size() >= 2 ? ladder[ladder.size() - 2] : 0;
  std::vector<Real> tail_times(times.begin() + tail_start, times.end());
  std::vector<RadialField<Real>> tail_fields(snaps.begin() + tail_start, snaps.end());
  rep.z_tail_start = double(times[tail_start]);
  if (tail_times.size() >= 4)
    rep.z_tail = double(spacetime_norm(SpaceTimeSample<Real>(tail_times, tail_fields), SpaceTimeNorm::Z));
  else
    rep.z_tail = std::numeric_limits<double>::infinity();

  rep.scattered = rep.gaps_decreasing && rep.z_tail < options.z_tail_threshold;
  rep.status = rep.scattered ? "scattered" : "not yet scattered";
  return rep;
}

/// Backward Duhamel solution u(t) = e^{itH} u+ - i lambda int_t^{T} e^{i(t-s)H} N(u(s)) ds
/// from T = t_max down to t_start, one window per cfg.dt.
template <typename Real>
RadialField<Real> solve_final_state(const RadialField<Real>& u_plus, const SpectralOperator<Real>& op,
                                    const SimulationConfig& cfg, Real t_start, Real t_max,
                                    DuhamelResult<Real>* info = nullptr) {
  op.check_grid(u_plus, "solve_final_state");
  if (!(t_max > t_start)) throw PreconditionError("solve_final_state: t_start must precede t_max");
  const auto at_end = apply_function(op, SpectralFunction::exp_it, t_max, u_plus);
  DuhamelOptions opts;
  opts.tol = cfg.picard_tol;
  opts.max_iter = cfg.picard_max_iter;
  auto res = solve_duhamel(op, at_end.values(), Real(cfg.lambda), Real(cfg.p), t_max - t_start, Real(cfg.dt),
                           TimeDirection::backward, opts);
  RadialField<Real> out(u_plus.grid_ptr(), res.end_state);
  if (info) *info = std::move(res);
  return out;
}

}  // namespace nls4

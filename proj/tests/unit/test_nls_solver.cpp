#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nls4/initial_data.hpp"
#include "nls4/nls_solver.hpp"

using namespace nls4;

namespace {

using Field = RadialField<double>;

OperatorOptions no_cache() {
  OperatorOptions o;
  o.use_cache = false;
  return o;
}

double l2(const Field& u) { return std::sqrt(mass(u)); }

Field run_strang(const OperatorPtr<double>& op, const Field& u0, double lambda, double p, double dt, double T) {
  const StrangStepper<double> st(op, lambda, p, dt);
  ComplexVector<double> v = u0.values();
  const long steps = std::lround(T / dt);
  for (long s = 0; s < steps; ++s) st.step(v, dt * double(s));
  return Field(u0.grid_ptr(), v);
}

}  // namespace

TEST_CASE("critical power") {
  CHECK(critical_power(5) == 9.0);
  CHECK(critical_power(6) == 5.0);
  CHECK(critical_power(8) == 3.0);
}

TEST_CASE("mass") {
  auto g = make_grid<double>(5, 20.0, 256);
  CHECK(mass(Field::zeros(g)) == 0.0);
  const double pi = std::numbers::pi;
  const double expected = (8 * pi * pi / 3) * std::pow(20.0, 5) / 5;
  CHECK(std::abs(mass(Field::sample(g, [](double) { return 1.0; })) - expected) / expected < 1e-10);
  const Field u = Field::sample(g, [](double r) { return std::complex<double>(std::exp(-r * r), r * std::exp(-r)); });
  CHECK(mass(std::complex<double>(3, 4) * u) == doctest::Approx(25 * mass(u)).epsilon(1e-13));
}

TEST_CASE("energy of a Gaussian against the closed form") {
  auto g = make_grid<double>(5, 8.0, 512);
  auto u = Field::sample(g, [](double r) { return std::exp(-r * r); });
  auto zero = Field::zeros(g);
  // Delta e^{-r^2} = (4r^2 - 2n) e^{-r^2};  int r^k e^{-2 r^2} dr = Gamma((k+1)/2) / (2 * 2^{(k+1)/2})
  auto mom = [](int k) { return std::tgamma((k + 1) / 2.0) / (2 * std::pow(2.0, (k + 1) / 2.0)); };
  const double integral = 16 * mom(8) - 80 * mom(6) + 100 * mom(4);
  const double exact = 0.5 * g->surface_constant() * integral;
  CHECK(std::abs(energy(u, zero, 0.0, 3.0) - exact) / exact < 1e-6);
  CHECK(energy(zero, zero, 1.0, 9.0) == 0.0);
  CHECK(h2dot(u) == doctest::Approx(2 * exact).epsilon(1e-6));
}

TEST_CASE("energy is nonnegative for V >= 0 and lambda > 0") {
  auto g = make_grid<double>(5, 20.0, 256);
  const Field v = evaluate_potential(PotentialSpec::inverse_bracket(5, 0.01, 10), g);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> a(-2, 2), w(0.5, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = a(rng), d = a(rng), s = w(rng);
    const Field u = Field::sample(g, [=](double r) { return std::complex<double>(c, d) * std::exp(-r * r / (s * s)); });
    CHECK(energy(u, v, 1.0, 9.0) >= 0);
  }
  CHECK_THROWS_AS(energy(Field::zeros(g), Field::zeros(make_grid<double>(5, 20.0, 255)), 1.0, 9.0), GridMismatchError);
}

TEST_CASE("nonlinear substep is a pointwise rotation") {
  auto g = make_grid<double>(5, 20.0, 128);
  const Field u = Field::sample(g, [](double r) { return std::complex<double>(std::exp(-r * r), 0.3 * std::exp(-r)); });
  ComplexVector<double> v = u.values();
  nonlinear_phase(v, 1.0, 9.0, 0.37);
  CHECK((v.cwiseAbs() - u.values().cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-15);
  const auto j = 10;
  const double m = std::abs(u[j]);
  CHECK(std::abs(v[j] - std::polar(1.0, 0.37 * std::pow(m, 8)) * u[j]) <= 1e-15);
}

TEST_CASE("strang step with lambda = 0 is the linear propagator") {
  auto g = make_grid<double>(5, 20.0, 128);
  auto op = build_operator<double>(OperatorKind::full, g, PotentialSpec::inverse_bracket(5, 0.01, 10), no_cache());
  const Field u = gaussian_field(g, 1.0, 2.0);
  SimulationConfig cfg;
  cfg.lambda = 0;
  cfg.dt = 0.01;
  const Field stepped = step_strang(u, op, cfg);
  const Field exact = apply_function(*op, SpectralFunction::exp_it, 0.01, u);
  CHECK(l2(stepped - exact) / l2(exact) <= 1e-13);
}

TEST_CASE("strang splitting converges at second order") {
  auto g = make_grid<double>(5, 60.0, 512);
  auto op = build_operator<double>(OperatorKind::full, g, PotentialSpec::inverse_bracket(5, 0.01, 10), no_cache());
  const Field u0 = gaussian_field(g, 1.0, 3.0);
  const double T = 0.2;
  const Field a = run_strang(op, u0, 1.0, 9.0, 2e-3, T);
  const Field b = run_strang(op, u0, 1.0, 9.0, 1e-3, T);
  const Field c = run_strang(op, u0, 1.0, 9.0, 5e-4, T);
  const double ratio = l2(a - b) / l2(b - c);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("picard oracle") {
  auto g = make_grid<double>(5, 60.0, 512);
  auto op = build_operator<double>(OperatorKind::full, g, PotentialSpec::inverse_bracket(5, 0.01, 10), no_cache());
  const Field u0 = gaussian_field(g, 1.0, 3.0);

  SUBCASE("lambda = 0 is the linear flow after one sweep") {
    SimulationConfig cfg;
    cfg.lambda = 0;
    cfg.dt = 0.01;
    DuhamelResult<double> info;
    const Field got = solve_picard(u0, *op, cfg, 0.1, &info);
    const Field exact = apply_function(*op, SpectralFunction::exp_it, 0.1, u0);
    CHECK(info.iterations == 1);
    CHECK(l2(got - exact) / l2(exact) <= 1e-12);
  }

  SUBCASE("agrees with strang at C dt^2 with a stable constant") {
    std::vector<double> cs;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
      SimulationConfig cfg;
      cfg.lambda = 1;
      cfg.p = 9;
      cfg.dt = dt;
      const Field picard = solve_picard(u0, *op, cfg, 0.2);
      const Field strang = run_strang(op, u0, 1.0, 9.0, dt, 0.2);
      cs.push_back(l2(picard - strang) / (dt * dt));
    }
    const double hi = *std::max_element(cs.begin(), cs.end());
    const double lo = *std::min_element(cs.begin(), cs.end());
    CHECK(hi / lo <= 1.5);
  }

  SUBCASE("contraction factor grows with the time span until the iteration fails") {
    SimulationConfig cfg;
    cfg.lambda = -1;
    cfg.p = 9;
    cfg.dt = 0.005;
    cfg.picard_max_iter = 200;
    const Field big = gaussian_field(g, 1.3, 3.0);
    double prev = 0;
    for (double T : {0.005, 0.01, 0.02, 0.04}) {
      DuhamelResult<double> info;
      solve_picard(big, *op, cfg, T, &info);
      CHECK(info.contraction_factor > prev);
      CHECK(info.contraction_factor < 1);
      prev = info.contraction_factor;
    }
    bool thrown = false;
    try {
      solve_picard(big, *op, cfg, 0.08);
    } catch (const ContractionError& e) {
      thrown = true;
      CHECK(e.factor() >= 1);
    }
    CHECK(thrown);
  }
}

TEST_CASE("trajectory monitors") {
  auto g = make_grid<double>(5, 60.0, 512);
  auto free_like = build_operator<double>(OperatorKind::full, g, PotentialSpec::zero(5), no_cache());

  SUBCASE("linear flow conserves mass") {
    SimulationConfig cfg;
    cfg.lambda = 0;
    cfg.dt = 0.01;
    cfg.t_end = 1;
    const auto rec = run_trajectory(gaussian_field(g, 1.0, 6.0), free_like, cfg);
    CHECK(rec.status == RunStatus::completed);
    CHECK(rec.times.size() == rec.mass_series.size());
    CHECK(rec.times.size() == rec.energy_series.size());
    CHECK(rec.times.size() == rec.h2dot_series.size());
    CHECK(rec.times.size() == rec.boundary_mass_series.size());
    double drift = 0;
    for (double m : rec.mass_series) drift = std::max(drift, std::abs(m - rec.mass_series[0]) / rec.mass_series[0]);
    CHECK(drift <= 1e-10);
  }

  SUBCASE("mass next to the boundary halts the run") {
    SimulationConfig cfg;
    cfg.lambda = 0;
    cfg.dt = 0.01;
    cfg.t_end = 1;
    const Field edge = Field::sample(g, [](double r) { return std::exp(-(r - 50) * (r - 50)); });
    const auto rec = run_trajectory(edge, free_like, cfg);
    CHECK(rec.status == RunStatus::boundary_contaminated);
    CHECK(rec.halt_time < 1.0);
  }

  SUBCASE("focusing subcritical run with large data blows up") {
    auto small = make_grid<double>(5, 30.0, 512);
    auto op = build_operator<double>(OperatorKind::full, small, PotentialSpec::inverse_bracket(5, 0.01, 10), no_cache());
    SimulationConfig cfg;
    cfg.lambda = -1;
    cfg.p = (1 + 8.0 / 5 + 9) / 2;
    cfg.dt = 1e-5;
    cfg.t_end = 0.01;
    cfg.blowup_factor = 10;
    const auto rec = run_trajectory(gaussian_field(small, 8.0, 1.0), op, cfg);
    CHECK(rec.status == RunStatus::blowup_suspected);
  }
}

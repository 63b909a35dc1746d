#include <cmath>

#include "doctest.h"
#include "nls4/potentials.hpp"

using namespace nls4;

namespace {

double dense_weak_norm(const RadialGrid<double>& g, const RealVector<double>& mod, double r) {
  const double top = mod.maxCoeff();
  double best = 0;
  for (int i = 0; i < 10000; ++i) {
    const double gamma = std::exp(std::log(1e-12) + (std::log(top) - std::log(1e-12)) * i / 9999.0);
    RealVector<double> indicator = (mod.array() > gamma).cast<double>().matrix();
    best = std::max(best, gamma * std::pow(g.integrate(indicator), 1 / r));
  }
  return best;
}

}  // namespace

TEST_CASE("potential values") {
  auto g = make_grid<double>(5, 20.0, 256);
  CHECK(potential_values(PotentialSpec::zero(5), *g).cwiseAbs().maxCoeff() == 0.0);

  const auto v = PotentialSpec::inverse_bracket(5, 0.01, 10);
  CHECK(v.value(0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(v.value(3) == doctest::Approx(0.01 * 1e-5).epsilon(1e-13));
  const RealVector<double> vals = potential_values(v, *g);
  for (Index j = 0; j < g->size(); ++j) {
    const double r = g->nodes()[j];
    CHECK(vals[j] == doctest::Approx(0.01 * std::pow(1 + r * r, -5.0)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(potential_values(PotentialSpec::inverse_bracket(6, 0.01, 12), *g), GridMismatchError);
}

TEST_CASE("analytic derivatives against central differences") {
  for (const auto& spec : {PotentialSpec::inverse_bracket(5, 0.3, 10), PotentialSpec::gaussian_bump(5, 0.7, 0.4)}) {
    for (double r : {0.1, 0.7, 1.5, 3.0, 6.0}) {
      const double h = 1e-5;
      const double fd = (spec.value(r + h) - spec.value(r - h)) / (2 * h);
      CHECK(spec.derivative(r) == doctest::Approx(fd).epsilon(1e-7).scale(1e-12));
    }
  }
}

TEST_CASE("family names round trip") {
  for (auto f : {PotentialFamily::zero, PotentialFamily::inverse_bracket, PotentialFamily::gaussian_bump})
    CHECK(parse_potential_family(to_string(f)) == f);
  CHECK_THROWS(parse_potential_family("coulomb"));
}

TEST_CASE("zero potential passes every assumption") {
  auto g = make_grid<double>(5, 20.0, 256);
  const auto a = check_assumptions(PotentialSpec::zero(5), *g);
  CHECK(a.all_ok());
  CHECK(a.weak_norm_value == 0.0);
  CHECK(a.decay_sup == 0.0);
  CHECK(a.repulsive_max == 0.0);
  CHECK(a.c0 == 0.0);
  CHECK(a.c1 == 0.0);
  CHECK(a.fourier_condition == "unchecked");
}

TEST_CASE("inverse bracket is repulsive for every nonnegative c and positive beta") {
  auto g = make_grid<double>(5, 20.0, 256);
  for (double c : {0.0, 0.001, 0.01, 0.1, 1.0})
    for (double beta : {0.5, 2.0, 6.0, 10.0, 20.0}) {
      const auto a = check_assumptions(PotentialSpec::inverse_bracket(5, c, beta), *g);
      CHECK(a.repulsive_ok);
      CHECK(a.repulsive_max <= 0);
    }
}

TEST_CASE("example potential weak norm against the dense oracle") {
  auto g = make_grid<double>(5, 20.0, 512);
  const auto spec = PotentialSpec::inverse_bracket(5, 0.01, 10);
  const auto a = check_assumptions(spec, *g, 0.1);
  CHECK(a.weak_norm_ok);
  CHECK(a.weak_norm_value < 0.1);
  CHECK(a.decay_ok);
  CHECK(a.nonneg_ok);
  CHECK(a.derivative_bound_ok);
  const double oracle = dense_weak_norm(*g, potential_values(spec, *g).cwiseAbs(), 1.25);
  CHECK(std::abs(a.weak_norm_value - oracle) / oracle < 0.01);

  const auto doubled = check_assumptions(PotentialSpec::inverse_bracket(5, 0.02, 10), *g, 0.1);
  CHECK(doubled.weak_norm_value == doctest::Approx(2 * a.weak_norm_value).epsilon(1e-12));
}

TEST_CASE("assumption failures are reported with their measurements") {
  auto g = make_grid<double>(5, 20.0, 256);
  const auto slow = check_assumptions(PotentialSpec::inverse_bracket(5, 0.01, 6), *g);
  CHECK_FALSE(slow.decay_ok);
  const auto negative = check_assumptions(PotentialSpec::inverse_bracket(5, -0.01, 10), *g);
  CHECK_FALSE(negative.nonneg_ok);
  CHECK(negative.min_value == doctest::Approx(-0.01));
  CHECK_FALSE(negative.repulsive_ok);
  const auto big = check_assumptions(PotentialSpec::inverse_bracket(5, 10.0, 10), *g, 0.05);
  CHECK_FALSE(big.weak_norm_ok);
  CHECK(big.weak_norm_value > 0.05);
}

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nls4/radial_domain.hpp"

using namespace nls4;

namespace {

using Field = RadialField<double>;

Field random_smooth(const GridPtr<double>& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> w(0.5, 4.0);
  const double a = u(rng), b = u(rng), c = u(rng), d = u(rng), s1 = w(rng), s2 = w(rng);
  return Field::sample(g, [=](double r) {
    return std::complex<double>(a * std::exp(-r * r / (s1 * s1)) + b * r * std::exp(-r * r / (s2 * s2)),
                                c * std::exp(-r * r / (s2 * s2)) + d * std::cos(r) * std::exp(-r * r / (s1 * s1)));
  });
}

// composite Simpson on [0, b] with m (even) panels
template <typename F>
double simpson(F&& f, double b, long m) {
  const double h = b / double(m);
  double acc = f(0.0) + f(b);
  for (long k = 1; k < m; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(h * double(k));
  return acc * h / 3;
}

}  // namespace

TEST_CASE("grid construction and surface constant") {
  auto g = make_grid<double>(5, 20.0, 256);
  CHECK(g->size() == 256);
  const double pi = std::numbers::pi;
  CHECK(g->surface_constant() == doctest::Approx(8 * pi * pi / 3).epsilon(1e-12));
  CHECK(g->surface_constant() == doctest::Approx(26.3189).epsilon(1e-5));
  for (Index j = 1; j < g->size(); ++j) CHECK(g->nodes()[j] > g->nodes()[j - 1]);
  CHECK(g->nodes()[0] > 0);
  CHECK(g->nodes()[g->size() - 1] < 20.0);
  CHECK(g->spacing() == doctest::Approx(20.0 / 257));
  CHECK_THROWS_AS(make_grid<double>(5, 20.0, 8), PreconditionError);
  CHECK_THROWS_AS(make_grid<double>(4, 20.0, 256), PreconditionError);
  CHECK_THROWS_AS(make_grid<double>(0, 20.0, 256), PreconditionError);
  CHECK_THROWS_AS(make_grid<double>(5, -1.0, 256), PreconditionError);
  CHECK_THROWS_AS(make_grid<double>(5, 0.0, 256), PreconditionError);
  CHECK_NOTHROW(make_grid<double>(3, 20.0, 256, GridOptions{true}));
}

TEST_CASE("surface constants in several dimensions") {
  const double pi = std::numbers::pi;
  CHECK(unit_sphere_area<double>(2) == doctest::Approx(2 * pi).epsilon(1e-13));
  CHECK(unit_sphere_area<double>(3) == doctest::Approx(4 * pi).epsilon(1e-13));
  CHECK(unit_sphere_area<double>(6) == doctest::Approx(pi * pi * pi).epsilon(1e-13));
  CHECK(unit_sphere_area<double>(7) == doctest::Approx(16 * pi * pi * pi / 15).epsilon(1e-13));
}

TEST_CASE("quadrature is exact on low monomials") {
  for (int n : {5, 6, 7}) {
    for (Index N : {16, 64, 256, 1023}) {
      auto g = make_grid<double>(n, 13.0, N);
      CHECK((g->weights().array() > 0).all());
      for (int k = 0; k <= 4; ++k) {
        const double exact = std::pow(13.0, n + k) / (n + k);
        const double got = g->weights().dot(g->nodes().array().pow(k).matrix());
        CHECK(std::abs(got - exact) / exact < 1e-10);
      }
    }
  }
}

TEST_CASE("lp norms") {
  auto g = make_grid<double>(5, 20.0, 256);
  const Field zero = Field::zeros(g);
  for (double p : {1.0, 2.0, 3.5, 10.0, double(INFINITY)}) CHECK(lp_norm(zero, p) == 0.0);

  const Field one = Field::sample(g, [](double) { return 1.0; });
  const double pi = std::numbers::pi;
  const double expected = std::sqrt((8 * pi * pi / 3) * std::pow(20.0, 5) / 5);
  CHECK(std::abs(lp_norm(one, 2.0) - expected) / expected < 1e-10);
  CHECK(lp_norm(one, double(INFINITY)) == 1.0);

  std::mt19937_64 rng(7);
  const Field u = random_smooth(g, rng);
  const std::complex<double> c(3, 4);
  for (double p : {1.0, 2.0, 10.0 / 3, 10.0})
    CHECK(lp_norm(c * u, p) == doctest::Approx(5 * lp_norm(u, p)).epsilon(1e-12));
  CHECK_THROWS_AS(lp_norm(u, 0.5), PreconditionError);
}

TEST_CASE("triangle and Hoelder inequalities on random fields") {
  auto g = make_grid<double>(5, 20.0, 256);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Field u = random_smooth(g, rng);
    const Field v = random_smooth(g, rng);
    for (double p : {2.0, 10.0 / 3, 10.0}) CHECK(lp_norm(u + v, p) <= (lp_norm(u, p) + lp_norm(v, p)) * (1 + 1e-12));
    for (double p : {1.5, 2.0, 4.0}) {
      const double q = p / (p - 1);
      CHECK(lp_norm(pointwise_product(u, v), 1.0) <= lp_norm(u, p) * lp_norm(v, q) * (1 + 1e-12));
    }
  }
}

TEST_CASE("weak Lebesgue norm") {
  auto g = make_grid<double>(5, 20.0, 512);
  CHECK(weak_lp_norm(Field::zeros(g), 1.25) == 0.0);
  CHECK_THROWS_AS(weak_lp_norm(Field::zeros(g), 1.0), PreconditionError);

  // <x>^{-(n+5)} with r = n/4 against a dense brute-force sup over gamma
  const Field v = Field::sample(g, [](double r) { return std::pow(1 + r * r, -5.0); });
  const double r_exp = 1.25;
  const double got = weak_lp_norm(v, r_exp);
  const RealVector<double> mod = v.modulus();
  const double top = mod.maxCoeff();
  double brute = 0;
  const int levels = 10000;
  for (int i = 0; i < levels; ++i) {
    const double gamma = std::exp(std::log(1e-12) + (std::log(top) - std::log(1e-12)) * i / (levels - 1));
    RealVector<double> indicator = (mod.array() > gamma).cast<double>().matrix();
    brute = std::max(brute, gamma * std::pow(g->integrate(indicator), 1 / r_exp));
  }
  CHECK(std::abs(got - brute) / brute < 0.01);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Field u = random_smooth(g, rng);
    for (double r : {1.25, 2.0, 3.0}) CHECK(weak_lp_norm(u, r) <= lp_norm(u, r) * (1 + 1e-12));
  }
}

TEST_CASE("localized mass") {
  auto g = make_grid<double>(5, 8.0, 4000);
  CHECK(localized_mass(Field::zeros(g), 1.0) == 0.0);
  CHECK_THROWS_AS(localized_mass(Field::zeros(g), 0.0), PreconditionError);

  const Field u = Field::sample(g, [](double r) { return std::exp(-r * r); });
  const double total = g->integrate(u.modulus_squared());
  CHECK(localized_mass(u, 8.0) == doctest::Approx(total).epsilon(1e-14));

  // 10^6-point Simpson reference of omega int e^{-2r^2} chi(r)^4 r^4 dr on [0, 2]
  const double ref = g->surface_constant() * simpson(
                                                 [](double r) {
                                                   const double c = smooth_cutoff(r);
                                                   return std::exp(-2 * r * r) * c * c * c * c * std::pow(r, 4);
                                                 },
                                                 2.0, 1000000);
  const double got = localized_mass(u, 1.0);
  CHECK(got > 0);
  CHECK(got < total);
  CHECK(std::abs(got - ref) / ref < 1e-6);

  double prev = 0;
  for (double radius : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double m = localized_mass(u, radius);
    CHECK(m >= prev);
    prev = m;
  }
}

TEST_CASE("smooth cutoff profile") {
  CHECK(smooth_cutoff(0.0) == 1.0);
  CHECK(smooth_cutoff(1.0) == 1.0);
  CHECK(smooth_cutoff(2.0) == 0.0);
  CHECK(smooth_cutoff(3.0) == 0.0);
  double prev = 1;
  for (int k = 0; k <= 100; ++k) {
    const double c = smooth_cutoff(1 + k / 100.0);
    CHECK(c >= 0);
    CHECK(c <= prev);
    prev = c;
  }
}

TEST_CASE("boundary mass and grid mismatch") {
  auto g = make_grid<double>(5, 10.0, 128);
  const Field near_origin = Field::sample(g, [](double r) { return std::exp(-r * r); });
  CHECK(boundary_mass(near_origin) < 1e-30);
  const Field flat = Field::sample(g, [](double) { return 1.0; });
  const double pi = std::numbers::pi;
  const double expected = (8 * pi * pi / 3) * (std::pow(10.0, 5) - std::pow(9.0, 5)) / 5;
  CHECK(boundary_mass(flat) == doctest::Approx(expected).epsilon(0.02));

  auto other = make_grid<double>(5, 10.0, 129);
  CHECK_THROWS_AS(flat + Field::zeros(other), GridMismatchError);
  CHECK_THROWS_AS(pointwise_product(flat, Field::zeros(other)), GridMismatchError);
}

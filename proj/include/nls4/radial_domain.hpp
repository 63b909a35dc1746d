#pragma once

// Radial grids, radial fields and the Lebesgue-type functionals built on
// quadrature against the measure r^{n-1} dr.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "nls4/quadrature.hpp"
#include "nls4/types.hpp"

namespace nls4 {

struct GridOptions {
  /// Permit 1 <= n < 5 (debugging only; the estimates need n >= 5).
  bool allow_low_dimension = false;
};

/// Uniform interior grid r_j = j h, h = r_max / (N + 1), j = 1..N, with a
/// Dirichlet condition at r_max.
///
/// Quadrature weights approximate the integral of f(r) r^{n-1} over
/// (0, r_max).  They equal the trapezoid weights h r_j^{n-1} except on a tail
/// block of nodes next to r_max, where they are rescaled by exp(q(r)) with q a
/// quartic chosen so that r^k, k = 0..4, integrate exactly.  Fields that vanish
/// near r_max therefore see plain trapezoid quadrature.
template <typename Real>
class RadialGrid {
 public:
  RadialGrid(int dimension, Real r_max, Index num_points, GridOptions options = {});

  int dimension() const noexcept { return dimension_; }
  Real r_max() const noexcept { return r_max_; }
  Index size() const noexcept { return nodes_.size(); }
  Real spacing() const noexcept { return spacing_; }

  const RealVector<Real>& nodes() const noexcept { return nodes_; }
  /// Weights for the integral of f(r) r^{n-1} dr over (0, r_max).
  const RealVector<Real>& weights() const noexcept { return weights_; }
  /// h r_j^{n-1}; the weights of the operator inner product.
  const RealVector<Real>& trapezoid_weights() const noexcept { return trapezoid_; }
  /// omega_{n-1} = 2 pi^{n/2} / Gamma(n/2).
  Real surface_constant() const noexcept { return surface_; }
  /// First node of the corrected tail block.
  Index tail_begin() const noexcept { return tail_begin_; }

  bool same_as(const RadialGrid& other) const noexcept {
    return this == &other || (dimension_ == other.dimension_ && r_max_ == other.r_max_ &&
                              size() == other.size());
  }

  /// Integral over R^n of a radial function given by its nodal values.
  Real integrate(const RealVector<Real>& values) const {
    return surface_ * weights_.dot(values);
  }

 private:
  void build_weights();

  int dimension_;
  Real r_max_;
  Real spacing_;
  Real surface_;
  Index tail_begin_ = 0;
  RealVector<Real> nodes_;
  RealVector<Real> weights_;
  RealVector<Real> trapezoid_;
};

template <typename Real>
using GridPtr = std::shared_ptr<const RadialGrid<Real>>;

template <typename Real>
GridPtr<Real> make_grid(int n, Real r_max, Index num_points, GridOptions options = {}) {
  return std::make_shared<const RadialGrid<Real>>(n, r_max, num_points, options);
}

template <typename Real>
Real unit_sphere_area(int n) {
  const Real half = Real(n) / 2;
  return 2 * std::pow(std::numbers::pi_v<Real>, half) / std::tgamma(half);
}

template <typename Real>
RadialGrid<Real>::RadialGrid(int dimension, Real r_max, Index num_points, GridOptions options)
    : dimension_(dimension), r_max_(r_max) {
  if (dimension <= 0) throw PreconditionError("make_grid: dimension must be positive");
  if (dimension < 5 && !options.allow_low_dimension)
    throw PreconditionError("make_grid: dimension below 5 (the estimates require n >= 5)");
  if (!(r_max > 0) || !std::isfinite(double(r_max)))
    throw PreconditionError("make_grid: r_max must be positive and finite");
  if (num_points < 16) throw PreconditionError("make_grid: too few points (need N >= 16)");

  spacing_ = r_max / Real(num_points + 1);
  surface_ = unit_sphere_area<Real>(dimension);
  nodes_.resize(num_points);
  trapezoid_.resize(num_points);
  for (Index j = 0; j < num_points; ++j) {
    nodes_[j] = spacing_ * Real(j + 1);
    trapezoid_[j] = spacing_ * std::pow(nodes_[j], Real(dimension - 1));
  }
  build_weights();
}

template <typename Real>
void RadialGrid<Real>::build_weights() {
  constexpr int kMoments = 5;
  const Index n_pts = size();
  const Index tail = n_pts < 128 ? n_pts : std::max<Index>(64, n_pts / 8);
  tail_begin_ = n_pts - tail;

  // Work in s = r / r_max so every quantity is O(1).
  RealVector<Real> s = nodes_ / r_max_;
  RealVector<Real> base(n_pts);
  for (Index j = 0; j < n_pts; ++j)
    base[j] = (spacing_ / r_max_) * std::pow(s[j], Real(dimension_ - 1));

  Eigen::Matrix<Real, kMoments, 1> target;
  for (int k = 0; k < kMoments; ++k) {
    Real fixed = 0;
    for (Index j = 0; j < tail_begin_; ++j) fixed += base[j] * std::pow(s[j], Real(k));
    target[k] = Real(1) / Real(dimension_ + k) - fixed;
  }

  // Exponent basis: Chebyshev polynomials on the tail interval.
  const Real left = s[tail_begin_];
  Eigen::Matrix<Real, Eigen::Dynamic, kMoments> cheb(tail, kMoments);
  Eigen::Matrix<Real, Eigen::Dynamic, kMoments> mono(tail, kMoments);
  for (Index j = 0; j < tail; ++j) {
    const Real x = 2 * (s[tail_begin_ + j] - left) / (Real(1) - left) - 1;
    cheb(j, 0) = 1;
    cheb(j, 1) = x;
    for (int k = 2; k < kMoments; ++k) cheb(j, k) = 2 * x * cheb(j, k - 1) - cheb(j, k - 2);
    for (int k = 0; k < kMoments; ++k) mono(j, k) = std::pow(s[tail_begin_ + j], Real(k));
  }
  const RealVector<Real> tail_base = base.tail(tail);

  auto residual = [&](const Eigen::Matrix<Real, kMoments, 1>& y, RealVector<Real>& scaled) {
    scaled = (tail_base.array() * (cheb * y).array().exp()).matrix();
    return Eigen::Matrix<Real, kMoments, 1>(mono.transpose() * scaled - target);
  };

  Eigen::Matrix<Real, kMoments, 1> y = Eigen::Matrix<Real, kMoments, 1>::Zero();
  RealVector<Real> scaled;
  auto g = residual(y, scaled);
  const Real tol = 64 * std::numeric_limits<Real>::epsilon() * target.cwiseAbs().maxCoeff();
  bool converged = g.cwiseAbs().maxCoeff() <= tol;
  for (int it = 0; it < 200 && !converged; ++it) {
    const Eigen::Matrix<Real, kMoments, kMoments> jac =
        mono.transpose() * (scaled.asDiagonal() * cheb);
    const Eigen::Matrix<Real, kMoments, 1> step = jac.fullPivLu().solve(g);
    Real t = 1;
    const Real g0 = g.norm();
    while (true) {
      RealVector<Real> trial_scaled;
      auto trial = residual(y - t * step, trial_scaled);
      if (trial.allFinite() && (trial.norm() < g0 || t < Real(1e-6))) {
        y -= t * step;
        g = trial;
        scaled = std::move(trial_scaled);
        break;
      }
      t /= 2;
    }
    converged = g.cwiseAbs().maxCoeff() <= tol;
  }
  if (!converged || !scaled.allFinite() || (scaled.array() <= 0).any()) {
    std::ostringstream msg;
    msg << "make_grid: cannot build positive quadrature weights for n = " << dimension_
        << " with N = " << n_pts << " points (refine the grid)";
    throw PreconditionError(msg.str());
  }

  const Real scale = std::pow(r_max_, Real(dimension_));
  weights_ = base * scale;
  weights_.tail(tail) = scaled * scale;
}

/// Complex-valued radial function sampled at the nodes of a grid.
template <typename Real>
class RadialField {
 public:
  using Values = ComplexVector<Real>;

  RadialField(GridPtr<Real> grid, Values values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw PreconditionError("RadialField: null grid");
    if (values_.size() != grid_->size())
      throw GridMismatchError("RadialField: value count does not match grid size");
    if (!values_.allFinite()) throw PreconditionError("RadialField: non-finite values");
  }

  static RadialField zeros(GridPtr<Real> grid) {
    const Index n = grid->size();
    return RadialField(std::move(grid), Values::Zero(n));
  }

  /// Samples f(r) at every node; f may return a real or complex value.
  template <typename F>
  static RadialField sample(GridPtr<Real> grid, F&& f) {
    Values v(grid->size());
    for (Index j = 0; j < v.size(); ++j) v[j] = Complex<Real>(f(grid->nodes()[j]));
    return RadialField(std::move(grid), std::move(v));
  }

  const RadialGrid<Real>& grid() const noexcept { return *grid_; }
  const GridPtr<Real>& grid_ptr() const noexcept { return grid_; }
  const Values& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  Complex<Real> operator[](Index j) const { return values_[j]; }

  RealVector<Real> modulus() const { return values_.cwiseAbs(); }
  RealVector<Real> modulus_squared() const { return values_.cwiseAbs2(); }
  Real max_modulus() const { return size() ? values_.cwiseAbs().maxCoeff() : Real(0); }

 private:
  GridPtr<Real> grid_;
  Values values_;
};

template <typename Real>
void require_same_grid(const RadialGrid<Real>& a, const RadialGrid<Real>& b, const char* where) {
  if (!a.same_as(b)) throw GridMismatchError(std::string(where) + ": fields live on different grids");
}

template <typename Real>
RadialField<Real> operator+(const RadialField<Real>& a, const RadialField<Real>& b) {
  require_same_grid(a.grid(), b.grid(), "operator+");
  return RadialField<Real>(a.grid_ptr(), a.values() + b.values());
}

template <typename Real>
RadialField<Real> operator-(const RadialField<Real>& a, const RadialField<Real>& b) {
  require_same_grid(a.grid(), b.grid(), "operator-");
  return RadialField<Real>(a.grid_ptr(), a.values() - b.values());
}

template <typename Real>
RadialField<Real> operator*(Complex<Real> c, const RadialField<Real>& a) {
  return RadialField<Real>(a.grid_ptr(), c * a.values());
}

template <typename Real>
RadialField<Real> operator*(Real c, const RadialField<Real>& a) {
  return RadialField<Real>(a.grid_ptr(), c * a.values());
}

/// Pointwise product u v.
template <typename Real>
RadialField<Real> pointwise_product(const RadialField<Real>& a, const RadialField<Real>& b) {
  require_same_grid(a.grid(), b.grid(), "pointwise_product");
  return RadialField<Real>(a.grid_ptr(), a.values().cwiseProduct(b.values()));
}

template <typename Real>
RadialField<Real> conj(const RadialField<Real>& a) {
  return RadialField<Real>(a.grid_ptr(), a.values().conjugate());
}

/// Pass p = infinity for the sup norm.
template <typename Real>
Real lp_norm(const RadialField<Real>& u, Real p) {
  if (std::isnan(double(p)) || p < 1) throw PreconditionError("lp_norm: exponent must be >= 1");
  if (std::isinf(double(p))) return u.max_modulus();
  const RealVector<Real> mod = u.modulus();
  const Real peak = mod.size() ? mod.maxCoeff() : Real(0);
  if (peak == 0) return 0;
  // scale by the peak so |u|^p cannot underflow or overflow
  const RealVector<Real> powered = (mod.array() / peak).pow(p).matrix();
  return peak * std::pow(u.grid().integrate(powered), Real(1) / p);
}

/// Lebesgue norm of a real nodal profile.
template <typename Real>
Real lp_norm(const RadialGrid<Real>& grid, const RealVector<Real>& values, Real p) {
  if (p < 1) throw PreconditionError("lp_norm: exponent must be >= 1");
  const RealVector<Real> mod = values.cwiseAbs();
  const Real peak = mod.size() ? mod.maxCoeff() : Real(0);
  if (std::isinf(double(p)) || peak == 0) return peak;
  const RealVector<Real> powered = (mod.array() / peak).pow(p).matrix();
  return peak * std::pow(grid.integrate(powered), Real(1) / p);
}

struct WeakNormLevels {
  double floor = 1e-12;
};

/// sup over levels g in [floor, max|u|] of g |{|u| > g}|^{1/r}.  The
/// distribution function is a step function on the grid, so the sup is taken
/// exactly at its jumps.
template <typename Real>
Real weak_lp_norm(const RadialGrid<Real>& grid, const RealVector<Real>& modulus, Real r,
                  WeakNormLevels levels = {}) {
  if (!(r > 1)) throw PreconditionError("weak_lp_norm: exponent must exceed 1");
  const Index n = modulus.size();
  const Real top = n ? modulus.cwiseAbs().maxCoeff() : Real(0);
  if (top <= Real(levels.floor)) return 0;

  std::vector<Index> order(n);
  for (Index j = 0; j < n; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(modulus[a]) > std::abs(modulus[b]);
  });
  Real measure = 0;
  Real best = 0;
  for (Index k = 0; k < n; ++k) {
    const Real level = std::abs(modulus[order[k]]);
    if (level < Real(levels.floor)) break;
    measure += grid.surface_constant() * grid.weights()[order[k]];
    best = std::max(best, level * std::pow(measure, Real(1) / r));
  }
  return best;
}

template <typename Real>
Real weak_lp_norm(const RadialField<Real>& u, Real r, WeakNormLevels levels = {}) {
  return weak_lp_norm(u.grid(), u.modulus(), r, levels);
}

/// Smooth cutoff: 1 on [0, 1], 0 on [2, inf), C-infinity in between.
template <typename Real>
Real smooth_cutoff(Real s) {
  auto psi = [](Real x) { return x > 0 ? std::exp(-Real(1) / x) : Real(0); };
  if (s <= 1) return 1;
  if (s >= 2) return 0;
  const Real a = psi(2 - s);
  return a / (a + psi(s - 1));
}

template <typename Real>
using CutoffProfile = std::function<Real(Real)>;

/// Integral of |u|^2 chi(|x| / R)^4 (ball centred at the origin).
template <typename Real>
Real localized_mass(const RadialField<Real>& u, Real radius, const CutoffProfile<Real>& chi) {
  if (!(radius > 0)) throw PreconditionError("localized_mass: radius must be positive");
  const auto& grid = u.grid();
  RealVector<Real> integrand(u.size());
  for (Index j = 0; j < u.size(); ++j) {
    const Real c = chi(grid.nodes()[j] / radius);
    integrand[j] = std::norm(u[j]) * c * c * c * c;
  }
  return grid.integrate(integrand);
}

template <typename Real>
Real localized_mass(const RadialField<Real>& u, Real radius) {
  return localized_mass<Real>(u, radius, CutoffProfile<Real>(smooth_cutoff<Real>));
}

/// Mass carried by nodes with r > fraction * r_max.
template <typename Real>
Real boundary_mass(const RadialField<Real>& u, Real fraction = Real(0.9)) {
  const auto& grid = u.grid();
  RealVector<Real> integrand = RealVector<Real>::Zero(u.size());
  for (Index j = 0; j < u.size(); ++j)
    if (grid.nodes()[j] > fraction * grid.r_max()) integrand[j] = std::norm(u[j]);
  return grid.integrate(integrand);
}

extern template class RadialGrid<double>;
extern template class RadialField<double>;

}  // namespace nls4

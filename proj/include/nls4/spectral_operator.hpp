#pragma once

// Discrete radial bi-Laplacian and H = Delta^2 + V with exact functional
// calculus through a dense eigendecomposition.
//
// With w = r^{(n-1)/2} u the radial Laplacian becomes L w = w'' - c w / r^2,
// c = (n-1)(n-3)/4, which is discretized by the fourth-order five-point stencil
// in the flat inner product.  Ghost values: w(-h) = s w(h) with s = (-1)^{(n-1)/2}
// for odd n (w has definite parity there) and s = 0 for even n; w vanishes at
// r_max and is continued oddly beyond it.  Delta^2 is the square of that matrix.

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "nls4/binary_io.hpp"
#include "nls4/potentials.hpp"
#include "nls4/radial_domain.hpp"

namespace nls4 {

enum class OperatorKind { free, full };
enum class SpectralFunction { exp_it, exp_minus_t, power_s, resolvent_z };

struct OperatorOptions {
  Index max_points = 4096;
  bool use_cache = true;
  /// Empty: take NLS4_CACHE_DIR from the environment; caching is off when
  /// neither is set.
  std::string cache_dir;
};

/// Flat five-point stencil of L w = w'' - c w / r^2 with the ghost rules above.
template <typename Real>
struct LaplacianStencil {
  RealVector<Real> diag;
  Real off1 = 0;
  Real off2 = 0;

  explicit LaplacianStencil(const RadialGrid<Real>& g) {
    const int n = g.dimension();
    const Index N = g.size();
    const Real h = g.spacing();
    const Real denom = 12 * h * h;
    const Real c = Real((n - 1) * (n - 3)) / 4;
    const Real parity = n % 2 ? ((n - 1) / 2 % 2 ? Real(-1) : Real(1)) : Real(0);
    off1 = 16 / denom;
    off2 = -1 / denom;
    diag.resize(N);
    for (Index j = 0; j < N; ++j) diag[j] = Real(-30) / denom - c / (g.nodes()[j] * g.nodes()[j]);
    diag[0] -= parity / denom;
    diag[N - 1] += Real(1) / denom;
  }

  Real entry(Index i, Index k) const {
    const Index d = i > k ? i - k : k - i;
    if (d == 0) return diag[i];
    if (d == 1) return off1;
    if (d == 2) return off2;
    return 0;
  }

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> apply(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& w) const {
    const Index N = w.size();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(N);
    for (Index j = 0; j < N; ++j) {
      Scalar acc = diag[j] * w[j];
      if (j >= 1) acc += off1 * w[j - 1];
      if (j + 1 < N) acc += off1 * w[j + 1];
      if (j >= 2) acc += off2 * w[j - 2];
      if (j + 2 < N) acc += off2 * w[j + 2];
      out[j] = acc;
    }
    return out;
  }
};

/// Radial Laplacian of a field through the flat stencil.
template <typename Real>
RadialField<Real> radial_laplacian(const RadialField<Real>& u) {
  const auto& g = u.grid();
  const LaplacianStencil<Real> stencil(g);
  const Real half = Real(g.dimension() - 1) / 2;
  ComplexVector<Real> w(u.size());
  for (Index j = 0; j < u.size(); ++j) w[j] = u[j] * std::pow(g.nodes()[j], half);
  ComplexVector<Real> lw = stencil.apply(w);
  for (Index j = 0; j < u.size(); ++j) lw[j] /= std::pow(g.nodes()[j], half);
  return RadialField<Real>(u.grid_ptr(), std::move(lw));
}

template <typename Real>
class SpectralOperator;

template <typename Real>
using OperatorPtr = std::shared_ptr<const SpectralOperator<Real>>;

/// Discretizes Delta^2 (free) or Delta^2 + V (full) and eigendecomposes it.
template <typename Real>
OperatorPtr<Real> build_operator(OperatorKind kind, const GridPtr<Real>& grid,
                                 const std::optional<PotentialSpec>& spec = std::nullopt,
                                 const OperatorOptions& options = {});

template <typename Real>
class SpectralOperator {
 public:
  using Field = RadialField<Real>;

  OperatorKind kind() const noexcept { return kind_; }
  const RadialGrid<Real>& grid() const noexcept { return *grid_; }
  const GridPtr<Real>& grid_ptr() const noexcept { return grid_; }
  const std::optional<PotentialSpec>& potential() const noexcept { return spec_; }
  /// Potential sampled at the nodes (zero for the free operator).
  const RealVector<Real>& potential_values() const noexcept { return potential_; }

  /// Ascending eigenvalues mu_1 <= ... <= mu_N.
  const RealVector<Real>& eigenvalues() const noexcept { return eigenvalues_; }
  /// Orthonormal eigenvectors in flat (Liouville) coordinates, one per column.
  const RealMatrix<Real>& flat_eigenvectors() const noexcept { return basis_; }
  /// u -> flat coordinates: w_j = scale_j u_j.
  const RealVector<Real>& flat_scale() const noexcept { return scale_; }
  Index size() const noexcept { return eigenvalues_.size(); }
  Real spectral_radius() const { return eigenvalues_.cwiseAbs().maxCoeff(); }
  bool loaded_from_cache() const noexcept { return from_cache_; }

  /// Expansion coefficients <u, e_k> in the operator inner product.
  ComplexVector<Real> to_spectral(const ComplexVector<Real>& u) const;
  ComplexVector<Real> from_spectral(const ComplexVector<Real>& c) const;
  /// Column-wise versions for many fields at once.
  ComplexMatrix<Real> to_spectral(const ComplexMatrix<Real>& u) const;
  ComplexMatrix<Real> from_spectral(const ComplexMatrix<Real>& c) const;

  /// sum_k m(mu_k) <u, e_k> e_k for any multiplier m: Real -> Complex.
  template <typename Multiplier>
  ComplexVector<Real> apply_multiplier(Multiplier&& m, const ComplexVector<Real>& u) const {
    ComplexVector<Real> c = to_spectral(u);
    for (Index k = 0; k < c.size(); ++k) c[k] *= Complex<Real>(m(eigenvalues_[k]));
    return from_spectral(c);
  }

  template <typename Multiplier>
  Field apply_multiplier(Multiplier&& m, const Field& u) const {
    check_grid(u, "apply_multiplier");
    return Field(grid_, apply_multiplier(std::forward<Multiplier>(m), u.values()));
  }

  /// e_k as a radial field, normalized in the operator inner product.
  Field eigenfunction(Index k) const;

  /// Radial Laplacian by the stencil.
  ComplexVector<Real> laplacian(const ComplexVector<Real>& u) const;
  Field laplacian(const Field& u) const {
    check_grid(u, "laplacian");
    return Field(grid_, laplacian(u.values()));
  }
  /// Operator applied by the stencil rather than the eigen-expansion.
  Field apply_direct(const Field& u) const;

  /// Inner product omega sum_j h r_j^{n-1} conj(u_j) v_j in which the
  /// eigenvectors are orthonormal.
  Complex<Real> inner(const Field& u, const Field& v) const;

  /// Number of eigenvalues below the threshold (a zero-energy resonance probe).
  Index count_below(Real threshold) const {
    return (eigenvalues_.array() < threshold).count();
  }

  void check_grid(const Field& u, const char* where) const {
    if (!u.grid().same_as(*grid_))
      throw GridMismatchError(std::string(where) + ": field is not on the operator grid");
  }

  friend OperatorPtr<Real> build_operator<Real>(OperatorKind, const GridPtr<Real>&,
                                                const std::optional<PotentialSpec>&,
                                                const OperatorOptions&);

 private:
  SpectralOperator() = default;
  void assemble_stencil();
  RealMatrix<Real> dense_operator() const;

  OperatorKind kind_ = OperatorKind::free;
  GridPtr<Real> grid_;
  std::optional<PotentialSpec> spec_;
  RealVector<Real> potential_;
  RealVector<Real> eigenvalues_;
  RealMatrix<Real> basis_;
  RealVector<Real> scale_;
  std::optional<LaplacianStencil<Real>> stencil_;
  bool from_cache_ = false;
};

template <typename Real>
void SpectralOperator<Real>::assemble_stencil() {
  const auto& g = *grid_;
  stencil_.emplace(g);
  scale_.resize(g.size());
  for (Index j = 0; j < g.size(); ++j) scale_[j] = std::sqrt(g.surface_constant() * g.trapezoid_weights()[j]);
}

template <typename Real>
RealMatrix<Real> SpectralOperator<Real>::dense_operator() const {
  const Index N = scale_.size();
  const auto& l = *stencil_;
  RealMatrix<Real> a = RealMatrix<Real>::Zero(N, N);
  for (Index i = 0; i < N; ++i) {
    for (Index j = std::max<Index>(0, i - 4); j <= std::min<Index>(N - 1, i + 4); ++j) {
      Real sum = 0;
      const Index lo = std::max<Index>(0, std::max(i, j) - 2);
      const Index hi = std::min<Index>(N - 1, std::min(i, j) + 2);
      for (Index k = lo; k <= hi; ++k) sum += l.entry(i, k) * l.entry(k, j);
      a(i, j) = sum;
    }
    a(i, i) += potential_[i];
  }
  return a;
}

template <typename Real>
ComplexVector<Real> SpectralOperator<Real>::laplacian(const ComplexVector<Real>& u) const {
  if (u.size() != size()) throw GridMismatchError("laplacian: size mismatch");
  const ComplexVector<Real> w = u.cwiseProduct(scale_.template cast<Complex<Real>>());
  return stencil_->apply(w).cwiseQuotient(scale_.template cast<Complex<Real>>());
}

template <typename Real>
typename SpectralOperator<Real>::Field SpectralOperator<Real>::apply_direct(const Field& u) const {
  check_grid(u, "apply_direct");
  const auto s = scale_.template cast<Complex<Real>>();
  const ComplexVector<Real> w = u.values().cwiseProduct(s);
  ComplexVector<Real> hw = stencil_->apply(ComplexVector<Real>(stencil_->apply(w)));
  hw += potential_.template cast<Complex<Real>>().cwiseProduct(w);
  return Field(grid_, hw.cwiseQuotient(s));
}

template <typename Real>
Complex<Real> SpectralOperator<Real>::inner(const Field& u, const Field& v) const {
  check_grid(u, "inner");
  check_grid(v, "inner");
  const RealVector<Real> w = scale_.cwiseAbs2();
  return (u.values().conjugate().cwiseProduct(v.values())).dot(w.template cast<Complex<Real>>());
}

namespace detail {

template <typename Real>
RealMatrix<Real> split_columns(const ComplexMatrix<Real>& z) {
  RealMatrix<Real> out(z.rows(), 2 * z.cols());
  out.leftCols(z.cols()) = z.real();
  out.rightCols(z.cols()) = z.imag();
  return out;
}

template <typename Real>
ComplexMatrix<Real> join_columns(const RealMatrix<Real>& x) {
  const Index m = x.cols() / 2;
  ComplexMatrix<Real> out(x.rows(), m);
  out.real() = x.leftCols(m);
  out.imag() = x.rightCols(m);
  return out;
}

}  // namespace detail

template <typename Real>
ComplexVector<Real> SpectralOperator<Real>::to_spectral(const ComplexVector<Real>& u) const {
  if (u.size() != size()) throw GridMismatchError("to_spectral: size mismatch");
  const ComplexMatrix<Real> m = u;
  return to_spectral(m).col(0);
}

template <typename Real>
ComplexVector<Real> SpectralOperator<Real>::from_spectral(const ComplexVector<Real>& c) const {
  if (c.size() != size()) throw GridMismatchError("from_spectral: size mismatch");
  const ComplexMatrix<Real> m = c;
  return from_spectral(m).col(0);
}

template <typename Real>
ComplexMatrix<Real> SpectralOperator<Real>::to_spectral(const ComplexMatrix<Real>& u) const {
  if (u.rows() != size()) throw GridMismatchError("to_spectral: size mismatch");
  RealMatrix<Real> x = detail::split_columns<Real>(u);
  x = scale_.asDiagonal() * x;
  const RealMatrix<Real> y = basis_.transpose() * x;
  return detail::join_columns<Real>(y);
}

template <typename Real>
ComplexMatrix<Real> SpectralOperator<Real>::from_spectral(const ComplexMatrix<Real>& c) const {
  if (c.rows() != size()) throw GridMismatchError("from_spectral: size mismatch");
  RealMatrix<Real> y = basis_ * detail::split_columns<Real>(c);
  y = scale_.cwiseInverse().asDiagonal() * y;
  return detail::join_columns<Real>(y);
}

template <typename Real>
typename SpectralOperator<Real>::Field SpectralOperator<Real>::eigenfunction(Index k) const {
  if (k < 0 || k >= size()) throw PreconditionError("eigenfunction: index out of range");
  const RealVector<Real> v = basis_.col(k).cwiseQuotient(scale_);
  return Field(grid_, v.template cast<Complex<Real>>());
}

namespace detail {

std::string cache_file_name(OperatorKind kind, int n, double r_max, long long N,
                            std::uint64_t potential_hash);
std::string resolve_cache_dir(const OperatorOptions& options);

}  // namespace detail

template <typename Real>
OperatorPtr<Real> build_operator(OperatorKind kind, const GridPtr<Real>& grid,
                                 const std::optional<PotentialSpec>& spec,
                                 const OperatorOptions& options) {
  if (!grid) throw PreconditionError("build_operator: null grid");
  if (kind == OperatorKind::full && !spec)
    throw PreconditionError("build_operator: the full operator needs a potential");
  if (kind == OperatorKind::free && spec)
    throw PreconditionError("build_operator: the free operator takes no potential");
  if (grid->size() > options.max_points) {
    std::ostringstream msg;
    msg << "build_operator: N = " << grid->size() << " exceeds the dense budget of "
        << options.max_points << " points";
    throw PreconditionError(msg.str());
  }

  std::shared_ptr<SpectralOperator<Real>> op(new SpectralOperator<Real>());
  op->kind_ = kind;
  op->grid_ = grid;
  op->spec_ = spec;
  op->potential_ = spec ? potential_values(*spec, *grid) : RealVector<Real>::Zero(grid->size());
  op->assemble_stencil();

  const std::uint64_t vhash = spec ? spec->hash() : 0;
  const Index N = grid->size();
  const std::string dir = options.use_cache ? detail::resolve_cache_dir(options) : std::string();
  std::string path;
  if (!dir.empty()) {
    path = (std::filesystem::path(dir) /
            detail::cache_file_name(kind, grid->dimension(), double(grid->r_max()), N, vhash))
               .string();
    if (std::filesystem::exists(path)) {
      try {
        const Block block = read_block(path);
        const auto& h = block.header;
        const BlockKind want = kind == OperatorKind::free ? BlockKind::free_eigen : BlockKind::full_eigen;
        if (h.kind == want && h.dimension == grid->dimension() && h.num_points == std::uint64_t(N) &&
            h.r_max == double(grid->r_max()) && h.potential_hash == vhash &&
            h.rows == std::uint64_t(N) && h.cols == std::uint64_t(N) &&
            block.trailer.size() == std::size_t(N)) {
          op->basis_ = block.data.template cast<Real>();
          op->eigenvalues_ = Eigen::Map<const Eigen::VectorXd>(block.trailer.data(), N).template cast<Real>();
          op->from_cache_ = true;
          return op;
        }
      } catch (const Error&) {
        // unreadable cache entries are rebuilt
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<RealMatrix<Real>> solver(op->dense_operator());
  if (solver.info() != Eigen::Success) throw Error("build_operator: eigensolver did not converge");
  op->eigenvalues_ = solver.eigenvalues();
  op->basis_ = solver.eigenvectors();
  // fix the sign of each eigenvector so caches and fresh builds agree
  for (Index k = 0; k < N; ++k) {
    Index arg;
    op->basis_.col(k).cwiseAbs().maxCoeff(&arg);
    if (op->basis_(arg, k) < 0) op->basis_.col(k) *= Real(-1);
  }

  if (!path.empty()) {
    Block block;
    block.header.kind = kind == OperatorKind::free ? BlockKind::free_eigen : BlockKind::full_eigen;
    block.header.dimension = grid->dimension();
    block.header.num_points = std::uint64_t(N);
    block.header.r_max = double(grid->r_max());
    block.header.potential_hash = vhash;
    block.header.rows = block.header.cols = std::uint64_t(N);
    block.data = op->basis_.template cast<double>();
    block.trailer.assign(N, 0.0);
    for (Index k = 0; k < N; ++k) block.trailer[k] = double(op->eigenvalues_[k]);
    try {
      write_block(path, block);
    } catch (const std::exception&) {
      // a read-only cache directory only costs speed
    }
  }
  return op;
}

/// f(H) u for the tagged scalar functions:
///   exp_it       e^{i t mu}         parameter t (real)
///   exp_minus_t  e^{-t mu}          parameter t >= 0
///   power_s      mu^{s/4}           parameter s in [0, 4]
///   resolvent_z  (mu - z)^{-1}      parameter z (complex)
template <typename Real>
RadialField<Real> apply_function(const SpectralOperator<Real>& op, SpectralFunction f,
                                 Complex<Real> parameter, const RadialField<Real>& u) {
  op.check_grid(u, "apply_function");
  const Real t = parameter.real();
  if (f != SpectralFunction::resolvent_z && parameter.imag() != 0)
    throw PreconditionError("apply_function: this function takes a real parameter");
  switch (f) {
    case SpectralFunction::exp_it:
      return op.apply_multiplier([t](Real mu) { return std::polar(Real(1), t * mu); }, u);
    case SpectralFunction::exp_minus_t:
      if (t < 0) throw PreconditionError("apply_function: exp_minus_t needs t >= 0");
      return op.apply_multiplier([t](Real mu) { return std::exp(-t * mu); }, u);
    case SpectralFunction::power_s: {
      if (t < 0 || t > 4) throw PreconditionError("apply_function: power_s needs s in [0, 4]");
      const Real floor = 1e-12 * op.spectral_radius();
      if (op.eigenvalues()[0] < -floor)
        throw PreconditionError("apply_function: power_s needs a nonnegative spectrum");
      if (t == 0) return u;
      return op.apply_multiplier([t](Real mu) { return std::pow(std::max(mu, Real(0)), t / 4); }, u);
    }
    case SpectralFunction::resolvent_z: {
      const Real gap = (op.eigenvalues().template cast<Complex<Real>>().array() - parameter).abs().minCoeff();
      if (gap < Real(1e-12) * op.spectral_radius())
        throw PreconditionError("apply_function: resolvent parameter lies on the spectrum");
      return op.apply_multiplier([parameter](Real mu) { return Complex<Real>(1) / (mu - parameter); }, u);
    }
  }
  throw PreconditionError("apply_function: unknown function");
}

template <typename Real>
RadialField<Real> apply_function(const SpectralOperator<Real>& op, SpectralFunction f, Real parameter,
                                 const RadialField<Real>& u) {
  return apply_function(op, f, Complex<Real>(parameter), u);
}

/// |grad|^s u = (Delta^2)^{s/4} u through the free calculus.
template <typename Real>
RadialField<Real> free_fractional_gradient(const SpectralOperator<Real>& op_free, Real s,
                                           const RadialField<Real>& u) {
  if (op_free.kind() != OperatorKind::free)
    throw PreconditionError("free_fractional_gradient: needs the free operator");
  if (s < 0 || s > 4) throw PreconditionError("free_fractional_gradient: s must lie in [0, 4]");
  return apply_function(op_free, SpectralFunction::power_s, s, u);
}

extern template class SpectralOperator<double>;

}  // namespace nls4

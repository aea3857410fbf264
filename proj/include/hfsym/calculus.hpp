#pragma once

// Discrete exterior calculus on a CubicalComplex.
//
// A primal p-cochain stores one fiber value per p-cell. A dual k-cochain
// stores one value per primal (d-k)-cell, namely its integral over that
// cell's dual cell, oriented so that (primal orientation, dual orientation)
// is positive. The primal coboundary is the transpose of the boundary; the
// dual coboundary of a dual k-cochain is (-1)^(d-k) times the boundary map
// applied to its values, which makes discrete Stokes hold on translated
// primal chains.

#include <cstdio>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hfsym/cubical.hpp"
#include "hfsym/errors.hpp"
#include "hfsym/fiber.hpp"

namespace hfsym {

class Cochain {
 public:
  Cochain(ComplexPtr complex, int degree, FiberSpec fiber, bool dual = false)
      : complex_(std::move(complex)), degree_(degree), dual_(dual), fiber_(std::move(fiber)) {
    if (!complex_) throw DomainError("cochain needs a complex");
    if (degree_ < 0 || degree_ > complex_->dimension())
      throw DomainError("cochain degree " + std::to_string(degree_) + " out of range");
    values_ = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(complex_->cell_count(indexing_degree())),
                                     fiber_.components());
  }

  static Cochain zero(ComplexPtr complex, int degree, FiberSpec fiber, bool dual = false) {
    return {std::move(complex), degree, std::move(fiber), dual};
  }

  /// Same fiber value on every cell.
  static Cochain constant(ComplexPtr complex, int degree, FiberSpec fiber, const FiberValue& v) {
    Cochain c(std::move(complex), degree, std::move(fiber));
    c.values_.rowwise() = v.transpose();
    return c;
  }

  template <class Rng>
  static Cochain random_gaussian(ComplexPtr complex, int degree, FiberSpec fiber, Rng& rng,
                                 double stddev = 1.0) {
    Cochain c(std::move(complex), degree, std::move(fiber));
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index i = 0; i < c.values_.rows(); ++i)
      for (Eigen::Index k = 0; k < c.values_.cols(); ++k) {
        const double re = dist(rng);
        const double im = c.fiber_.is_real() ? 0.0 : dist(rng);
        c.values_(i, k) = cplx(re, im);
      }
    return c;
  }

  /// Cochain with small integer entries; coboundaries of these are exact.
  template <class Rng>
  static Cochain random_integer(ComplexPtr complex, int degree, FiberSpec fiber, Rng& rng, int range = 5) {
    Cochain c(std::move(complex), degree, std::move(fiber));
    std::uniform_int_distribution<int> dist(-range, range);
    for (Eigen::Index i = 0; i < c.values_.rows(); ++i)
      for (Eigen::Index k = 0; k < c.values_.cols(); ++k)
        c.values_(i, k) = cplx(dist(rng), c.fiber_.is_real() ? 0 : dist(rng));
    return c;
  }

  const ComplexPtr& complex() const noexcept { return complex_; }
  int degree() const noexcept { return degree_; }
  bool is_dual() const noexcept { return dual_; }
  const FiberSpec& fiber() const noexcept { return fiber_; }
  /// Degree of the primal cells that index the values.
  int indexing_degree() const noexcept { return dual_ ? complex_->dimension() - degree_ : degree_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }

  /// cells x components
  const Eigen::MatrixXcd& values() const noexcept { return values_; }
  Eigen::MatrixXcd& values() noexcept { return values_; }

  FiberValue value(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)).transpose(); }
  void set(std::size_t i, const FiberValue& v) {
    if (v.size() != values_.cols()) throw DomainError("fiber value has wrong number of components");
    values_.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }

  double max_norm() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

  bool same_space(const Cochain& o) const {
    return complex_ == o.complex_ && degree_ == o.degree_ && dual_ == o.dual_ && fiber_ == o.fiber_;
  }
  void require_same_space(const Cochain& o) const {
    if (!same_space(o)) throw DomainError("cochains live in different spaces");
  }

  Cochain operator+(const Cochain& o) const {
    require_same_space(o);
    Cochain r = *this;
    r.values_ += o.values_;
    return r;
  }
  Cochain operator-(const Cochain& o) const {
    require_same_space(o);
    Cochain r = *this;
    r.values_ -= o.values_;
    return r;
  }
  friend Cochain operator*(double s, const Cochain& c) {
    Cochain r = c;
    r.values_ *= s;
    return r;
  }

  /// Bitwise equality of every stored value.
  bool operator==(const Cochain& o) const { return same_space(o) && values_ == o.values_; }

 private:
  ComplexPtr complex_;
  int degree_;
  bool dual_;
  FiberSpec fiber_;
  Eigen::MatrixXcd values_;
};

/// Diagonal Hodge star: primal p-cell factor = dual volume / primal volume.
class HodgeStar {
 public:
  explicit HodgeStar(const CubicalComplex& complex) {
    const int d = complex.dimension();
    factors_.resize(static_cast<std::size_t>(d) + 1);
    for (int p = 0; p <= d; ++p) {
      auto& f = factors_[p];
      f.resize(complex.cell_count(p));
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = complex.dual_volume(p, i) / complex.volume(p, i);
    }
  }

  double factor(int p, std::size_t index) const { return factors_.at(static_cast<std::size_t>(p)).at(index); }
  const std::vector<double>& factors(int p) const { return factors_.at(static_cast<std::size_t>(p)); }

 private:
  std::vector<std::vector<double>> factors_;
};

/// Coboundary. Primal p -> primal p+1, dual k -> dual k+1.
inline Cochain d(const Cochain& psi) {
  const auto& cx = *psi.complex();
  const int dim = cx.dimension();
  if (psi.degree() >= dim) throw DomainError("coboundary of a top-degree cochain");
  Cochain out(psi.complex(), psi.degree() + 1, psi.fiber(), psi.is_dual());
  const auto& in = psi.values();
  auto& o = out.values();
  if (!psi.is_dual()) {
    const int q = psi.degree() + 1;
    for (std::size_t i = 0; i < out.size(); ++i)
      for (const auto& f : cx.faces(q, i))
        o.row(static_cast<Eigen::Index>(i)) += static_cast<double>(f.sign) * in.row(static_cast<Eigen::Index>(f.index));
  } else {
    const int m = psi.indexing_degree();  // values on primal m-cells, output on (m-1)-cells
    const double sign = ((dim - psi.degree()) % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < psi.size(); ++i)
      for (const auto& f : cx.faces(m, i))
        o.row(static_cast<Eigen::Index>(f.index)) += (sign * f.sign) * in.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

/// Hodge star. Primal p -> dual d-p; dual k -> primal d-k with the sign
/// (-1)^(k(d-k)), so star(star(psi)) = (-1)^(p(d-p)) psi.
inline Cochain star(const Cochain& psi, const HodgeStar& hodge) {
  const int dim = psi.complex()->dimension();
  const int m = psi.indexing_degree();
  Cochain out(psi.complex(), dim - psi.degree(), psi.fiber(), !psi.is_dual());
  const auto& f = hodge.factors(m);
  auto& o = out.values();
  const auto& in = psi.values();
  if (!psi.is_dual()) {
    for (std::size_t i = 0; i < f.size(); ++i) o.row(static_cast<Eigen::Index>(i)) = f[i] * in.row(static_cast<Eigen::Index>(i));
  } else {
    const int k = psi.degree();
    const double sign = ((k * (dim - k)) % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      o.row(static_cast<Eigen::Index>(i)) = (sign / f[i]) * in.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

inline Cochain star(const Cochain& psi) { return star(psi, HodgeStar(*psi.complex())); }

/// Pairing of a cochain with a chain of the same degree. Dual cochains are
/// integrated over the half-diagonal translate of the primal chain.
inline FiberValue integrate(const Cochain& psi, const Chain& gamma) {
  if (psi.complex() != gamma.complex()) throw DomainError("cochain and chain live on different complexes");
  if (psi.degree() != gamma.degree())
    throw DomainError("cannot integrate a " + std::to_string(psi.degree()) + "-cochain over a " +
                      std::to_string(gamma.degree()) + "-chain");
  FiberValue sum = FiberValue::Zero(psi.fiber().components());
  const auto& vals = psi.values();
  if (!psi.is_dual()) {
    for (const auto& [i, c] : gamma.terms()) sum += static_cast<double>(c) * vals.row(static_cast<Eigen::Index>(i)).transpose();
  } else {
    const auto& cx = *psi.complex();
    for (const auto& [i, c] : gamma.terms()) {
      auto partner = cx.dual_partner(gamma.degree(), i);
      if (!partner) throw GeometryError("chain leaves the region covered by the dual mesh");
      sum += static_cast<double>(c * partner->sign) * vals.row(static_cast<Eigen::Index>(partner->index)).transpose();
    }
  }
  return sum;
}

/// Discrete L2 product sum_c <psi_c, phi_c> * w_c with w_c the Hodge factor
/// of the cell (its inverse for dual cochains). Antilinear in psi.
inline cplx inner(const Cochain& psi, const Cochain& phi, const HodgeStar& hodge) {
  psi.require_same_space(phi);
  const auto& f = hodge.factors(psi.indexing_degree());
  cplx sum = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double w = psi.is_dual() ? 1.0 / f[i] : f[i];
    sum += psi.fiber().pairing(psi.value(i), phi.value(i)) * w;
  }
  return sum;
}

inline cplx inner(const Cochain& psi, const Cochain& phi) { return inner(psi, phi, HodgeStar(*psi.complex())); }

/// prefactor * <d psi, d psi>.
inline double action(const Cochain& psi, double prefactor = 1.0) {
  const Cochain dpsi = d(psi);
  return prefactor * inner(dpsi, dpsi).real();
}

/// d star d psi, a dual (d-p)-cochain indexed by the p-cells.
inline Cochain eom_residual(const Cochain& psi) {
  if (psi.is_dual()) throw DomainError("equation of motion is defined for primal fields");
  return d(star(d(psi)));
}

/// Applies a fixed linear map to every fiber value (a global symmetry).
inline Cochain apply_global(const Cochain& psi, const Eigen::MatrixXcd& rep) {
  if (rep.rows() != psi.fiber().components() || rep.cols() != psi.fiber().components())
    throw DomainError("representation matrix does not match fiber");
  Cochain r = psi;
  r.values() = psi.values() * rep.transpose();
  return r;
}

struct FixedValue {
  std::size_t cell;
  FiberValue value;
};

struct SolveConstraints {
  /// Cells whose values are held fixed (Dirichlet data).
  std::vector<FixedValue> fixed;
  /// Right-hand side rho of d star d psi = rho: a dual (d-p)-cochain.
  std::optional<Cochain> source;
};

struct SolveOptions {
  double tolerance = 1e-10;
  int max_iterations = 20000;
};

struct SolveResult {
  Cochain field;
  /// max-norm of (d star d psi - rho) over the free cells.
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

/// Conjugate gradients from x = 0 on a symmetric positive semi-definite
/// system; stops on the max-norm of the recomputed residual. Returns the best
/// iterate seen, so a target below the roundoff floor ends at the floor
/// instead of drifting once the Krylov space is exhausted.
inline int conjugate_gradient(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                              double tol, int max_iter, double& final_residual) {
  x = Eigen::VectorXd::Zero(b.size());
  final_residual = b.size() == 0 ? 0.0 : b.lpNorm<Eigen::Infinity>();
  if (final_residual <= tol) return 0;
  Eigen::VectorXd best = x;
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  int last_gain = 0;
  // recompute the true residual and remember the iterate if it is the best so far
  auto probe = [&](int it) {
    r = b - a * x;
    const double res = r.lpNorm<Eigen::Infinity>();
    if (res < final_residual) {
      if (res < 0.5 * final_residual) last_gain = it;
      final_residual = res;
      best = x;
    }
    return res;
  };
  int it = 1;
  for (; it <= max_iter; ++it) {
    const Eigen::VectorXd ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rinf = r.lpNorm<Eigen::Infinity>();
    if (rinf <= tol || rinf < 0.5 * final_residual || it % 25 == 0) {
      if (probe(it) <= tol || it - last_gain > 100) break;
    }
    const double rr_new = r.squaredNorm();
    if (rr_new == 0.0) break;
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  probe(it);
  x = best;
  return std::min(it, max_iter);
}

}  // namespace detail

/// Solves d star d psi = rho for a primal p-cochain, componentwise.
///
/// Without fixed cells on a torus the operator is singular: the source must
/// be orthogonal to closed cochains (its boundary vanishes and it sums to zero
/// over every parallel cell family), and the returned representative has its
/// harmonic (per-family constant) part removed.
inline SolveResult solve_free(const ComplexPtr& complex, const FiberSpec& fiber, int p,
                              const SolveConstraints& constraints, const SolveOptions& options = {}) {
  const auto& cx = *complex;
  const int dim = cx.dimension();
  if (p < 0 || p >= dim) throw DomainError("solver degree must be below the complex dimension");
  const std::size_t n = cx.cell_count(p);
  const int ncomp = fiber.components();

  Cochain rho(complex, dim - p, fiber, true);
  if (constraints.source) {
    const Cochain& s = *constraints.source;
    if (!s.same_space(rho)) throw DomainError("source must be a dual (d-p)-cochain with the field's fiber");
    rho = s;
  }

  Cochain psi(complex, p, fiber);
  std::vector<char> is_fixed(n, 0);
  for (const auto& fv : constraints.fixed) {
    if (fv.cell >= n) throw DomainError("fixed cell index out of range");
    psi.set(fv.cell, fv.value);
    is_fixed[fv.cell] = 1;
  }
  const bool singular_torus = constraints.fixed.empty() && cx.is_torus();

  if (constraints.fixed.empty() && constraints.source) {
    // compatibility: rho in the range of the boundary map
    const double scale = 1.0 + rho.max_norm();
    double defect = 0.0;
    if (p >= 1) {
      Eigen::MatrixXcd bd = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(cx.cell_count(p - 1)), ncomp);
      for (std::size_t i = 0; i < n; ++i)
        for (const auto& f : cx.faces(p, i))
          bd.row(static_cast<Eigen::Index>(f.index)) += static_cast<double>(f.sign) * rho.values().row(static_cast<Eigen::Index>(i));
      defect = bd.size() ? bd.cwiseAbs().maxCoeff() : 0.0;
    }
    if (singular_torus || p == 0) {
      Eigen::MatrixXcd sums = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(cx.class_count(p)), ncomp);
      for (std::size_t i = 0; i < n; ++i)
        sums.row(static_cast<Eigen::Index>(cx.class_of(p, i))) += rho.values().row(static_cast<Eigen::Index>(i));
      defect = std::max(defect, sums.cwiseAbs().maxCoeff());
    }
    if (defect > 1e-9 * scale * std::sqrt(static_cast<double>(n)))
      throw SolverError("incompatible source: not orthogonal to closed cochains", defect);
  }

  // L psi = d star d psi = (-1)^(p+1) B F B^T psi with B = boundary_matrix(p+1).
  const HodgeStar hodge(cx);
  const auto& fq = hodge.factors(p + 1);
  Eigen::SparseMatrix<double> b = cx.boundary_matrix(p + 1).cast<double>();
  Eigen::SparseMatrix<double> k = b * Eigen::VectorXd::Map(fq.data(), static_cast<Eigen::Index>(fq.size())).asDiagonal() *
                                  Eigen::SparseMatrix<double>(b.transpose());
  const double sign = (p % 2 == 0) ? -1.0 : 1.0;

  std::vector<Eigen::Index> free_of(n, -1);
  std::vector<std::size_t> free_cells;
  for (std::size_t i = 0; i < n; ++i)
    if (!is_fixed[i]) {
      free_of[i] = static_cast<Eigen::Index>(free_cells.size());
      free_cells.push_back(i);
    }
  const auto nf = static_cast<Eigen::Index>(free_cells.size());
  std::vector<Eigen::Triplet<double>> tff;
  Eigen::SparseMatrix<double> kff(nf, nf);
  for (int col = 0; col < k.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
      const auto r = free_of[static_cast<std::size_t>(it.row())];
      const auto c = free_of[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) tff.emplace_back(r, c, it.value());
    }
  kff.setFromTriplets(tff.begin(), tff.end());

  // K x = sign * rho on free rows, with fixed values moved to the right.
  const Eigen::MatrixXcd kx = k * psi.values();
  int iterations = 0;
  const double cg_tol = 0.01 * options.tolerance;
  for (int comp = 0; comp < ncomp; ++comp) {
    for (int part = 0; part < (fiber.is_real() ? 1 : 2); ++part) {
      Eigen::VectorXd rhs(nf);
      for (Eigen::Index j = 0; j < nf; ++j) {
        const auto i = static_cast<Eigen::Index>(free_cells[static_cast<std::size_t>(j)]);
        const cplx v = sign * rho.values()(i, comp) - kx(i, comp);
        rhs(j) = part == 0 ? v.real() : v.imag();
      }
      Eigen::VectorXd x;
      double res = 0.0;
      const int it = detail::conjugate_gradient(kff, rhs, x, cg_tol, options.max_iterations, res);
      iterations = std::max(iterations, it);
      if (res > options.tolerance)
        {
        char msg[96];
        std::snprintf(msg, sizeof msg, "conjugate gradients did not converge (residual %.3e)", res);
        throw SolverError(msg, res);
      }
      for (Eigen::Index j = 0; j < nf; ++j) {
        auto& slot = psi.values()(static_cast<Eigen::Index>(free_cells[static_cast<std::size_t>(j)]), comp);
        slot = part == 0 ? cplx(x(j), slot.imag()) : cplx(slot.real(), x(j));
      }
    }
  }

  if (singular_torus) {
    // gauge: remove the mean of each parallel family
    const auto nc = static_cast<Eigen::Index>(cx.class_count(p));
    Eigen::MatrixXcd sums = Eigen::MatrixXcd::Zero(nc, ncomp);
    std::vector<double> counts(static_cast<std::size_t>(nc), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = cx.class_of(p, i);
      sums.row(static_cast<Eigen::Index>(c)) += psi.values().row(static_cast<Eigen::Index>(i));
      counts[c] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = cx.class_of(p, i);
      psi.values().row(static_cast<Eigen::Index>(i)) -= sums.row(static_cast<Eigen::Index>(c)) / counts[c];
    }
  }

  const Cochain res = eom_residual(psi) - rho;
  double residual = 0.0;
  for (std::size_t i : free_cells) residual = std::max(residual, res.values().row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff());
  if (residual > options.tolerance)
    throw SolverError("solution residual " + std::to_string(residual) + " exceeds tolerance", residual);
  return {std::move(psi), residual, iterations};
}

}  // namespace hfsym

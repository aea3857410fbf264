#pragma once

// Matrix Lie algebras so(3), u(2), u(1) and their groups.
//
// Every algebra ships a basis that is orthonormal for the pairing
// <X, Y> = Re tr(X^dagger Y); on the anti-hermitian algebras used here that
// equals -tr(XY), so <J_a, J_b> = delta_ab.

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hfsym/errors.hpp"

namespace hfsym {

using cplx = std::complex<double>;

enum class AlgebraKind { so3, u2, u1 };
enum class ScalarField { real, complex };
enum class GroupKind { SO3, U2, U1 };

inline std::string_view to_string(AlgebraKind k) {
  switch (k) {
    case AlgebraKind::so3: return "so3";
    case AlgebraKind::u2: return "u2";
    case AlgebraKind::u1: return "u1";
  }
  return "?";
}

inline std::string_view to_string(GroupKind k) {
  switch (k) {
    case GroupKind::SO3: return "SO3";
    case GroupKind::U2: return "U2";
    case GroupKind::U1: return "U1";
  }
  return "?";
}

inline AlgebraKind algebra_from_string(std::string_view s) {
  if (s == "so3") return AlgebraKind::so3;
  if (s == "u2") return AlgebraKind::u2;
  if (s == "u1") return AlgebraKind::u1;
  throw ConfigError("unknown algebra '" + std::string(s) + "'");
}

/// A matrix Lie algebra with a fixed orthonormal generator basis.
/// Instances are process-wide singletons obtained through so3()/u2()/u1().
class LieAlgebraSpec {
 public:
  static const LieAlgebraSpec& so3() {
    static const LieAlgebraSpec spec = make_so3();
    return spec;
  }
  static const LieAlgebraSpec& u2() {
    static const LieAlgebraSpec spec = make_u2();
    return spec;
  }
  static const LieAlgebraSpec& u1() {
    static const LieAlgebraSpec spec = make_u1();
    return spec;
  }
  static const LieAlgebraSpec& get(AlgebraKind kind) {
    switch (kind) {
      case AlgebraKind::so3: return so3();
      case AlgebraKind::u2: return u2();
      case AlgebraKind::u1: return u1();
    }
    throw ConfigError("unknown algebra kind");
  }

  AlgebraKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }
  int dimension() const noexcept { return static_cast<int>(generators_.size()); }
  int matrix_size() const noexcept { return static_cast<int>(generators_.front().rows()); }
  ScalarField field() const noexcept { return field_; }
  GroupKind group() const noexcept {
    switch (kind_) {
      case AlgebraKind::so3: return GroupKind::SO3;
      case AlgebraKind::u2: return GroupKind::U2;
      case AlgebraKind::u1: return GroupKind::U1;
    }
    return GroupKind::U1;
  }
  const std::vector<Eigen::MatrixXcd>& generators() const noexcept { return generators_; }
  const Eigen::MatrixXcd& generator(int a) const { return generators_.at(static_cast<std::size_t>(a)); }

  /// Re tr(X^dagger Y).
  static double trace_pairing(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    return (x.adjoint() * y).trace().real();
  }

  Eigen::MatrixXd gram() const {
    const int n = dimension();
    Eigen::MatrixXd g(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) g(a, b) = trace_pairing(generators_[a], generators_[b]);
    return g;
  }

  /// Orthogonal projection of a matrix onto the generator basis.
  Eigen::VectorXd coefficients_of(const Eigen::MatrixXcd& m) const {
    Eigen::VectorXd c(dimension());
    for (int a = 0; a < dimension(); ++a) c(a) = trace_pairing(generators_[a], m);
    return c;
  }

  Eigen::MatrixXcd expand(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != dimension())
      throw DomainError("coefficient vector has wrong length for " + std::string(name()));
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(matrix_size(), matrix_size());
    for (int a = 0; a < dimension(); ++a) m += coeffs(a) * generators_[a];
    return m;
  }

  /// Frobenius norm of m minus its projection; zero iff m lies in the algebra.
  double membership_residual(const Eigen::MatrixXcd& m) const {
    return (m - expand(coefficients_of(m))).norm();
  }

 private:
  LieAlgebraSpec(AlgebraKind kind, ScalarField field, std::vector<Eigen::MatrixXcd> gens)
      : kind_(kind), field_(field), generators_(std::move(gens)) {}

  static LieAlgebraSpec make_so3() {
    // (J_a)_{bc} = -eps_{abc} / sqrt(2)
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<Eigen::MatrixXcd> gens(3, Eigen::MatrixXcd::Zero(3, 3));
    const std::array<std::array<int, 3>, 3> cyc{{{0, 1, 2}, {1, 2, 0}, {2, 0, 1}}};
    for (const auto& [a, b, c] : cyc) {
      gens[a](b, c) = -s;
      gens[a](c, b) = s;
    }
    return {AlgebraKind::so3, ScalarField::real, std::move(gens)};
  }

  static LieAlgebraSpec make_u2() {
    const double s = 1.0 / std::sqrt(2.0);
    const cplx i(0.0, 1.0);
    Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    Eigen::Matrix2cd sx, sy, sz;
    sx << 0, 1, 1, 0;
    sy << 0, -i, i, 0;
    sz << 1, 0, 0, -1;
    std::vector<Eigen::MatrixXcd> gens{i * s * id, i * s * sx, i * s * sy, i * s * sz};
    return {AlgebraKind::u2, ScalarField::complex, std::move(gens)};
  }

  static LieAlgebraSpec make_u1() {
    Eigen::MatrixXcd g(1, 1);
    g(0, 0) = cplx(0.0, 1.0);
    return {AlgebraKind::u1, ScalarField::complex, {g}};
  }

  AlgebraKind kind_;
  ScalarField field_;
  std::vector<Eigen::MatrixXcd> generators_;
};

/// Element of a Lie algebra held as real coefficients in the generator basis
/// together with the expanded matrix.
class LieAlgebraElement {
 public:
  LieAlgebraElement(const LieAlgebraSpec& algebra, Eigen::VectorXd coeffs)
      : algebra_(&algebra), coeffs_(std::move(coeffs)), matrix_(algebra.expand(coeffs_)) {}

  static LieAlgebraElement zero(const LieAlgebraSpec& algebra) {
    return {algebra, Eigen::VectorXd::Zero(algebra.dimension())};
  }
  static LieAlgebraElement basis(const LieAlgebraSpec& algebra, int a) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(algebra.dimension());
    c(a) = 1.0;
    return {algebra, std::move(c)};
  }
  /// Projects an arbitrary matrix; throws if it is not in the algebra.
  static LieAlgebraElement from_matrix(const LieAlgebraSpec& algebra, const Eigen::MatrixXcd& m,
                                       double tol = 1e-12) {
    if (m.rows() != algebra.matrix_size() || m.cols() != algebra.matrix_size())
      throw DomainError("matrix has wrong size for " + std::string(algebra.name()));
    if (algebra.membership_residual(m) > tol * (1.0 + m.norm()))
      throw DomainError("matrix is not an element of " + std::string(algebra.name()));
    return {algebra, algebra.coefficients_of(m)};
  }

  const LieAlgebraSpec& algebra() const noexcept { return *algebra_; }
  const Eigen::VectorXd& coefficients() const noexcept { return coeffs_; }
  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }

  LieAlgebraElement operator+(const LieAlgebraElement& o) const {
    require_same(o);
    return {*algebra_, coeffs_ + o.coeffs_};
  }
  LieAlgebraElement operator-(const LieAlgebraElement& o) const {
    require_same(o);
    return {*algebra_, coeffs_ - o.coeffs_};
  }
  LieAlgebraElement operator-() const { return {*algebra_, -coeffs_}; }
  friend LieAlgebraElement operator*(double s, const LieAlgebraElement& x) {
    return {*x.algebra_, s * x.coeffs_};
  }

  void require_same(const LieAlgebraElement& o) const {
    if (algebra_ != o.algebra_)
      throw DomainError("algebra mismatch: " + std::string(algebra_->name()) + " vs " +
                        std::string(o.algebra_->name()));
  }

 private:
  const LieAlgebraSpec* algebra_;
  Eigen::VectorXd coeffs_;
  Eigen::MatrixXcd matrix_;
};

/// Element of SO(3), U(2) or U(1) in its defining representation.
class GroupElement {
 public:
  static constexpr double kTolerance = 1e-12;

  /// Validates orthogonality/unitarity (and det = 1 for SO(3)).
  GroupElement(GroupKind kind, Eigen::MatrixXcd matrix) : kind_(kind), matrix_(std::move(matrix)) {
    const int n = expected_size(kind);
    if (matrix_.rows() != n || matrix_.cols() != n)
      throw DomainError("group element of " + std::string(to_string(kind)) + " must be " +
                        std::to_string(n) + "x" + std::to_string(n));
    const double unit = (matrix_.adjoint() * matrix_ - Eigen::MatrixXcd::Identity(n, n)).norm();
    if (unit > kTolerance)
      throw DomainError("matrix is not unitary (residual " + std::to_string(unit) + ")");
    if (kind == GroupKind::SO3) {
      if (matrix_.imag().norm() > kTolerance) throw DomainError("SO(3) element must be real");
      if (std::abs(matrix_.determinant() - cplx(1.0)) > kTolerance)
        throw DomainError("SO(3) element must have determinant 1");
    }
  }

  static GroupElement identity(GroupKind kind) {
    const int n = expected_size(kind);
    return {kind, Eigen::MatrixXcd::Identity(n, n)};
  }

  static int expected_size(GroupKind kind) {
    switch (kind) {
      case GroupKind::SO3: return 3;
      case GroupKind::U2: return 2;
      case GroupKind::U1: return 1;
    }
    return 0;
  }

  GroupKind kind() const noexcept { return kind_; }
  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }

  /// g^{-1} = g^dagger; the result is re-validated.
  GroupElement inverse() const { return {kind_, matrix_.adjoint()}; }

  GroupElement operator*(const GroupElement& o) const {
    if (kind_ != o.kind_) throw DomainError("group mismatch in product");
    return {kind_, matrix_ * o.matrix_};
  }

  bool is_identity(double tol = kTolerance) const {
    return (matrix_ - Eigen::MatrixXcd::Identity(matrix_.rows(), matrix_.cols())).norm() <= tol;
  }

  bool approx_equal(const GroupElement& o, double tol = kTolerance) const {
    return kind_ == o.kind_ && (matrix_ - o.matrix_).norm() <= tol;
  }

 private:
  GroupKind kind_;
  Eigen::MatrixXcd matrix_;
};

inline void require_group_matches(const GroupElement& g, const LieAlgebraSpec& algebra) {
  if (g.kind() != algebra.group())
    throw DomainError("group " + std::string(to_string(g.kind())) + " does not act on " +
                      std::string(algebra.name()));
}

/// [X, Y] = XY - YX, re-expanded in the generator basis.
inline LieAlgebraElement bracket(const LieAlgebraElement& x, const LieAlgebraElement& y) {
  x.require_same(y);
  const Eigen::MatrixXcd m = x.matrix() * y.matrix() - y.matrix() * x.matrix();
  return {x.algebra(), x.algebra().coefficients_of(m)};
}

/// Ad_g X = g X g^{-1}.
inline LieAlgebraElement adjoint(const GroupElement& g, const LieAlgebraElement& x) {
  require_group_matches(g, x.algebra());
  const Eigen::MatrixXcd m = g.matrix() * x.matrix() * g.matrix().adjoint();
  return {x.algebra(), x.algebra().coefficients_of(m)};
}

/// Matrix of Ad_g acting on coefficient vectors: column b holds Ad_g T_b.
inline Eigen::MatrixXd adjoint_matrix(const GroupElement& g, const LieAlgebraSpec& algebra) {
  require_group_matches(g, algebra);
  const int n = algebra.dimension();
  Eigen::MatrixXd ad(n, n);
  for (int b = 0; b < n; ++b)
    ad.col(b) = algebra.coefficients_of(g.matrix() * algebra.generator(b) * g.matrix().adjoint());
  return ad;
}

/// Ad-invariant inner product, normalized so pairing(J_a, J_b) = delta_ab.
inline double pairing(const LieAlgebraElement& x, const LieAlgebraElement& y) {
  x.require_same(y);
  return LieAlgebraSpec::trace_pairing(x.matrix(), y.matrix());
}

namespace detail {

/// exp of a 2x2 complex matrix: exp(tr/2) * (cosh(s) I + sinh(s)/s B), B the
/// traceless part, s^2 = -det B.
inline Eigen::MatrixXcd exp2x2(const Eigen::MatrixXcd& x) {
  const cplx half_trace = 0.5 * x.trace();
  Eigen::Matrix2cd b = x - half_trace * Eigen::Matrix2cd::Identity();
  const cplx s = std::sqrt(-b.determinant());
  cplx sinhc;  // sinh(s)/s
  if (std::abs(s) < 1e-4) {
    const cplx s2 = s * s;
    sinhc = 1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0;
  } else {
    sinhc = std::sinh(s) / s;
  }
  Eigen::MatrixXcd r = std::exp(half_trace) * (std::cosh(s) * Eigen::Matrix2cd::Identity() + sinhc * b);
  return r;
}

/// Rodrigues: exp(K) = I + sin(t)/t K + (1 - cos t)/t^2 K^2, t^2 = -tr(K^2)/2.
inline Eigen::MatrixXcd exp_so3(const Eigen::MatrixXcd& k) {
  const Eigen::Matrix3d kr = k.real();
  const Eigen::Matrix3d k2 = kr * kr;
  const double t2 = -0.5 * k2.trace();
  double a, b;
  if (t2 < 1e-8) {
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity() + a * kr + b * k2;
  return r.cast<cplx>();
}

}  // namespace detail

inline GroupElement exponential(const LieAlgebraElement& x) {
  const auto& alg = x.algebra();
  switch (alg.kind()) {
    case AlgebraKind::so3: return {GroupKind::SO3, detail::exp_so3(x.matrix())};
    case AlgebraKind::u2: return {GroupKind::U2, detail::exp2x2(x.matrix())};
    case AlgebraKind::u1: {
      Eigen::MatrixXcd m(1, 1);
      m(0, 0) = std::exp(x.matrix()(0, 0));
      return {GroupKind::U1, m};
    }
  }
  throw DomainError("unsupported algebra");
}

/// Rotation about a coordinate axis (0, 1, 2) by `angle`, counterclockwise.
inline GroupElement rotation(int axis, double angle) {
  const int i = (axis + 1) % 3, j = (axis + 2) % 3;
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  r(i, i) = std::cos(angle);
  r(j, j) = std::cos(angle);
  r(i, j) = -std::sin(angle);
  r(j, i) = std::sin(angle);
  return {GroupKind::SO3, r.cast<cplx>()};
}

/// Gaussian coefficients with standard deviation `stddev`.
template <class Rng>
LieAlgebraElement random_element(const LieAlgebraSpec& algebra, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  Eigen::VectorXd c(algebra.dimension());
  for (int a = 0; a < algebra.dimension(); ++a) c(a) = dist(rng);
  return {algebra, std::move(c)};
}

template <class Rng>
GroupElement random_group_element(GroupKind kind, Rng& rng) {
  const LieAlgebraSpec& alg = kind == GroupKind::SO3  ? LieAlgebraSpec::so3()
                              : kind == GroupKind::U2 ? LieAlgebraSpec::u2()
                                                      : LieAlgebraSpec::u1();
  return exponential(random_element(alg, rng, 2.0));
}

/// Real-linear bijection C^2 -> u(2) acting on (Re v1, Im v1, Re v2, Im v2).
class C2Convention {
 public:
  C2Convention() : map_(Eigen::Matrix4d::Identity()), inverse_(Eigen::Matrix4d::Identity()) {}

  explicit C2Convention(const Eigen::Matrix4d& map) : map_(map) {
    Eigen::FullPivLU<Eigen::Matrix4d> lu(map);
    if (lu.rank() < 4 || std::abs(lu.determinant()) < 1e-12)
      throw ConfigError("u(2) ~ C^2 convention matrix is not invertible");
    inverse_ = lu.inverse();
  }

  const Eigen::Matrix4d& map() const noexcept { return map_; }
  const Eigen::Matrix4d& inverse() const noexcept { return inverse_; }

 private:
  Eigen::Matrix4d map_;
  Eigen::Matrix4d inverse_;
};

inline LieAlgebraElement u2_from_c2(const Eigen::Vector2cd& v, const C2Convention& conv = {}) {
  const Eigen::Vector4d r(v(0).real(), v(0).imag(), v(1).real(), v(1).imag());
  return {LieAlgebraSpec::u2(), conv.map() * r};
}

inline Eigen::Vector2cd u2_to_c2(const LieAlgebraElement& x, const C2Convention& conv = {}) {
  if (x.algebra().kind() != AlgebraKind::u2) throw DomainError("u2_to_c2 requires a u2 element");
  const Eigen::Vector4d r = conv.inverse() * x.coefficients();
  return {cplx(r(0), r(1)), cplx(r(2), r(3))};
}

}  // namespace hfsym

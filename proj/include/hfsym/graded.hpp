#pragma once

// Z/2-graded fibers E^0 + E^1 and the degree-alternating action of a group.
//
// A morphism is a triple (g, source degree, shift). Primitive morphisms are
// the generators: g>^i with shift 1 for g != e, and the identities e>^i with
// shift 0. Composites of primitives are closed under composition; only
// morphisms whose target matches the next source can be composed, so two
// non-identity actions of the same degree never compose.

#include <string>

#include <Eigen/Dense>

#include "hfsym/algebra.hpp"
#include "hfsym/errors.hpp"
#include "hfsym/fiber.hpp"

namespace hfsym {

class Degree {
 public:
  constexpr Degree() = default;
  constexpr explicit Degree(int parity) : parity_(parity) {
    if (parity != 0 && parity != 1) throw DegreeError("degree must be 0 or 1, got " + std::to_string(parity));
  }

  constexpr int parity() const noexcept { return parity_; }
  constexpr Degree operator+(Degree o) const noexcept { return Degree((parity_ + o.parity_) % 2); }
  constexpr bool operator==(const Degree&) const = default;

 private:
  int parity_ = 0;
};

inline constexpr Degree kEven{0};
inline constexpr Degree kOdd{1};

struct GradedValue {
  Degree degree;
  FiberValue value;
};

class GradedMorphism {
 public:
  /// The generating morphism g>^source: odd for g != e, identity for g = e.
  static GradedMorphism primitive(const GroupElement& g, Degree source) {
    return {g, source, g.is_identity() ? kEven : kOdd};
  }

  static GradedMorphism identity(GroupKind kind, Degree object) {
    return {GroupElement::identity(kind), object, kEven};
  }

  /// Arbitrary element of the closure.
  static GradedMorphism make(const GroupElement& g, Degree source, Degree shift) { return {g, source, shift}; }

  const GroupElement& group_element() const noexcept { return g_; }
  Degree source() const noexcept { return source_; }
  Degree shift() const noexcept { return shift_; }
  Degree target() const noexcept { return source_ + shift_; }
  /// True for the generators: g != e with shift 1, or e with shift 0.
  bool is_primitive() const noexcept { return primitive_; }
  bool is_identity() const { return shift_ == kEven && g_.is_identity(); }

  bool approx_equal(const GradedMorphism& o, double tol = GroupElement::kTolerance) const {
    return source_ == o.source_ && shift_ == o.shift_ && g_.approx_equal(o.g_, tol);
  }

  std::string describe() const {
    return "morphism(E" + std::to_string(source_.parity()) + " -> E" + std::to_string(target().parity()) + ")";
  }

 private:
  GradedMorphism(GroupElement g, Degree source, Degree shift)
      : g_(std::move(g)), source_(source), shift_(shift) {
    const bool e = g_.is_identity();
    primitive_ = (shift_ == kOdd && !e) || (shift_ == kEven && e);
  }

  GroupElement g_;
  Degree source_;
  Degree shift_;
  bool primitive_ = false;
};

/// Representation of the groupoid on a pair of identical fibers F^0, F^1.
class GroupoidRep {
 public:
  enum class Kind { adjoint, defining, trivial };

  /// Ad on the coefficient space of a Lie algebra.
  static GroupoidRep adjoint(const LieAlgebraSpec& algebra) { return {Kind::adjoint, &algebra, algebra.group()}; }
  /// The matrix group acting on C^n directly.
  static GroupoidRep defining(GroupKind group) { return {Kind::defining, nullptr, group}; }
  static GroupoidRep trivial(GroupKind group) { return {Kind::trivial, nullptr, group}; }

  /// Natural representation for a fiber: Ad for algebra fibers, U(2) on C^2,
  /// trivial on real scalars (acted on by `group`).
  static GroupoidRep for_fiber(const FiberSpec& fiber, GroupKind group = GroupKind::U2) {
    switch (fiber.kind()) {
      case FiberKind::algebra: return adjoint(fiber.lie_algebra());
      case FiberKind::complex_pair: return defining(GroupKind::U2);
      case FiberKind::real_scalar: return trivial(group);
    }
    throw DomainError("unsupported fiber");
  }

  Kind kind() const noexcept { return kind_; }
  GroupKind group() const noexcept { return group_; }
  int dimension() const {
    switch (kind_) {
      case Kind::adjoint: return algebra_->dimension();
      case Kind::defining: return GroupElement::expected_size(group_);
      case Kind::trivial: return 1;
    }
    return 0;
  }

  Eigen::MatrixXcd operator()(const GroupElement& g) const {
    if (g.kind() != group_)
      throw DomainError("representation of " + std::string(to_string(group_)) + " given an element of " +
                        std::string(to_string(g.kind())));
    switch (kind_) {
      case Kind::adjoint: return adjoint_matrix(g, *algebra_).cast<cplx>();
      case Kind::defining: return g.matrix();
      case Kind::trivial: return Eigen::MatrixXcd::Identity(1, 1);
    }
    throw DomainError("unsupported representation");
  }

 private:
  GroupoidRep(Kind kind, const LieAlgebraSpec* algebra, GroupKind group)
      : kind_(kind), algebra_(algebra), group_(group) {}

  Kind kind_;
  const LieAlgebraSpec* algebra_;
  GroupKind group_;
};

/// (x, v) -> (x, g > v), moving the value to the target degree.
inline GradedValue act(const GradedMorphism& m, const GradedValue& x, const GroupoidRep& rep) {
  if (!(x.degree == m.source()))
    throw DegreeError("morphism with source E" + std::to_string(m.source().parity()) +
                      " cannot act on a value of degree " + std::to_string(x.degree.parity()));
  const Eigen::MatrixXcd r = rep(m.group_element());
  if (r.cols() != x.value.size()) throw DomainError("fiber value does not match representation");
  return {m.target(), r * x.value};
}

/// second o first.
inline GradedMorphism compose(const GradedMorphism& second, const GradedMorphism& first) {
  if (!(first.target() == second.source()))
    throw DegreeError("cannot compose: first maps into E" + std::to_string(first.target().parity()) +
                      " but second starts at E" + std::to_string(second.source().parity()));
  return GradedMorphism::make(second.group_element() * first.group_element(), first.source(),
                              first.shift() + second.shift());
}

inline GradedMorphism inverse(const GradedMorphism& m) {
  return GradedMorphism::make(m.group_element().inverse(), m.target(), m.shift());
}

struct LinearMapDescriptor {
  Eigen::MatrixXcd matrix;
  Degree source;
  Degree target;
};

inline LinearMapDescriptor represent(const GradedMorphism& m, const GroupoidRep& rep) {
  return {rep(m.group_element()), m.source(), m.target()};
}

}  // namespace hfsym

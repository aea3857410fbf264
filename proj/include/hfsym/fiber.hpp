#pragma once

#include <string>

#include <Eigen/Dense>

#include "hfsym/algebra.hpp"

namespace hfsym {

/// One fiber value: real scalar (1 component), C^2 pair (2 components) or
/// algebra coefficients (dim components, imaginary parts zero).
using FiberValue = Eigen::VectorXcd;

enum class FiberKind { real_scalar, complex_pair, algebra };

class FiberSpec {
 public:
  static FiberSpec real_scalar() { return FiberSpec(FiberKind::real_scalar, nullptr); }
  static FiberSpec complex_pair() { return FiberSpec(FiberKind::complex_pair, nullptr); }
  static FiberSpec algebra(const LieAlgebraSpec& alg) { return FiberSpec(FiberKind::algebra, &alg); }

  FiberKind kind() const noexcept { return kind_; }
  /// Only valid for algebra fibers.
  const LieAlgebraSpec& lie_algebra() const {
    if (!algebra_) throw DomainError("fiber is not algebra-valued");
    return *algebra_;
  }
  int components() const noexcept {
    switch (kind_) {
      case FiberKind::real_scalar: return 1;
      case FiberKind::complex_pair: return 2;
      case FiberKind::algebra: return algebra_->dimension();
    }
    return 0;
  }
  /// True when every component is real (the imaginary parts stay zero).
  bool is_real() const noexcept { return kind_ != FiberKind::complex_pair; }

  std::string name() const {
    switch (kind_) {
      case FiberKind::real_scalar: return "real_scalar";
      case FiberKind::complex_pair: return "complex_pair";
      case FiberKind::algebra: return "algebra:" + std::string(algebra_->name());
    }
    return "?";
  }

  /// Fiber inner product, antilinear in the first argument. Algebra fibers
  /// use the trace pairing through the generator Gram matrix.
  cplx pairing(const FiberValue& v, const FiberValue& w) const {
    if (kind_ == FiberKind::algebra) return (v.adjoint() * gram_.cast<cplx>() * w)(0, 0);
    return v.dot(w);  // Eigen's dot conjugates the first argument
  }

  bool operator==(const FiberSpec& o) const { return kind_ == o.kind_ && algebra_ == o.algebra_; }

 private:
  FiberSpec(FiberKind kind, const LieAlgebraSpec* alg) : kind_(kind), algebra_(alg) {
    if (alg) gram_ = alg->gram();
  }

  FiberKind kind_;
  const LieAlgebraSpec* algebra_;
  Eigen::MatrixXd gram_;
};

}  // namespace hfsym

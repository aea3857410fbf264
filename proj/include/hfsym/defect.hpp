#pragma once

// Charged operators, symmetry defect operators and conserved charges.
//
// A defect U_g on a q-cycle swept across the region `filling` acts on a
// charged operator on the p-cycle Gamma (q = d - p - 1) once per signed
// transversal crossing of Gamma with the filling: rep(g) per positive
// crossing, rep(g^-1) per negative one. Each crossing is one odd primitive
// action, so the degree flips when g != e and the crossing count is odd.
// Non-crossing deformations leave the operator untouched.

#include <cstdlib>
#include <string>
#include <vector>

#include "hfsym/calculus.hpp"
#include "hfsym/cubical.hpp"
#include "hfsym/graded.hpp"

namespace hfsym {

class ChargedOperator {
 public:
  ChargedOperator(Chain support, Cochain field, Degree degree)
      : support_(std::move(support)), field_(std::move(field)), degree_(degree) {
    if (!is_cycle(support_)) throw GeometryError("charged operator support must be a cycle");
    if (field_.is_dual() || field_.degree() != support_.degree())
      throw DomainError("charged operator field must be a primal cochain of the support's degree");
    observable_ = integrate(field_, support_);
  }

  const Chain& support() const noexcept { return support_; }
  const Cochain& field() const noexcept { return field_; }
  Degree degree() const noexcept { return degree_; }
  /// integrate(field, support)
  const FiberValue& observable() const noexcept { return observable_; }

  GradedValue graded_observable() const { return {degree_, observable_}; }

  /// Bitwise equality of support, field, degree and observable.
  bool operator==(const ChargedOperator& o) const {
    return support_ == o.support_ && field_ == o.field_ && degree_ == o.degree_ && observable_ == o.observable_;
  }

 private:
  friend ChargedOperator transform_charged(const ChargedOperator&, const Eigen::MatrixXcd&, Degree);

  ChargedOperator(Chain support, Cochain field, Degree degree, FiberValue observable)
      : support_(std::move(support)), field_(std::move(field)), degree_(degree), observable_(std::move(observable)) {}

  Chain support_;
  Cochain field_;
  Degree degree_;
  FiberValue observable_;
};

/// Applies a linear map to the field and the cached observable.
inline ChargedOperator transform_charged(const ChargedOperator& o, const Eigen::MatrixXcd& r, Degree degree) {
  return {o.support_, apply_global(o.field_, r), degree, r * o.observable_};
}

class DefectOperator {
 public:
  DefectOperator(GroupElement g, Degree degree, Chain support)
      : g_(std::move(g)), degree_(degree), support_(std::move(support)) {
    if (!is_cycle(support_)) throw GeometryError("defect support must be a cycle");
  }

  const GroupElement& group_element() const noexcept { return g_; }
  Degree degree() const noexcept { return degree_; }
  const Chain& support() const noexcept { return support_; }

 private:
  GroupElement g_;
  Degree degree_;
  Chain support_;
};

/// A defect together with a deformation of its support.
class DefectMove {
 public:
  DefectMove(DefectOperator op, Cobordism cobordism) : op_(std::move(op)), cobordism_(std::move(cobordism)) {
    if (!(cobordism_.source() == op_.support())) throw DomainError("cobordism must start at the defect support");
  }

  const DefectOperator& defect() const noexcept { return op_; }
  const Cobordism& cobordism() const noexcept { return cobordism_; }
  /// The defect on the deformed support.
  DefectOperator moved() const { return {op_.group_element(), op_.degree(), cobordism_.target()}; }

 private:
  DefectOperator op_;
  Cobordism cobordism_;
};

/// Signed crossings of the charged support with the swept region.
inline long long crossing_count(const ChargedOperator& o, const DefectMove& move) {
  return intersection_number(o.support(), move.cobordism().filling());
}

inline ChargedOperator apply_defect(const DefectOperator& u, const ChargedOperator& o, const DefectMove& move,
                                    const GroupoidRep& rep) {
  if (!(u.degree() == o.degree()))
    throw DegreeError("degree-" + std::to_string(u.degree().parity()) + " defect cannot act on a degree-" +
                      std::to_string(o.degree().parity()) + " charged operator");
  if (!(move.defect().support() == u.support()) || !(move.defect().degree() == u.degree()) ||
      !move.defect().group_element().approx_equal(u.group_element()))
    throw DomainError("move does not belong to this defect");
  const int dim = o.support().complex()->dimension();
  const int p = o.support().degree();
  const int q = u.support().degree();
  if (o.support().complex() != u.support().complex()) throw DomainError("defect and operator live on different complexes");
  if (q != dim - p - 1)
    throw GeometryError("defect of dimension " + std::to_string(q) + " on a " + std::to_string(p) +
                        "-dimensional charged operator is unsupported (need q = d - p - 1)");

  const long long n = crossing_count(o, move);
  if (n == 0) return o;

  const GroupElement step = n > 0 ? u.group_element() : u.group_element().inverse();
  GroupElement total = step;
  for (long long i = 1; i < std::llabs(n); ++i) total = total * step;
  const bool flips = !u.group_element().is_identity() && (std::llabs(n) % 2 == 1);
  return transform_charged(o, rep(total), flips ? o.degree() + kOdd : o.degree());
}

struct DefectAction {
  GroupElement g;
  Degree degree;
};

struct CompositeAction {
  GradedMorphism morphism;
  Eigen::MatrixXcd matrix;
};

/// second o first, with the same composition rule as graded morphisms.
inline CompositeAction compose_defect_actions(const DefectAction& second, const DefectAction& first,
                                              const GroupoidRep& rep) {
  const GradedMorphism m =
      compose(GradedMorphism::primitive(second.g, second.degree), GradedMorphism::primitive(first.g, first.degree));
  return {m, represent(m, rep).matrix};
}

/// Charge of the dynamical current j = d psi over a (p+1)-chain.
inline FiberValue charge_eom(const Cochain& psi, const Chain& sigma) {
  if (psi.is_dual()) throw DomainError("charge requires a primal field");
  if (sigma.degree() != psi.degree() + 1)
    throw DomainError("dynamical charge needs a " + std::to_string(psi.degree() + 1) + "-chain");
  return integrate(d(psi), sigma);
}

/// Same charge via discrete Stokes: integral of psi over the boundary.
inline FiberValue charge_eom_stokes(const Cochain& psi, const Chain& sigma) {
  if (psi.is_dual()) throw DomainError("charge requires a primal field");
  if (sigma.degree() != psi.degree() + 1)
    throw DomainError("dynamical charge needs a " + std::to_string(psi.degree() + 1) + "-chain");
  return integrate(psi, boundary(sigma));
}

/// Charge of the trivial current star d psi over a (d-p-1)-chain.
inline FiberValue charge_trivial(const Cochain& psi, const Chain& sigma) {
  if (psi.is_dual()) throw DomainError("charge requires a primal field");
  const int dim = psi.complex()->dimension();
  if (sigma.degree() != dim - psi.degree() - 1)
    throw DomainError("trivial charge needs a " + std::to_string(dim - psi.degree() - 1) + "-chain");
  return integrate(star(d(psi)), sigma);
}

struct ChargeSample {
  std::string name;
  FiberValue value;
};

struct ConservationReport {
  /// max |d star d psi|: conservation of the dynamical current.
  double dynamical_norm = 0.0;
  /// max |d d psi|: conservation of the trivial current.
  double trivial_norm = 0.0;
  double action = 0.0;
  std::vector<ChargeSample> samples;
};

/// Current norms, action and charges over coordinate loops/planes at offset 0
/// wherever the current degree admits them.
inline ConservationReport conservation_report(const Cochain& psi, double prefactor = 1.0) {
  if (psi.is_dual()) throw DomainError("conservation report requires a primal field");
  const auto& cx = psi.complex();
  const int dim = cx->dimension();
  const int p = psi.degree();
  ConservationReport r;
  if (p >= dim) return r;
  const Cochain dpsi = d(psi);
  r.dynamical_norm = eom_residual(psi).max_norm();
  r.trivial_norm = p + 1 < dim ? d(dpsi).max_norm() : 0.0;
  r.action = action(psi, prefactor);

  auto sample_cycles = [&](int degree, const std::string& prefix, auto&& eval) {
    if (degree == 1) {
      for (int a = 0; a < dim; ++a)
        r.samples.push_back({prefix + "_loop" + std::to_string(a),
                             eval(loop_chain(cx, a, std::vector<int>(static_cast<std::size_t>(dim - 1), 0)))});
    }
    if (degree == dim - 1 && degree != 1) {
      for (int a = 0; a < dim; ++a) r.samples.push_back({prefix + "_plane" + std::to_string(a), eval(plane_chain(cx, a, 0))});
    }
  };
  if (cx->is_torus()) {
    sample_cycles(p + 1, "eom", [&](const Chain& c) { return integrate(dpsi, c); });
    const Cochain sdpsi = star(dpsi);
    sample_cycles(dim - p - 1, "trivial", [&](const Chain& c) { return integrate(sdpsi, c); });
  }
  return r;
}

}  // namespace hfsym

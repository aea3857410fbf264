#include <random>

#include <gtest/gtest.h>

#include "hfsym/defect.hpp"

using namespace hfsym;

namespace {

const FiberSpec kSo3 = FiberSpec::algebra(LieAlgebraSpec::so3());

struct Fixture {
  ComplexPtr cx = CubicalComplex::build({4, 4, 4}, {1.0}, Topology::torus);
  // y-loop at x = 1, z = 2 swept to x = 2
  Cobordism sweep = translation_sweep(cx, {1}, {1, 0, 2}, 0);
  Chain crossed = loop_chain(cx, 2, {2, 3});  // z-loop at x = 2
  Chain missed = loop_chain(cx, 2, {3, 3});   // z-loop at x = 3
  GroupElement g = rotation(2, 0.7);
  GroupoidRep rep = GroupoidRep::adjoint(LieAlgebraSpec::so3());

  Cochain field(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    return Cochain::random_gaussian(cx, 1, kSo3, rng);
  }
};

double max_abs(const FiberValue& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Defect, ChargedOperatorValidation) {
  Fixture s;
  Chain open(s.cx, 1);
  open.add(0, 1);
  EXPECT_THROW(ChargedOperator(open, s.field(1), kEven), GeometryError);
  EXPECT_THROW(ChargedOperator(s.crossed, Cochain(s.cx, 2, kSo3), kEven), DomainError);
  EXPECT_THROW(ChargedOperator(s.crossed, star(Cochain(s.cx, 2, kSo3)), kEven), DomainError);
  const ChargedOperator o(s.crossed, s.field(1), kOdd);
  EXPECT_EQ(o.observable(), integrate(s.field(1), s.crossed));
  EXPECT_EQ(o.graded_observable().degree, kOdd);
}

TEST(Defect, DefectAndMoveValidation) {
  Fixture s;
  Chain open(s.cx, 1);
  open.add(0, 1);
  EXPECT_THROW(DefectOperator(s.g, kEven, open), GeometryError);
  const DefectOperator u(s.g, kEven, s.sweep.source());
  EXPECT_THROW(DefectMove(u, Cobordism::sweep(s.missed, Chain(s.cx, 2))), DomainError);
  const DefectMove move(u, s.sweep);
  EXPECT_EQ(move.moved().support(), s.sweep.target());
}

TEST(Defect, NonCrossingMoveLeavesOperatorBitIdentical) {
  Fixture s;
  const DefectOperator u(s.g, kEven, s.sweep.source());
  const DefectMove move(u, s.sweep);
  const ChargedOperator o(s.missed, s.field(2), kEven);
  EXPECT_EQ(crossing_count(o, move), 0);
  const ChargedOperator out = apply_defect(u, o, move, s.rep);
  EXPECT_TRUE(out == o);
  EXPECT_EQ(out.degree(), kEven);
}

TEST(Defect, SingleCrossingAppliesAdjointOnceAndFlipsDegree) {
  Fixture s;
  const DefectOperator u(s.g, kEven, s.sweep.source());
  const DefectMove move(u, s.sweep);
  const ChargedOperator o(s.crossed, s.field(3), kEven);
  EXPECT_EQ(crossing_count(o, move), 1);
  const ChargedOperator out = apply_defect(u, o, move, s.rep);
  EXPECT_EQ(out.degree(), kOdd);
  const FiberValue expected = s.rep(s.g) * o.observable();
  EXPECT_EQ(out.observable(), expected);
  // Ad_g on the coefficient vector, from the algebra directly
  const auto x = LieAlgebraElement(LieAlgebraSpec::so3(), o.observable().real());
  EXPECT_LE((out.observable().real() - adjoint(s.g, x).coefficients()).norm(), 1e-12);
  // the field itself is transformed consistently
  EXPECT_LE(max_abs(integrate(out.field(), out.support()) - out.observable()), 1e-12);
}

TEST(Defect, IdentityDefectActsTriviallyWithoutDegreeFlip) {
  Fixture s;
  const DefectOperator u(GroupElement::identity(GroupKind::SO3), kEven, s.sweep.source());
  const DefectMove move(u, s.sweep);
  const ChargedOperator o(s.crossed, s.field(4), kEven);
  const ChargedOperator out = apply_defect(u, o, move, s.rep);
  EXPECT_EQ(out.degree(), kEven);
  EXPECT_LE(max_abs(out.observable() - o.observable()), 1e-15);
}

TEST(Defect, OutputDependsOnlyOnTheCrossingNumber) {
  Fixture s;
  std::mt19937_64 rng(97);
  const DefectOperator u(s.g, kEven, s.sweep.source());
  const ChargedOperator o(s.crossed, s.field(5), kEven);
  const ChargedOperator reference = apply_defect(u, o, DefectMove(u, s.sweep), s.rep);
  for (int rep = 0; rep < 10; ++rep) {
    Chain g3(s.cx, 3);
    std::uniform_int_distribution<std::size_t> pick(0, s.cx->cell_count(3) - 1);
    for (int t = 0; t < 6; ++t) g3.add(pick(rng), 1);
    const Chain other = s.sweep.filling() + boundary(g3);
    const DefectMove move(u, Cobordism::sweep(s.sweep.source(), other));
    ASSERT_EQ(crossing_count(o, move), 1);
    EXPECT_TRUE(apply_defect(u, o, move, s.rep) == reference);
  }
}

TEST(Defect, DoubleCrossingKeepsDegree) {
  Fixture s;
  const DefectOperator u(s.g, kOdd, s.sweep.source());
  const DefectMove move(u, Cobordism::sweep(s.sweep.source(), 2 * s.sweep.filling()));
  const ChargedOperator o(s.crossed, s.field(6), kOdd);
  EXPECT_EQ(crossing_count(o, move), 2);
  const ChargedOperator out = apply_defect(u, o, move, s.rep);
  EXPECT_EQ(out.degree(), kOdd);
  EXPECT_LE(max_abs(out.observable() - s.rep(s.g * s.g) * o.observable()), 1e-12);
}

TEST(Defect, SweepForwardThenBackRestoresOperator) {
  Fixture s;
  const DefectOperator u(s.g, kEven, s.sweep.source());
  const DefectMove forward(u, s.sweep);
  const ChargedOperator o(s.crossed, s.field(7), kEven);
  const ChargedOperator mid = apply_defect(u, o, forward, s.rep);
  const DefectOperator moved(s.g, kOdd, forward.moved().support());
  const DefectMove back(moved, Cobordism::sweep(moved.support(), -1 * s.sweep.filling()));
  EXPECT_EQ(crossing_count(mid, back), -1);
  const ChargedOperator out = apply_defect(moved, mid, back, s.rep);
  EXPECT_EQ(out.degree(), kEven);
  EXPECT_LE(max_abs(out.observable() - o.observable()), 1e-12);
}

TEST(Defect, DegreeMismatchAlwaysRaises) {
  Fixture s;
  for (const Chain* support : {&s.crossed, &s.missed})
    for (int deg = 0; deg < 2; ++deg) {
      const DefectOperator u(s.g, Degree(deg), s.sweep.source());
      const ChargedOperator o(*support, s.field(8), Degree(1 - deg));
      EXPECT_THROW(apply_defect(u, o, DefectMove(u, s.sweep), s.rep), DegreeError);
    }
}

TEST(Defect, MoveMustBelongToTheDefect) {
  Fixture s;
  const DefectOperator u(s.g, kEven, s.sweep.source());
  const DefectOperator other(rotation(0, 0.3), kEven, s.sweep.source());
  const ChargedOperator o(s.crossed, s.field(9), kEven);
  EXPECT_THROW(apply_defect(u, o, DefectMove(other, s.sweep), s.rep), DomainError);
}

TEST(Defect, UnsupportedDimensionsAreGeometryErrors) {
  Fixture s;
  const Cobordism plane_sweep = translation_sweep(s.cx, {1, 2}, {0, 0, 0}, 0);
  const DefectOperator u(s.g, kEven, plane_sweep.source());
  const ChargedOperator o(s.crossed, s.field(10), kEven);
  EXPECT_THROW(apply_defect(u, o, DefectMove(u, plane_sweep), s.rep), GeometryError);
}

TEST(Defect, ComposeDefectActions) {
  const auto g = rotation(0, M_PI / 2), h = rotation(2, M_PI / 2);
  const auto rep = GroupoidRep::adjoint(LieAlgebraSpec::so3());
  const auto gh = compose_defect_actions({g, kOdd}, {h, kEven}, rep);
  EXPECT_TRUE(gh.morphism.group_element().approx_equal(g * h));
  EXPECT_THROW(compose_defect_actions({g, kEven}, {h, kEven}, rep), DegreeError);
  const auto hg = compose_defect_actions({h, kOdd}, {g, kEven}, rep);
  EXPECT_GT(Eigen::JacobiSVD<Eigen::MatrixXcd>(gh.matrix - hg.matrix).singularValues()(0), 0.1);
}

TEST(Defect, DynamicalChargeAgreesWithStokesAndIsHomologyInvariant) {
  Fixture s;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Cochain psi = s.field(100 + seed);
    for (int n = 0; n < 3; ++n) {
      std::vector<int> plane;
      for (int a = 0; a < 3; ++a)
        if (a != n) plane.push_back(a);
      const Cobordism c = translation_sweep(s.cx, plane, {0, 0, 0}, n);
      const FiberValue q0 = charge_eom(psi, c.source()), q1 = charge_eom(psi, c.target());
      EXPECT_LE(max_abs(q1 - q0), 1e-12 * (1 + max_abs(q0)));
      EXPECT_LE(max_abs(q0 - charge_eom_stokes(psi, c.source())), 1e-12 * (1 + max_abs(q0)));
    }
  }
  EXPECT_THROW(charge_eom(s.field(1), s.crossed), DomainError);
  EXPECT_THROW(charge_trivial(s.field(1), plane_chain(s.cx, 0, 0)), DomainError);
}

TEST(Defect, TrivialChargeChangesByTheEnclosedResidualFlux) {
  Fixture s;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Cochain psi = s.field(200 + seed);
    const Cochain res = eom_residual(psi);
    for (int axis = 0; axis < 3; ++axis)
      for (int along = 0; along < 3; ++along) {
        if (along == axis) continue;
        const Cobordism c = translation_sweep(s.cx, {axis}, {1, 2, 3}, along);
        const FiberValue dq = charge_trivial(psi, c.target()) - charge_trivial(psi, c.source());
        EXPECT_LE(max_abs(dq - integrate(res, c.filling())), 1e-12 * (1 + max_abs(dq)));
        if (seed == 0) {
          EXPECT_GT(max_abs(dq), 1e-3);  // off shell the charge really moves
        }
      }
  }
}

TEST(Defect, TrivialChargeIsInvariantOnShell) {
  auto cx = CubicalComplex::build({6, 6, 6}, {1.0}, Topology::torus);
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0, 1);
  SolveConstraints cons;
  for (int k = 0; k < 6; ++k) {
    const auto idx = cx->index_of(1, {4, 4, 4 - (k % 2)}, {k % 3});
    if (std::any_of(cons.fixed.begin(), cons.fixed.end(), [&](const FixedValue& f) { return f.cell == idx; })) continue;
    cons.fixed.push_back({idx, Eigen::Vector3cd(n(rng), n(rng), n(rng))});
  }
  const Cochain psi = solve_free(cx, kSo3, 1, cons).field;
  EXPECT_GT(psi.max_norm(), 1e-3);
  const Cobordism c = translation_sweep(cx, {1}, {1, 0, 0}, 0);
  const FiberValue q0 = charge_trivial(psi, c.source()), q1 = charge_trivial(psi, c.target());
  EXPECT_LE(max_abs(q1 - q0), 1e-8);
}

TEST(Defect, ConservationReport) {
  Fixture s;
  const auto flat = conservation_report(Cochain::constant(s.cx, 1, kSo3, Eigen::Vector3cd(1, 2, 3)));
  EXPECT_EQ(flat.dynamical_norm, 0.0);
  EXPECT_EQ(flat.trivial_norm, 0.0);
  EXPECT_EQ(flat.action, 0.0);
  for (const auto& sample : flat.samples) EXPECT_EQ(max_abs(sample.value), 0.0);

  const auto noisy = conservation_report(s.field(11));
  EXPECT_LE(noisy.trivial_norm, 1e-13);
  EXPECT_GT(noisy.dynamical_norm, 1e-2);
  EXPECT_GT(noisy.action, 0.0);
  // 2-form current on planes, 1-form trivial current on loops
  ASSERT_EQ(noisy.samples.size(), 6u);
  EXPECT_EQ(noisy.samples[0].name, "eom_plane0");
  EXPECT_EQ(noisy.samples[3].name, "trivial_loop0");
}

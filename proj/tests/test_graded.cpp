#include <random>

#include <gtest/gtest.h>

#include "hfsym/graded.hpp"

using namespace hfsym;

namespace {

double operator_norm(const Eigen::MatrixXcd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
}

GroupElement rz90() { return rotation(2, M_PI / 2); }
GroupElement rx90() { return rotation(0, M_PI / 2); }

}  // namespace

TEST(Graded, DegreeArithmetic) {
  EXPECT_EQ(kOdd + kOdd, kEven);
  EXPECT_EQ(kEven + kOdd, kOdd);
  EXPECT_THROW(Degree(2), DegreeError);
  EXPECT_THROW(Degree(-1), DegreeError);
}

TEST(Graded, PrimitiveShifts) {
  const auto g = GradedMorphism::primitive(rz90(), kEven);
  EXPECT_EQ(g.shift(), kOdd);
  EXPECT_EQ(g.target(), kOdd);
  EXPECT_TRUE(g.is_primitive());
  const auto e = GradedMorphism::primitive(GroupElement::identity(GroupKind::SO3), kOdd);
  EXPECT_EQ(e.shift(), kEven);
  EXPECT_TRUE(e.is_primitive());
  EXPECT_TRUE(e.is_identity());
  EXPECT_FALSE(GradedMorphism::make(rz90(), kEven, kEven).is_primitive());
  EXPECT_FALSE(GradedMorphism::make(GroupElement::identity(GroupKind::SO3), kEven, kOdd).is_primitive());
}

TEST(Graded, AlternatingPairsCompose) {
  const auto g = rz90(), h = rx90();
  const auto a = compose(GradedMorphism::primitive(g, kOdd), GradedMorphism::primitive(h, kEven));
  EXPECT_EQ(a.source(), kEven);
  EXPECT_EQ(a.target(), kEven);
  EXPECT_TRUE(a.group_element().approx_equal(g * h));
  const auto b = compose(GradedMorphism::primitive(g, kEven), GradedMorphism::primitive(h, kOdd));
  EXPECT_EQ(b.source(), kOdd);
  EXPECT_EQ(b.target(), kOdd);
}

TEST(Graded, SameDegreePairsDoNotCompose) {
  const auto g = rz90(), h = rx90();
  for (auto deg : {kEven, kOdd})
    EXPECT_THROW(compose(GradedMorphism::primitive(g, deg), GradedMorphism::primitive(h, deg)), DegreeError);
}

TEST(Graded, IdentityIsDegreePreserving) {
  const auto e = GroupElement::identity(GroupKind::SO3);
  const auto g = GradedMorphism::primitive(rz90(), kOdd);
  const auto left = compose(GradedMorphism::primitive(e, kEven), g);
  EXPECT_TRUE(left.approx_equal(g));
  const auto right = compose(g, GradedMorphism::primitive(e, kOdd));
  EXPECT_TRUE(right.approx_equal(g));
  EXPECT_THROW(compose(g, GradedMorphism::primitive(e, kEven)), DegreeError);
}

TEST(Graded, InverseLaws) {
  std::mt19937_64 rng(71);
  for (int k = 0; k < 20; ++k) {
    const auto m = GradedMorphism::primitive(random_group_element(GroupKind::U2, rng), Degree(k % 2));
    const auto inv = inverse(m);
    EXPECT_EQ(inv.source(), m.target());
    EXPECT_TRUE(compose(inv, m).approx_equal(GradedMorphism::identity(GroupKind::U2, m.source())));
    EXPECT_TRUE(compose(m, inv).approx_equal(GradedMorphism::identity(GroupKind::U2, m.target())));
  }
}

TEST(Graded, ActMovesValuesBetweenDegrees) {
  const auto rep = GroupoidRep::adjoint(LieAlgebraSpec::so3());
  const GradedValue x{kEven, Eigen::Vector3cd(1, 0, 0)};
  const auto y = act(GradedMorphism::primitive(rz90(), kEven), x, rep);
  EXPECT_EQ(y.degree, kOdd);
  EXPECT_LE((y.value - Eigen::Vector3cd(0, 1, 0)).norm(), 1e-15);
  EXPECT_THROW(act(GradedMorphism::primitive(rz90(), kOdd), x, rep), DegreeError);
  const GradedValue bad{kEven, Eigen::Vector2cd(1, 0)};
  EXPECT_THROW(act(GradedMorphism::primitive(rz90(), kEven), bad, rep), DomainError);
}

TEST(Graded, RepresentationIsFunctorial) {
  std::mt19937_64 rng(73);
  const auto adj = GroupoidRep::adjoint(LieAlgebraSpec::u2());
  const auto def = GroupoidRep::defining(GroupKind::U2);
  for (int k = 0; k < 100; ++k) {
    const auto b = GradedMorphism::primitive(random_group_element(GroupKind::U2, rng), Degree(k % 2));
    const auto a = GradedMorphism::primitive(random_group_element(GroupKind::U2, rng), b.target());
    for (const auto* rep : {&adj, &def}) {
      const auto ab = represent(compose(a, b), *rep);
      EXPECT_LE((ab.matrix - represent(a, *rep).matrix * represent(b, *rep).matrix).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_EQ(ab.source, b.source());
      EXPECT_EQ(ab.target, a.target());
    }
  }
}

TEST(Graded, RepresentationChecksGroup) {
  const auto rep = GroupoidRep::defining(GroupKind::U2);
  EXPECT_THROW(rep(rz90()), DomainError);
  EXPECT_EQ(GroupoidRep::trivial(GroupKind::SO3)(rz90()), Eigen::MatrixXcd::Identity(1, 1));
  EXPECT_EQ(GroupoidRep::for_fiber(FiberSpec::complex_pair()).dimension(), 2);
  EXPECT_EQ(GroupoidRep::for_fiber(FiberSpec::algebra(LieAlgebraSpec::so3())).dimension(), 3);
}

TEST(Graded, NoncommutingWitness) {
  // explicit quarter turns about x and z as the oracle
  Eigen::Matrix3d rx, rz;
  rx << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d diff = rx * rz - rz * rx;
  EXPECT_NEAR(Eigen::JacobiSVD<Eigen::Matrix3d>(diff).singularValues()(0), 1.7320508075688772, 1e-14);
  EXPECT_LE((rx90().matrix().real() - rx).norm(), 1e-15);
  EXPECT_LE((rz90().matrix().real() - rz).norm(), 1e-15);

  const auto rep = GroupoidRep::adjoint(LieAlgebraSpec::so3());
  const auto gh = compose(GradedMorphism::primitive(rx90(), kOdd), GradedMorphism::primitive(rz90(), kEven));
  const auto hg = compose(GradedMorphism::primitive(rz90(), kOdd), GradedMorphism::primitive(rx90(), kEven));
  const double gap = operator_norm(represent(gh, rep).matrix - represent(hg, rep).matrix);
  EXPECT_NEAR(gap, 1.7320508075688772, 1e-12);
  EXPECT_GT(gap, 0.1);
}

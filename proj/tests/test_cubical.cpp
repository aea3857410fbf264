#include <random>

#include <gtest/gtest.h>

#include "hfsym/cubical.hpp"

using namespace hfsym;

namespace {

long long binom(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

bool contains(const std::vector<int>& v, int a) { return std::find(v.begin(), v.end(), a) != v.end(); }

// Geometric oracle: does primal cell a meet cell b shifted by +1/2 on every
// axis? Returns the signed count using the orientation of (axes(a), axes(b)).
long long geometric_crossing(const CubicalComplex& cx, const Cell& a, const Cell& b) {
  const int d = cx.dimension();
  for (int i = 0; i < d; ++i) {
    // boxes do not wrap: a huge modulus turns the test into plain equality
    const int n = cx.is_torus() ? cx.shape()[i] : 1 << 20;
    const bool in_a = contains(a.axes, i), in_b = contains(b.axes, i);
    if (in_a == in_b) return 0;
    if (in_a) {
      // a spans [a_i, a_i + 1]; b sits at b_i + 1/2
      if (((b.base[i] - a.base[i]) % n + n) % n != 0) return 0;
    } else {
      // a sits at a_i; b spans [b_i + 1/2, b_i + 3/2]
      if (((a.base[i] - b.base[i] - 1) % n + n) % n != 0) return 0;
    }
  }
  std::vector<int> seq = a.axes;
  seq.insert(seq.end(), b.axes.begin(), b.axes.end());
  return permutation_sign(seq);
}

long long oracle_intersection(const Chain& a, const Chain& b) {
  const auto& cx = *a.complex();
  long long n = 0;
  for (const auto& [i, ca] : a.terms())
    for (const auto& [j, cb] : b.terms())
      n += ca * cb * geometric_crossing(cx, cx.cell(a.degree(), i), cx.cell(b.degree(), j));
  return n;
}

Chain random_chain(const ComplexPtr& cx, int p, std::mt19937_64& rng, int terms = 8) {
  Chain c(cx, p);
  std::uniform_int_distribution<std::size_t> pick(0, cx->cell_count(p) - 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int t = 0; t < terms; ++t) c.add(pick(rng), coef(rng));
  return c;
}

}  // namespace

TEST(Cubical, TorusCellCounts) {
  for (int d = 1; d <= 3; ++d) {
    std::vector<int> shape(static_cast<std::size_t>(d), 3);
    auto cx = CubicalComplex::build(shape, {1.0}, Topology::torus);
    long long nv = 1;
    for (int s : shape) nv *= s;
    for (int p = 0; p <= d; ++p) EXPECT_EQ(static_cast<long long>(cx->cell_count(p)), binom(d, p) * nv);
  }
}

TEST(Cubical, BoxCellCounts) {
  auto cx = CubicalComplex::build({4}, {1.0}, Topology::box);
  EXPECT_EQ(cx->cell_count(0), 5u);
  EXPECT_EQ(cx->cell_count(1), 4u);
  auto sq = CubicalComplex::build({2, 3}, {1.0}, Topology::box);
  EXPECT_EQ(sq->cell_count(0), 12u);
  EXPECT_EQ(sq->cell_count(1), 2u * 4 + 3u * 3);
  EXPECT_EQ(sq->cell_count(2), 6u);
}

TEST(Cubical, BuildRejectsDegenerateInput) {
  EXPECT_THROW(CubicalComplex::build({1, 4}, {1.0}, Topology::torus), ConfigError);
  EXPECT_THROW(CubicalComplex::build({}, {1.0}, Topology::torus), ConfigError);
  EXPECT_THROW(CubicalComplex::build({2, 2, 2, 2}, {1.0}, Topology::torus), ConfigError);
  EXPECT_THROW(CubicalComplex::build({3, 3}, {1.0, 0.0}, Topology::torus), ConfigError);
  EXPECT_THROW(CubicalComplex::build({3, 3}, {1.0, 1.0, 1.0}, Topology::torus), ConfigError);
  EXPECT_THROW(topology_from_string("sphere"), ConfigError);
}

TEST(Cubical, CellIndexRoundTrip) {
  for (auto topo : {Topology::torus, Topology::box}) {
    auto cx = CubicalComplex::build({3, 2, 4}, {1.0}, topo);
    for (int p = 0; p <= 3; ++p)
      for (std::size_t i = 0; i < cx->cell_count(p); ++i) {
        const Cell c = cx->cell(p, i);
        EXPECT_EQ(c.degree, p);
        EXPECT_EQ(static_cast<int>(c.axes.size()), p);
        EXPECT_EQ(cx->index_of(p, c.base, c.axes), i);
      }
  }
}

TEST(Cubical, TorusFindWrapsCoordinates) {
  auto cx = CubicalComplex::build({3, 3}, {1.0}, Topology::torus);
  EXPECT_EQ(cx->find(1, {3, -1}, {0}), cx->find(1, {0, 2}, {0}));
  auto box = CubicalComplex::build({3, 3}, {1.0}, Topology::box);
  EXPECT_FALSE(box->find(1, {3, 0}, {0}).has_value());
  EXPECT_TRUE(box->find(0, {3, 3}, {}).has_value());
  EXPECT_THROW(box->index_of(1, {3, 0}, {0}), DomainError);
}

TEST(Cubical, EdgeBoundaryIsEndMinusStart) {
  auto cx = CubicalComplex::build({4}, {1.0}, Topology::box);
  Chain e(cx, 1);
  e.add(cx->index_of(1, {2}, {0}), 1);
  const Chain b = boundary(e);
  EXPECT_EQ(b.coefficient(cx->index_of(0, {3}, {})), 1);
  EXPECT_EQ(b.coefficient(cx->index_of(0, {2}, {})), -1);
  EXPECT_EQ(b.terms().size(), 2u);
}

TEST(Cubical, SquareBoundaryIsCounterclockwise) {
  auto cx = CubicalComplex::build({3, 3}, {1.0}, Topology::torus);
  Chain s(cx, 2);
  s.add(cx->index_of(2, {0, 0}, {0, 1}), 1);
  const Chain b = boundary(s);
  // bottom +x, right +y, top -x, left -y
  EXPECT_EQ(b.coefficient(cx->index_of(1, {0, 0}, {0})), 1);
  EXPECT_EQ(b.coefficient(cx->index_of(1, {1, 0}, {1})), 1);
  EXPECT_EQ(b.coefficient(cx->index_of(1, {0, 1}, {0})), -1);
  EXPECT_EQ(b.coefficient(cx->index_of(1, {0, 0}, {1})), -1);
}

TEST(Cubical, BoundarySquaredVanishesExhaustively) {
  for (auto shape : std::vector<std::vector<int>>{{2, 2}, {3, 3}, {2, 2, 2}, {3, 2, 4}, {4}})
    for (auto topo : {Topology::torus, Topology::box}) {
      auto cx = CubicalComplex::build(shape, {1.0}, topo);
      for (int p = 2; p <= cx->dimension(); ++p) {
        const Eigen::SparseMatrix<int> bb = cx->boundary_matrix(p - 1) * cx->boundary_matrix(p);
        EXPECT_EQ(bb.norm(), 0.0);
        for (std::size_t i = 0; i < cx->cell_count(p); ++i) {
          Chain c(cx, p);
          c.add(i, 1);
          EXPECT_TRUE(boundary(boundary(c)).empty());
        }
      }
    }
}

TEST(Cubical, BoundaryMatrixMatchesFaces) {
  auto cx = CubicalComplex::build({3, 2, 2}, {1.0}, Topology::torus);
  for (int p = 1; p <= 3; ++p) {
    const Eigen::MatrixXi dense = Eigen::MatrixXi(cx->boundary_matrix(p));
    for (std::size_t i = 0; i < cx->cell_count(p); ++i) {
      Chain c(cx, p);
      c.add(i, 1);
      const Chain b = boundary(c);
      for (std::size_t j = 0; j < cx->cell_count(p - 1); ++j)
        EXPECT_EQ(dense(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)), b.coefficient(j));
    }
  }
}

TEST(Cubical, BoundaryOfVertexChainIsDomainError) {
  auto cx = CubicalComplex::build({3}, {1.0}, Topology::torus);
  EXPECT_THROW(boundary(Chain(cx, 0)), DomainError);
}

TEST(Cubical, ChainArithmetic) {
  auto cx = CubicalComplex::build({3, 3}, {1.0}, Topology::torus);
  Chain a(cx, 1), b(cx, 1);
  a.add(0, 2).add(1, -1);
  b.add(0, -2).add(2, 5);
  const Chain s = a + b;
  EXPECT_EQ(s.coefficient(0), 0);
  EXPECT_EQ(s.terms().count(0), 0u);
  EXPECT_EQ(s.coefficient(2), 5);
  EXPECT_EQ(a - a, Chain(cx, 1));
  EXPECT_EQ((3 * a).coefficient(0), 6);
  EXPECT_EQ((-a).coefficient(1), 1);
  EXPECT_THROW(a + Chain(cx, 2), DomainError);
  auto other = CubicalComplex::build({3, 3}, {1.0}, Topology::torus);
  EXPECT_THROW(a + Chain(other, 1), DomainError);
  EXPECT_THROW(a.add(cx->cell_count(1), 1), DomainError);
}

TEST(Cubical, LoopsAndPlanesAreCycles) {
  auto cx = CubicalComplex::build({3, 4, 2}, {1.0}, Topology::torus);
  for (int a = 0; a < 3; ++a) {
    const Chain l = loop_chain(cx, a, {1, 1});
    EXPECT_TRUE(is_cycle(l));
    EXPECT_EQ(static_cast<int>(l.terms().size()), cx->shape()[a]);
    const Chain p = plane_chain(cx, a, 1);
    EXPECT_TRUE(is_cycle(p));
  }
  EXPECT_THROW(loop_chain(cx, 3, {0, 0}), ConfigError);
  EXPECT_THROW(loop_chain(cx, 0, {0}), ConfigError);
  EXPECT_THROW(loop_chain(cx, 0, {4, 0}), ConfigError);
  EXPECT_THROW(plane_chain(cx, 0, 3), ConfigError);
  EXPECT_THROW(plane_chain(cx, -1, 0), ConfigError);
}

TEST(Cubical, BlockChainOnTorusWraps) {
  auto cx = CubicalComplex::build({3, 3}, {1.0}, Topology::torus);
  const Chain all = block_chain(cx, {0, 1}, {0, 0}, {3, 3});
  EXPECT_EQ(all.terms().size(), 9u);
  EXPECT_TRUE(is_cycle(all));  // the fundamental class
  const Chain wrap = block_chain(cx, {0}, {2, 0}, {4, 1});
  EXPECT_EQ(wrap.coefficient(cx->index_of(1, {0, 0}, {0})), 1);
  EXPECT_EQ(wrap.coefficient(cx->index_of(1, {2, 0}, {0})), 1);
  EXPECT_THROW(block_chain(cx, {1, 0}, {0, 0}, {1, 1}), ConfigError);
  EXPECT_THROW(block_chain(cx, {0}, {1, 0}, {0, 1}), ConfigError);
  auto box = CubicalComplex::build({3, 3}, {1.0}, Topology::box);
  EXPECT_THROW(block_chain(box, {0}, {0, 0}, {4, 1}), ConfigError);
}

TEST(Cubical, CellListChain) {
  auto cx = CubicalComplex::build({3, 3}, {1.0}, Topology::torus);
  const Chain c = cell_list_chain(cx, 1, {{Cell{1, {0, 0}, {0}, 1}, 2}, {Cell{1, {1, 0}, {1}, 1}, -1}});
  EXPECT_EQ(c.coefficient(cx->index_of(1, {0, 0}, {0})), 2);
  EXPECT_EQ(c.coefficient(cx->index_of(1, {1, 0}, {1})), -1);
  EXPECT_THROW(cell_list_chain(cx, 1, {{Cell{1, {3, 0}, {0}, 1}, 1}}), ConfigError);
  EXPECT_THROW(cell_list_chain(cx, 1, {{Cell{2, {0, 0}, {0, 1}, 1}, 1}}), ConfigError);
  EXPECT_THROW(cell_list_chain(cx, 2, {{Cell{2, {0, 0}, {1, 0}, 1}, 1}}), ConfigError);
}

TEST(Cubical, IntersectionOfAxisLoopWithNormalPlane) {
  auto cx = CubicalComplex::build({4, 4, 4}, {1.0}, Topology::torus);
  const Chain lx = loop_chain(cx, 0, {1, 2});
  EXPECT_EQ(intersection_number(lx, plane_chain(cx, 0, 2)), 1);
  EXPECT_EQ(intersection_number(lx, plane_chain(cx, 1, 0)), 0);
  EXPECT_EQ(intersection_number(-1 * lx, plane_chain(cx, 0, 0)), -1);
  // planes carry the lexicographic orientation of their axes, so the sign is
  // that of (e_a, remaining axes)
  for (int a = 0; a < 3; ++a)
    EXPECT_EQ(intersection_number(loop_chain(cx, a, {0, 0}), plane_chain(cx, a, 3)), a == 1 ? -1 : 1);
}

TEST(Cubical, IntersectionInTwoDimensionsIsAntisymmetric) {
  auto cx = CubicalComplex::build({3, 3}, {1.0}, Topology::torus);
  const Chain lx = loop_chain(cx, 0, {0}), ly = loop_chain(cx, 1, {0});
  EXPECT_EQ(intersection_number(lx, ly), 1);
  EXPECT_EQ(intersection_number(ly, lx), -1);
  EXPECT_EQ(intersection_number(lx, loop_chain(cx, 0, {1})), 0);
}

TEST(Cubical, IntersectionMatchesGeometricOracle) {
  std::mt19937_64 rng(23);
  for (auto shape : std::vector<std::vector<int>>{{5}, {3, 4}, {3, 3, 4}})
    for (auto topo : {Topology::torus, Topology::box}) {
      auto cx = CubicalComplex::build(shape, {1.0}, topo);
      const int d = cx->dimension();
      for (int p = 0; p <= d; ++p)
        for (int rep = 0; rep < 30; ++rep) {
          const Chain a = random_chain(cx, p, rng), b = random_chain(cx, d - p, rng);
          EXPECT_EQ(intersection_number(a, b), oracle_intersection(a, b));
        }
    }
}

TEST(Cubical, IntersectionRequiresComplementaryDegrees) {
  auto cx = CubicalComplex::build({3, 3, 3}, {1.0}, Topology::torus);
  EXPECT_THROW(intersection_number(Chain(cx, 1), Chain(cx, 1)), DomainError);
}

TEST(Cubical, IntersectionIsHomologyInvariant) {
  std::mt19937_64 rng(29);
  auto cx = CubicalComplex::build({4, 3, 3}, {1.0}, Topology::torus);
  const Chain lz = loop_chain(cx, 2, {1, 2});
  const Chain plane = plane_chain(cx, 2, 1);
  for (int rep = 0; rep < 50; ++rep) {
    const Chain f = random_chain(cx, 3, rng, 12);
    EXPECT_EQ(intersection_number(lz, plane + boundary(f)), 1);
    const Chain g = random_chain(cx, 2, rng, 12);
    EXPECT_EQ(intersection_number(lz + boundary(g), plane), 1);
  }
}

TEST(Cubical, CobordismValidation) {
  auto cx = CubicalComplex::build({4, 4, 4}, {1.0}, Topology::torus);
  const Chain l0 = loop_chain(cx, 1, {0, 0}), l1 = loop_chain(cx, 1, {1, 0});
  const Chain f = block_chain(cx, {0, 1}, {0, 0, 0}, {1, 4, 1});
  EXPECT_NO_THROW(Cobordism(l0, f, l1));
  EXPECT_THROW(Cobordism(l0, f, l0), DomainError);
  EXPECT_THROW(Cobordism(l0, Chain(cx, 3), l1), DomainError);
  EXPECT_EQ(Cobordism::sweep(l0, f).target(), l1);
}

TEST(Cubical, SweptLoopIsCrossedOnce) {
  // The y-loop at x = 1 swept to x = 2 is crossed once by a z-loop at x = 2.
  auto cx = CubicalComplex::build({4, 4, 4}, {1.0}, Topology::torus);
  const Cobordism sweep = translation_sweep(cx, {1}, {1, 0, 2}, 0);
  EXPECT_EQ(sweep.source(), loop_chain(cx, 1, {1, 2}));
  EXPECT_EQ(sweep.target(), loop_chain(cx, 1, {2, 2}));
  EXPECT_EQ(intersection_number(loop_chain(cx, 2, {2, 3}), sweep.filling()), 1);
  EXPECT_EQ(intersection_number(loop_chain(cx, 2, {3, 3}), sweep.filling()), 0);
  EXPECT_EQ(intersection_number(loop_chain(cx, 2, {1, 3}), sweep.filling()), 0);
  EXPECT_EQ(intersection_number(loop_chain(cx, 0, {3, 3}), sweep.filling()), 0);
}

TEST(Cubical, TranslationSweepsEveryDegree) {
  auto cx = CubicalComplex::build({3, 3, 3}, {1.0}, Topology::torus);
  for (const auto& axes : std::vector<std::vector<int>>{{}, {0}, {2}, {0, 2}, {1, 2}})
    for (int b = 0; b < 3; ++b) {
      if (contains(axes, b)) {
        EXPECT_THROW(translation_sweep(cx, axes, {0, 0, 0}, b), ConfigError);
        continue;
      }
      const Cobordism c = translation_sweep(cx, axes, {2, 2, 2}, b);
      EXPECT_TRUE(is_cycle(c.source()));
      EXPECT_EQ(boundary(c.filling()), c.target() - c.source());
    }
  auto box = CubicalComplex::build({3, 3}, {1.0}, Topology::box);
  EXPECT_THROW(coordinate_cycle(box, {0}, {0, 0}), GeometryError);
}

TEST(Cubical, VolumesFollowSpacing) {
  auto cx = CubicalComplex::build({3, 3, 3}, {2.0, 1.0, 0.5}, Topology::torus);
  const auto ex = cx->index_of(1, {0, 0, 0}, {0});
  EXPECT_DOUBLE_EQ(cx->volume(1, ex), 2.0);
  EXPECT_DOUBLE_EQ(cx->dual_volume(1, ex), 0.5);
  const auto sq = cx->index_of(2, {0, 0, 0}, {1, 2});
  EXPECT_DOUBLE_EQ(cx->volume(2, sq), 0.5);
  EXPECT_DOUBLE_EQ(cx->dual_volume(2, sq), 2.0);
  EXPECT_DOUBLE_EQ(cx->volume(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(cx->dual_volume(0, 0), 1.0);
}

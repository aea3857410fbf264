#pragma once

// Cubical cell complexes on flat tori and boxes, integer chains and the
// boundary operator.
//
// A p-cell is identified by its base vertex and a strictly increasing set of
// p axes along which it spans one unit of the lattice. Cells of degree p are
// numbered block-wise: axis subsets in lexicographic order, then base vertices
// in row-major order (last axis fastest). Positive orientation is the
// increasing axis order.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "hfsym/errors.hpp"

namespace hfsym {

enum class Topology { torus, box };

inline Topology topology_from_string(const std::string& s) {
  if (s == "torus") return Topology::torus;
  if (s == "box") return Topology::box;
  throw ConfigError("unknown topology '" + s + "'");
}

struct Cell {
  int degree = 0;
  std::vector<int> base;
  std::vector<int> axes;
  int orientation = 1;

  bool operator==(const Cell&) const = default;
};

/// Sign of the permutation that sorts `seq` (entries distinct).
inline int permutation_sign(std::vector<int> seq) {
  int sign = 1;
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (std::size_t j = i + 1; j < seq.size(); ++j)
      if (seq[i] > seq[j]) sign = -sign;
  return sign;
}

class CubicalComplex {
 public:
  struct Face {
    std::size_t index;
    int sign;
  };

  static std::shared_ptr<const CubicalComplex> build(std::vector<int> shape, std::vector<double> spacing,
                                                     Topology topology) {
    return std::shared_ptr<const CubicalComplex>(
        new CubicalComplex(std::move(shape), std::move(spacing), topology));
  }

  int dimension() const noexcept { return dim_; }
  const std::vector<int>& shape() const noexcept { return shape_; }
  const std::vector<double>& spacing() const noexcept { return spacing_; }
  Topology topology() const noexcept { return topology_; }
  bool is_torus() const noexcept { return topology_ == Topology::torus; }

  std::size_t cell_count(int p) const {
    check_degree(p);
    return blocks_[p].empty() ? 0 : blocks_[p].back().offset + blocks_[p].back().size;
  }

  /// Number of axis-subset classes (parallel cell families) in degree p.
  std::size_t class_count(int p) const {
    check_degree(p);
    return blocks_[p].size();
  }
  /// Class (axis-subset block) of the cell with this index.
  std::size_t class_of(int p, std::size_t index) const { return block_of(p, index); }

  Cell cell(int p, std::size_t index) const {
    check_degree(p);
    const std::size_t b = block_of(p, index);
    const Block& blk = blocks_[p][b];
    std::size_t rem = index - blk.offset;
    Cell c;
    c.degree = p;
    c.axes = blk.axes;
    c.base.assign(static_cast<std::size_t>(dim_), 0);
    for (int a = dim_ - 1; a >= 0; --a) {
      const auto ext = static_cast<std::size_t>(blk.extent[a]);
      c.base[a] = static_cast<int>(rem % ext);
      rem /= ext;
    }
    return c;
  }

  /// Index of the cell with given base and axes; base is reduced modulo the
  /// shape on a torus. Returns nullopt when the cell does not exist (box).
  std::optional<std::size_t> find(int p, std::vector<int> base, const std::vector<int>& axes) const {
    check_degree(p);
    if (static_cast<int>(axes.size()) != p || static_cast<int>(base.size()) != dim_) return std::nullopt;
    const auto it = std::find_if(blocks_[p].begin(), blocks_[p].end(),
                                 [&](const Block& b) { return b.axes == axes; });
    if (it == blocks_[p].end()) return std::nullopt;
    std::size_t lin = 0;
    for (int a = 0; a < dim_; ++a) {
      int x = base[a];
      if (is_torus()) x = ((x % shape_[a]) + shape_[a]) % shape_[a];
      if (x < 0 || x >= it->extent[a]) return std::nullopt;
      lin = lin * static_cast<std::size_t>(it->extent[a]) + static_cast<std::size_t>(x);
    }
    return it->offset + lin;
  }

  std::size_t index_of(int p, const std::vector<int>& base, const std::vector<int>& axes) const {
    auto idx = find(p, base, axes);
    if (!idx) throw DomainError("no such " + std::to_string(p) + "-cell in complex");
    return *idx;
  }

  /// The 2p oriented faces of a p-cell (p >= 1).
  std::span<const Face> faces(int p, std::size_t index) const {
    if (p < 1 || p > dim_) throw DomainError("faces requested for degree " + std::to_string(p));
    const auto n = static_cast<std::size_t>(2 * p);
    return {faces_[p].data() + n * index, n};
  }

  /// Product of spacings along the cell's axes.
  double volume(int p, std::size_t index) const {
    double v = 1.0;
    for (int a : blocks_[p][block_of(p, index)].axes) v *= spacing_[a];
    return v;
  }
  /// Product of spacings along the complementary axes.
  double dual_volume(int p, std::size_t index) const {
    double v = 1.0;
    for (int a : blocks_[p][block_of(p, index)].complement) v *= spacing_[a];
    return v;
  }

  /// Integer incidence matrix of the boundary map from degree p to p-1.
  Eigen::SparseMatrix<int> boundary_matrix(int p) const {
    if (p < 1 || p > dim_) throw DomainError("boundary matrix requested for degree " + std::to_string(p));
    std::vector<Eigen::Triplet<int>> trips;
    const std::size_t n = cell_count(p);
    trips.reserve(n * 2 * static_cast<std::size_t>(p));
    for (std::size_t i = 0; i < n; ++i)
      for (const Face& f : faces(p, i))
        trips.emplace_back(static_cast<int>(f.index), static_cast<int>(i), f.sign);
    Eigen::SparseMatrix<int> m(static_cast<Eigen::Index>(cell_count(p - 1)), static_cast<Eigen::Index>(n));
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
  }

  /// Dual partner of a k-cell tau (base b, axes B): the (d-k)-cell sigma with
  /// axes B^c whose dual cell coincides with tau translated by (1/2,...,1/2).
  /// sigma has base b on B^c and b+1 on B. The sign is that of the
  /// permutation (B^c, B); it equals the relative orientation of translated
  /// tau and the dual cell of sigma. Missing at the far faces of a box.
  struct Partner {
    std::size_t index;
    int sign;
  };
  std::optional<Partner> dual_partner(int k, std::size_t index) const {
    const Cell c = cell(k, index);
    const Block& blk = blocks_[k][block_of(k, index)];
    std::vector<int> base = c.base;
    for (int a : c.axes) base[a] += 1;
    auto idx = find(dim_ - k, base, blk.complement);
    if (!idx) return std::nullopt;
    return Partner{*idx, blk.partner_sign};
  }

 private:
  struct Block {
    std::vector<int> axes;
    std::vector<int> complement;
    std::vector<int> extent;
    std::size_t offset = 0;
    std::size_t size = 0;
    int partner_sign = 1;
  };

  CubicalComplex(std::vector<int> shape, std::vector<double> spacing, Topology topology)
      : dim_(static_cast<int>(shape.size())),
        shape_(std::move(shape)),
        spacing_(std::move(spacing)),
        topology_(topology) {
    if (dim_ < 1 || dim_ > 3) throw ConfigError("complex dimension must be 1, 2 or 3");
    if (spacing_.size() == 1 && dim_ > 1) spacing_.assign(static_cast<std::size_t>(dim_), spacing_[0]);
    if (static_cast<int>(spacing_.size()) != dim_) throw ConfigError("spacing length must match shape");
    for (int n : shape_)
      if (n < 2) throw ConfigError("every shape entry must be at least 2");
    for (double h : spacing_)
      if (!(h > 0.0)) throw ConfigError("every spacing entry must be positive");

    blocks_.resize(static_cast<std::size_t>(dim_) + 1);
    for (int p = 0; p <= dim_; ++p) {
      std::size_t offset = 0;
      for_each_subset(p, [&](const std::vector<int>& axes) {
        Block b;
        b.axes = axes;
        for (int a = 0; a < dim_; ++a)
          if (!std::binary_search(axes.begin(), axes.end(), a)) b.complement.push_back(a);
        b.extent.resize(static_cast<std::size_t>(dim_));
        b.size = 1;
        for (int a = 0; a < dim_; ++a) {
          const bool spans = std::binary_search(axes.begin(), axes.end(), a);
          b.extent[a] = (is_torus() || spans) ? shape_[a] : shape_[a] + 1;
          b.size *= static_cast<std::size_t>(b.extent[a]);
        }
        std::vector<int> order = b.complement;
        order.insert(order.end(), axes.begin(), axes.end());
        b.partner_sign = permutation_sign(order);
        b.offset = offset;
        offset += b.size;
        blocks_[p].push_back(std::move(b));
      });
    }

    // face k of cell (b, a_0 < ... < a_{p-1}): for each j, the back face at b
    // with sign -(-1)^j and the front face at b + e_{a_j} with sign +(-1)^j.
    faces_.resize(static_cast<std::size_t>(dim_) + 1);
    for (int p = 1; p <= dim_; ++p) {
      const std::size_t n = cell_count(p);
      auto& fs = faces_[p];
      fs.reserve(n * 2 * static_cast<std::size_t>(p));
      for (std::size_t i = 0; i < n; ++i) {
        const Cell c = cell(p, i);
        for (int j = 0; j < p; ++j) {
          std::vector<int> sub = c.axes;
          sub.erase(sub.begin() + j);
          const int sj = (j % 2 == 0) ? 1 : -1;
          std::vector<int> front = c.base;
          front[c.axes[j]] += 1;
          fs.push_back({index_of(p - 1, c.base, sub), -sj});
          fs.push_back({index_of(p - 1, front, sub), sj});
        }
      }
    }
  }

  template <class F>
  void for_each_subset(int p, F&& f) const {
    std::vector<int> axes(static_cast<std::size_t>(p));
    std::iota(axes.begin(), axes.end(), 0);
    if (p == 0) {
      f(axes);
      return;
    }
    while (true) {
      f(axes);
      int i = p - 1;
      while (i >= 0 && axes[i] == dim_ - p + i) --i;
      if (i < 0) break;
      ++axes[i];
      for (int j = i + 1; j < p; ++j) axes[j] = axes[j - 1] + 1;
    }
  }

  void check_degree(int p) const {
    if (p < 0 || p > dim_)
      throw DomainError("degree " + std::to_string(p) + " out of range for a " + std::to_string(dim_) +
                        "-dimensional complex");
  }

  std::size_t block_of(int p, std::size_t index) const {
    const auto& bl = blocks_[p];
    for (std::size_t b = 0; b < bl.size(); ++b)
      if (index < bl[b].offset + bl[b].size) return b;
    throw DomainError("cell index " + std::to_string(index) + " out of range in degree " + std::to_string(p));
  }

  int dim_;
  std::vector<int> shape_;
  std::vector<double> spacing_;
  Topology topology_;
  std::vector<std::vector<Block>> blocks_;
  std::vector<std::vector<Face>> faces_;
};

using ComplexPtr = std::shared_ptr<const CubicalComplex>;

/// Integer-weighted formal sum of oriented p-cells.
class Chain {
 public:
  Chain(ComplexPtr complex, int degree) : complex_(std::move(complex)), degree_(degree) {
    if (!complex_) throw DomainError("chain needs a complex");
    if (degree_ < 0 || degree_ > complex_->dimension())
      throw DomainError("chain degree " + std::to_string(degree_) + " out of range");
  }

  const ComplexPtr& complex() const noexcept { return complex_; }
  int degree() const noexcept { return degree_; }
  const std::map<std::size_t, long long>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  long long coefficient(std::size_t index) const {
    auto it = terms_.find(index);
    return it == terms_.end() ? 0 : it->second;
  }

  Chain& add(std::size_t index, long long coef) {
    if (index >= complex_->cell_count(degree_))
      throw DomainError("cell index " + std::to_string(index) + " out of range for chain");
    if (coef == 0) return *this;
    auto [it, inserted] = terms_.emplace(index, coef);
    if (!inserted) {
      it->second += coef;
      if (it->second == 0) terms_.erase(it);
    }
    return *this;
  }

  Chain& add(const Cell& c, long long coef = 1) {
    if (c.degree != degree_) throw DomainError("cell degree does not match chain degree");
    return add(complex_->index_of(c.degree, c.base, c.axes), coef * c.orientation);
  }

  Chain operator+(const Chain& o) const {
    require_compatible(o);
    Chain r = *this;
    for (const auto& [i, c] : o.terms_) r.add(i, c);
    return r;
  }
  Chain operator-(const Chain& o) const {
    require_compatible(o);
    Chain r = *this;
    for (const auto& [i, c] : o.terms_) r.add(i, -c);
    return r;
  }
  Chain operator-() const { return -1 * *this; }
  friend Chain operator*(long long s, const Chain& c) {
    Chain r(c.complex_, c.degree_);
    if (s != 0)
      for (const auto& [i, v] : c.terms_) r.terms_.emplace(i, s * v);
    return r;
  }

  bool operator==(const Chain& o) const {
    return complex_ == o.complex_ && degree_ == o.degree_ && terms_ == o.terms_;
  }

  void require_compatible(const Chain& o) const {
    if (complex_ != o.complex_) throw DomainError("chains live on different complexes");
    if (degree_ != o.degree_) throw DomainError("chain degree mismatch");
  }

 private:
  ComplexPtr complex_;
  int degree_;
  std::map<std::size_t, long long> terms_;
};

inline Chain boundary(const Chain& c) {
  if (c.degree() == 0) throw DomainError("boundary of a 0-chain is undefined");
  Chain r(c.complex(), c.degree() - 1);
  for (const auto& [i, coef] : c.terms())
    for (const auto& f : c.complex()->faces(c.degree(), i)) r.add(f.index, coef * f.sign);
  return r;
}

inline bool is_cycle(const Chain& c) { return c.degree() == 0 || boundary(c).empty(); }

/// Closed loop of unit edges along `axis`; `offsets` are the coordinates on
/// the remaining axes in increasing axis order.
inline Chain loop_chain(const ComplexPtr& complex, int axis, const std::vector<int>& offsets) {
  const int d = complex->dimension();
  if (axis < 0 || axis >= d) throw ConfigError("loop axis out of range");
  if (static_cast<int>(offsets.size()) != d - 1)
    throw ConfigError("loop needs " + std::to_string(d - 1) + " offsets");
  std::vector<int> base(static_cast<std::size_t>(d), 0);
  for (int a = 0, k = 0; a < d; ++a) {
    if (a == axis) continue;
    const int limit = complex->is_torus() ? complex->shape()[a] : complex->shape()[a] + 1;
    if (offsets[k] < 0 || offsets[k] >= limit) throw ConfigError("loop offset out of range");
    base[a] = offsets[k++];
  }
  Chain c(complex, 1);
  for (int i = 0; i < complex->shape()[axis]; ++i) {
    base[axis] = i;
    c.add(complex->index_of(1, base, {axis}), 1);
  }
  return c;
}

/// All (d-1)-cells orthogonal to `normal` at coordinate `offset`.
inline Chain plane_chain(const ComplexPtr& complex, int normal, int offset) {
  const int d = complex->dimension();
  if (normal < 0 || normal >= d) throw ConfigError("plane normal out of range");
  const int limit = complex->is_torus() ? complex->shape()[normal] : complex->shape()[normal] + 1;
  if (offset < 0 || offset >= limit) throw ConfigError("plane offset out of range");
  std::vector<int> axes;
  for (int a = 0; a < d; ++a)
    if (a != normal) axes.push_back(a);
  Chain c(complex, d - 1);
  for (std::size_t i = 0; i < complex->cell_count(d - 1); ++i) {
    const Cell cell = complex->cell(d - 1, i);
    if (cell.axes == axes && cell.base[normal] == offset) c.add(i, 1);
  }
  return c;
}

/// Every cell spanning exactly `axes` whose base lies in [lower, upper)
/// coordinatewise, with coefficient +1. Coordinates wrap on a torus.
inline Chain block_chain(const ComplexPtr& complex, const std::vector<int>& axes, const std::vector<int>& lower,
                         const std::vector<int>& upper) {
  const int d = complex->dimension();
  if (static_cast<int>(lower.size()) != d || static_cast<int>(upper.size()) != d)
    throw ConfigError("block bounds must have one entry per axis");
  if (!std::is_sorted(axes.begin(), axes.end()) || std::adjacent_find(axes.begin(), axes.end()) != axes.end())
    throw ConfigError("block axes must be strictly increasing");
  for (int a : axes)
    if (a < 0 || a >= d) throw ConfigError("block axis out of range");
  for (int a = 0; a < d; ++a)
    if (upper[a] < lower[a]) throw ConfigError("block upper bound below lower bound");
  const int p = static_cast<int>(axes.size());
  Chain c(complex, p);
  std::vector<int> base = lower;
  for (int a = 0; a < d; ++a)
    if (lower[a] == upper[a]) return c;
  while (true) {
    auto idx = complex->find(p, base, axes);
    if (!idx) throw ConfigError("block reaches outside the complex");
    c.add(*idx, 1);
    int a = d - 1;
    while (a >= 0 && ++base[a] == upper[a]) {
      base[a] = lower[a];
      --a;
    }
    if (a < 0) break;
  }
  return c;
}

struct CellItem {
  Cell cell;
  long long coef = 1;
};

inline Chain cell_list_chain(const ComplexPtr& complex, int degree, const std::vector<CellItem>& items) {
  Chain c(complex, degree);
  for (const auto& item : items) {
    if (item.cell.degree != degree) throw ConfigError("cell list mixes degrees");
    if (static_cast<int>(item.cell.base.size()) != complex->dimension())
      throw ConfigError("cell base has wrong length");
    if (!std::is_sorted(item.cell.axes.begin(), item.cell.axes.end()) ||
        std::adjacent_find(item.cell.axes.begin(), item.cell.axes.end()) != item.cell.axes.end())
      throw ConfigError("cell axes must be strictly increasing");
    for (int a = 0; a < complex->dimension(); ++a) {
      const bool spans = std::find(item.cell.axes.begin(), item.cell.axes.end(), a) != item.cell.axes.end();
      const int limit = complex->is_torus() || spans ? complex->shape()[a] : complex->shape()[a] + 1;
      if (item.cell.base[a] < 0 || item.cell.base[a] >= limit) throw ConfigError("cell base out of range");
    }
    auto idx = complex->find(degree, item.cell.base, item.cell.axes);
    if (!idx) throw ConfigError("cell does not exist in complex");
    c.add(*idx, item.coef * item.cell.orientation);
  }
  return c;
}

/// Signed transversal intersection count of a p-chain with a (d-p)-chain.
/// `b` is pushed off by the half-diagonal translation, so each of its cells
/// meets exactly its dual partner among the p-cells.
inline long long intersection_number(const Chain& a, const Chain& b) {
  if (a.complex() != b.complex()) throw DomainError("chains live on different complexes");
  const auto& cx = *a.complex();
  if (a.degree() + b.degree() != cx.dimension())
    throw DomainError("intersection needs complementary degrees, got " + std::to_string(a.degree()) + " and " +
                      std::to_string(b.degree()));
  long long n = 0;
  for (const auto& [i, coef] : b.terms()) {
    auto partner = cx.dual_partner(b.degree(), i);
    if (partner) n += coef * partner->sign * a.coefficient(partner->index);
  }
  return n;
}

/// A (q+1)-chain sweeping the q-cycle `source` onto `target`:
/// boundary(filling) = target - source.
class Cobordism {
 public:
  Cobordism(Chain source, Chain filling, Chain target)
      : source_(std::move(source)), filling_(std::move(filling)), target_(std::move(target)) {
    if (filling_.degree() != source_.degree() + 1) throw DomainError("filling must have degree q+1");
    if (!(boundary(filling_) == target_ - source_))
      throw DomainError("boundary(filling) differs from target - source");
  }

  /// Target determined by the filling.
  static Cobordism sweep(const Chain& source, const Chain& filling) {
    if (filling.degree() != source.degree() + 1) throw DomainError("filling must have degree q+1");
    return {source, filling, source + boundary(filling)};
  }

  const Chain& source() const noexcept { return source_; }
  const Chain& filling() const noexcept { return filling_; }
  const Chain& target() const noexcept { return target_; }

 private:
  Chain source_;
  Chain filling_;
  Chain target_;
};

/// The coordinate k-torus spanned by `axes` through the point `offsets`
/// (entries on `axes` are ignored).
inline Chain coordinate_cycle(const ComplexPtr& complex, const std::vector<int>& axes, const std::vector<int>& offsets) {
  if (!complex->is_torus()) throw GeometryError("coordinate cycles exist only on a torus");
  const int d = complex->dimension();
  if (static_cast<int>(offsets.size()) != d) throw ConfigError("cycle offsets must have one entry per axis");
  std::vector<int> lower(static_cast<std::size_t>(d)), upper(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    if (std::find(axes.begin(), axes.end(), a) != axes.end()) {
      lower[a] = 0;
      upper[a] = complex->shape()[a];
    } else {
      if (offsets[a] < 0 || offsets[a] >= complex->shape()[a]) throw ConfigError("cycle offset out of range");
      lower[a] = offsets[a];
      upper[a] = offsets[a] + 1;
    }
  }
  return block_chain(complex, axes, lower, upper);
}

/// Sweeps coordinate_cycle(axes, offsets) one cell forward along `along`.
inline Cobordism translation_sweep(const ComplexPtr& complex, const std::vector<int>& axes,
                                   const std::vector<int>& offsets, int along) {
  const int d = complex->dimension();
  if (along < 0 || along >= d || std::find(axes.begin(), axes.end(), along) != axes.end())
    throw ConfigError("sweep direction must be an axis not spanned by the cycle");
  Chain source = coordinate_cycle(complex, axes, offsets);
  std::vector<int> moved = offsets;
  moved[along] = (offsets[along] + 1) % complex->shape()[along];
  Chain target = coordinate_cycle(complex, axes, moved);
  std::vector<int> fill_axes = axes;
  fill_axes.push_back(along);
  std::sort(fill_axes.begin(), fill_axes.end());
  std::vector<int> lower(static_cast<std::size_t>(d)), upper(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const bool spans = std::find(axes.begin(), axes.end(), a) != axes.end();
    lower[a] = spans ? 0 : offsets[a];
    upper[a] = spans ? complex->shape()[a] : offsets[a] + 1;
  }
  Chain filling = block_chain(complex, fill_axes, lower, upper);
  if (!(boundary(filling) == target - source)) filling = -filling;
  return {std::move(source), std::move(filling), std::move(target)};
}

}  // namespace hfsym

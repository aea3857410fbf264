#pragma once

// Config-driven scenario runner behind the hfsym command-line tool.
//
// A scenario is one JSON document. Reports are ordered JSON documents whose
// bytes depend only on the config text, the seed and the command.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hfsym/algebra.hpp"
#include "hfsym/calculus.hpp"
#include "hfsym/cubical.hpp"
#include "hfsym/defect.hpp"
#include "hfsym/dsl.hpp"
#include "hfsym/field_io.hpp"
#include "hfsym/graded.hpp"

namespace hfsym::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

struct Tolerances {
  double identity = 1e-12;
  double solver = 1e-10;
  double onshell = 1e-8;
};

struct ChargeRequest {
  std::string name;
  std::string current;  // "eom" or "trivial"
  Chain sigma;
};

struct ChargedSpec {
  Chain support;
  Degree degree;
};

struct DefectRequest {
  std::string name;
  std::string g;
  Degree degree;
  Chain support;
  Chain filling;
  ChargedSpec charged;
};

struct Scenario {
  ComplexPtr complex;
  const LieAlgebraSpec* algebra = nullptr;
  FiberSpec fiber = FiberSpec::real_scalar();
  C2Convention convention;
  int field_degree = 0;
  json field_init = "zero";
  dsl::SymbolTable group_elements;
  std::vector<std::string> group_order;
  std::vector<ChargeRequest> charges;
  std::vector<DefectRequest> defects;
  std::vector<std::string> compose;
  std::vector<std::string> checks;
  Tolerances tol;
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;

  GroupKind group() const { return algebra->group(); }
  GroupoidRep rep() const { return GroupoidRep::for_fiber(fiber, group()); }
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<std::string> expr;
};

inline std::uint64_t fnv1a64_value(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a64(std::string_view bytes) {
  const std::uint64_t h = fnv1a64_value(bytes);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

inline void allow_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

inline int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
  return v.get<int>();
}

inline double as_real(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + " must be a string");
  return v.get<std::string>();
}

inline std::vector<int> as_ints(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be an array of integers");
  std::vector<int> out;
  for (const auto& x : v) out.push_back(as_int(x, where));
  return out;
}

inline Degree as_degree(const json& v, const std::string& where) {
  const int p = as_int(v, where);
  if (p != 0 && p != 1) throw ConfigError(where + " must be 0 or 1");
  return Degree(p);
}

inline cplx as_complex(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(where + " must be a number or an [re, im] pair");
}

}  // namespace detail

/// Algebra and real fibers serialize as coefficient arrays, C^2 as [re, im] pairs.
inline json fiber_to_json(const FiberValue& v, const FiberSpec& fiber) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (fiber.is_real())
      out.push_back(v(k).real());
    else
      out.push_back(json::array({v(k).real(), v(k).imag()}));
  }
  return out;
}

inline FiberValue fiber_from_json(const json& j, const FiberSpec& fiber, const std::string& where) {
  const int n = fiber.components();
  if (fiber.is_real() && n == 1 && j.is_number()) return FiberValue::Constant(1, cplx(j.get<double>(), 0.0));
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ConfigError(where + " must have " + std::to_string(n) + " components");
  FiberValue v(n);
  for (int k = 0; k < n; ++k) {
    v(k) = detail::as_complex(j[static_cast<std::size_t>(k)], where);
    if (fiber.is_real() && v(k).imag() != 0.0) throw ConfigError(where + " must be real for a " + fiber.name() + " fiber");
  }
  return v;
}

inline json matrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Chain parse_chain(const json& spec, const ComplexPtr& complex, const std::string& where) {
  const std::string kind = detail::as_string(detail::require(spec, "kind", where), where + ".kind");
  if (kind == "loop") {
    detail::allow_keys(spec, {"kind", "axis", "offsets"}, where);
    return loop_chain(complex, detail::as_int(detail::require(spec, "axis", where), where + ".axis"),
                      detail::as_ints(detail::require(spec, "offsets", where), where + ".offsets"));
  }
  if (kind == "plane") {
    detail::allow_keys(spec, {"kind", "normal", "offset"}, where);
    return plane_chain(complex, detail::as_int(detail::require(spec, "normal", where), where + ".normal"),
                       detail::as_int(detail::require(spec, "offset", where), where + ".offset"));
  }
  if (kind == "block") {
    detail::allow_keys(spec, {"kind", "axes", "lower", "upper"}, where);
    return block_chain(complex, detail::as_ints(detail::require(spec, "axes", where), where + ".axes"),
                       detail::as_ints(detail::require(spec, "lower", where), where + ".lower"),
                       detail::as_ints(detail::require(spec, "upper", where), where + ".upper"));
  }
  if (kind == "cells") {
    detail::allow_keys(spec, {"kind", "degree", "items"}, where);
    const json& items = detail::require(spec, "items", where);
    if (!items.is_array()) throw ConfigError(where + ".items must be an array");
    std::optional<int> degree;
    if (spec.contains("degree")) degree = detail::as_int(spec["degree"], where + ".degree");
    std::vector<CellItem> cells;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::string w = where + ".items[" + std::to_string(i) + "]";
      const json& it = items[i];
      detail::allow_keys(it, {"degree", "base", "axes", "coef"}, w);
      CellItem item;
      item.cell.axes = detail::as_ints(detail::require(it, "axes", w), w + ".axes");
      item.cell.degree = it.contains("degree") ? detail::as_int(it["degree"], w + ".degree")
                                               : static_cast<int>(item.cell.axes.size());
      if (item.cell.degree != static_cast<int>(item.cell.axes.size()))
        throw ConfigError(w + ": degree does not match the number of axes");
      item.cell.base = detail::as_ints(detail::require(it, "base", w), w + ".base");
      item.coef = it.contains("coef") ? detail::as_int(it["coef"], w + ".coef") : 1;
      if (!degree) degree = item.cell.degree;
      cells.push_back(std::move(item));
    }
    if (!degree) throw ConfigError(where + ": empty cell list needs a 'degree'");
    if (*degree < 0 || *degree > complex->dimension()) throw ConfigError(where + ": degree out of range");
    return cell_list_chain(complex, *degree, cells);
  }
  throw ConfigError(where + ": unknown chain kind '" + kind + "'");
}

inline GroupElement parse_group_element(const json& spec, const Scenario& sc, const std::string& where) {
  const std::string type = detail::as_string(detail::require(spec, "type", where), where + ".type");
  const GroupKind group = sc.group();
  GroupElement g = GroupElement::identity(group);
  if (type == "identity") {
    detail::allow_keys(spec, {"type"}, where);
  } else if (type == "exp") {
    detail::allow_keys(spec, {"type", "algebra", "coeffs"}, where);
    const LieAlgebraSpec& alg =
        spec.contains("algebra")
            ? LieAlgebraSpec::get(algebra_from_string(detail::as_string(spec["algebra"], where + ".algebra")))
            : *sc.algebra;
    const json& cj = detail::require(spec, "coeffs", where);
    if (!cj.is_array() || static_cast<int>(cj.size()) != alg.dimension())
      throw ConfigError(where + ".coeffs must have " + std::to_string(alg.dimension()) + " entries");
    Eigen::VectorXd c(alg.dimension());
    for (int a = 0; a < alg.dimension(); ++a) c(a) = detail::as_real(cj[static_cast<std::size_t>(a)], where + ".coeffs");
    g = exponential(LieAlgebraElement(alg, c));
  } else if (type == "matrix") {
    detail::allow_keys(spec, {"type", "rows"}, where);
    const json& rows = detail::require(spec, "rows", where);
    const int n = GroupElement::expected_size(group);
    if (!rows.is_array() || static_cast<int>(rows.size()) != n)
      throw ConfigError(where + ".rows must have " + std::to_string(n) + " rows");
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i) {
      const json& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        throw ConfigError(where + ".rows must be " + std::to_string(n) + "x" + std::to_string(n));
      for (int j = 0; j < n; ++j) m(i, j) = detail::as_complex(row[static_cast<std::size_t>(j)], where + ".rows");
    }
    try {
      g = GroupElement(group, m);
    } catch (const DomainError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  } else if (type == "rotation") {
    detail::allow_keys(spec, {"type", "axis", "angle"}, where);
    if (group != GroupKind::SO3) throw ConfigError(where + ": rotations need the so3 algebra");
    const int axis = detail::as_int(detail::require(spec, "axis", where), where + ".axis");
    if (axis < 0 || axis > 2) throw ConfigError(where + ".axis must be 0, 1 or 2");
    g = rotation(axis, detail::as_real(detail::require(spec, "angle", where), where + ".angle"));
  } else if (type == "inverse") {
    detail::allow_keys(spec, {"type", "of"}, where);
    const std::string of = detail::as_string(detail::require(spec, "of", where), where + ".of");
    auto it = sc.group_elements.find(of);
    if (it == sc.group_elements.end()) throw ConfigError(where + ": '" + of + "' is not defined before this entry");
    g = it->second.inverse();
  } else {
    throw ConfigError(where + ": unknown group element type '" + type + "'");
  }
  if (g.kind() != group)
    throw ConfigError(where + ": element of " + std::string(to_string(g.kind())) + " in a " +
                      std::string(to_string(group)) + " scenario");
  return g;
}

inline Scenario parse_scenario(const json& root, const Overrides& ov = {}, std::filesystem::path base_dir = {}) {
  detail::allow_keys(root,
                     {"mesh", "algebra", "field", "group_elements", "charges", "defects", "compose", "checks",
                      "tolerances", "seed"},
                     "config");
  Scenario sc;
  sc.base_dir = std::move(base_dir);

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw ConfigError("config.seed must be a non-negative integer");
    sc.seed = root["seed"].get<std::uint64_t>();
  }
  if (ov.seed) sc.seed = *ov.seed;

  if (root.contains("tolerances")) {
    const json& t = root["tolerances"];
    detail::allow_keys(t, {"identity", "solver", "onshell"}, "tolerances");
    if (t.contains("identity")) sc.tol.identity = detail::as_real(t["identity"], "tolerances.identity");
    if (t.contains("solver")) sc.tol.solver = detail::as_real(t["solver"], "tolerances.solver");
    if (t.contains("onshell")) sc.tol.onshell = detail::as_real(t["onshell"], "tolerances.onshell");
  }
  if (ov.tolerance) sc.tol.solver = *ov.tolerance;
  if (!(sc.tol.identity > 0 && sc.tol.solver > 0 && sc.tol.onshell > 0))
    throw ConfigError("tolerances must be positive");

  {
    const json& m = detail::require(root, "mesh", "config");
    detail::allow_keys(m, {"shape", "spacing", "topology"}, "mesh");
    const auto shape = detail::as_ints(detail::require(m, "shape", "mesh"), "mesh.shape");
    std::vector<double> spacing{1.0};
    if (m.contains("spacing")) {
      if (!m["spacing"].is_array()) throw ConfigError("mesh.spacing must be an array");
      spacing.clear();
      for (const auto& h : m["spacing"]) spacing.push_back(detail::as_real(h, "mesh.spacing"));
    }
    const std::string topo = m.contains("topology") ? detail::as_string(m["topology"], "mesh.topology") : "torus";
    sc.complex = CubicalComplex::build(shape, spacing, topology_from_string(topo));
  }

  {
    const json& a = detail::require(root, "algebra", "config");
    std::string name, fiber = "algebra";
    if (a.is_string()) {
      name = a.get<std::string>();
    } else {
      detail::allow_keys(a, {"name", "fiber", "c2_convention"}, "algebra");
      name = detail::as_string(detail::require(a, "name", "algebra"), "algebra.name");
      if (a.contains("fiber")) fiber = detail::as_string(a["fiber"], "algebra.fiber");
      if (a.contains("c2_convention")) {
        const json& cm = a["c2_convention"];
        if (!cm.is_array() || cm.size() != 4) throw ConfigError("algebra.c2_convention must be a 4x4 real matrix");
        Eigen::Matrix4d map;
        for (int i = 0; i < 4; ++i) {
          if (!cm[i].is_array() || cm[i].size() != 4)
            throw ConfigError("algebra.c2_convention must be a 4x4 real matrix");
          for (int j = 0; j < 4; ++j) map(i, j) = detail::as_real(cm[i][j], "algebra.c2_convention");
        }
        sc.convention = C2Convention(map);
      }
    }
    try {
      sc.algebra = &LieAlgebraSpec::get(algebra_from_string(name));
    } catch (const Error& e) {
      throw ConfigError(std::string("algebra: ") + e.what());
    }
    if (fiber == "algebra") {
      sc.fiber = FiberSpec::algebra(*sc.algebra);
    } else if (fiber == "complex_pair") {
      if (sc.algebra->kind() != AlgebraKind::u2) throw ConfigError("the complex_pair fiber needs the u2 algebra");
      sc.fiber = FiberSpec::complex_pair();
    } else if (fiber == "real") {
      sc.fiber = FiberSpec::real_scalar();
    } else {
      throw ConfigError("algebra.fiber must be 'algebra', 'complex_pair' or 'real'");
    }
  }

  if (root.contains("field")) {
    const json& f = root["field"];
    detail::allow_keys(f, {"degree", "init"}, "field");
    sc.field_degree = detail::as_int(detail::require(f, "degree", "field"), "field.degree");
    if (sc.field_degree < 0 || sc.field_degree >= sc.complex->dimension())
      throw ConfigError("field.degree must lie in [0, dimension)");
    if (f.contains("init")) sc.field_init = f["init"];
  }

  sc.group_elements.emplace("e", GroupElement::identity(sc.group()));
  sc.group_order.push_back("e");
  if (root.contains("group_elements")) {
    const json& ge = root["group_elements"];
    if (!ge.is_object()) throw ConfigError("group_elements must be an object");
    for (const auto& [name, spec] : ge.items()) {
      const auto diag = dsl::parse(name + "[0]");
      if (!dsl::ok(diag) || std::get<dsl::CompositionExpr>(diag).atoms.size() != 1)
        throw ConfigError("group element name '" + name + "' is not an identifier");
      if (sc.group_elements.count(name)) throw ConfigError("group element '" + name + "' defined twice");
      sc.group_elements.emplace(name, parse_group_element(spec, sc, "group_elements." + name));
      sc.group_order.push_back(name);
    }
  }

  if (root.contains("charges")) {
    const json& cs = root["charges"];
    if (!cs.is_array()) throw ConfigError("charges must be an array");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string w = "charges[" + std::to_string(i) + "]";
      detail::allow_keys(cs[i], {"name", "current", "sigma"}, w);
      ChargeRequest r{detail::as_string(detail::require(cs[i], "name", w), w + ".name"),
                      detail::as_string(detail::require(cs[i], "current", w), w + ".current"),
                      parse_chain(detail::require(cs[i], "sigma", w), sc.complex, w + ".sigma")};
      const int p = sc.field_degree, d = sc.complex->dimension();
      if (r.current == "eom") {
        if (r.sigma.degree() != p + 1) throw ConfigError(w + ": eom charge needs a " + std::to_string(p + 1) + "-chain");
      } else if (r.current == "trivial") {
        if (r.sigma.degree() != d - p - 1)
          throw ConfigError(w + ": trivial charge needs a " + std::to_string(d - p - 1) + "-chain");
      } else {
        throw ConfigError(w + ".current must be 'eom' or 'trivial'");
      }
      for (const auto& prev : sc.charges)
        if (prev.name == r.name) throw ConfigError(w + ": duplicate charge name '" + r.name + "'");
      sc.charges.push_back(std::move(r));
    }
  }

  if (root.contains("defects")) {
    const json& ds = root["defects"];
    if (!ds.is_array()) throw ConfigError("defects must be an array");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::string w = "defects[" + std::to_string(i) + "]";
      const json& dj = ds[i];
      detail::allow_keys(dj, {"name", "g", "degree", "support", "move", "charged"}, w);
      const json& mv = detail::require(dj, "move", w);
      detail::allow_keys(mv, {"filling"}, w + ".move");
      const json& ch = detail::require(dj, "charged", w);
      detail::allow_keys(ch, {"support", "degree"}, w + ".charged");
      DefectRequest r{dj.contains("name") ? detail::as_string(dj["name"], w + ".name") : "defect" + std::to_string(i),
                      detail::as_string(detail::require(dj, "g", w), w + ".g"),
                      detail::as_degree(detail::require(dj, "degree", w), w + ".degree"),
                      parse_chain(detail::require(dj, "support", w), sc.complex, w + ".support"),
                      parse_chain(detail::require(mv, "filling", w + ".move"), sc.complex, w + ".move.filling"),
                      {parse_chain(detail::require(ch, "support", w + ".charged"), sc.complex, w + ".charged.support"),
                       detail::as_degree(detail::require(ch, "degree", w + ".charged"), w + ".charged.degree")}};
      if (!sc.group_elements.count(r.g)) throw ConfigError(w + ".g: unknown group element '" + r.g + "'");
      if (r.filling.degree() != r.support.degree() + 1) throw ConfigError(w + ": filling must have the support's degree + 1");
      if (r.charged.support.degree() != sc.field_degree)
        throw ConfigError(w + ": charged support must have the field's degree");
      sc.defects.push_back(std::move(r));
    }
  }

  if (root.contains("compose")) {
    const json& c = root["compose"];
    if (c.is_string()) {
      sc.compose.push_back(c.get<std::string>());
    } else if (c.is_array()) {
      for (const auto& e : c) sc.compose.push_back(detail::as_string(e, "compose[]"));
    } else {
      throw ConfigError("compose must be a string or an array of strings");
    }
  }
  if (ov.expr) sc.compose = {*ov.expr};

  if (root.contains("checks")) {
    const json& c = root["checks"];
    if (!c.is_array()) throw ConfigError("checks must be an array of names");
    for (const auto& e : c) sc.checks.push_back(detail::as_string(e, "checks[]"));
  }
  return sc;
}

/// The scenario's field, and solver details when it was solved for.
struct BuiltField {
  Cochain field;
  std::string init;
  std::optional<SolveResult> solve;
  /// Solved without a source: d star d psi vanishes off the pinned cells.
  bool sourceless = false;
  std::vector<std::size_t> pinned;
};

namespace detail {

inline std::uint64_t seed_of(const json& params, const Scenario& sc, const std::string& where) {
  if (!params.contains("seed")) return sc.seed;
  if (!params["seed"].is_number_unsigned()) throw ConfigError(where + ".seed must be a non-negative integer");
  return params["seed"].get<std::uint64_t>();
}

inline std::size_t cell_index(const json& item, const Scenario& sc, int degree, const std::string& w) {
  const auto base = as_ints(require(item, "base", w), w + ".base");
  const auto axes = as_ints(require(item, "axes", w), w + ".axes");
  if (static_cast<int>(axes.size()) != degree) throw ConfigError(w + ": cell must have " + std::to_string(degree) + " axes");
  if (static_cast<int>(base.size()) != sc.complex->dimension()) throw ConfigError(w + ".base has the wrong length");
  auto idx = sc.complex->find(degree, base, axes);
  if (!idx) throw ConfigError(w + ": cell is not part of the mesh");
  return *idx;
}

}  // namespace detail

inline BuiltField build_field(const Scenario& sc) {
  const int p = sc.field_degree;
  const json& init = sc.field_init;
  std::string kind;
  json params = json::object();
  if (init.is_string()) {
    kind = init.get<std::string>();
  } else if (init.is_object() && init.size() == 1) {
    kind = init.begin().key();
    params = init.begin().value();
    if (!params.is_object()) throw ConfigError("field.init." + kind + " must be an object");
  } else {
    throw ConfigError("field.init must be a name or an object with exactly one key");
  }
  const std::string w = "field.init." + kind;

  if (kind == "zero") return {Cochain::zero(sc.complex, p, sc.fiber), kind, std::nullopt, false, {}};

  if (kind == "constant") {
    detail::allow_keys(params, {"value"}, w);
    return {Cochain::constant(sc.complex, p, sc.fiber, fiber_from_json(detail::require(params, "value", w), sc.fiber, w + ".value")),
            kind, std::nullopt, false, {}};
  }

  if (kind == "random_gaussian") {
    detail::allow_keys(params, {"seed", "stddev"}, w);
    std::mt19937_64 rng(detail::seed_of(params, sc, w));
    const double stddev = params.contains("stddev") ? detail::as_real(params["stddev"], w + ".stddev") : 1.0;
    if (!(stddev > 0)) throw ConfigError(w + ".stddev must be positive");
    return {Cochain::random_gaussian(sc.complex, p, sc.fiber, rng, stddev), kind, std::nullopt, false, {}};
  }

  if (kind == "explicit") {
    detail::allow_keys(params, {"cells", "csv"}, w);
    if (params.contains("csv")) {
      if (params.contains("cells")) throw ConfigError(w + ": give either 'cells' or 'csv'");
      std::filesystem::path path = detail::as_string(params["csv"], w + ".csv");
      if (path.is_relative()) path = sc.base_dir / path;
      std::ifstream in(path);
      if (!in) throw ConfigError(w + ": cannot open '" + path.string() + "'");
      Cochain c = read_field_csv(in, sc.complex, sc.fiber);
      if (c.degree() != p) throw ConfigError(w + ": CSV holds a " + std::to_string(c.degree()) + "-cochain");
      return {std::move(c), kind, std::nullopt, false, {}};
    }
    Cochain c = Cochain::zero(sc.complex, p, sc.fiber);
    const json& cells = detail::require(params, "cells", w);
    if (!cells.is_array()) throw ConfigError(w + ".cells must be an array");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string wi = w + ".cells[" + std::to_string(i) + "]";
      detail::allow_keys(cells[i], {"base", "axes", "value"}, wi);
      c.set(detail::cell_index(cells[i], sc, p, wi), fiber_from_json(detail::require(cells[i], "value", wi), sc.fiber, wi + ".value"));
    }
    return {std::move(c), kind, std::nullopt, false, {}};
  }

  if (kind == "solve") {
    detail::allow_keys(params, {"fixed", "source", "max_iterations"}, w);
    SolveConstraints cons;
    if (params.contains("fixed")) {
      const json& fx = params["fixed"];
      if (!fx.is_array()) throw ConfigError(w + ".fixed must be an array");
      for (std::size_t i = 0; i < fx.size(); ++i) {
        const std::string wi = w + ".fixed[" + std::to_string(i) + "]";
        detail::allow_keys(fx[i], {"base", "axes", "value"}, wi);
        cons.fixed.push_back({detail::cell_index(fx[i], sc, p, wi),
                              fiber_from_json(detail::require(fx[i], "value", wi), sc.fiber, wi + ".value")});
      }
    }
    if (params.contains("source")) {
      // A compatible right-hand side: d star d of a seeded gaussian field.
      const json& src = params["source"];
      if (!src.is_object() || src.size() != 1 || !src.contains("random_exact"))
        throw ConfigError(w + ".source must be {\"random_exact\": {...}}");
      const json& rp = src["random_exact"];
      detail::allow_keys(rp, {"seed", "stddev"}, w + ".source.random_exact");
      std::mt19937_64 rng(detail::seed_of(rp, sc, w + ".source.random_exact"));
      const double stddev = rp.contains("stddev") ? detail::as_real(rp["stddev"], w + ".source.random_exact.stddev") : 1.0;
      cons.source = eom_residual(Cochain::random_gaussian(sc.complex, p, sc.fiber, rng, stddev));
    }
    SolveOptions opts;
    opts.tolerance = sc.tol.solver;
    if (params.contains("max_iterations")) opts.max_iterations = detail::as_int(params["max_iterations"], w + ".max_iterations");
    SolveResult res = solve_free(sc.complex, sc.fiber, p, cons, opts);
    Cochain f = res.field;
    std::vector<std::size_t> pinned;
    for (const auto& fv : cons.fixed) pinned.push_back(fv.cell);
    return {std::move(f), kind, std::move(res), !cons.source.has_value(), std::move(pinned)};
  }

  throw ConfigError("field.init: unknown initializer '" + kind + "'");
}

struct CheckResult {
  std::string name;
  bool pass;
  double lhs;
  double rhs;
  double tolerance;
};

inline json to_json(const CheckResult& c) {
  return json{{"name", c.name}, {"pass", c.pass}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"tolerance", c.tolerance}};
}

namespace detail {

inline std::vector<std::vector<int>> subsets_of_size(int d, int k) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    std::vector<int> s;
    for (int a = 0; a < d; ++a)
      if (mask & (1u << a)) s.push_back(a);
    out.push_back(std::move(s));
  }
  return out;
}

/// Every translation sweep of a coordinate k-cycle through the origin.
inline std::vector<Cobordism> coordinate_sweeps(const ComplexPtr& cx, int k) {
  std::vector<Cobordism> out;
  const int d = cx->dimension();
  if (!cx->is_torus() || k < 0 || k >= d) return out;
  for (const auto& axes : subsets_of_size(d, k))
    for (int b = 0; b < d; ++b)
      if (std::find(axes.begin(), axes.end(), b) == axes.end())
        out.push_back(translation_sweep(cx, axes, std::vector<int>(static_cast<std::size_t>(d), 0), b));
  return out;
}

inline std::vector<GroupElement> quaternion_group() {
  const cplx i(0, 1);
  Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(2, 2), qi(2, 2), qj(2, 2), qk(2, 2);
  qi << i, 0, 0, -i;
  qj << 0, 1, -1, 0;
  qk << 0, i, i, 0;
  std::vector<GroupElement> out;
  for (const auto* m : {&one, &qi, &qj, &qk}) {
    out.emplace_back(GroupKind::U2, *m);
    out.emplace_back(GroupKind::U2, -*m);
  }
  return out;
}

}  // namespace detail

inline std::vector<std::string> all_check_names() {
  return {"boundary_squared", "coboundary_squared", "stokes",           "star_involution",
          "gram_identity",    "ad_invariance",      "action_invariance", "groupoid_laws",
          "functoriality",    "charge_homology",    "trivial_charge_flux", "trivial_charge_homology",
          "eom_residual",     "trivial_current_closed"};
}

/// Whether a check makes sense for this scenario; explicit requests of an
/// inapplicable check are configuration errors.
inline bool check_applicable(const std::string& name, const Scenario& sc, const BuiltField& f) {
  const int d = sc.complex->dimension(), p = sc.field_degree;
  if (name == "charge_homology") return sc.complex->is_torus() && p + 1 < d;
  if (name == "trivial_charge_flux") return sc.complex->is_torus();
  if (name == "trivial_charge_homology") return f.solve.has_value() && f.sourceless && sc.complex->is_torus();
  if (name == "eom_residual") return f.solve.has_value();
  if (name == "trivial_current_closed") return p + 2 <= d;
  for (const auto& n : all_check_names())
    if (n == name) return true;
  return false;
}

inline CheckResult run_check(const std::string& name, const Scenario& sc, const BuiltField& built) {
  const auto& cx = sc.complex;
  const int dim = cx->dimension();
  const double tol = sc.tol.identity;
  const Cochain& psi = built.field;
  std::mt19937_64 rng(sc.seed ^ fnv1a64_value(name));
  auto leq = [&](double lhs, double rhs, double t) { return CheckResult{name, lhs <= rhs + t, lhs, rhs, t}; };

  if (name == "boundary_squared") {
    double worst = 0.0;
    for (int p = 2; p <= dim; ++p) {
      const Eigen::SparseMatrix<int> bb = cx->boundary_matrix(p - 1) * cx->boundary_matrix(p);
      for (int k = 0; k < bb.outerSize(); ++k)
        for (Eigen::SparseMatrix<int>::InnerIterator it(bb, k); it; ++it) worst = std::max(worst, std::abs(double(it.value())));
    }
    return leq(worst, 0.0, 0.0);
  }
  if (name == "coboundary_squared") {
    double worst = 0.0;
    for (int p = 0; p + 2 <= dim; ++p)
      for (int rep = 0; rep < 5; ++rep)
        worst = std::max(worst, d(d(Cochain::random_integer(cx, p, sc.fiber, rng))).max_norm());
    return leq(worst, 0.0, 0.0);
  }
  if (name == "stokes") {
    double worst = 0.0;
    for (int p = 0; p < dim; ++p)
      for (int rep = 0; rep < 20; ++rep) {
        const Cochain c = Cochain::random_gaussian(cx, p, sc.fiber, rng);
        Chain sigma(cx, p + 1);
        std::uniform_int_distribution<std::size_t> pick(0, cx->cell_count(p + 1) - 1);
        std::uniform_int_distribution<int> coef(-3, 3);
        for (int t = 0; t < 10; ++t) sigma.add(pick(rng), coef(rng));
        const FiberValue lhs = integrate(d(c), sigma);
        const FiberValue rhs = sigma.empty() ? FiberValue::Zero(lhs.size()) : integrate(c, boundary(sigma));
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / (1.0 + lhs.cwiseAbs().maxCoeff()));
      }
    return leq(worst, 0.0, tol);
  }
  if (name == "star_involution") {
    double worst = 0.0;
    for (int p = 0; p <= dim; ++p) {
      const Cochain c = Cochain::random_gaussian(cx, p, sc.fiber, rng);
      const double sign = (p * (dim - p)) % 2 == 0 ? 1.0 : -1.0;
      worst = std::max(worst, (star(star(c)).values() - sign * c.values()).cwiseAbs().maxCoeff());
    }
    return leq(worst, 0.0, tol);
  }
  if (name == "gram_identity") {
    const Eigen::MatrixXd g = sc.algebra->gram();
    return leq((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 0.0, tol);
  }
  if (name == "ad_invariance") {
    double worst = 0.0;
    std::vector<GroupElement> gs;
    for (const auto& n : sc.group_order) gs.push_back(sc.group_elements.at(n));
    for (int k = 0; k < 100; ++k) gs.push_back(random_group_element(sc.group(), rng));
    for (const auto& g : gs) {
      const auto x = random_element(*sc.algebra, rng), y = random_element(*sc.algebra, rng);
      worst = std::max(worst, std::abs(pairing(adjoint(g, x), adjoint(g, y)) - pairing(x, y)));
    }
    return leq(worst, 0.0, tol);
  }
  if (name == "action_invariance") {
    const Cochain field = psi.max_norm() > 0 ? psi : Cochain::random_gaussian(cx, sc.field_degree, sc.fiber, rng);
    const GroupoidRep rep = sc.rep();
    const double s0 = action(field);
    double worst = 0.0;
    std::vector<GroupElement> gs;
    for (const auto& n : sc.group_order) gs.push_back(sc.group_elements.at(n));
    for (int k = 0; k < 10; ++k) gs.push_back(random_group_element(sc.group(), rng));
    for (const auto& g : gs)
      worst = std::max(worst, std::abs(action(apply_global(field, rep(g))) - s0) / std::max(1.0, std::abs(s0)));
    return leq(worst, 0.0, tol);
  }
  if (name == "groupoid_laws") {
    // Closure of the quaternion primitives: every (g, source, shift).
    std::vector<GradedMorphism> ms;
    for (const auto& g : detail::quaternion_group())
      for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) ms.push_back(GradedMorphism::make(g, Degree(s), Degree(t)));
    double violations = 0;
    for (const auto& a : ms) {
      const auto id_src = GradedMorphism::identity(GroupKind::U2, a.source());
      const auto id_tgt = GradedMorphism::identity(GroupKind::U2, a.target());
      if (!compose(a, id_src).approx_equal(a) || !compose(id_tgt, a).approx_equal(a)) ++violations;
      if (!compose(inverse(a), a).approx_equal(id_src) || !compose(a, inverse(a)).approx_equal(id_tgt)) ++violations;
      for (const auto& b : ms) {
        if (!(b.target() == a.source())) continue;
        for (const auto& c : ms) {
          if (!(c.target() == b.source())) continue;
          if (!compose(compose(a, b), c).approx_equal(compose(a, compose(b, c)))) ++violations;
        }
      }
    }
    return leq(violations, 0.0, 0.0);
  }
  if (name == "functoriality") {
    const GroupoidRep rep = sc.rep();
    double worst = 0.0;
    for (const auto& an : sc.group_order)
      for (const auto& bn : sc.group_order)
        for (int s = 0; s < 2; ++s) {
          const auto b = GradedMorphism::primitive(sc.group_elements.at(bn), Degree(s));
          const auto a = GradedMorphism::primitive(sc.group_elements.at(an), b.target());
          const Eigen::MatrixXcd lhs = represent(compose(a, b), rep).matrix;
          worst = std::max(worst, (lhs - represent(a, rep).matrix * represent(b, rep).matrix).cwiseAbs().maxCoeff());
        }
    return leq(worst, 0.0, tol);
  }
  if (name == "charge_homology") {
    const Cochain field = psi.max_norm() > 0 ? psi : Cochain::random_gaussian(cx, sc.field_degree, sc.fiber, rng);
    double worst = 0.0;
    for (const auto& cob : detail::coordinate_sweeps(cx, sc.field_degree + 1)) {
      const FiberValue q0 = charge_eom(field, cob.source()), q1 = charge_eom(field, cob.target());
      worst = std::max(worst, (q1 - q0).cwiseAbs().maxCoeff() / (1.0 + q0.cwiseAbs().maxCoeff()));
    }
    return leq(worst, 0.0, tol);
  }
  if (name == "trivial_charge_flux") {
    // Off shell the trivial charge changes by exactly the flux of d star d psi.
    const Cochain field = psi.max_norm() > 0 ? psi : Cochain::random_gaussian(cx, sc.field_degree, sc.fiber, rng);
    const Cochain res = eom_residual(field);
    double worst = 0.0;
    for (const auto& cob : detail::coordinate_sweeps(cx, dim - sc.field_degree - 1)) {
      const FiberValue q0 = charge_trivial(field, cob.source()), q1 = charge_trivial(field, cob.target());
      const FiberValue flux = integrate(res, cob.filling());
      worst = std::max(worst, (q1 - q0 - flux).cwiseAbs().maxCoeff() / (1.0 + q0.cwiseAbs().maxCoeff()));
    }
    return leq(worst, 0.0, tol);
  }
  if (name == "trivial_charge_homology") {
    // Sweeps along the diagonal whose filling stays clear of the pinned cells,
    // the first clear one per (axes, direction).
    const int k = dim - sc.field_degree - 1;
    std::vector<char> pinned(cx->cell_count(sc.field_degree), 0);
    for (auto i : built.pinned) pinned[i] = 1;
    int min_extent = cx->shape()[0];
    for (int e : cx->shape()) min_extent = std::min(min_extent, e);
    double worst = 0.0;
    int used = 0;
    for (const auto& axes : detail::subsets_of_size(dim, k))
      for (int along = 0; along < dim; ++along) {
        if (std::find(axes.begin(), axes.end(), along) != axes.end()) continue;
        for (int t = 0; t < min_extent; ++t) {
          const Cobordism cob = translation_sweep(cx, axes, std::vector<int>(static_cast<std::size_t>(dim), t), along);
          bool clear = true;
          for (const auto& [i, coef] : cob.filling().terms()) {
            const auto partner = cx->dual_partner(k + 1, i);
            if (partner && pinned[partner->index]) clear = false;
          }
          if (!clear) continue;
          worst = std::max(worst, (charge_trivial(psi, cob.target()) - charge_trivial(psi, cob.source())).cwiseAbs().maxCoeff());
          ++used;
          break;
        }
      }
    if (used == 0) return {name, false, std::numeric_limits<double>::infinity(), 0.0, sc.tol.onshell};
    return leq(worst, 0.0, sc.tol.onshell);
  }
  if (name == "eom_residual") return leq(built.solve->residual, 0.0, sc.tol.solver);
  if (name == "trivial_current_closed") return leq(d(d(psi)).max_norm(), 0.0, 1e-13);
  throw ConfigError("unknown check '" + name + "'");
}

/// Outcome of one CLI invocation. On exit code 2 the report is empty.
struct RunOutcome {
  int exit_code = 0;
  std::string report;
  std::string error;
};

namespace detail {

inline json field_summary(const BuiltField& f, const Scenario& sc) {
  json out{{"degree", f.field.degree()}, {"fiber", f.field.fiber().name()}, {"init", f.init}};
  out["action"] = action(f.field);
  out["eom_residual"] = eom_residual(f.field).max_norm();
  out["trivial_residual"] = sc.field_degree + 2 <= sc.complex->dimension() ? d(d(f.field)).max_norm() : 0.0;
  if (f.solve) {
    out["solver_residual"] = f.solve->residual;
    out["iterations"] = f.solve->iterations;
  }
  return out;
}

inline json charge_value(const FiberValue& v, const Scenario& sc) {
  json out = fiber_to_json(v, sc.fiber);
  return out;
}

}  // namespace detail

struct RunRequest {
  std::string command;
  std::string config_text;
  std::filesystem::path config_dir;
  Overrides overrides;
  std::optional<std::filesystem::path> csv;
};

inline RunOutcome execute(const RunRequest& req) {
  RunOutcome out;
  try {
    json root;
    try {
      root = json::parse(req.config_text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("malformed config: ") + e.what());
    }
    const Scenario sc = parse_scenario(root, req.overrides, req.config_dir);
    const std::string& cmd = req.command;
    if (cmd != "solve" && cmd != "charges" && cmd != "defect" && cmd != "compose" && cmd != "check")
      throw ConfigError("unknown command '" + cmd + "'");

    json report;
    report["command"] = cmd;
    report["provenance"] = json{{"config_digest", fnv1a64(req.config_text)}, {"seed", sc.seed}, {"version", kVersion}};
    json results = json::object();
    json checks = json::array();
    bool ok = true;

    std::optional<BuiltField> built;
    auto field = [&]() -> const BuiltField& {
      if (!built) {
        try {
          built = build_field(sc);
        } catch (const SolverError& e) {
          throw ConfigError(std::string("field solve failed: ") + e.what());
        }
      }
      return *built;
    };

    if (cmd == "solve") {
      results["field"] = detail::field_summary(field(), sc);
    } else if (cmd == "charges") {
      const BuiltField& f = field();
      results["field"] = detail::field_summary(f, sc);
      const ConservationReport cr = conservation_report(f.field);
      results["conservation"] = json{{"dynamical_norm", cr.dynamical_norm}, {"trivial_norm", cr.trivial_norm}, {"action", cr.action}};
      json samples = json::object();
      for (const auto& s : cr.samples) samples[s.name] = detail::charge_value(s.value, sc);
      results["samples"] = std::move(samples);
      json charges = json::object();
      json as_u2 = json::object();
      for (const auto& r : sc.charges) {
        const FiberValue v = r.current == "eom" ? charge_eom(f.field, r.sigma) : charge_trivial(f.field, r.sigma);
        charges[r.name] = detail::charge_value(v, sc);
        if (sc.fiber.kind() == FiberKind::complex_pair) {
          const auto x = u2_from_c2(Eigen::Vector2cd(v(0), v(1)), sc.convention);
          json coeffs = json::array();
          for (Eigen::Index a = 0; a < x.coefficients().size(); ++a) coeffs.push_back(x.coefficients()(a));
          as_u2[r.name] = std::move(coeffs);
        }
      }
      results["charges"] = std::move(charges);
      if (sc.fiber.kind() == FiberKind::complex_pair) results["charges_u2"] = std::move(as_u2);
    } else if (cmd == "defect") {
      const BuiltField& f = field();
      const GroupoidRep rep = sc.rep();
      json outcomes = json::array();
      for (const auto& r : sc.defects) {
        json o{{"name", r.name}, {"g", r.g}, {"degree", r.degree.parity()}};
        try {
          const DefectOperator u(sc.group_elements.at(r.g), r.degree, r.support);
          const DefectMove move(u, Cobordism::sweep(r.support, r.filling));
          const ChargedOperator before(r.charged.support, f.field, r.charged.degree);
          const ChargedOperator after = apply_defect(u, before, move, rep);
          o["crossings"] = crossing_count(before, move);
          o["before"] = json{{"degree", before.degree().parity()}, {"observable", fiber_to_json(before.observable(), sc.fiber)}};
          o["after"] = json{{"degree", after.degree().parity()}, {"observable", fiber_to_json(after.observable(), sc.fiber)}};
          o["unchanged"] = after == before;
          o["ok"] = true;
        } catch (const ConfigError&) {
          throw;
        } catch (const DegreeError& e) {
          o["ok"] = false;
          o["error"] = json{{"kind", "DegreeError"}, {"message", e.what()}};
        } catch (const GeometryError& e) {
          o["ok"] = false;
          o["error"] = json{{"kind", "GeometryError"}, {"message", e.what()}};
        } catch (const DomainError& e) {
          o["ok"] = false;
          o["error"] = json{{"kind", "DomainError"}, {"message", e.what()}};
        }
        ok = ok && o["ok"].get<bool>();
        outcomes.push_back(std::move(o));
      }
      results["defects"] = std::move(outcomes);
    } else if (cmd == "compose") {
      if (sc.compose.empty()) throw ConfigError("compose: no expression given (config key 'compose' or --expr)");
      const GroupoidRep rep = sc.rep();
      json words = json::array();
      for (const auto& src : sc.compose) {
        json w{{"expr", src}};
        auto parsed = dsl::parse(src);
        std::optional<dsl::Diagnostic> diag;
        if (auto* d = std::get_if<dsl::Diagnostic>(&parsed)) {
          diag = *d;
        } else {
          auto checked = dsl::typecheck(std::get<dsl::CompositionExpr>(parsed), sc.group_elements);
          if (auto* d2 = std::get_if<dsl::Diagnostic>(&checked)) {
            diag = *d2;
          } else {
            const auto ev = dsl::evaluate(std::get<dsl::CheckedChain>(checked), rep);
            w["ok"] = true;
            w["source_degree"] = ev.morphism.source().parity();
            w["target_degree"] = ev.morphism.target().parity();
            w["group_element_matrix"] = matrix_to_json(ev.morphism.group_element().matrix());
            w["represented_matrix"] = matrix_to_json(ev.matrix);
          }
        }
        if (diag) {
          w["ok"] = false;
          w["diagnostic"] = json{{"kind", dsl::to_string(diag->kind)}, {"offset", diag->offset}, {"message", diag->message}};
          ok = false;
        }
        words.push_back(std::move(w));
      }
      results["compose"] = std::move(words);
    } else {  // check
      const BuiltField& f = field();
      std::vector<std::string> names;
      if (sc.checks.empty()) {
        for (const auto& n : all_check_names())
          if (check_applicable(n, sc, f)) names.push_back(n);
      } else {
        for (const auto& n : sc.checks) {
          if (std::find(names.begin(), names.end(), n) != names.end()) throw ConfigError("check '" + n + "' listed twice");
          if (!check_applicable(n, sc, f)) throw ConfigError("check '" + n + "' is unknown or does not apply to this scenario");
          names.push_back(n);
        }
      }
      for (const auto& n : names) {
        const CheckResult c = run_check(n, sc, f);
        ok = ok && c.pass;
        checks.push_back(to_json(c));
      }
      results["field"] = detail::field_summary(f, sc);
    }

    if (req.csv) {
      std::ostringstream csv;
      write_field_csv(field().field, csv);
      std::ofstream file(*req.csv, std::ios::binary);
      if (!file || !(file << csv.str()) || !file.flush()) throw ConfigError("cannot write CSV to '" + req.csv->string() + "'");
    }

    report["results"] = std::move(results);
    report["checks"] = std::move(checks);
    report["ok"] = ok;
    out.report = report.dump(2) + "\n";
    out.exit_code = ok ? 0 : 1;
  } catch (const Error& e) {
    out = {2, "", e.what()};
  } catch (const json::exception& e) {
    out = {2, "", std::string("malformed config: ") + e.what()};
  }
  return out;
}

}  // namespace hfsym::cli

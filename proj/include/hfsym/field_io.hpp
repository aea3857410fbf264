#pragma once

// CSV dump and reload of primal cochains.
//
//   degree,x0,...,x{d-1},axes,component_index,re,im
//
// One row per (cell, component), sorted by cell index then component. Axes
// are written as digits joined by ';' (empty for vertices). Numbers use
// 17 significant digits and are independent of the C locale.

#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "hfsym/calculus.hpp"

namespace hfsym {

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("invalid number '" + std::string(s) + "' in field CSV");
  return v;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("invalid integer '" + std::string(s) + "' in field CSV");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline void write_field_csv(const Cochain& psi, std::ostream& out) {
  if (psi.is_dual()) throw DomainError("only primal cochains can be written as CSV");
  const auto& cx = *psi.complex();
  const int dim = cx.dimension();
  out << "degree";
  for (int a = 0; a < dim; ++a) out << ",x" << a;
  out << ",axes,component_index,re,im\n";
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const Cell c = cx.cell(psi.degree(), i);
    std::string prefix = std::to_string(psi.degree());
    for (int b : c.base) prefix += "," + std::to_string(b);
    prefix += ",";
    for (std::size_t k = 0; k < c.axes.size(); ++k) prefix += (k ? ";" : "") + std::to_string(c.axes[k]);
    for (int comp = 0; comp < psi.fiber().components(); ++comp) {
      const cplx v = psi.values()(static_cast<Eigen::Index>(i), comp);
      out << prefix << ',' << comp << ',' << detail::format_double(v.real()) << ','
          << detail::format_double(v.imag()) << '\n';
    }
  }
}

/// Cells absent from the file stay zero.
inline Cochain read_field_csv(std::istream& in, const ComplexPtr& complex, const FiberSpec& fiber) {
  const int dim = complex->dimension();
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("field CSV is empty");
  const std::size_t ncols = static_cast<std::size_t>(dim) + 5;
  if (detail::split(line, ',').size() != ncols) throw ConfigError("field CSV header does not match the mesh dimension");
  std::optional<Cochain> psi;
  std::vector<bool> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != ncols) throw ConfigError("field CSV row has " + std::to_string(cols.size()) + " columns");
    const int degree = detail::parse_int(cols[0]);
    if (!psi) {
      if (degree < 0 || degree > dim) throw ConfigError("field CSV degree out of range");
      psi.emplace(complex, degree, fiber);
    } else if (degree != psi->degree()) {
      throw ConfigError("field CSV mixes degrees");
    }
    std::vector<int> base(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) base[a] = detail::parse_int(cols[static_cast<std::size_t>(a) + 1]);
    std::vector<int> axes;
    const auto axes_col = cols[static_cast<std::size_t>(dim) + 1];
    if (!axes_col.empty())
      for (auto tok : detail::split(axes_col, ';')) axes.push_back(detail::parse_int(tok));
    const int comp = detail::parse_int(cols[static_cast<std::size_t>(dim) + 2]);
    if (comp < 0 || comp >= fiber.components()) throw ConfigError("field CSV component index out of range");
    auto idx = complex->find(degree, base, axes);
    if (!idx || complex->cell(degree, *idx).base != base)
      throw ConfigError("field CSV references a cell outside the mesh");
    const double re = detail::parse_double(cols[static_cast<std::size_t>(dim) + 3]);
    const double im = detail::parse_double(cols[static_cast<std::size_t>(dim) + 4]);
    if (fiber.is_real() && im != 0.0) throw ConfigError("field CSV has an imaginary part on a real fiber");
    const std::size_t slot = *idx * static_cast<std::size_t>(fiber.components()) + static_cast<std::size_t>(comp);
    if (seen.size() <= slot) seen.resize(psi->size() * static_cast<std::size_t>(fiber.components()), false);
    if (seen[slot]) throw ConfigError("field CSV repeats a cell component");
    seen[slot] = true;
    psi->values()(static_cast<Eigen::Index>(*idx), comp) = cplx(re, im);
  }
  if (!psi) throw ConfigError("field CSV has no rows");
  return std::move(*psi);
}

}  // namespace hfsym

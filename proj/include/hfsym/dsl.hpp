#pragma once

// Composition words of graded actions.
//
//   expr := atom ( "." atom )*        whitespace allowed around "."
//   atom := IDENT "[" ( "0" | "1" ) "]"
//   IDENT := [A-Za-z_][A-Za-z0-9_]*
//
// "g[0] . h[1]" reads g>^0 o h>^1: h is applied first. The bracketed digit is
// the source degree of that atom.

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hfsym/graded.hpp"

namespace hfsym::dsl {

struct Atom {
  std::string name;
  Degree degree;
  /// Byte offset of the identifier.
  std::size_t offset = 0;
};

struct CompositionExpr {
  std::vector<Atom> atoms;

  /// Structural equality; source offsets are ignored.
  bool operator==(const CompositionExpr& o) const {
    if (atoms.size() != o.atoms.size()) return false;
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (atoms[i].name != o.atoms[i].name || !(atoms[i].degree == o.atoms[i].degree)) return false;
    return true;
  }
};

enum class DiagnosticKind { parse_error, unknown_symbol, degree_mismatch };

inline std::string_view to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::parse_error: return "parse_error";
    case DiagnosticKind::unknown_symbol: return "unknown_symbol";
    case DiagnosticKind::degree_mismatch: return "degree_mismatch";
  }
  return "?";
}

struct Diagnostic {
  DiagnosticKind kind;
  /// Start of the offending token; source.size() for unexpected end of input.
  std::size_t offset = 0;
  std::string message;
};

template <class T>
using Result = std::variant<T, Diagnostic>;

template <class T>
bool ok(const Result<T>& r) {
  return std::holds_alternative<T>(r);
}

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Result<CompositionExpr> run() {
    CompositionExpr expr;
    skip_ws();
    while (true) {
      Atom atom;
      if (auto diag = parse_atom(atom)) return *diag;
      expr.atoms.push_back(std::move(atom));
      skip_ws();
      if (pos_ == src_.size()) break;
      if (src_[pos_] != '.') return error("expected '.' or end of input");
      ++pos_;
      skip_ws();
    }
    return expr;
  }

 private:
  std::optional<Diagnostic> parse_atom(Atom& atom) {
    if (pos_ == src_.size()) return error("expected an identifier");
    const char c = src_[pos_];
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) return error("expected an identifier");
    atom.offset = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    atom.name = std::string(src_.substr(atom.offset, pos_ - atom.offset));
    if (pos_ == src_.size() || src_[pos_] != '[') return error("expected '['");
    ++pos_;
    if (pos_ == src_.size() || (src_[pos_] != '0' && src_[pos_] != '1')) return error("degree must be 0 or 1");
    atom.degree = Degree(src_[pos_] - '0');
    ++pos_;
    if (pos_ == src_.size() || src_[pos_] != ']') return error("expected ']'");
    ++pos_;
    return std::nullopt;
  }

  Diagnostic error(std::string msg) const { return {DiagnosticKind::parse_error, pos_, std::move(msg)}; }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Result<CompositionExpr> parse(std::string_view source) { return detail::Parser(source).run(); }

/// Canonical text: atoms joined by " . ".
inline std::string print(const CompositionExpr& expr) {
  std::string out;
  for (std::size_t i = 0; i < expr.atoms.size(); ++i) {
    if (i) out += " . ";
    out += expr.atoms[i].name + "[" + std::to_string(expr.atoms[i].degree.parity()) + "]";
  }
  return out;
}

using SymbolTable = std::map<std::string, GroupElement, std::less<>>;

/// Primitive morphisms in textual order (the last one is applied first).
struct CheckedChain {
  std::vector<GradedMorphism> morphisms;
  Degree source;
  Degree target;
};

inline Result<CheckedChain> typecheck(const CompositionExpr& expr, const SymbolTable& table) {
  if (expr.atoms.empty()) return Diagnostic{DiagnosticKind::parse_error, 0, "empty composition"};
  std::vector<GradedMorphism> ms;
  ms.reserve(expr.atoms.size());
  for (const auto& atom : expr.atoms) {
    auto it = table.find(atom.name);
    if (it == table.end())
      return Diagnostic{DiagnosticKind::unknown_symbol, atom.offset, "unknown group element '" + atom.name + "'"};
    ms.push_back(GradedMorphism::primitive(it->second, atom.degree));
  }
  // Reported at the right-hand atom of the failing pair: its output is what
  // the next atom cannot accept.
  for (std::size_t i = ms.size() - 1; i-- > 0;) {
    const Degree incoming = ms[i + 1].target();
    if (!(ms[i].source() == incoming)) {
      const auto& a = expr.atoms[i];
      const auto& b = expr.atoms[i + 1];
      return Diagnostic{DiagnosticKind::degree_mismatch, b.offset,
                        "'" + b.name + "[" + std::to_string(b.degree.parity()) + "]' maps into E" +
                            std::to_string(incoming.parity()) + " but '" + a.name + "[" +
                            std::to_string(a.degree.parity()) + "]' expects E" + std::to_string(ms[i].source().parity())};
    }
  }
  const Degree source = ms.back().source();
  const Degree target = ms.front().target();
  return CheckedChain{std::move(ms), source, target};
}

struct Evaluation {
  GradedMorphism morphism;
  Eigen::MatrixXcd matrix;
};

inline Evaluation evaluate(const CheckedChain& chain, const GroupoidRep& rep) {
  GradedMorphism acc = chain.morphisms.back();
  for (std::size_t i = chain.morphisms.size() - 1; i-- > 0;) acc = compose(chain.morphisms[i], acc);
  return {acc, represent(acc, rep).matrix};
}

}  // namespace hfsym::dsl

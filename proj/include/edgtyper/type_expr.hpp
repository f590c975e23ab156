#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace edgtyper {

// Syntax tree of a PEP 484 type expression as written.
struct TypeExpr {
  enum class Kind {
    Name,       // dotted name, possibly subscripted (`args` non-empty or `subscripted`)
    None,       // `None`
    List,       // bracketed parameter list, as in Callable[[int], str]
    Ellipsis,   // `...`
    Literal,    // string / number / bool literal kept verbatim
    BinaryOr,   // `A | B`, flattened
  };
  Kind kind = Kind::Name;
  std::string name;  // Name: dotted name; Literal: token text
  bool subscripted = false;
  std::vector<TypeExpr> args;
};

// Throws Error(InvalidTypeExpression).
TypeExpr parse_type_expr(std::string_view text);
bool is_valid_type_expr(std::string_view text);

// Source form, normalized spacing.
std::string to_source(const TypeExpr& e);

// Dotted names referenced anywhere in the expression (forward references
// included, Literal arguments excluded).
std::set<std::string> referenced_names(const TypeExpr& e);

// Canonical form used for type equality.
struct NormalizedType {
  std::string text;  // canonical text; normalize_type(text) reproduces it
  std::string head;  // origin name (`list`, `Union`, `int`, `None`, ...)
  std::vector<NormalizedType> args;
  bool is_any = false;
  bool is_union = false;

  friend bool operator==(const NormalizedType& a, const NormalizedType& b) {
    return a.text == b.text;
  }
};

// Throws Error(InvalidTypeExpression).
NormalizedType normalize_type(std::string_view text);
NormalizedType normalize_type(const TypeExpr& e);

}  // namespace edgtyper

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgtyper/python/lexer.hpp"

namespace edgtyper::python {

// Half-open token index range.
struct TokRange {
  std::size_t first = 0;
  std::size_t last = 0;
  bool empty() const { return first >= last; }
  std::size_t size() const { return empty() ? 0 : last - first; }
};

enum class StmtKind {
  Simple,
  Def,
  Class,
  If,
  Elif,
  Else,
  For,
  While,
  Try,
  Except,
  Finally,
  With,
  Match,
  Case,
};

struct Stmt {
  StmtKind kind = StmtKind::Simple;
  // Simple statements: the statement's tokens. Compound: header tokens up to
  // (excluding) the suite colon.
  TokRange header;
  std::vector<TokRange> decorators;  // each excludes the leading '@'
  std::vector<Stmt> body;
  bool is_async = false;
};

// A parsed file. Owns its source so token offsets stay valid.
class Module {
 public:
  explicit Module(std::string source);

  const std::string& source() const { return source_; }
  const std::vector<Token>& tokens() const { return lex_.tokens; }
  const std::vector<Comment>& comments() const { return lex_.comments; }
  const std::vector<Stmt>& body() const { return body_; }

  const Token& tok(std::size_t i) const { return lex_.tokens[i]; }
  std::string_view text(std::size_t i) const;
  std::string_view text(TokRange r) const;  // source slice covering the range
  bool is_op(std::size_t i, std::string_view op) const;
  bool is_name(std::size_t i, std::string_view name) const;
  bool is_name(std::size_t i) const;

  // First/last token of a statement including decorators and suite.
  std::size_t first_token(const Stmt& s) const;
  std::size_t last_token(const Stmt& s) const;  // inclusive

 private:
  std::string source_;
  LexResult lex_;
  std::vector<Stmt> body_;
};

// ---- helpers over token ranges -------------------------------------------

// Splits a range on top-level occurrences of `op` (bracket depth 0).
std::vector<TokRange> split_top_level(const Module& m, TokRange r, std::string_view op);
// Index of the first top-level `op` within r, or r.last.
std::size_t find_top_level(const Module& m, TokRange r, std::string_view op);
// Index of the matching closing bracket for the opener at `open`.
std::size_t matching_bracket(const Module& m, std::size_t open);

struct Param {
  enum class Kind { Positional, VarArgs, KwOnly, KwArgs };
  std::string name;
  Kind kind = Kind::Positional;
  std::size_t name_tok = 0;
  std::optional<TokRange> annotation;  // tokens after ':'
  std::optional<TokRange> default_value;
};

struct DefHeader {
  std::string name;
  std::size_t name_tok = 0;
  std::size_t lparen = 0;
  std::size_t rparen = 0;
  std::vector<Param> params;
  std::optional<TokRange> returns;  // tokens after '->'
};

DefHeader parse_def_header(const Module& m, const Stmt& s);

struct ClassHeader {
  std::string name;
  std::size_t name_tok = 0;
  std::vector<TokRange> bases;     // positional arguments
  std::vector<TokRange> keywords;  // `metaclass=...` values
};

ClassHeader parse_class_header(const Module& m, const Stmt& s);

struct Assignment {
  std::vector<TokRange> targets;  // one per '=' chain element
  std::optional<TokRange> annotation;
  std::optional<TokRange> value;
  bool augmented = false;
};

// Recognizes `t = v`, `t1 = t2 = v`, `t: ann [= v]`, `t op= v`.
std::optional<Assignment> parse_assignment(const Module& m, const Stmt& s);

// If `r` is exactly NAME(.NAME)*, returns the dotted parts.
std::optional<std::vector<std::string>> as_dotted_name(const Module& m, TokRange r);

// True for a statement consisting of a lone string literal (docstring form).
bool is_string_statement(const Module& m, const Stmt& s);

}  // namespace edgtyper::python

#include "edgtyper/type_expr.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "edgtyper/error.hpp"
#include "edgtyper/python/lexer.hpp"

namespace edgtyper {

namespace {

using python::Token;
using python::TokenKind;

[[noreturn]] void invalid(std::string_view text, const std::string& why) {
  throw Error(ErrorKind::InvalidTypeExpression,
              "invalid type expression '" + std::string(text) + "': " + why);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' ||
                        s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::string last_component(const std::string& dotted) {
  auto dot = dotted.rfind('.');
  return dot == std::string::npos ? dotted : dotted.substr(dot + 1);
}

// Strips prefix and quotes from a (non-f, non-bytes) string literal token.
std::optional<std::string_view> string_body(std::string_view tok) {
  std::size_t q = tok.find_first_of("\"'");
  if (q == std::string_view::npos) return std::nullopt;
  for (std::size_t i = 0; i < q; ++i) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(tok[i])));
    if (c == 'f' || c == 'b') return std::nullopt;
  }
  std::string_view rest = tok.substr(q);
  std::size_t n = (rest.size() >= 6 && rest.substr(0, 3) == std::string(3, rest[0])) ? 3 : 1;
  if (rest.size() < 2 * n) return std::nullopt;
  return rest.substr(n, rest.size() - 2 * n);
}

class TypeParser {
 public:
  explicit TypeParser(std::string_view text) : text_(text) {
    try {
      toks_ = python::tokenize(text_).tokens;
    } catch (const python::SyntaxError& e) {
      invalid(text_, e.message);
    }
    while (!toks_.empty() && (toks_.back().kind == TokenKind::End ||
                              toks_.back().kind == TokenKind::Newline))
      toks_.pop_back();
    for (const Token& t : toks_)
      if (t.kind == TokenKind::Indent || t.kind == TokenKind::Dedent ||
          t.kind == TokenKind::Newline)
        invalid(text_, "unexpected line structure");
  }

  TypeExpr parse() {
    if (toks_.empty()) invalid(text_, "empty");
    TypeExpr e = parse_union();
    if (pos_ != toks_.size()) invalid(text_, "trailing tokens");
    return e;
  }

 private:
  std::string_view tok_text(std::size_t i) const {
    return text_.substr(toks_[i].begin, toks_[i].end - toks_[i].begin);
  }
  bool at_op(std::string_view op) const {
    return pos_ < toks_.size() && toks_[pos_].kind == TokenKind::Op && tok_text(pos_) == op;
  }
  void expect_op(std::string_view op) {
    if (!at_op(op)) invalid(text_, "expected '" + std::string(op) + "'");
    ++pos_;
  }

  TypeExpr parse_union() {
    TypeExpr first = parse_primary();
    if (!at_op("|")) return first;
    TypeExpr u;
    u.kind = TypeExpr::Kind::BinaryOr;
    u.args.push_back(std::move(first));
    while (at_op("|")) {
      ++pos_;
      u.args.push_back(parse_primary());
    }
    return u;
  }

  std::vector<TypeExpr> parse_args(std::string_view close, bool literal_args) {
    std::vector<TypeExpr> args;
    while (!at_op(close)) {
      args.push_back(literal_args ? parse_literal() : parse_union());
      if (at_op(",")) {
        ++pos_;
      } else if (!at_op(close)) {
        invalid(text_, "expected ',' or '" + std::string(close) + "'");
      }
    }
    ++pos_;
    return args;
  }

  TypeExpr parse_literal() {
    if (pos_ >= toks_.size()) invalid(text_, "unexpected end");
    TypeExpr e;
    e.kind = TypeExpr::Kind::Literal;
    if (at_op("-")) {
      ++pos_;
      if (pos_ >= toks_.size() || toks_[pos_].kind != TokenKind::Number)
        invalid(text_, "bad literal");
      e.name = "-" + std::string(tok_text(pos_++));
      return e;
    }
    const Token& t = toks_[pos_];
    if (t.kind == TokenKind::String || t.kind == TokenKind::Number) {
      e.name = std::string(tok_text(pos_++));
      return e;
    }
    if (t.kind == TokenKind::Name) {
      // Enum members (`Color.RED`) and True/False/None.
      std::string name(tok_text(pos_++));
      while (at_op(".") && pos_ + 1 < toks_.size()) {
        ++pos_;
        name += "." + std::string(tok_text(pos_++));
      }
      e.name = name;
      return e;
    }
    invalid(text_, "bad literal");
  }

  TypeExpr parse_primary() {
    if (pos_ >= toks_.size()) invalid(text_, "unexpected end");
    const Token& t = toks_[pos_];
    TypeExpr e;
    switch (t.kind) {
      case TokenKind::Name: {
        std::string word(tok_text(pos_));
        if (word == "None") {
          ++pos_;
          e.kind = TypeExpr::Kind::None;
          return e;
        }
        if (word == "True" || word == "False") invalid(text_, "bare literal");
        if (python::is_keyword(word)) invalid(text_, "keyword '" + word + "'");
        ++pos_;
        e.name = word;
        while (at_op(".")) {
          ++pos_;
          if (pos_ >= toks_.size() || toks_[pos_].kind != TokenKind::Name ||
              python::is_keyword(tok_text(pos_)))
            invalid(text_, "bad dotted name");
          e.name += "." + std::string(tok_text(pos_++));
        }
        if (at_op("[")) {
          ++pos_;
          e.subscripted = true;
          e.args = parse_args("]", last_component(e.name) == "Literal");
          if (e.args.empty()) invalid(text_, "empty subscript");
        }
        return e;
      }
      case TokenKind::String: {
        auto body = string_body(tok_text(pos_));
        if (!body) invalid(text_, "unsupported string form");
        ++pos_;
        return TypeParser(trim(*body)).parse();
      }
      case TokenKind::Op: {
        if (at_op("[")) {
          ++pos_;
          e.kind = TypeExpr::Kind::List;
          e.args = parse_args("]", false);
          return e;
        }
        if (at_op("...")) {
          ++pos_;
          e.kind = TypeExpr::Kind::Ellipsis;
          return e;
        }
        if (at_op("(")) {
          ++pos_;
          expect_op(")");
          e.kind = TypeExpr::Kind::Literal;
          e.name = "()";
          return e;
        }
        break;
      }
      default:
        break;
    }
    invalid(text_, "unexpected token '" + std::string(tok_text(pos_)) + "'");
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void collect_names(const TypeExpr& e, std::set<std::string>& out) {
  if (e.kind == TypeExpr::Kind::Name) {
    out.insert(e.name);
    if (last_component(e.name) == "Literal") return;
  }
  for (const TypeExpr& a : e.args) collect_names(a, out);
}

const std::map<std::string, std::string>& alias_table() {
  static const std::map<std::string, std::string> table = {
      {"List", "list"},       {"Dict", "dict"},   {"Set", "set"},
      {"FrozenSet", "frozenset"}, {"Tuple", "tuple"}, {"Type", "type"},
      {"DefaultDict", "defaultdict"}, {"Deque", "deque"}, {"Text", "str"},
      {"NoneType", "None"},
  };
  return table;
}

NormalizedType make_union(std::vector<NormalizedType> members) {
  std::vector<NormalizedType> flat;
  for (NormalizedType& m : members) {
    if (m.is_union) {
      for (NormalizedType& a : m.args) flat.push_back(std::move(a));
    } else {
      flat.push_back(std::move(m));
    }
  }
  std::sort(flat.begin(), flat.end(),
            [](const NormalizedType& a, const NormalizedType& b) { return a.text < b.text; });
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  if (flat.size() == 1) return std::move(flat.front());
  NormalizedType u;
  u.head = "Union";
  u.is_union = true;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i) u.text += " | ";
    u.text += flat[i].text;
  }
  u.args = std::move(flat);
  return u;
}

std::string join_args(const std::vector<NormalizedType>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].text;
  }
  return out;
}

}  // namespace

TypeExpr parse_type_expr(std::string_view text) {
  text = trim(text);
  if (text.empty()) invalid(text, "empty");
  return TypeParser(text).parse();
}

bool is_valid_type_expr(std::string_view text) {
  try {
    parse_type_expr(text);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string to_source(const TypeExpr& e) {
  auto join = [](const std::vector<TypeExpr>& args, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += sep;
      out += to_source(args[i]);
    }
    return out;
  };
  switch (e.kind) {
    case TypeExpr::Kind::Name:
      return e.subscripted ? e.name + "[" + join(e.args, ", ") + "]" : e.name;
    case TypeExpr::Kind::None:
      return "None";
    case TypeExpr::Kind::List:
      return "[" + join(e.args, ", ") + "]";
    case TypeExpr::Kind::Ellipsis:
      return "...";
    case TypeExpr::Kind::Literal:
      return e.name;
    case TypeExpr::Kind::BinaryOr:
      return join(e.args, " | ");
  }
  return {};
}

std::set<std::string> referenced_names(const TypeExpr& e) {
  std::set<std::string> out;
  collect_names(e, out);
  return out;
}

NormalizedType normalize_type(const TypeExpr& e) {
  NormalizedType n;
  switch (e.kind) {
    case TypeExpr::Kind::None:
      n.text = n.head = "None";
      return n;
    case TypeExpr::Kind::Ellipsis:
      n.text = n.head = "...";
      return n;
    case TypeExpr::Kind::Literal:
      n.text = n.head = e.name;
      return n;
    case TypeExpr::Kind::List: {
      for (const TypeExpr& a : e.args) n.args.push_back(normalize_type(a));
      n.head = "[]";
      n.text = "[" + join_args(n.args) + "]";
      return n;
    }
    case TypeExpr::Kind::BinaryOr: {
      std::vector<NormalizedType> members;
      for (const TypeExpr& a : e.args) members.push_back(normalize_type(a));
      return make_union(std::move(members));
    }
    case TypeExpr::Kind::Name:
      break;
  }
  std::string head = last_component(e.name);
  if (auto it = alias_table().find(head); it != alias_table().end()) head = it->second;
  if (head == "Optional" && e.args.size() == 1) {
    NormalizedType none;
    none.text = none.head = "None";
    return make_union({normalize_type(e.args[0]), none});
  }
  if (head == "Union" && e.subscripted) {
    std::vector<NormalizedType> members;
    for (const TypeExpr& a : e.args) members.push_back(normalize_type(a));
    return make_union(std::move(members));
  }
  n.head = head;
  if (head == "None") {
    n.text = "None";
    return n;
  }
  for (const TypeExpr& a : e.args) n.args.push_back(normalize_type(a));
  n.text = e.subscripted ? head + "[" + join_args(n.args) + "]" : head;
  n.is_any = head == "Any";
  return n;
}

NormalizedType normalize_type(std::string_view text) {
  return normalize_type(parse_type_expr(text));
}

}  // namespace edgtyper

#include "edgtyper/python/syntax.hpp"

#include <array>

namespace edgtyper::python {

namespace {

bool is_open(std::string_view t) { return t == "(" || t == "[" || t == "{"; }
bool is_close(std::string_view t) { return t == ")" || t == "]" || t == "}"; }

constexpr std::array<std::string_view, 13> kAugmentedOps = {
    "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="};

class Parser {
 public:
  explicit Parser(const Module& m) : m_(m) {}

  std::vector<Stmt> parse_file() {
    std::size_t i = 0;
    std::vector<Stmt> out;
    while (kind(i) != TokenKind::End) {
      if (kind(i) == TokenKind::Newline) {
        ++i;
        continue;
      }
      if (kind(i) == TokenKind::Indent || kind(i) == TokenKind::Dedent)
        fail(i, "unexpected indent");
      parse_statement(i, out);
    }
    return out;
  }

 private:
  TokenKind kind(std::size_t i) const { return m_.tok(i).kind; }

  [[noreturn]] void fail(std::size_t i, const std::string& message) const {
    throw SyntaxError{m_.tok(i).line, message};
  }

  std::vector<Stmt> parse_block(std::size_t& i) {
    std::vector<Stmt> out;
    while (kind(i) != TokenKind::Dedent && kind(i) != TokenKind::End) {
      if (kind(i) == TokenKind::Newline) {
        ++i;
        continue;
      }
      if (kind(i) == TokenKind::Indent) fail(i, "unexpected indent");
      parse_statement(i, out);
    }
    if (kind(i) == TokenKind::Dedent) ++i;
    return out;
  }

  std::size_t line_end(std::size_t i) const {
    while (kind(i) != TokenKind::Newline && kind(i) != TokenKind::End) ++i;
    return i;
  }

  // Top-level ':' ending a compound header, or npos.
  std::size_t header_colon(std::size_t i) const {
    int depth = 0;
    int lambdas = 0;
    for (; kind(i) != TokenKind::Newline && kind(i) != TokenKind::End; ++i) {
      if (kind(i) == TokenKind::Op) {
        std::string_view t = m_.text(i);
        if (is_open(t)) ++depth;
        if (is_close(t)) --depth;
        if (depth == 0 && t == ":") {
          if (lambdas > 0) {
            --lambdas;
          } else {
            return i;
          }
        }
      } else if (depth == 0 && m_.is_name(i, "lambda")) {
        ++lambdas;
      }
    }
    return std::string_view::npos;
  }

  std::optional<StmtKind> compound_kind(std::size_t i, bool& is_async) const {
    is_async = false;
    if (m_.is_name(i, "async") &&
        (m_.is_name(i + 1, "def") || m_.is_name(i + 1, "for") || m_.is_name(i + 1, "with"))) {
      is_async = true;
      ++i;
    }
    if (kind(i) != TokenKind::Name) return std::nullopt;
    std::string_view w = m_.text(i);
    if (w == "def") return StmtKind::Def;
    if (w == "class") return StmtKind::Class;
    if (w == "if") return StmtKind::If;
    if (w == "elif") return StmtKind::Elif;
    if (w == "else") return StmtKind::Else;
    if (w == "for") return StmtKind::For;
    if (w == "while") return StmtKind::While;
    if (w == "try") return StmtKind::Try;
    if (w == "except") return StmtKind::Except;
    if (w == "finally") return StmtKind::Finally;
    if (w == "with") return StmtKind::With;
    if (w == "match" || w == "case") {
      // Soft keywords: only a header when a suite follows the colon.
      std::size_t colon = header_colon(i);
      if (colon == std::string_view::npos || colon == i + 1) return std::nullopt;
      if (kind(colon + 1) == TokenKind::Newline && kind(colon + 2) == TokenKind::Indent)
        return w == "match" ? StmtKind::Match : StmtKind::Case;
    }
    return std::nullopt;
  }

  void parse_simple_line(std::size_t& i, std::vector<Stmt>& out) {
    std::size_t end = line_end(i);
    std::size_t start = i;
    for (std::size_t j = i; j <= end; ++j) {
      if (j == end || m_.is_op(j, ";")) {
        if (j > start) {
          Stmt s;
          s.kind = StmtKind::Simple;
          s.header = {start, j};
          out.push_back(std::move(s));
        }
        start = j + 1;
      }
    }
    i = kind(end) == TokenKind::Newline ? end + 1 : end;
  }

  void parse_statement(std::size_t& i, std::vector<Stmt>& out) {
    std::vector<TokRange> decorators;
    while (m_.is_op(i, "@")) {
      std::size_t end = line_end(i);
      decorators.push_back({i + 1, end});
      i = end + 1;
    }
    bool is_async = false;
    std::optional<StmtKind> k = compound_kind(i, is_async);
    if (!k) {
      if (!decorators.empty()) fail(i, "decorator must precede def or class");
      parse_simple_line(i, out);
      return;
    }
    if (!decorators.empty() && *k != StmtKind::Def && *k != StmtKind::Class)
      fail(i, "decorator must precede def or class");
    std::size_t colon = header_colon(i);
    if (colon == std::string_view::npos) fail(i, "expected ':'");
    Stmt s;
    s.kind = *k;
    s.is_async = is_async;
    s.header = {i, colon};
    s.decorators = std::move(decorators);
    i = colon + 1;
    if (kind(i) == TokenKind::Newline) {
      if (kind(i + 1) != TokenKind::Indent) fail(i + 1, "expected an indented block");
      i += 2;
      s.body = parse_block(i);
    } else {
      parse_simple_line(i, s.body);
    }
    if (s.body.empty()) fail(colon, "expected an indented block");
    out.push_back(std::move(s));
  }

  const Module& m_;
};

}  // namespace

Module::Module(std::string source) : source_(std::move(source)) {
  lex_ = tokenize(source_);
  body_ = Parser(*this).parse_file();
}

std::string_view Module::text(std::size_t i) const {
  const Token& t = lex_.tokens[i];
  return std::string_view(source_).substr(t.begin, t.end - t.begin);
}

std::string_view Module::text(TokRange r) const {
  if (r.empty()) return {};
  std::size_t b = lex_.tokens[r.first].begin;
  std::size_t e = lex_.tokens[r.last - 1].end;
  return std::string_view(source_).substr(b, e - b);
}

bool Module::is_op(std::size_t i, std::string_view op) const {
  return i < lex_.tokens.size() && lex_.tokens[i].kind == TokenKind::Op && text(i) == op;
}

bool Module::is_name(std::size_t i, std::string_view name) const {
  return i < lex_.tokens.size() && lex_.tokens[i].kind == TokenKind::Name && text(i) == name;
}

bool Module::is_name(std::size_t i) const {
  return i < lex_.tokens.size() && lex_.tokens[i].kind == TokenKind::Name &&
         !is_keyword(text(i));
}

std::size_t Module::first_token(const Stmt& s) const {
  if (!s.decorators.empty()) return s.decorators.front().first - 1;
  return s.header.first;
}

std::size_t Module::last_token(const Stmt& s) const {
  if (s.body.empty()) return s.header.last - 1;
  return last_token(s.body.back());
}

std::vector<TokRange> split_top_level(const Module& m, TokRange r, std::string_view op) {
  std::vector<TokRange> parts;
  int depth = 0;
  std::size_t start = r.first;
  for (std::size_t i = r.first; i < r.last; ++i) {
    if (m.tok(i).kind != TokenKind::Op) continue;
    std::string_view t = m.text(i);
    if (is_open(t)) ++depth;
    else if (is_close(t)) --depth;
    else if (depth == 0 && t == op) {
      parts.push_back({start, i});
      start = i + 1;
    }
  }
  parts.push_back({start, r.last});
  return parts;
}

std::size_t find_top_level(const Module& m, TokRange r, std::string_view op) {
  int depth = 0;
  for (std::size_t i = r.first; i < r.last; ++i) {
    if (m.tok(i).kind != TokenKind::Op) continue;
    std::string_view t = m.text(i);
    if (is_open(t)) ++depth;
    else if (is_close(t)) --depth;
    else if (depth == 0 && t == op) return i;
  }
  return r.last;
}

std::size_t matching_bracket(const Module& m, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < m.tokens().size(); ++i) {
    if (m.tok(i).kind != TokenKind::Op) continue;
    std::string_view t = m.text(i);
    if (is_open(t)) ++depth;
    if (is_close(t) && --depth == 0) return i;
  }
  throw SyntaxError{m.tok(open).line, "unmatched bracket"};
}

DefHeader parse_def_header(const Module& m, const Stmt& s) {
  DefHeader h;
  std::size_t i = s.header.first;
  if (s.is_async) ++i;
  h.name_tok = i + 1;
  h.name = std::string(m.text(h.name_tok));
  h.lparen = h.name_tok + 1;
  if (!m.is_op(h.lparen, "(")) throw SyntaxError{m.tok(i).line, "expected '(' after def name"};
  h.rparen = matching_bracket(m, h.lparen);
  bool kw_only = false;
  for (TokRange part : split_top_level(m, {h.lparen + 1, h.rparen}, ",")) {
    if (part.empty()) continue;
    std::size_t j = part.first;
    Param p;
    if (m.is_op(j, "/")) continue;
    if (m.is_op(j, "*")) {
      if (part.size() == 1) {
        kw_only = true;
        continue;
      }
      p.kind = Param::Kind::VarArgs;
      kw_only = true;
      ++j;
    } else if (m.is_op(j, "**")) {
      p.kind = Param::Kind::KwArgs;
      ++j;
    } else if (kw_only) {
      p.kind = Param::Kind::KwOnly;
    }
    if (m.tok(j).kind != TokenKind::Name) throw SyntaxError{m.tok(j).line, "bad parameter"};
    p.name_tok = j;
    p.name = std::string(m.text(j));
    std::size_t eq = find_top_level(m, {j + 1, part.last}, "=");
    if (m.is_op(j + 1, ":")) p.annotation = TokRange{j + 2, eq};
    if (eq < part.last) p.default_value = TokRange{eq + 1, part.last};
    h.params.push_back(std::move(p));
  }
  if (m.is_op(h.rparen + 1, "->")) h.returns = TokRange{h.rparen + 2, s.header.last};
  return h;
}

ClassHeader parse_class_header(const Module& m, const Stmt& s) {
  ClassHeader h;
  h.name_tok = s.header.first + 1;
  h.name = std::string(m.text(h.name_tok));
  std::size_t open = h.name_tok + 1;
  if (!m.is_op(open, "(")) return h;
  std::size_t close = matching_bracket(m, open);
  for (TokRange part : split_top_level(m, {open + 1, close}, ",")) {
    if (part.empty()) continue;
    if (m.is_op(part.first, "*") || m.is_op(part.first, "**")) continue;
    if (m.tok(part.first).kind == TokenKind::Name && m.is_op(part.first + 1, "=")) {
      h.keywords.push_back({part.first + 2, part.last});
    } else {
      h.bases.push_back(part);
    }
  }
  return h;
}

std::optional<Assignment> parse_assignment(const Module& m, const Stmt& s) {
  if (s.kind != StmtKind::Simple || s.header.empty()) return std::nullopt;
  TokRange r = s.header;
  const Token& first = m.tok(r.first);
  if (first.kind == TokenKind::Name && is_keyword(m.text(r.first))) return std::nullopt;
  int depth = 0;
  for (std::size_t i = r.first; i < r.last; ++i) {
    if (m.tok(i).kind != TokenKind::Op) continue;
    std::string_view t = m.text(i);
    if (is_open(t)) {
      ++depth;
      continue;
    }
    if (is_close(t)) {
      --depth;
      continue;
    }
    if (depth != 0) continue;
    if (t == ":") {
      if (i == r.first) return std::nullopt;
      Assignment a;
      a.targets.push_back({r.first, i});
      std::size_t eq = find_top_level(m, {i + 1, r.last}, "=");
      a.annotation = TokRange{i + 1, eq};
      if (eq < r.last) a.value = TokRange{eq + 1, r.last};
      if (a.annotation->empty()) return std::nullopt;
      return a;
    }
    if (t == "=") {
      Assignment a;
      std::vector<TokRange> parts = split_top_level(m, r, "=");
      for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        if (parts[k].empty()) return std::nullopt;
        a.targets.push_back(parts[k]);
      }
      a.value = parts.back();
      return a;
    }
    for (std::string_view op : kAugmentedOps) {
      if (t == op) {
        Assignment a;
        a.targets.push_back({r.first, i});
        a.value = TokRange{i + 1, r.last};
        a.augmented = true;
        return a;
      }
    }
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> as_dotted_name(const Module& m, TokRange r) {
  if (r.empty() || r.size() % 2 == 0) return std::nullopt;
  std::vector<std::string> parts;
  for (std::size_t i = r.first; i < r.last; ++i) {
    bool name_slot = (i - r.first) % 2 == 0;
    if (name_slot) {
      if (!m.is_name(i)) return std::nullopt;
      parts.emplace_back(m.text(i));
    } else if (!m.is_op(i, ".")) {
      return std::nullopt;
    }
  }
  return parts;
}

bool is_string_statement(const Module& m, const Stmt& s) {
  if (s.kind != StmtKind::Simple || s.header.empty()) return false;
  for (std::size_t i = s.header.first; i < s.header.last; ++i)
    if (m.tok(i).kind != TokenKind::String) return false;
  return true;
}

}  // namespace edgtyper::python

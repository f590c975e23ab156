#include "edgtyper/python/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace edgtyper::python {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

constexpr std::array<std::string_view, 24> kMultiCharOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@="};

bool is_ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool is_ident_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_string_prefix(std::string_view word) {
  if (word.size() > 2) return false;
  std::string lower;
  for (char c : word) lower.push_back(static_cast<char>(std::tolower(c)));
  return lower == "r" || lower == "u" || lower == "b" || lower == "f" ||
         lower == "br" || lower == "rb" || lower == "fr" || lower == "rf";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  LexResult run() {
    indents_.push_back(0);
    while (true) {
      if (at_bol_ && depth_ == 0) {
        if (!handle_line_start()) break;
        continue;
      }
      if (pos_ >= src_.size()) break;
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else if (c == '\\' && continuation_at(pos_)) {
        pos_ += (src_[pos_ + 1] == '\r' && pos_ + 2 < src_.size() &&
                 src_[pos_ + 2] == '\n')
                    ? 3
                    : 2;
        new_line();
      } else if (c == '\n' || c == '\r') {
        if (depth_ == 0 && line_has_tokens_) {
          emit(TokenKind::Newline, pos_, pos_);
          line_has_tokens_ = false;
        }
        consume_newline();
        if (depth_ == 0) at_bol_ = true;
      } else if (is_ident_start(static_cast<unsigned char>(c))) {
        lex_name_or_string();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
      } else if (c == '"' || c == '\'') {
        lex_string(pos_, pos_);
      } else {
        lex_op();
      }
    }
    if (depth_ > 0) fail(line_, "unexpected EOF inside brackets");
    if (line_has_tokens_) emit(TokenKind::Newline, pos_, pos_);
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::Dedent, pos_, pos_);
    }
    emit(TokenKind::End, pos_, pos_);
    return std::move(out_);
  }

 private:
  [[noreturn]] static void fail(int line, std::string message) {
    throw SyntaxError{line, std::move(message)};
  }

  bool continuation_at(std::size_t p) const {
    return p + 1 < src_.size() && (src_[p + 1] == '\n' || src_[p + 1] == '\r');
  }

  void new_line() {
    ++line_;
    line_start_ = pos_;
  }

  void consume_newline() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n')
      ++pos_;
    ++pos_;
    new_line();
  }

  void skip_comment() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
    out_.comments.push_back({start, pos_, line_});
  }

  // Returns false at EOF.
  bool handle_line_start() {
    int col = 0;
    std::size_t p = pos_;
    while (p < src_.size()) {
      char c = src_[p];
      if (c == ' ') {
        ++col;
      } else if (c == '\t') {
        col = (col / 8 + 1) * 8;
      } else if (c == '\f') {
        col = 0;
      } else {
        break;
      }
      ++p;
    }
    if (p >= src_.size()) {
      pos_ = p;
      return false;
    }
    char c = src_[p];
    if (c == '#' || c == '\n' || c == '\r') {
      pos_ = p;
      if (c == '#') skip_comment();
      if (pos_ < src_.size()) consume_newline();
      return true;
    }
    pos_ = p;
    at_bol_ = false;
    if (col > indents_.back()) {
      indents_.push_back(col);
      emit(TokenKind::Indent, pos_, pos_);
    } else {
      while (col < indents_.back()) {
        indents_.pop_back();
        emit(TokenKind::Dedent, pos_, pos_);
      }
      if (col != indents_.back()) fail(line_, "unindent does not match any outer level");
    }
    return true;
  }

  void emit(TokenKind kind, std::size_t begin, std::size_t end, int line, int col) {
    Token t;
    t.kind = kind;
    t.begin = begin;
    t.end = end;
    t.line = line;
    t.col = col;
    t.end_line = line_;
    t.end_col = static_cast<int>(end - line_start_);
    out_.tokens.push_back(t);
    if (kind != TokenKind::Newline && kind != TokenKind::Indent &&
        kind != TokenKind::Dedent && kind != TokenKind::End)
      line_has_tokens_ = true;
  }

  void emit(TokenKind kind, std::size_t begin, std::size_t end) {
    emit(kind, begin, end, line_, static_cast<int>(begin - line_start_));
  }

  void lex_name_or_string() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    std::string_view word = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
        is_string_prefix(word)) {
      lex_string(start, pos_);
      return;
    }
    emit(TokenKind::Name, start, pos_);
  }

  void lex_number() {
    std::size_t start = pos_;
    bool hex = src_.substr(pos_, 2) == "0x" || src_.substr(pos_, 2) == "0X";
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        ++pos_;
      } else if ((c == '+' || c == '-') && !hex && pos_ > start &&
                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E')) {
        ++pos_;
      } else {
        break;
      }
    }
    emit(TokenKind::Number, start, pos_);
  }

  // `start` is the prefix start, `quote_pos` the first quote character.
  void lex_string(std::size_t start, std::size_t quote_pos) {
    int start_line = line_;
    int start_col = static_cast<int>(start - line_start_);
    char q = src_[quote_pos];
    bool triple = src_.substr(quote_pos, 3) == std::string(3, q);
    pos_ = quote_pos + (triple ? 3 : 1);
    while (true) {
      if (pos_ >= src_.size()) fail(start_line, "unterminated string literal");
      char c = src_[pos_];
      if (c == '\\') {
        // Raw strings too: a backslash keeps the next quote from closing.
        if (pos_ + 1 < src_.size() && (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
          ++pos_;
          consume_newline();
        } else {
          pos_ += 2;
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) fail(start_line, "unterminated string literal");
        consume_newline();
        continue;
      }
      if (c == q) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (src_.substr(pos_, 3) == std::string(3, q)) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    emit(TokenKind::String, start, pos_, start_line, start_col);
  }

  void lex_op() {
    std::size_t start = pos_;
    for (std::string_view op : kMultiCharOps) {
      if (src_.substr(pos_, op.size()) == op) {
        pos_ += op.size();
        emit(TokenKind::Op, start, pos_);
        return;
      }
    }
    char c = src_[pos_];
    static constexpr std::string_view kSingle = "()[]{},:.;@=+-*/%&|^~<>!";
    if (kSingle.find(c) == std::string_view::npos)
      fail(line_, std::string("invalid character '") + c + "'");
    if (c == '(' || c == '[' || c == '{') {
      ++depth_;
    } else if (c == ')' || c == ']' || c == '}') {
      if (depth_ == 0) fail(line_, "unmatched closing bracket");
      --depth_;
    }
    ++pos_;
    emit(TokenKind::Op, start, pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  int line_ = 1;
  int depth_ = 0;
  bool at_bol_ = true;
  bool line_has_tokens_ = false;
  std::vector<int> indents_;
  LexResult out_;
};

}  // namespace

LexResult tokenize(std::string_view source) { return Lexer(source).run(); }

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

}  // namespace edgtyper::python

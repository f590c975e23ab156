#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace edgtyper::python {

enum class TokenKind { Name, Number, String, Op, Newline, Indent, Dedent, End };

// Offsets are byte offsets into the tokenized source. Lines are 1-based,
// columns 0-based (bytes).
struct Token {
  TokenKind kind = TokenKind::End;
  std::size_t begin = 0;
  std::size_t end = 0;
  int line = 1;
  int col = 0;
  int end_line = 1;
  int end_col = 0;
};

struct Comment {
  std::size_t begin = 0;
  std::size_t end = 0;
  int line = 1;
};

struct LexResult {
  std::vector<Token> tokens;
  std::vector<Comment> comments;
};

struct SyntaxError {
  int line = 0;
  std::string message;
};

// Tokenizes Python source. Comments are returned out of band; the token
// stream carries logical NEWLINE / INDENT / DEDENT like CPython's tokenizer.
// Throws SyntaxError on malformed input.
LexResult tokenize(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace edgtyper::python

#pragma once

// Shared between the frontend translation units; not installed.

#include <memory>
#include <string>
#include <vector>

#include "edgtyper/frontend.hpp"
#include "edgtyper/python/syntax.hpp"

namespace edgtyper::detail {

struct ParsedFile {
  std::string path;
  std::string module;
  std::unique_ptr<python::Module> mod;
};

// Parses every file; files with syntax errors are reported and skipped.
std::vector<ParsedFile> parse_repo(const SourceRepo& repo, std::vector<ParseFailure>* errors);

// Throws Error(Parse) instead of skipping.
python::Module parse_or_throw(const SourceFile& file);

CodeSpan token_span(const ParsedFile& pf, std::size_t first, std::size_t last_inclusive);

void extract_file(const ParsedFile& pf, EntityIndex& index);

// Name of the first parameter of a method (`self` / `cls`), if it gets no slot.
std::optional<std::string> implicit_first_param(const python::Module& m,
                                                 const python::Stmt& def, bool in_class);

// Start offset of the line containing `offset`.
std::size_t line_start(const std::string& text, std::size_t offset);

struct Edit {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string replacement;
};

// Applies non-overlapping edits; fills `map` with output-line provenance.
std::string apply_edits(const std::string& text, std::vector<Edit> edits, LineMap* map);

}  // namespace edgtyper::detail

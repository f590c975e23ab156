#include <algorithm>
#include <functional>

#include "edgtyper/error.hpp"
#include "edgtyper/frontend.hpp"
#include "edgtyper/type_expr.hpp"
#include "frontend_internal.hpp"

namespace edgtyper {

using python::Module;
using python::Stmt;
using python::StmtKind;
using python::TokenKind;
using python::TokRange;

namespace detail {

std::string apply_edits(const std::string& text, std::vector<Edit> edits, LineMap* map) {
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  std::string out;
  out.reserve(text.size() + 64);
  std::vector<int> origin;  // per output line
  int in_line = 1;
  bool at_line_start = true;
  auto emit = [&](char c, int from_line) {
    if (at_line_start) origin.push_back(from_line);
    out.push_back(c);
    at_line_start = c == '\n';
  };
  std::size_t pos = 0;
  auto copy_until = [&](std::size_t end) {
    for (; pos < end; ++pos) {
      emit(text[pos], in_line);
      if (text[pos] == '\n') ++in_line;
    }
  };
  for (const Edit& e : edits) {
    if (e.begin < pos) throw std::logic_error("overlapping edits");
    copy_until(e.begin);
    for (char c : e.replacement) emit(c, 0);
    for (; pos < e.end; ++pos)
      if (text[pos] == '\n') ++in_line;
  }
  copy_until(text.size());
  if (map) map->origin = std::move(origin);
  return out;
}

}  // namespace detail

int LineMap::to_input(int output_line) const {
  if (output_line < 1 || output_line > static_cast<int>(origin.size())) return output_line;
  return origin[output_line - 1];
}

namespace {

// Byte range of the generated import block (whole lines), if present.
std::optional<std::pair<std::size_t, std::size_t>> import_block(const std::string& text) {
  std::size_t pos = 0;
  std::optional<std::size_t> begin;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t end = nl == std::string::npos ? text.size() : nl;
    std::string_view line(text.data() + pos, end - pos);
    if (!begin && line == kImportBlockBegin) begin = pos;
    if (begin && line == kImportBlockEnd) {
      if (nl != std::string::npos) return std::pair{*begin, nl + 1};
      // Block at EOF without a trailing newline: take the newline before it.
      return std::pair{*begin > 0 ? *begin - 1 : *begin, text.size()};
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return std::nullopt;
}

std::vector<std::string> block_lines(const std::string& text,
                                     std::pair<std::size_t, std::size_t> range) {
  std::vector<std::string> lines;
  std::size_t pos = range.first;
  while (pos < range.second) {
    std::size_t nl = text.find('\n', pos);
    std::size_t end = nl == std::string::npos || nl > range.second ? range.second : nl;
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line != kImportBlockBegin && line != kImportBlockEnd)
      lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

bool is_type_comment_line(std::string_view line) {
  std::size_t i = line.find_first_not_of(" \t");
  if (i == std::string_view::npos) return false;
  line.remove_prefix(i);
  return line.starts_with(":type ") || line.starts_with(":type:") || line.starts_with(":rtype:") ||
         line.starts_with(":rtype ");
}

// Interior docstring lines carrying `:type`/`:rtype:` markers.
void docstring_edits(const Module& m, const Stmt& s, std::vector<detail::Edit>& edits) {
  if (!python::is_string_statement(m, s)) return;
  const std::string& src = m.source();
  for (std::size_t t = s.header.first; t < s.header.last; ++t) {
    const python::Token& tok = m.tok(t);
    if (tok.kind != TokenKind::String) continue;
    std::size_t first_nl = src.find('\n', tok.begin);
    if (first_nl == std::string::npos || first_nl >= tok.end) continue;
    std::size_t pos = first_nl + 1;
    while (pos < tok.end) {
      std::size_t nl = src.find('\n', pos);
      if (nl == std::string::npos || nl >= tok.end) break;  // closing line
      if (is_type_comment_line(std::string_view(src).substr(pos, nl - pos)))
        edits.push_back({pos, nl + 1, ""});
      pos = nl + 1;
    }
  }
}

// Docstring `:type x:` / `:rtype:` lines; annotations are handled per slot.
void docstring_strip_edits(const Module& m, const std::vector<Stmt>& body,
                           std::vector<detail::Edit>& edits) {
  for (const Stmt& s : body) {
    if (s.kind == StmtKind::Simple) docstring_edits(m, s, edits);
    docstring_strip_edits(m, s.body, edits);
  }
}

std::string trimmed(std::string_view t) {
  std::size_t b = t.find_first_not_of(" \t"), e = t.find_last_not_of(" \t");
  return b == std::string_view::npos ? std::string() : std::string(t.substr(b, e - b + 1));
}

bool is_quoted(std::string_view t) {
  std::string s = trimmed(t);
  return s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front() &&
         s.find(s.front(), 1) == s.size() - 1;
}

std::string remove_import_block(const std::string& text) {
  auto block = import_block(text);
  if (!block) return text;
  return text.substr(0, block->first) + text.substr(block->second);
}

// ---- import planning ------------------------------------------------------

const std::set<std::string>& builtin_names() {
  static const std::set<std::string> names = {
      "int",   "float",     "complex", "str",     "bytes",     "bytearray", "bool",
      "list",  "dict",      "set",     "frozenset", "tuple",   "type",      "object",
      "range", "memoryview", "slice",  "None",    "Exception", "BaseException",
      "ValueError", "KeyError", "TypeError", "RuntimeError", "property", "staticmethod",
      "classmethod", "NotImplemented", "Ellipsis", "super", "zip", "map", "filter",
      "enumerate", "reversed"};
  return names;
}

const std::set<std::string>& typing_names() {
  static const std::set<std::string> names = {
      "Any",      "Optional",  "Union",     "List",      "Dict",       "Set",
      "FrozenSet", "Tuple",    "Type",      "Callable",  "Iterable",   "Iterator",
      "Generator", "Sequence", "Mapping",   "MutableMapping", "MutableSequence",
      "Awaitable", "Coroutine", "AsyncIterator", "AsyncIterable", "AsyncGenerator",
      "TypeVar",  "Generic",   "Protocol",  "Literal",   "ClassVar",   "Final",
      "NoReturn", "IO",        "TextIO",    "BinaryIO",  "Pattern",    "Match",
      "DefaultDict", "Deque",  "Counter",   "OrderedDict", "ChainMap", "Text",
      "Hashable", "Sized",     "Container", "Collection", "Reversible", "AbstractSet",
      "MutableSet", "KeysView", "ValuesView", "ItemsView", "ContextManager",
      "AsyncContextManager", "SupportsInt", "SupportsFloat", "NamedTuple", "TypedDict",
      "NewType", "AnyStr",     "Never",     "Self"};
  return names;
}

const std::map<std::string, std::string>& stdlib_names() {
  static const std::map<std::string, std::string> names = {
      {"ContextVar", "contextvars"}, {"Path", "pathlib"},     {"PurePath", "pathlib"},
      {"datetime", "datetime"},      {"date", "datetime"},    {"timedelta", "datetime"},
      {"Decimal", "decimal"},        {"Fraction", "fractions"}, {"Enum", "enum"},
      {"deque", "collections"},      {"defaultdict", "collections"},
      {"UUID", "uuid"},              {"Logger", "logging"},   {"Thread", "threading"},
      {"Lock", "threading"},         {"Queue", "queue"},      {"Namespace", "argparse"},
      {"ArgumentParser", "argparse"}};
  return names;
}

// Names bound at module scope of a file (defs, classes, imports, assignments).
std::set<std::string> top_level_names(const Module& m) {
  std::set<std::string> names;
  std::function<void(const std::vector<Stmt>&)> walk = [&](const std::vector<Stmt>& body) {
    for (const Stmt& s : body) {
      if (s.kind == StmtKind::Def) {
        names.insert(std::string(m.text(s.header.first + (s.is_async ? 2 : 1))));
      } else if (s.kind == StmtKind::Class) {
        names.insert(std::string(m.text(s.header.first + 1)));
      } else if (s.kind == StmtKind::Simple) {
        TokRange r = s.header;
        if (m.is_name(r.first, "import")) {
          for (TokRange part : python::split_top_level(m, {r.first + 1, r.last}, ",")) {
            if (part.empty()) continue;
            if (part.size() >= 3 && m.is_name(part.last - 2, "as"))
              names.insert(std::string(m.text(part.last - 1)));
            else
              names.insert(std::string(m.text(part.first)));
          }
        } else if (m.is_name(r.first, "from")) {
          std::size_t imp = r.first;
          while (imp < r.last && !m.is_name(imp, "import")) ++imp;
          for (std::size_t i = imp + 1; i < r.last; ++i) {
            if (!m.is_name(i)) continue;
            if (m.is_name(i + 1, "as")) continue;
            names.insert(std::string(m.text(i)));
          }
        } else if (auto a = python::parse_assignment(m, s)) {
          for (TokRange t : a->targets)
            if (auto d = python::as_dotted_name(m, t); d && d->size() == 1)
              names.insert(d->front());
        }
      } else {
        walk(s.body);
      }
    }
  };
  walk(m.body());
  return names;
}

// Byte offset where the import block goes: after the leading docstring /
// import statements, at the start of the following line.
std::size_t block_position(const Module& m) {
  const std::string& src = m.source();
  std::optional<std::size_t> last_tok;
  for (std::size_t i = 0; i < m.body().size(); ++i) {
    const Stmt& s = m.body()[i];
    if (s.kind != StmtKind::Simple) break;
    bool import = m.is_name(s.header.first, "import") || m.is_name(s.header.first, "from");
    bool docstring = i == 0 && python::is_string_statement(m, s);
    if (!import && !docstring) break;
    last_tok = s.header.last - 1;
  }
  if (!last_tok) return 0;
  std::size_t nl = src.find('\n', m.tok(*last_tok).end);
  return nl == std::string::npos ? src.size() : nl + 1;
}

struct ImportPlanner {
  const SourceRepo& repo;
  const EntityIndex& index;
  std::set<std::string> repo_modules;

  ImportPlanner(const SourceRepo& r, const EntityIndex& idx) : repo(r), index(idx) {
    for (const SourceFile& f : repo.files) {
      std::string mod = module_name_for(f.path);
      std::size_t dot = 0;
      while (!mod.empty() && dot != std::string::npos) {
        dot = mod.find('.', dot ? dot + 1 : 0);
        repo_modules.insert(mod.substr(0, dot));
      }
    }
  }

  // Import line needed for `name` in a file of `module`, or empty.
  std::string line_for(const std::string& name, const std::string& module,
                       const std::set<std::string>& bound) const {
    std::size_t dot = name.find('.');
    std::string root = name.substr(0, dot);
    if (bound.count(root) || builtin_names().count(root)) return {};
    if (dot != std::string::npos) {
      // Longest repo-module prefix; otherwise assume the root is a module.
      std::string best = root;
      std::size_t pos = dot;
      while (pos != std::string::npos) {
        std::string prefix = name.substr(0, pos);
        if (repo_modules.count(prefix)) best = prefix;
        pos = name.find('.', pos + 1);
      }
      if (root == "typing" || repo_modules.count(best) || !repo_modules.count(root))
        return "import " + best;
      return {};
    }
    if (typing_names().count(name)) return "from typing import " + name;
    if (auto it = stdlib_names().find(name); it != stdlib_names().end())
      return "from " + it->second + " import " + name;
    // A user-defined class elsewhere in the repository: prefer a module-level one.
    std::vector<const Entity*> candidates;
    for (const auto& [id, e] : index)
      if (e.kind == EntityKind::Class && e.short_name == name && !e.enclosing_class &&
          id == (e.module.empty() ? name : e.module + "." + name))
        candidates.push_back(&e);
    if (candidates.empty()) return {};
    const Entity* pick = candidates.front();
    for (const Entity* c : candidates)
      if (c->module.size() < pick->module.size()) pick = c;
    if (pick->module == module || pick->module.empty()) return {};
    return "from " + pick->module + " import " + name;
  }
};

}  // namespace

StripResult strip_annotations(const SourceRepo& repo) {
  StripResult result;
  result.repo.root = repo.root;
  SourceRepo unblocked;
  unblocked.root = repo.root;
  for (const SourceFile& f : repo.files) unblocked.files.push_back({f.path, remove_import_block(f.text)});
  // Only slot annotations are removed (the exact range apply writes), so
  // strip and apply invert each other; locals keep their annotations.
  ExtractResult extracted = extract_entities(unblocked);
  std::map<std::string, std::vector<detail::Edit>> slot_edits;
  for (const auto& [id, e] : extracted.entities)
    for (const TypeSlot& s : e.slots)
      if (s.annotation && s.existing && !s.declaration_only) {
        result.archive[s.slot_id] = *s.annotation;
        slot_edits[e.span.file].push_back({s.insert_at, s.existing->second, ""});
      }
  for (const SourceFile& f : unblocked.files) {
    Module m = detail::parse_or_throw(f);
    std::vector<detail::Edit> edits = std::move(slot_edits[f.path]);
    docstring_strip_edits(m, m.body(), edits);
    std::sort(edits.begin(), edits.end(),
              [](const detail::Edit& a, const detail::Edit& b) { return a.begin < b.begin; });
    edits.erase(std::unique(edits.begin(), edits.end(),
                            [](const detail::Edit& a, const detail::Edit& b) {
                              return a.begin == b.begin;
                            }),
                edits.end());
    result.repo.files.push_back({f.path, detail::apply_edits(f.text, std::move(edits), nullptr)});
  }
  return result;
}

ApplyResult apply_annotations(const SourceRepo& repo,
                              const std::map<std::string, std::string>& bindings) {
  ApplyResult result;
  result.repo = repo;
  if (bindings.empty()) return result;
  ExtractResult extracted = extract_entities(repo);
  const EntityIndex& index = extracted.entities;

  struct Pending {
    const TypeSlot* slot;
    std::string text;
    std::set<std::string> names;
  };
  std::map<std::string, std::vector<Pending>> per_file;
  for (const auto& [slot_id, type] : bindings) {
    const TypeSlot* slot = find_slot(index, slot_id);
    if (!slot) throw Error(ErrorKind::UnknownSlot, "unknown slot: " + slot_id);
    TypeExpr expr = parse_type_expr(type);
    const Entity& owner = index.at(slot_entity(slot_id));
    // A quoted forward reference is written back as quoted.
    std::string text = is_quoted(type) ? trimmed(type) : to_source(expr);
    per_file[owner.span.file].push_back({slot, text, referenced_names(expr)});
  }

  ImportPlanner planner(repo, index);
  for (auto& [path, pending] : per_file) {
    SourceFile* file = result.repo.find(path);
    Module m = detail::parse_or_throw(*file);
    std::string module = module_name_for(path);
    std::set<std::string> bound = top_level_names(m);
    std::vector<detail::Edit> edits;
    std::set<std::string> imports;
    for (const Pending& p : pending) {
      std::string text = (p.slot->role == "return" ? " -> " : ": ") + p.text;
      std::size_t end = p.slot->existing ? p.slot->existing->second : p.slot->insert_at;
      edits.push_back({p.slot->insert_at, end, text});
      for (const std::string& n : p.names)
        if (std::string line = planner.line_for(n, module, bound); !line.empty())
          imports.insert(line);
    }
    auto existing = import_block(file->text);
    if (existing) {
      for (std::string& l : block_lines(file->text, *existing)) imports.insert(std::move(l));
    }
    if (!imports.empty() || existing) {
      std::string block;
      std::size_t at = existing ? existing->first : block_position(m);
      bool eof_no_newline = at == file->text.size() && !file->text.empty() &&
                            file->text.back() != '\n';
      if (existing && existing->second == file->text.size() && file->text.back() != '\n')
        eof_no_newline = true;
      if (eof_no_newline && !existing) block += "\n";
      if (eof_no_newline && existing) block += "\n";
      block += std::string(kImportBlockBegin) + "\n";
      for (const std::string& l : imports) block += l + "\n";
      block += kImportBlockEnd;
      if (!eof_no_newline) block += "\n";
      edits.push_back({at, existing ? existing->second : at, block});
    }
    LineMap map;
    file->text = detail::apply_edits(file->text, std::move(edits), &map);
    result.line_maps[path] = std::move(map);
  }
  return result;
}

nlohmann::json archive_to_json(const AnnotationArchive& archive) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [slot, type] : archive) out.push_back({{"slot", slot}, {"type", type}});
  return out;
}

AnnotationArchive archive_from_json(const nlohmann::json& j) {
  AnnotationArchive archive;
  if (!j.is_array()) throw Error(ErrorKind::Io, "annotation archive must be a JSON array");
  for (const auto& entry : j) {
    if (!entry.contains("slot") || !entry.contains("type"))
      throw Error(ErrorKind::Io, "annotation archive entry lacks slot/type");
    archive[entry["slot"].get<std::string>()] = entry["type"].get<std::string>();
  }
  return archive;
}

}  // namespace edgtyper

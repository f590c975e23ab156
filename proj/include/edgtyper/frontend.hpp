#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

namespace edgtyper {

// ---- repository ---------------------------------------------------------

struct SourceFile {
  std::string path;  // relative, '/'-separated, ends in .py
  std::string text;
};

struct SourceRepo {
  std::filesystem::path root;
  std::vector<SourceFile> files;  // sorted by path

  const SourceFile* find(std::string_view path) const;
  SourceFile* find(std::string_view path);
};

// Loads every .py file under root. Throws Error(Io / Encoding / NoPythonFiles).
SourceRepo load_repo(const std::filesystem::path& root);

// Writes the files under dir, creating directories. Files whose contents
// are unchanged on disk are not rewritten.
void write_repo(const SourceRepo& repo, const std::filesystem::path& dir);

// `pkg/mod.py` -> `pkg.mod`, `pkg/__init__.py` -> `pkg`.
std::string module_name_for(std::string_view path);

// Stable content digest (FNV-1a over paths and texts), hex encoded.
std::string repo_fingerprint(const SourceRepo& repo);

// ---- entities -----------------------------------------------------------

struct CodeSpan {
  std::string file;
  int start_line = 1;
  int start_col = 0;
  int end_line = 1;
  int end_col = 0;

  bool contains(std::string_view path, int line) const {
    return path == file && line >= start_line && line <= end_line;
  }
  bool contains(const CodeSpan& other) const;
};

enum class EntityKind { Variable, Function, Class };
const char* to_string(EntityKind kind);

enum class SlotState { Unannotated, Inferred, Validated, Fallback };
const char* to_string(SlotState state);
SlotState slot_state_from_string(std::string_view text);

// Slot ids are "<entity id>#<role>", role one of `var`, `param:<name>`, `return`.
std::string make_slot_id(std::string_view entity, std::string_view role);
std::string slot_entity(std::string_view slot_id);
std::string slot_role(std::string_view slot_id);

// One annotatable position plus the byte anchors used to rewrite it.
struct TypeSlot {
  std::string slot_id;
  std::string role;
  std::optional<std::string> annotation;  // annotation present in the source
  std::size_t insert_at = 0;               // byte offset for ": T" / " -> T"
  std::optional<std::pair<std::size_t, std::size_t>> existing;  // annotated text range
  bool declaration_only = false;           // `x: T` with no value; never stripped
  int line = 0;
};

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::Variable;
  std::string module;
  CodeSpan span;
  std::string definition_text;
  std::vector<TypeSlot> slots;
  std::optional<std::string> enclosing_class;
  std::string short_name;  // unqualified name as written
};

using EntityIndex = std::map<std::string, Entity>;

struct ParseFailure {
  std::string file;
  int line = 0;
  std::string message;
};

struct ExtractResult {
  EntityIndex entities;
  std::vector<ParseFailure> parse_errors;  // files skipped
};

ExtractResult extract_entities(const SourceRepo& repo);

// Slot lookup: (entity, slot) pair for a slot id, or nullptr.
const TypeSlot* find_slot(const EntityIndex& index, std::string_view slot_id);

// Innermost entity whose defining span contains (file, line).
const Entity* entity_at(const EntityIndex& index, std::string_view file, int line);

// ---- references ---------------------------------------------------------

enum class RefKind { Call, Read, Write, Inherit };
const char* to_string(RefKind kind);

struct Reference {
  std::string entity;
  RefKind kind = RefKind::Read;
  friend bool operator<(const Reference& a, const Reference& b) {
    return std::tie(a.entity, a.kind) < std::tie(b.entity, b.kind);
  }
  friend bool operator==(const Reference& a, const Reference& b) {
    return a.entity == b.entity && a.kind == b.kind;
  }
};

struct StatementRef {
  CodeSpan statement_span;
  std::string owner;  // dependent entity the statement belongs to
  std::vector<Reference> referenced;
};

// Lexical-scope + import-graph name resolution over one repository.
class Resolver {
 public:
  Resolver(const SourceRepo& repo, const EntityIndex& index);
  ~Resolver();
  Resolver(Resolver&&) noexcept;
  Resolver& operator=(Resolver&&) noexcept;

  std::vector<StatementRef> statement_refs() const;

  // Grounds a dotted reference seen from `from_entity` to an entity id.
  std::optional<std::string> resolve_reference(std::string_view from_entity,
                                               std::string_view dotted) const;

  // Name binding of `name` at module scope of `module`: an entity id, or
  // "module:<name>" for module bindings.
  std::optional<std::string> module_binding(std::string_view module,
                                            std::string_view name) const;
  bool has_module(std::string_view module) const;

  // Base classes of a class entity (resolved entities only).
  std::vector<std::string> bases_of(std::string_view class_id) const;
  // Looks up `member` on a class, following resolved bases.
  std::optional<std::string> find_member(std::string_view class_id,
                                         std::string_view member) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<StatementRef> resolve_statement_refs(const SourceRepo& repo,
                                                 const EntityIndex& index);

// ---- annotation rewriting -----------------------------------------------

inline constexpr std::string_view kImportBlockBegin = "# edg-typer imports";
inline constexpr std::string_view kImportBlockEnd = "# end edg-typer imports";

using AnnotationArchive = std::map<std::string, std::string>;  // slot id -> type

struct StripResult {
  SourceRepo repo;
  AnnotationArchive archive;
};

// Removes parameter/return/variable annotations, `:type`/`:rtype:` docstring
// lines, and the generated import block. Throws Error(Parse).
StripResult strip_annotations(const SourceRepo& repo);

// Maps lines of a rewritten file back to the lines of its input.
struct LineMap {
  std::vector<int> origin;  // origin[output_line - 1] = input line (0 = inserted)
  int to_input(int output_line) const;
};

struct ApplyResult {
  SourceRepo repo;
  std::map<std::string, LineMap> line_maps;  // only for files that changed
};

// Inserts annotations at their PEP 484 positions and adds the imports the
// annotation names need. Throws Error(UnknownSlot / InvalidTypeExpression /
// Parse).
ApplyResult apply_annotations(const SourceRepo& repo,
                              const std::map<std::string, std::string>& bindings);

nlohmann::json archive_to_json(const AnnotationArchive& archive);
AnnotationArchive archive_from_json(const nlohmann::json& j);

}  // namespace edgtyper

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "edgtyper/frontend.hpp"
#include "edgtyper/inference.hpp"

namespace edgtyper {

struct Diagnostic {
  std::string file;
  int line = 1;
  std::string code;
  std::string message;

  friend bool operator<(const Diagnostic& a, const Diagnostic& b) {
    return std::tie(a.file, a.line, a.code, a.message) <
           std::tie(b.file, b.line, b.code, b.message);
  }
  friend bool operator==(const Diagnostic& a, const Diagnostic& b) = default;
};

std::string to_string(const Diagnostic& d);  // `path:line: error: message  [code]`

// Codes excluded during refinement and baseline preparation.
std::set<std::string> default_ignored_codes();

struct CheckerConfig {
  std::string path = "mypy";
  std::vector<std::string> extra_flags;
  std::set<std::string> ignored_codes = default_ignored_codes();
  std::filesystem::path cache_dir;  // empty: a directory next to the working copy
};

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs argv[0] (PATH lookup) in cwd. Throws Error(CheckerMissing) if it
// cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::filesystem::path& cwd);

// Parses `path:line: error: message  [code]` lines; notes are appended to
// the preceding diagnostic's message.
std::vector<Diagnostic> parse_checker_output(std::string_view output);

// Runs the checker over a directory. Throws Error(CheckerMissing /
// CheckerCrashed).
std::vector<Diagnostic> run_checker(const std::filesystem::path& dir, const CheckerConfig& config);

// The checker version string, or throws Error(CheckerMissing).
std::string checker_version(const CheckerConfig& config);

// A scratch directory mirroring a SourceRepo; writes only changed files.
class WorkingCopy {
 public:
  explicit WorkingCopy(std::filesystem::path dir = {});
  ~WorkingCopy();
  WorkingCopy(const WorkingCopy&) = delete;
  WorkingCopy& operator=(const WorkingCopy&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  const SourceRepo& repo() const { return repo_; }
  void sync(const SourceRepo& repo);
  std::vector<Diagnostic> check(const CheckerConfig& config) const;

 private:
  std::filesystem::path dir_;
  std::filesystem::path cache_;
  SourceRepo repo_;
  bool owned_ = false;
};

enum class ConflictCategory {
  ParamTooPermissive,
  ParamTooRestrictive,
  OverrideMismatch,
  NameUndefined,
  Other
};
const char* to_string(ConflictCategory c);

struct ConflictReport {
  ConflictCategory category = ConflictCategory::Other;
  std::vector<Diagnostic> diagnostics;
  std::vector<std::string> culprit_slots;
  // OverrideMismatch: the parent method and the child method involved.
  std::string parent_entity;
  std::string child_entity;
  bool parent_applied = false;
};

// Maps each diagnostic to the annotations applied in this step (`applied`,
// oldest first) that caused it. `repo` is the checked working copy.
std::vector<ConflictReport> attribute_conflicts(const std::vector<Diagnostic>& diags,
                                                const std::vector<std::string>& applied,
                                                const std::map<std::string, std::string>& types,
                                                const SourceRepo& repo,
                                                const EntityIndex& index,
                                                const Resolver& resolver);

enum class RepairAction { Narrow, InvalidateFunction, InvalidateParent, Refine, Fallback };
const char* to_string(RepairAction a);

struct Resolution {
  RepairAction action = RepairAction::Refine;
  std::string slot;
  std::string entity;
  std::string feedback;  // `[slot] ...` line handed to the next inference
};

// One resolution per culprit slot. Slots at the attempt bound fall back.
std::vector<Resolution> resolve_conflict(const ConflictReport& report, const SlotTable& slots,
                                         const EntityIndex& index, const SourceRepo& repo,
                                         int attempt_bound = kDefaultAttemptBound);

// Appends `# type: ignore` to every line carrying a diagnostic, before any
// existing comment. Lines already suppressed are left alone. Returns the
// number of comments added.
std::size_t suppress_diagnostics(SourceRepo& repo, const std::vector<Diagnostic>& diags);

inline constexpr int kMaxBaselinePasses = 10;

struct BaselineResult {
  SourceRepo repo;
  std::size_t suppressions = 0;
  int passes = 0;
};

// Suppresses the checker's remaining diagnostics until it is clean. With
// `strip` the annotations are removed first. Throws Error(NonConverging).
BaselineResult prepare_baseline(const SourceRepo& repo, const CheckerConfig& config,
                                bool strip = true);

}  // namespace edgtyper

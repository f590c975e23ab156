#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgtyper/edg.hpp"
#include "edgtyper/frontend.hpp"
#include "edgtyper/inference.hpp"
#include "edgtyper/validation.hpp"

namespace edgtyper {

inline constexpr int kCheckpointSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kStallLimit = 3;
inline constexpr int kDefaultMaxIterations = 100;

enum class OracleKind { Rule, Http };

struct RunConfig {
  OracleKind oracle = OracleKind::Rule;
  HttpOracleConfig http;
  std::size_t cluster_bound = kDefaultClusterBound;
  int attempt_bound = kDefaultAttemptBound;
  int max_iterations = kDefaultMaxIterations;
  std::size_t token_budget = kDefaultTokenBudget;
  CheckerConfig checker;

  // Saved after every iteration when set; an existing file is resumed.
  std::filesystem::path checkpoint;
  // Stops (with a checkpoint) after this many iterations of this process.
  std::optional<int> stop_after_iterations;

  // Called with each wave as it is selected.
  std::function<void(const ClusterDAG&, const std::vector<std::size_t>&, const SlotStates&,
                     const EntityIndex&)>
      on_select;

  // Throws Error(Config) when a bound is below 1.
  void validate() const;
};

std::unique_ptr<Oracle> make_oracle(const RunConfig& config);

struct ConflictRecord {
  std::string cluster;
  std::string category;
  std::vector<std::string> culprits;
  std::vector<std::string> diagnostics;
};

struct ResolutionRecord {
  std::string slot;
  std::string action;
  std::string feedback;
};

struct IterationTrace {
  int iteration = 0;
  std::vector<std::string> selected;   // cluster ids, in processing order
  std::vector<std::string> deferred;   // clusters that gained probed edges
  std::vector<DependencyEdge> probed_edges;
  std::vector<std::string> unresolved_refs;
  std::map<std::string, std::string> annotated;  // slots validated this iteration
  std::vector<std::string> fallbacks;
  std::vector<ConflictRecord> conflicts;
  std::vector<ResolutionRecord> resolutions;
  int checker_runs = 0;
  double coverage = 0;  // fraction of slots Validated or Fallback afterwards
};

nlohmann::json to_json(const IterationTrace& t);
IterationTrace trace_from_json(const nlohmann::json& j);

struct PipelineState {
  std::string fingerprint;  // of the input repository
  SourceRepo base;          // input plus baseline suppressions
  std::size_t baseline_suppressions = 0;
  EntityIndex index;
  std::vector<ParseFailure> parse_errors;
  EntityDependencyGraph edg;
  SlotTable slots;
  std::map<std::string, std::vector<std::string>> feedback;  // slot -> pending feedback
  std::set<std::string> unapplied;  // Fallback slots kept out of the repository
  int iteration = 0;
  int stall_counter = 0;
  std::vector<IterationTrace> trace;
};

// Loads the frontend view of a repository: baseline suppression when the
// input is not checker-clean, entities, EDG, and the initial slot table.
PipelineState initialize_state(const SourceRepo& repo, const RunConfig& config,
                               WorkingCopy& wc);

// Slot -> type for every annotation the output carries beyond the input's.
std::map<std::string, std::string> committed_bindings(const PipelineState& state);

bool has_unannotated(const PipelineState& state);

// One reorganize / refine / validate round. On OracleUnavailable the state
// is left as it was and the error is rethrown.
void run_iteration(PipelineState& state, const RunConfig& config, Oracle& oracle,
                   WorkingCopy& wc);

// Moves every Unannotated slot to Fallback and validates the result.
void flush_to_fallback(PipelineState& state, const RunConfig& config, WorkingCopy& wc,
                       IterationTrace& trace);

struct PipelineResult {
  SourceRepo repo;            // annotated output
  PipelineState state;
  std::string terminated_by;  // complete | stall | max_iterations | stopped
  std::vector<Diagnostic> final_diagnostics;
  std::optional<IterationTrace> flush;  // the closing Fallback flush, if any
  bool finished = true;       // false when stopped early for a checkpoint
};

PipelineResult run_pipeline(const std::filesystem::path& repo_path, const RunConfig& config,
                            Oracle* oracle = nullptr);
PipelineResult run_pipeline(const SourceRepo& repo, const RunConfig& config,
                            Oracle* oracle = nullptr);

void checkpoint_save(const PipelineState& state, const std::filesystem::path& path);
// Throws Error(CorruptCheckpoint).
PipelineState checkpoint_load(const std::filesystem::path& path);

nlohmann::json make_report(const PipelineResult& result, const RunConfig& config);
// iteration,coverage rows for plotting.
std::string progress_csv(const PipelineState& state);

}  // namespace edgtyper

#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgtyper/edg.hpp"
#include "edgtyper/frontend.hpp"

namespace edgtyper {

inline constexpr int kDefaultAttemptBound = 3;
inline constexpr std::size_t kDefaultTokenBudget = 24000;
inline constexpr std::size_t kMaxProbedEdges = 10;

struct SlotRecord {
  SlotState state = SlotState::Unannotated;
  std::optional<std::string> type;
  int attempts = 0;
  bool preexisting = false;  // developer annotation kept from the input
};

using SlotTable = std::map<std::string, SlotRecord>;

SlotStates slot_states(const SlotTable& table);

struct DependencySummary {
  std::string entity;
  std::string slot;
  std::string type;
  int distance = 1;  // graph distance from the cluster
};

struct InferenceContext {
  std::string cluster_id;
  std::vector<std::pair<std::string, std::string>> member_definitions;  // (id, code)
  std::vector<DependencySummary> dependency_summaries;
  std::vector<std::string> feedback;
  std::vector<std::string> targets;  // slot ids to annotate
  std::size_t token_budget = kDefaultTokenBudget;
};

enum class OracleTask { FindMissing, InferTypes };
const char* to_string(OracleTask task);

struct OracleRequest {
  OracleTask task = OracleTask::InferTypes;
  InferenceContext context;
};

// Wire form: {"task","cluster":[{"id","code"}],"deps":[{"slot","type"}],
// "feedback":[...],"targets":[...]}.
nlohmann::json to_json(const OracleRequest& request);
OracleRequest request_from_json(const nlohmann::json& j);

struct MissingRef {
  std::string from;
  std::string ref;
  std::string reason;
};

struct OracleResponse {
  std::vector<MissingRef> missing;                             // FindMissing
  std::vector<std::pair<std::string, std::string>> annotations;  // InferTypes: (slot, type)
  bool partial = false;
};

nlohmann::json to_json(const OracleResponse& response);
// Throws Error(MalformedResponse).
OracleResponse response_from_json(const nlohmann::json& j, OracleTask task);

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleResponse complete(const OracleRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Deterministic pattern-based oracle used by default and by the tests.
class RuleOracle : public Oracle {
 public:
  OracleResponse complete(const OracleRequest& request) override;
  std::string name() const override { return "rule"; }
};

struct HttpOracleConfig {
  std::string url;  // http://host[:port]/path
  std::string token;
  std::string model;
  std::chrono::seconds timeout{60};
  int retries = 2;
};

// JSON-over-POST client. Throws Error(OracleUnavailable / MalformedResponse).
class HttpOracle : public Oracle {
 public:
  explicit HttpOracle(HttpOracleConfig config);
  OracleResponse complete(const OracleRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  HttpOracleConfig config_;
  std::string scheme_host_;
  std::string path_;
};

// Prompt text for a request, rendered from the bundled templates.
std::string render_prompt(const OracleRequest& request);

// Builds the context for one cluster. Throws Error(OversizeCluster) when the
// member definitions alone exceed the budget.
InferenceContext build_context(const EntityCluster& cluster, const EntityDependencyGraph& g,
                               const EntityIndex& index, const SlotTable& slots,
                               const std::vector<std::string>& feedback = {},
                               std::size_t token_budget = kDefaultTokenBudget,
                               int attempt_bound = kDefaultAttemptBound);

struct MissingDependencyReport {
  std::string cluster_id;
  std::vector<DependencyEdge> proposed_edges;
  std::vector<std::string> unresolved_refs;
};

MissingDependencyReport probe_missing_dependencies(const InferenceContext& ctx, Oracle& oracle,
                                                   const Resolver& resolver,
                                                   const EntityIndex& index);

struct InferenceOutcome {
  std::map<std::string, std::string> candidates;          // slot -> canonical type
  std::map<std::string, std::string> invalid;             // slot -> parse error
  std::vector<std::string> requested;                     // slots sent to the oracle
};

// Queries the oracle for the context's targets. Attempts are charged in
// `slots`; malformed types are re-prompted with the parse error as feedback
// while attempts remain.
InferenceOutcome infer_cluster_types(const InferenceContext& ctx, Oracle& oracle,
                                     SlotTable& slots,
                                     int attempt_bound = kDefaultAttemptBound);

}  // namespace edgtyper

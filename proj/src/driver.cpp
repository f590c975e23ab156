#include "edgtyper/driver.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "edgtyper/error.hpp"
#include "edgtyper/type_expr.hpp"

namespace edgtyper {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  if (cluster_bound < 1) throw Error(ErrorKind::Config, "cluster bound must be at least 1");
  if (attempt_bound < 1) throw Error(ErrorKind::Config, "attempt bound must be at least 1");
  if (max_iterations < 1) throw Error(ErrorKind::Config, "max iterations must be at least 1");
  if (token_budget < 1) throw Error(ErrorKind::Config, "token budget must be at least 1");
  if (oracle == OracleKind::Http && http.url.empty())
    throw Error(ErrorKind::Config, "the http oracle needs a URL");
}

std::unique_ptr<Oracle> make_oracle(const RunConfig& config) {
  if (config.oracle == OracleKind::Http) return std::make_unique<HttpOracle>(config.http);
  return std::make_unique<RuleOracle>();
}

json to_json(const IterationTrace& t) {
  json edges = json::array();
  for (const DependencyEdge& e : t.probed_edges) edges.push_back(edge_to_json(e));
  json conflicts = json::array();
  for (const ConflictRecord& c : t.conflicts)
    conflicts.push_back({{"cluster", c.cluster},
                         {"category", c.category},
                         {"culprits", c.culprits},
                         {"diagnostics", c.diagnostics}});
  json resolutions = json::array();
  for (const ResolutionRecord& r : t.resolutions)
    resolutions.push_back({{"slot", r.slot}, {"action", r.action}, {"feedback", r.feedback}});
  return {{"iteration", t.iteration},
          {"selected", t.selected},
          {"deferred", t.deferred},
          {"probed_edges", edges},
          {"unresolved_refs", t.unresolved_refs},
          {"annotated", t.annotated},
          {"fallbacks", t.fallbacks},
          {"conflicts", conflicts},
          {"resolutions", resolutions},
          {"checker_runs", t.checker_runs},
          {"coverage", t.coverage}};
}

IterationTrace trace_from_json(const json& j) {
  IterationTrace t;
  t.iteration = j.at("iteration").get<int>();
  t.selected = j.at("selected").get<std::vector<std::string>>();
  t.deferred = j.at("deferred").get<std::vector<std::string>>();
  for (const json& e : j.at("probed_edges")) t.probed_edges.push_back(edge_from_json(e));
  t.unresolved_refs = j.at("unresolved_refs").get<std::vector<std::string>>();
  t.annotated = j.at("annotated").get<std::map<std::string, std::string>>();
  t.fallbacks = j.at("fallbacks").get<std::vector<std::string>>();
  for (const json& c : j.at("conflicts"))
    t.conflicts.push_back({c.at("cluster").get<std::string>(), c.at("category").get<std::string>(),
                           c.at("culprits").get<std::vector<std::string>>(),
                           c.at("diagnostics").get<std::vector<std::string>>()});
  for (const json& r : j.at("resolutions"))
    t.resolutions.push_back({r.at("slot").get<std::string>(), r.at("action").get<std::string>(),
                             r.at("feedback").get<std::string>()});
  t.checker_runs = j.at("checker_runs").get<int>();
  t.coverage = j.at("coverage").get<double>();
  return t;
}

namespace {

void derive_frontend(PipelineState& s) {
  ExtractResult ex = extract_entities(s.base);
  s.index = std::move(ex.entities);
  s.parse_errors = std::move(ex.parse_errors);
}

std::string canonical(const std::string& type) {
  try {
    return to_source(parse_type_expr(type));
  } catch (const Error&) {
    return type;
  }
}

double coverage_of(const PipelineState& s) {
  if (s.slots.empty()) return 1.0;
  std::size_t done = 0;
  for (const auto& [id, r] : s.slots)
    if (r.state == SlotState::Validated || r.state == SlotState::Fallback) ++done;
  return static_cast<double>(done) / static_cast<double>(s.slots.size());
}

// What counts as progress: a slot state or attempt count, the EDG, or the
// set of withheld fallbacks changed.
struct Snapshot {
  std::map<std::string, std::pair<SlotState, int>> slots;
  std::uint64_t edg_version = 0;
  std::size_t unapplied = 0;

  explicit Snapshot(const PipelineState& s)
      : edg_version(s.edg.version), unapplied(s.unapplied.size()) {
    for (const auto& [id, r] : s.slots) slots[id] = {r.state, r.attempts};
  }
  bool operator==(const Snapshot&) const = default;
};

void make_fallback(PipelineState& s, const std::string& slot, IterationTrace& tr) {
  SlotRecord& r = s.slots[slot];
  r.state = SlotState::Fallback;
  r.type = "Any";
  tr.fallbacks.push_back(slot);
}

SourceRepo committed_repo(const PipelineState& s) {
  return apply_annotations(s.base, committed_bindings(s)).repo;
}

void validate_batch(PipelineState& s, const RunConfig& config, WorkingCopy& wc,
                    const std::string& cluster, std::vector<std::string> batch,
                    IterationTrace& tr) {
  std::size_t round_limit = 4 * batch.size() + 4;
  for (std::size_t round = 0; !batch.empty(); ++round) {
    if (round >= round_limit) {
      for (const std::string& slot : batch) {
        make_fallback(s, slot, tr);
        s.unapplied.insert(slot);
      }
      break;
    }
    std::map<std::string, std::string> bindings = committed_bindings(s);
    for (const std::string& slot : batch) bindings[slot] = *s.slots[slot].type;
    wc.sync(apply_annotations(s.base, bindings).repo);
    ++tr.checker_runs;
    std::vector<Diagnostic> diags = wc.check(config.checker);
    if (diags.empty()) {
      for (const std::string& slot : batch) {
        SlotRecord& r = s.slots[slot];
        if (r.state == SlotState::Inferred) {
          r.state = SlotState::Validated;
          tr.annotated[slot] = *r.type;
        }
        s.feedback.erase(slot);
      }
      return;
    }

    ExtractResult applied = extract_entities(wc.repo());
    Resolver resolver(wc.repo(), applied.entities);
    std::map<std::string, std::string> types;
    for (const std::string& slot : batch) types[slot] = *s.slots[slot].type;
    std::vector<ConflictReport> reports =
        attribute_conflicts(diags, batch, types, wc.repo(), applied.entities, resolver);

    // Revert the batch before acting on the verdict.
    wc.sync(committed_repo(s));

    std::set<std::string> in_batch(batch.begin(), batch.end());
    std::set<std::string> removed;
    bool changed = false;
    for (const ConflictReport& report : reports) {
      ConflictRecord rec{cluster, to_string(report.category), report.culprit_slots, {}};
      for (const Diagnostic& d : report.diagnostics) rec.diagnostics.push_back(to_string(d));
      tr.conflicts.push_back(std::move(rec));
      for (Resolution& res :
           resolve_conflict(report, s.slots, applied.entities, wc.repo(), config.attempt_bound)) {
        if (!in_batch.count(res.slot) || removed.count(res.slot)) continue;
        SlotRecord& r = s.slots[res.slot];
        changed = true;
        if (r.state == SlotState::Fallback) {
          // Even `Any` conflicts here; keep the slot unannotated in the output.
          s.unapplied.insert(res.slot);
          removed.insert(res.slot);
          tr.resolutions.push_back({res.slot, "Withhold", res.feedback});
          continue;
        }
        tr.resolutions.push_back({res.slot, to_string(res.action), res.feedback});
        if (res.action == RepairAction::Fallback) {
          make_fallback(s, res.slot, tr);
        } else {
          r.state = SlotState::Unannotated;
          r.type.reset();
          s.feedback[res.slot].push_back(res.feedback);
          removed.insert(res.slot);
        }
      }
    }
    if (!changed) {
      // Nothing in the batch was blamed; withhold the whole batch.
      for (const std::string& slot : batch) {
        make_fallback(s, slot, tr);
        s.unapplied.insert(slot);
      }
      return;
    }
    std::erase_if(batch, [&](const std::string& slot) { return removed.count(slot) > 0; });
  }
}

void validate_wave(PipelineState& s, const RunConfig& config, WorkingCopy& wc,
                   const std::vector<std::pair<std::string, std::vector<std::string>>>& batches,
                   IterationTrace& tr) {
  if (batches.empty()) return;
  // Clusters in one wave never depend on each other, so a clean joint check
  // validates every batch at once.
  std::map<std::string, std::string> bindings = committed_bindings(s);
  for (const auto& [cluster, batch] : batches)
    for (const std::string& slot : batch) bindings[slot] = *s.slots[slot].type;
  wc.sync(apply_annotations(s.base, bindings).repo);
  ++tr.checker_runs;
  if (wc.check(config.checker).empty()) {
    for (const auto& [cluster, batch] : batches)
      for (const std::string& slot : batch) {
        SlotRecord& r = s.slots[slot];
        if (r.state == SlotState::Inferred) {
          r.state = SlotState::Validated;
          tr.annotated[slot] = *r.type;
        }
        s.feedback.erase(slot);
      }
    return;
  }
  wc.sync(committed_repo(s));
  for (const auto& [cluster, batch] : batches) validate_batch(s, config, wc, cluster, batch, tr);
}

std::vector<std::string> cluster_feedback(const PipelineState& s, const EntityCluster& c) {
  std::vector<std::string> out;
  for (const std::string& member : c.members)
    for (const TypeSlot& slot : s.index.at(member).slots) {
      auto it = s.feedback.find(slot.slot_id);
      if (it != s.feedback.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
  return out;
}

void iterate(PipelineState& s, const RunConfig& config, Oracle& oracle, WorkingCopy& wc) {
  Snapshot before(s);
  IterationTrace tr;
  tr.iteration = ++s.iteration;

  ClusterDAG dag = condense_and_bound(s.edg, config.cluster_bound);
  SlotStates states = slot_states(s.slots);
  std::vector<std::size_t> targets = select_targets(dag, s.index, states);
  if (config.on_select) config.on_select(dag, targets, states, s.index);
  Resolver resolver(s.base, s.index);

  std::vector<std::pair<std::string, std::vector<std::string>>> batches;
  for (std::size_t idx : targets) {
    const EntityCluster& cluster = dag.clusters[idx];
    tr.selected.push_back(cluster.id);
    std::vector<std::string> batch;
    for (const std::string& member : cluster.members)
      for (const TypeSlot& slot : s.index.at(member).slots) {
        const SlotRecord& r = s.slots[slot.slot_id];
        if (r.state == SlotState::Unannotated && r.attempts >= config.attempt_bound) {
          make_fallback(s, slot.slot_id, tr);
          batch.push_back(slot.slot_id);
        }
      }

    InferenceContext ctx;
    try {
      ctx = build_context(cluster, s.edg, s.index, s.slots, cluster_feedback(s, cluster),
                          config.token_budget, config.attempt_bound);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OversizeCluster) throw;
      for (const std::string& member : cluster.members)
        for (const TypeSlot& slot : s.index.at(member).slots)
          if (s.slots[slot.slot_id].state == SlotState::Unannotated) {
            make_fallback(s, slot.slot_id, tr);
            batch.push_back(slot.slot_id);
          }
      if (!batch.empty()) batches.push_back({cluster.id, batch});
      continue;
    }
    if (!ctx.targets.empty()) {
      MissingDependencyReport probe = probe_missing_dependencies(ctx, oracle, resolver, s.index);
      tr.unresolved_refs.insert(tr.unresolved_refs.end(), probe.unresolved_refs.begin(),
                                probe.unresolved_refs.end());
      MergeReport merged = merge_new_edges(s.edg, probe.proposed_edges, s.index);
      if (!merged.added.empty()) {
        tr.deferred.push_back(cluster.id);
        tr.probed_edges.insert(tr.probed_edges.end(), merged.added.begin(), merged.added.end());
        if (!batch.empty()) batches.push_back({cluster.id, batch});
        continue;
      }
      InferenceOutcome outcome = infer_cluster_types(ctx, oracle, s.slots, config.attempt_bound);
      for (const auto& [slot, type] : outcome.candidates) {
        SlotRecord& r = s.slots[slot];
        r.state = SlotState::Inferred;
        r.type = type;
        batch.push_back(slot);
      }
    }
    if (!batch.empty()) batches.push_back({cluster.id, batch});
  }

  validate_wave(s, config, wc, batches, tr);
  tr.coverage = coverage_of(s);
  s.stall_counter = Snapshot(s) == before ? s.stall_counter + 1 : 0;
  s.trace.push_back(std::move(tr));
}

}  // namespace

std::map<std::string, std::string> committed_bindings(const PipelineState& state) {
  std::map<std::string, std::string> out;
  for (const auto& [id, r] : state.slots) {
    if (r.preexisting || !r.type || state.unapplied.count(id)) continue;
    if (r.state == SlotState::Validated || r.state == SlotState::Fallback) out[id] = *r.type;
  }
  return out;
}

bool has_unannotated(const PipelineState& state) {
  for (const auto& [id, r] : state.slots)
    if (r.state == SlotState::Unannotated || r.state == SlotState::Inferred) return true;
  return false;
}

PipelineState initialize_state(const SourceRepo& repo, const RunConfig& config,
                               WorkingCopy& wc) {
  PipelineState s;
  s.fingerprint = repo_fingerprint(repo);
  s.base = repo;
  wc.sync(repo);
  if (!wc.check(config.checker).empty()) {
    BaselineResult baseline = prepare_baseline(repo, config.checker, false);
    s.base = std::move(baseline.repo);
    s.baseline_suppressions = baseline.suppressions;
  }
  derive_frontend(s);
  s.edg = build_edg(s.index, resolve_statement_refs(s.base, s.index));
  for (const auto& [id, e] : s.index)
    for (const TypeSlot& slot : e.slots) {
      SlotRecord r;
      if (slot.annotation) {
        r.state = SlotState::Validated;
        r.type = canonical(*slot.annotation);
        r.preexisting = true;
      }
      s.slots[slot.slot_id] = r;
    }
  return s;
}

void run_iteration(PipelineState& state, const RunConfig& config, Oracle& oracle,
                   WorkingCopy& wc) {
  PipelineState saved = state;
  try {
    iterate(state, config, oracle, wc);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::OracleUnavailable) {
      state = std::move(saved);
      wc.sync(committed_repo(state));
    }
    throw;
  }
}

void flush_to_fallback(PipelineState& state, const RunConfig& config, WorkingCopy& wc,
                       IterationTrace& trace) {
  std::vector<std::string> batch;
  for (auto& [id, r] : state.slots)
    if (r.state == SlotState::Unannotated || r.state == SlotState::Inferred) batch.push_back(id);
  for (const std::string& slot : batch) make_fallback(state, slot, trace);
  validate_batch(state, config, wc, "fallback-flush", batch, trace);
  trace.coverage = coverage_of(state);
}

namespace {

// Withholds annotations until the output is checker-clean. Only reached if
// validated annotations interact badly after the fact.
std::vector<Diagnostic> final_check(PipelineState& s, const RunConfig& config, WorkingCopy& wc,
                                    SourceRepo& out) {
  for (int pass = 0;; ++pass) {
    out = committed_repo(s);
    wc.sync(out);
    std::vector<Diagnostic> diags = wc.check(config.checker);
    std::map<std::string, std::string> bindings = committed_bindings(s);
    if (diags.empty() || bindings.empty() || pass >= kStallLimit) return diags;
    std::vector<std::string> applied;
    for (const auto& [slot, type] : bindings) applied.push_back(slot);
    ExtractResult ex = extract_entities(wc.repo());
    Resolver resolver(wc.repo(), ex.entities);
    for (const ConflictReport& r :
         attribute_conflicts(diags, applied, bindings, wc.repo(), ex.entities, resolver))
      for (const std::string& slot : r.culprit_slots) {
        s.slots[slot].state = SlotState::Fallback;
        s.slots[slot].type = "Any";
        s.unapplied.insert(slot);
      }
  }
}

}  // namespace

PipelineResult run_pipeline(const fs::path& repo_path, const RunConfig& config, Oracle* oracle) {
  return run_pipeline(load_repo(repo_path), config, oracle);
}

PipelineResult run_pipeline(const SourceRepo& repo, const RunConfig& config, Oracle* oracle) {
  config.validate();
  std::unique_ptr<Oracle> owned;
  if (!oracle) {
    owned = make_oracle(config);
    oracle = owned.get();
  }
  WorkingCopy wc;
  PipelineResult result;
  PipelineState& s = result.state;
  if (!config.checkpoint.empty() && fs::exists(config.checkpoint)) {
    s = checkpoint_load(config.checkpoint);
    if (s.fingerprint != repo_fingerprint(repo))
      throw Error(ErrorKind::CorruptCheckpoint,
                  config.checkpoint.string() + " was written for a different repository");
  } else {
    s = initialize_state(repo, config, wc);
  }

  result.terminated_by = "complete";
  int ran = 0;
  while (has_unannotated(s)) {
    if (s.iteration >= config.max_iterations) {
      result.terminated_by = "max_iterations";
      break;
    }
    if (s.stall_counter >= kStallLimit) {
      result.terminated_by = "stall";
      break;
    }
    if (config.stop_after_iterations && ran >= *config.stop_after_iterations) {
      result.terminated_by = "stopped";
      result.finished = false;
      result.repo = committed_repo(s);
      return result;
    }
    run_iteration(s, config, *oracle, wc);
    ++ran;
    if (!config.checkpoint.empty()) checkpoint_save(s, config.checkpoint);
  }
  if (has_unannotated(s)) {
    IterationTrace flush;
    flush.iteration = s.iteration;
    flush_to_fallback(s, config, wc, flush);
    result.flush = std::move(flush);
  }
  result.final_diagnostics = final_check(s, config, wc, result.repo);
  result.repo.root = repo.root;
  return result;
}

void checkpoint_save(const PipelineState& s, const fs::path& path) {
  json files = json::array();
  for (const SourceFile& f : s.base.files) files.push_back({{"path", f.path}, {"text", f.text}});
  json edges = json::array();
  for (const DependencyEdge& e : s.edg.edges) edges.push_back(edge_to_json(e));
  json slots = json::object();
  for (const auto& [id, r] : s.slots) {
    json rec = {{"state", to_string(r.state)},
                {"attempts", r.attempts},
                {"preexisting", r.preexisting}};
    rec["type"] = r.type ? json(*r.type) : json(nullptr);
    slots[id] = rec;
  }
  json trace = json::array();
  for (const IterationTrace& t : s.trace) trace.push_back(to_json(t));
  json j = {{"schema_version", kCheckpointSchemaVersion},
            {"fingerprint", s.fingerprint},
            {"base", files},
            {"baseline_suppressions", s.baseline_suppressions},
            {"edg", {{"version", s.edg.version}, {"edges", edges}}},
            {"slots", slots},
            {"feedback", s.feedback},
            {"unapplied", s.unapplied},
            {"iteration", s.iteration},
            {"stall_counter", s.stall_counter},
            {"trace", trace}};
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << j.dump(1) << '\n';
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

PipelineState checkpoint_load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorKind::CorruptCheckpoint, path.string() + " is not a JSON object");
  if (j.value("schema_version", -1) != kCheckpointSchemaVersion)
    throw Error(ErrorKind::CorruptCheckpoint,
                path.string() + ": unsupported schema_version " +
                    (j.contains("schema_version") ? j["schema_version"].dump() : "(missing)"));
  PipelineState s;
  try {
    s.fingerprint = j.at("fingerprint").get<std::string>();
    for (const json& f : j.at("base"))
      s.base.files.push_back({f.at("path").get<std::string>(), f.at("text").get<std::string>()});
    s.baseline_suppressions = j.at("baseline_suppressions").get<std::size_t>();
    derive_frontend(s);
    for (const auto& [id, e] : s.index) s.edg.nodes.insert(id);
    for (const json& e : j.at("edg").at("edges")) s.edg.edges.push_back(edge_from_json(e));
    std::sort(s.edg.edges.begin(), s.edg.edges.end());
    s.edg.version = j.at("edg").at("version").get<std::uint64_t>();
    for (const auto& [id, rec] : j.at("slots").items()) {
      SlotRecord r;
      r.state = slot_state_from_string(rec.at("state").get<std::string>());
      r.attempts = rec.at("attempts").get<int>();
      r.preexisting = rec.at("preexisting").get<bool>();
      if (!rec.at("type").is_null()) r.type = rec.at("type").get<std::string>();
      s.slots[id] = r;
    }
    s.feedback = j.at("feedback").get<std::map<std::string, std::vector<std::string>>>();
    s.unapplied = j.at("unapplied").get<std::set<std::string>>();
    s.iteration = j.at("iteration").get<int>();
    s.stall_counter = j.at("stall_counter").get<int>();
    for (const json& t : j.at("trace")) s.trace.push_back(trace_from_json(t));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::CorruptCheckpoint, path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptCheckpoint) throw;
    throw Error(ErrorKind::CorruptCheckpoint, path.string() + ": " + e.what());
  }
  for (const auto& [id, e] : s.index)
    for (const TypeSlot& slot : e.slots)
      if (!s.slots.count(slot.slot_id))
        throw Error(ErrorKind::CorruptCheckpoint,
                    path.string() + ": slot table does not match the repository");
  return s;
}

json make_report(const PipelineResult& result, const RunConfig& config) {
  const PipelineState& s = result.state;
  std::map<std::string, std::size_t> counts = {
      {"Unannotated", 0}, {"Inferred", 0}, {"Validated", 0}, {"Fallback", 0}};
  json slots = json::object();
  for (const auto& [id, r] : s.slots) {
    ++counts[to_string(r.state)];
    json rec = {{"state", to_string(r.state)}, {"attempts", r.attempts}};
    rec["type"] = r.type ? json(*r.type) : json(nullptr);
    if (r.preexisting) rec["preexisting"] = true;
    if (s.unapplied.count(id)) rec["withheld"] = true;
    slots[id] = rec;
  }
  json parse_errors = json::array();
  for (const ParseFailure& p : s.parse_errors)
    parse_errors.push_back({{"file", p.file}, {"line", p.line}, {"message", p.message}});
  json diags = json::array();
  for (const Diagnostic& d : result.final_diagnostics) diags.push_back(to_string(d));
  json trace = json::array();
  for (const IterationTrace& t : s.trace) trace.push_back(to_json(t));
  json oracle = {{"kind", config.oracle == OracleKind::Http ? "http" : "rule"}};
  if (config.oracle == OracleKind::Http) {
    oracle["endpoint"] = config.http.url;
    if (!config.http.model.empty()) oracle["model"] = config.http.model;
  }
  json report = {{"schema_version", kReportSchemaVersion},
                 {"oracle", oracle},
                 {"config",
                  {{"cluster_bound", config.cluster_bound},
                   {"attempt_bound", config.attempt_bound},
                   {"max_iterations", config.max_iterations},
                   {"token_budget", config.token_budget}}},
                 {"finished", result.finished},
                 {"terminated_by", result.terminated_by},
                 {"iterations", s.iteration},
                 {"slots_total", s.slots.size()},
                 {"states", counts},
                 {"coverage", coverage_of(s)},
                 {"withheld", s.unapplied.size()},
                 {"baseline_suppressions", s.baseline_suppressions},
                 {"parse_errors", parse_errors},
                 {"final_diagnostics", diags},
                 {"slots", slots},
                 {"trace", trace}};
  if (result.flush) report["fallback_flush"] = to_json(*result.flush);
  return report;
}

std::string progress_csv(const PipelineState& state) {
  std::ostringstream out;
  out << "iteration,coverage\n";
  char buf[32];
  for (const IterationTrace& t : state.trace) {
    std::snprintf(buf, sizeof buf, "%.4f", t.coverage);
    out << t.iteration << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace edgtyper

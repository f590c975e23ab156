#include <algorithm>
#include <deque>

#include "edgtyper/error.hpp"
#include "edgtyper/inference.hpp"
#include "edgtyper/type_expr.hpp"

namespace edgtyper {

using nlohmann::json;

SlotStates slot_states(const SlotTable& table) {
  SlotStates out;
  for (const auto& [id, rec] : table) out[id] = rec.state;
  return out;
}

const char* to_string(OracleTask task) {
  return task == OracleTask::FindMissing ? "FindMissing" : "InferTypes";
}

json to_json(const OracleRequest& request) {
  const InferenceContext& ctx = request.context;
  json cluster = json::array();
  for (const auto& [id, code] : ctx.member_definitions) cluster.push_back({{"id", id}, {"code", code}});
  json deps = json::array();
  for (const DependencySummary& d : ctx.dependency_summaries)
    deps.push_back({{"slot", d.slot}, {"type", d.type}});
  return {{"task", to_string(request.task)},
          {"cluster_id", ctx.cluster_id},
          {"cluster", cluster},
          {"deps", deps},
          {"feedback", ctx.feedback},
          {"targets", ctx.targets}};
}

OracleRequest request_from_json(const json& j) {
  try {
    OracleRequest r;
    std::string task = j.at("task").get<std::string>();
    if (task == "FindMissing") r.task = OracleTask::FindMissing;
    else if (task == "InferTypes") r.task = OracleTask::InferTypes;
    else throw Error(ErrorKind::MalformedResponse, "unknown task: " + task);
    r.context.cluster_id = j.value("cluster_id", "");
    for (const json& m : j.at("cluster"))
      r.context.member_definitions.emplace_back(m.at("id").get<std::string>(),
                                                m.at("code").get<std::string>());
    for (const json& d : j.at("deps")) {
      DependencySummary s;
      s.slot = d.at("slot").get<std::string>();
      s.entity = slot_entity(s.slot);
      s.type = d.at("type").get<std::string>();
      r.context.dependency_summaries.push_back(std::move(s));
    }
    r.context.feedback = j.value("feedback", std::vector<std::string>{});
    r.context.targets = j.value("targets", std::vector<std::string>{});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedResponse, std::string("bad oracle request: ") + e.what());
  }
}

json to_json(const OracleResponse& response) {
  json out = json::object();
  if (!response.missing.empty()) {
    json missing = json::array();
    for (const MissingRef& m : response.missing)
      missing.push_back({{"from", m.from}, {"ref", m.ref}, {"reason", m.reason}});
    out["missing"] = missing;
  }
  if (!response.annotations.empty()) {
    json ann = json::array();
    for (const auto& [slot, type] : response.annotations) ann.push_back({{"slot", slot}, {"type", type}});
    out["annotations"] = ann;
  }
  if (response.partial) out["partial"] = true;
  return out;
}

OracleResponse response_from_json(const json& j, OracleTask task) {
  if (!j.is_object()) throw Error(ErrorKind::MalformedResponse, "oracle response is not an object");
  OracleResponse r;
  try {
    if (task == OracleTask::FindMissing) {
      for (const json& m : j.value("missing", json::array()))
        r.missing.push_back({m.at("from").get<std::string>(), m.at("ref").get<std::string>(),
                             m.value("reason", "")});
    } else {
      if (!j.contains("annotations"))
        throw Error(ErrorKind::MalformedResponse, "oracle response lacks \"annotations\"");
      for (const json& a : j.at("annotations"))
        r.annotations.emplace_back(a.at("slot").get<std::string>(), a.at("type").get<std::string>());
      r.partial = j.value("partial", false);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedResponse, std::string("bad oracle response: ") + e.what());
  }
  return r;
}

InferenceContext build_context(const EntityCluster& cluster, const EntityDependencyGraph& g,
                               const EntityIndex& index, const SlotTable& slots,
                               const std::vector<std::string>& feedback, std::size_t token_budget,
                               int attempt_bound) {
  InferenceContext ctx;
  ctx.cluster_id = cluster.id;
  ctx.token_budget = token_budget;
  ctx.feedback = feedback;
  std::set<std::string> members(cluster.members.begin(), cluster.members.end());
  for (const std::string& m : cluster.members) {
    const Entity& e = index.at(m);
    ctx.member_definitions.emplace_back(m, e.definition_text);
    for (const TypeSlot& s : e.slots) {
      auto it = slots.find(s.slot_id);
      if (it == slots.end() || (it->second.state == SlotState::Unannotated &&
                                it->second.attempts < attempt_bound))
        ctx.targets.push_back(s.slot_id);
    }
  }

  // Breadth-first over dependency edges (removed internal edges included).
  std::map<std::string, std::vector<std::string>> adj;
  for (const DependencyEdge& e : g.edges) adj[e.from].push_back(e.to);
  std::map<std::string, int> dist;
  std::deque<std::string> queue;
  for (const std::string& m : cluster.members) {
    dist[m] = 0;
    queue.push_back(m);
  }
  while (!queue.empty()) {
    std::string cur = queue.front();
    queue.pop_front();
    for (const std::string& next : adj[cur]) {
      if (dist.count(next)) continue;
      dist[next] = dist[cur] + 1;
      queue.push_back(next);
    }
  }
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [id, d] : dist)
    if (d > 0 && index.count(id)) order.emplace_back(d, id);
  std::sort(order.begin(), order.end());
  for (const auto& [d, id] : order) {
    const Entity& e = index.at(id);
    if (e.kind == EntityKind::Class) {
      ctx.dependency_summaries.push_back({id, id + "#class", "type[" + e.short_name + "]", d});
      continue;
    }
    for (const TypeSlot& s : e.slots) {
      auto it = slots.find(s.slot_id);
      if (it == slots.end() || it->second.state == SlotState::Unannotated || !it->second.type)
        continue;
      ctx.dependency_summaries.push_back({id, s.slot_id, *it->second.type, d});
    }
  }

  auto size = [&] { return to_json(OracleRequest{OracleTask::InferTypes, ctx}).dump().size(); };
  while (size() > token_budget && !ctx.dependency_summaries.empty())
    ctx.dependency_summaries.pop_back();
  while (size() > token_budget && !ctx.feedback.empty()) ctx.feedback.pop_back();
  if (size() > token_budget)
    throw Error(ErrorKind::OversizeCluster, "cluster " + cluster.id + " needs " +
                                                std::to_string(size()) + " characters, budget " +
                                                std::to_string(token_budget));
  return ctx;
}

MissingDependencyReport probe_missing_dependencies(const InferenceContext& ctx, Oracle& oracle,
                                                   const Resolver& resolver,
                                                   const EntityIndex& index) {
  MissingDependencyReport report;
  report.cluster_id = ctx.cluster_id;
  OracleResponse response = oracle.complete({OracleTask::FindMissing, ctx});
  std::set<std::string> members;
  for (const auto& [id, code] : ctx.member_definitions) members.insert(id);
  std::set<std::pair<std::string, std::string>> seen;
  for (const MissingRef& m : response.missing) {
    if (!members.count(m.from)) {
      report.unresolved_refs.push_back(m.ref);
      continue;
    }
    std::optional<std::string> target = resolver.resolve_reference(m.from, m.ref);
    if (!target || !index.count(*target)) {
      report.unresolved_refs.push_back(m.ref);
      continue;
    }
    if (*target == m.from || !seen.insert({m.from, *target}).second) continue;
    if (report.proposed_edges.size() >= kMaxProbedEdges) break;
    EntityKind from_kind = index.at(m.from).kind;
    EntityKind to_kind = index.at(*target).kind;
    EdgeKind kind = EdgeKind::Access;
    if (to_kind == EntityKind::Function) kind = EdgeKind::Call;
    else if (to_kind == EntityKind::Class && from_kind == EntityKind::Class)
      kind = EdgeKind::Inheritance;
    report.proposed_edges.push_back({m.from, *target, kind, EdgeOrigin::Probed});
  }
  return report;
}

InferenceOutcome infer_cluster_types(const InferenceContext& ctx, Oracle& oracle, SlotTable& slots,
                                     int attempt_bound) {
  InferenceOutcome out;
  std::vector<std::string> targets;
  for (const std::string& t : ctx.targets)
    if (slots[t].attempts < attempt_bound) targets.push_back(t);
  InferenceContext round = ctx;
  while (!targets.empty()) {
    round.targets = targets;
    for (const std::string& t : targets) out.requested.push_back(t);
    OracleResponse response;
    try {
      response = oracle.complete({OracleTask::InferTypes, round});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MalformedResponse) throw;
      std::vector<std::string> retry;
      for (const std::string& t : targets) {
        out.invalid[t] = e.what();
        round.feedback.push_back("[" + t + "] malformed response: " + e.what());
        if (++slots[t].attempts < attempt_bound) retry.push_back(t);
      }
      targets = retry;
      continue;
    }
    std::set<std::string> wanted(targets.begin(), targets.end());
    std::vector<std::string> retry;
    for (const auto& [slot, type] : response.annotations) {
      if (!wanted.erase(slot)) continue;
      ++slots[slot].attempts;
      try {
        out.candidates[slot] = to_source(parse_type_expr(type));
        out.invalid.erase(slot);
      } catch (const Error& e) {
        out.invalid[slot] = e.what();
        round.feedback.push_back("[" + slot + "] invalid type expression `" + type +
                                 "`: " + e.what());
        if (slots[slot].attempts < attempt_bound) retry.push_back(slot);
      }
    }
    targets = retry;
  }
  std::sort(out.requested.begin(), out.requested.end());
  out.requested.erase(std::unique(out.requested.begin(), out.requested.end()),
                      out.requested.end());
  return out;
}

}  // namespace edgtyper

#include "edgtyper/edg.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "edgtyper/error.hpp"

namespace edgtyper {

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Call: return "Call";
    case EdgeKind::Access: return "Access";
    case EdgeKind::Inheritance: return "Inheritance";
    case EdgeKind::Definition: return "Definition";
  }
  return "?";
}

const char* to_string(EdgeOrigin origin) {
  return origin == EdgeOrigin::Pattern ? "Pattern" : "Probed";
}

EdgeKind edge_kind_from_string(std::string_view text) {
  if (text == "Call") return EdgeKind::Call;
  if (text == "Access") return EdgeKind::Access;
  if (text == "Inheritance") return EdgeKind::Inheritance;
  if (text == "Definition") return EdgeKind::Definition;
  throw Error(ErrorKind::CorruptCheckpoint, "unknown edge kind: " + std::string(text));
}

EdgeOrigin edge_origin_from_string(std::string_view text) {
  if (text == "Pattern") return EdgeOrigin::Pattern;
  if (text == "Probed") return EdgeOrigin::Probed;
  throw Error(ErrorKind::CorruptCheckpoint, "unknown edge origin: " + std::string(text));
}

bool EntityDependencyGraph::add_edge(DependencyEdge e) {
  auto it = std::lower_bound(edges.begin(), edges.end(), e);
  if (it != edges.end() && it->key() == e.key()) {
    if (it->origin == EdgeOrigin::Probed && e.origin == EdgeOrigin::Pattern) {
      it->origin = EdgeOrigin::Pattern;
      return true;
    }
    return false;
  }
  edges.insert(it, std::move(e));
  return true;
}

bool EntityDependencyGraph::has_edge(std::string_view from, std::string_view to) const {
  return std::any_of(edges.begin(), edges.end(),
                     [&](const DependencyEdge& e) { return e.from == from && e.to == to; });
}

EntityDependencyGraph build_edg(const EntityIndex& index, const std::vector<StatementRef>& refs) {
  EntityDependencyGraph g;
  for (const auto& [id, e] : index) g.nodes.insert(id);
  auto kind_of = [&](const std::string& id) { return index.at(id).kind; };
  for (const StatementRef& sr : refs) {
    const std::string& owner = sr.owner;
    if (!index.count(owner)) continue;
    EntityKind owner_kind = kind_of(owner);
    for (const Reference& r : sr.referenced) {
      if (r.entity == owner || !index.count(r.entity)) continue;
      EntityKind target = kind_of(r.entity);
      auto add = [&](std::string from, std::string to, EdgeKind k) {
        if (from != to) g.add_edge({std::move(from), std::move(to), k, EdgeOrigin::Pattern});
      };
      if (r.kind == RefKind::Inherit) {
        if (owner_kind == EntityKind::Class && target == EntityKind::Class)
          add(owner, r.entity, EdgeKind::Inheritance);
        continue;
      }
      // A class body's own statements are owned by the attributes they define.
      if (owner_kind == EntityKind::Class) continue;
      switch (r.kind) {
        case RefKind::Call:
          if (target == EntityKind::Function) {
            add(owner, r.entity, EdgeKind::Call);
          } else if (target == EntityKind::Class) {
            std::string init = r.entity + ".__init__";
            if (index.count(init)) add(owner, init, EdgeKind::Call);
          } else {
            add(owner, r.entity, EdgeKind::Access);
          }
          break;
        case RefKind::Read:
          if (target == EntityKind::Variable) add(owner, r.entity, EdgeKind::Access);
          else if (target == EntityKind::Function) add(owner, r.entity, EdgeKind::Call);
          break;
        case RefKind::Write:
          if (target == EntityKind::Variable && owner_kind == EntityKind::Function)
            add(r.entity, owner, EdgeKind::Definition);
          break;
        case RefKind::Inherit:
          break;
      }
    }
  }
  return g;
}

namespace {

using Adjacency = std::vector<std::vector<int>>;

// Tarjan over a dense local graph; returns components of local indices.
std::vector<std::vector<int>> tarjan(const Adjacency& adj) {
  int n = static_cast<int>(adj.size());
  std::vector<int> idx(n, -1), low(n, 0), stack;
  std::vector<bool> on_stack(n, false);
  std::vector<std::vector<int>> comps;
  int counter = 0;
  // Iterative DFS: frames of (node, next child position).
  std::vector<std::pair<int, std::size_t>> frames;
  for (int root = 0; root < n; ++root) {
    if (idx[root] != -1) continue;
    frames.push_back({root, 0});
    idx[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < adj[v].size()) {
        int w = adj[v][pos++];
        if (idx[w] == -1) {
          idx[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
        continue;
      }
      if (low[v] == idx[v]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
      int done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
    }
  }
  return comps;
}

// SCCs of the subgraph induced by `nodes` (global indices) over `pairs`.
std::vector<std::vector<int>> sub_sccs(const std::vector<int>& nodes,
                                       const std::set<std::pair<int, int>>& pairs) {
  std::map<int, int> local;
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<int>(i);
  Adjacency adj(nodes.size());
  for (auto [a, b] : pairs) {
    auto ia = local.find(a), ib = local.find(b);
    if (ia != local.end() && ib != local.end()) adj[ia->second].push_back(ib->second);
  }
  std::vector<std::vector<int>> comps = tarjan(adj);
  for (auto& c : comps)
    for (int& x : c) x = nodes[x];
  return comps;
}

// Local view of one SCC for decomposition: nodes 0..k-1 in global order,
// edges sorted by (from, to) in the same order, with a liveness mask.
struct LocalGraph {
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> out;  // node -> edge ids
  std::vector<bool> alive;

  // SCCs of the nodes with in[v], over live edges other than `skip`.
  std::vector<std::vector<int>> sccs(const std::vector<bool>& in, int skip = -1) const {
    Adjacency adj(out.size());
    for (std::size_t v = 0; v < out.size(); ++v) {
      if (!in[v]) continue;
      for (int e : out[v])
        if (e != skip && alive[e] && in[edges[e].second]) adj[v].push_back(edges[e].second);
    }
    std::vector<std::vector<int>> comps;
    for (auto& c : tarjan(adj))
      if (in[c.front()]) comps.push_back(std::move(c));
    return comps;
  }

  // Whether `to` is reachable from `from` inside `in` without edge `skip`.
  bool reaches(int from, int to, const std::vector<bool>& in, int skip) const {
    std::vector<bool> seen(out.size(), false);
    std::vector<int> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int e : out[v]) {
        int w = edges[e].second;
        if (e == skip || !alive[e] || !in[w] || seen[w]) continue;
        if (w == to) return true;
        seen[w] = true;
        stack.push_back(w);
      }
    }
    return false;
  }
};

// Greedy decomposition of one SCC: repeatedly drop the internal edge whose
// removal minimizes (largest remaining SCC, number of SCCs, (from, to)).
// Returns the removed (from, to) pairs and the final parts.
std::pair<std::vector<std::pair<int, int>>, std::vector<std::vector<int>>> decompose(
    const std::vector<int>& scc, const std::set<std::pair<int, int>>& pairs, std::size_t bound) {
  std::map<int, int> local;
  for (std::size_t i = 0; i < scc.size(); ++i) local[scc[i]] = static_cast<int>(i);
  LocalGraph lg;
  lg.out.resize(scc.size());
  for (auto [a, b] : pairs) {
    auto ia = local.find(a), ib = local.find(b);
    if (ia == local.end() || ib == local.end()) continue;
    lg.out[ia->second].push_back(static_cast<int>(lg.edges.size()));
    lg.edges.push_back({ia->second, ib->second});
  }
  lg.alive.assign(lg.edges.size(), true);
  const std::vector<bool> everything(scc.size(), true);

  std::vector<std::pair<int, int>> removed;
  while (true) {
    std::vector<std::vector<int>> comps = lg.sccs(everything);
    const std::vector<int>* target = nullptr;
    for (const auto& c : comps)
      if (c.size() > bound &&
          (!target || c.size() > target->size() ||
           (c.size() == target->size() && c.front() < target->front())))
        target = &c;
    if (!target) {
      for (auto& c : comps)
        for (int& x : c) x = scc[x];
      return {removed, comps};
    }
    std::vector<bool> in(scc.size(), false);
    for (int v : *target) in[v] = true;

    // Edges whose removal keeps the target strongly connected all score
    // (|target|, 1, edge), so only the first of them can win.
    std::tuple<std::size_t, std::size_t, int> best{SIZE_MAX, SIZE_MAX, -1};
    bool have_unsplitting = false;
    for (int e = 0; e < static_cast<int>(lg.edges.size()); ++e) {
      auto [u, v] = lg.edges[e];
      if (!lg.alive[e] || !in[u] || !in[v]) continue;
      std::tuple<std::size_t, std::size_t, int> score;
      if (lg.reaches(u, v, in, e)) {
        if (have_unsplitting) continue;
        have_unsplitting = true;
        score = {target->size(), 1, e};
      } else {
        std::vector<std::vector<int>> parts = lg.sccs(in, e);
        std::size_t largest = 0;
        for (const auto& part : parts) largest = std::max(largest, part.size());
        score = {largest, parts.size(), e};
      }
      if (score < best) best = score;
    }
    int chosen = std::get<2>(best);
    lg.alive[chosen] = false;
    removed.push_back({scc[lg.edges[chosen].first], scc[lg.edges[chosen].second]});
  }
}

std::string cluster_id_for(const std::vector<std::string>& members) {
  std::string id;
  for (const std::string& m : members) {
    if (!id.empty()) id += "|";
    id += m;
  }
  return id;
}

}  // namespace

std::vector<std::size_t> ClusterDAG::successors(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (auto it = edges.lower_bound({cluster, 0}); it != edges.end() && it->first == cluster; ++it)
    out.push_back(it->second);
  return out;
}

std::vector<std::vector<std::string>> strongly_connected_components(
    const std::set<std::string>& nodes, const std::vector<DependencyEdge>& edges) {
  std::vector<std::string> names(nodes.begin(), nodes.end());
  std::map<std::string, int> pos;
  for (std::size_t i = 0; i < names.size(); ++i) pos[names[i]] = static_cast<int>(i);
  Adjacency adj(names.size());
  for (const DependencyEdge& e : edges) {
    auto a = pos.find(e.from), b = pos.find(e.to);
    if (a != pos.end() && b != pos.end()) adj[a->second].push_back(b->second);
  }
  std::vector<std::vector<std::string>> out;
  for (const auto& comp : tarjan(adj)) {
    std::vector<std::string> c;
    for (int i : comp) c.push_back(names[i]);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end());
  return out;
}

ClusterDAG condense_and_bound(const EntityDependencyGraph& g, std::size_t bound) {
  if (bound < 1) bound = 1;
  std::vector<std::string> names(g.nodes.begin(), g.nodes.end());
  std::map<std::string, int> pos;
  for (std::size_t i = 0; i < names.size(); ++i) pos[names[i]] = static_cast<int>(i);
  std::set<std::pair<int, int>> pairs;
  for (const DependencyEdge& e : g.edges) {
    auto a = pos.find(e.from), b = pos.find(e.to);
    if (a != pos.end() && b != pos.end() && a->second != b->second)
      pairs.insert({a->second, b->second});
  }
  std::vector<int> all(names.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

  struct Part {
    std::vector<int> members;
    std::vector<std::pair<int, int>> removed;
  };
  std::vector<Part> parts;
  std::set<std::pair<int, int>> removed_pairs;
  for (const auto& scc : sub_sccs(all, pairs)) {
    if (scc.size() <= bound) {
      parts.push_back({scc, {}});
      continue;
    }
    std::set<int> members(scc.begin(), scc.end());
    std::set<std::pair<int, int>> internal;
    for (auto p : pairs)
      if (members.count(p.first) && members.count(p.second)) internal.insert(p);
    auto [removed, pieces] = decompose(scc, internal, bound);
    removed_pairs.insert(removed.begin(), removed.end());
    // Removed edges are recorded on the piece holding their source.
    for (auto& piece : pieces) {
      Part part{piece, {}};
      std::set<int> in(piece.begin(), piece.end());
      for (auto p : removed)
        if (in.count(p.first)) part.removed.push_back(p);
      parts.push_back(std::move(part));
    }
  }

  ClusterDAG dag;
  for (const Part& p : parts) {
    EntityCluster c;
    for (int m : p.members) c.members.push_back(names[m]);
    std::sort(c.members.begin(), c.members.end());
    c.id = cluster_id_for(c.members);
    for (auto [a, b] : p.removed)
      for (const DependencyEdge& e : g.edges)
        if (e.from == names[a] && e.to == names[b]) c.removed_internal_edges.push_back(e);
    dag.clusters.push_back(std::move(c));
  }
  std::sort(dag.clusters.begin(), dag.clusters.end(),
            [](const EntityCluster& a, const EntityCluster& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < dag.clusters.size(); ++i)
    for (const std::string& m : dag.clusters[i].members) dag.cluster_of[m] = i;
  for (auto [a, b] : pairs) {
    if (removed_pairs.count({a, b})) continue;
    std::size_t ca = dag.cluster_of.at(names[a]), cb = dag.cluster_of.at(names[b]);
    if (ca != cb) dag.edges.insert({ca, cb});
  }
  return dag;
}

namespace {

template <typename Pred>
bool all_slots(const EntityCluster& c, const EntityIndex& index, const SlotStates& slots,
               Pred pred) {
  for (const std::string& m : c.members) {
    auto it = index.find(m);
    if (it == index.end()) continue;
    for (const TypeSlot& s : it->second.slots) {
      auto st = slots.find(s.slot_id);
      SlotState state = st == slots.end() ? SlotState::Unannotated : st->second;
      if (!pred(state)) return false;
    }
  }
  return true;
}

}  // namespace

bool cluster_has_unannotated(const EntityCluster& c, const EntityIndex& index,
                             const SlotStates& slots) {
  return !all_slots(c, index, slots, [](SlotState s) { return s != SlotState::Unannotated; });
}

bool cluster_fully_annotated(const EntityCluster& c, const EntityIndex& index,
                             const SlotStates& slots) {
  return all_slots(c, index, slots, [](SlotState s) { return s != SlotState::Unannotated; });
}

std::vector<std::size_t> select_targets(const ClusterDAG& dag, const EntityIndex& index,
                                        const SlotStates& slots) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dag.clusters.size(); ++i) {
    if (!cluster_has_unannotated(dag.clusters[i], index, slots)) continue;
    bool ready = true;
    for (std::size_t succ : dag.successors(i))
      if (!cluster_fully_annotated(dag.clusters[succ], index, slots)) ready = false;
    if (ready) out.push_back(i);
  }
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    const EntityCluster& ca = dag.clusters[a];
    const EntityCluster& cb = dag.clusters[b];
    if (ca.members.size() != cb.members.size()) return ca.members.size() < cb.members.size();
    return ca.members.front() < cb.members.front();
  });
  return out;
}

MergeReport merge_new_edges(EntityDependencyGraph& g, const std::vector<DependencyEdge>& probed,
                            const EntityIndex& index) {
  MergeReport report;
  bool changed = false;
  for (DependencyEdge e : probed) {
    e.origin = EdgeOrigin::Probed;
    if (!index.count(e.from) || !g.nodes.count(e.from)) {
      report.rejected.push_back({e, "unknown entity: " + e.from});
      continue;
    }
    if (!index.count(e.to) || !g.nodes.count(e.to)) {
      report.rejected.push_back({e, "unknown entity: " + e.to});
      continue;
    }
    if (e.from == e.to) {
      report.rejected.push_back({e, "self-loop"});
      continue;
    }
    if (g.add_edge(e)) {
      changed = true;
      report.added.push_back(e);
    }
  }
  if (changed) ++g.version;
  return report;
}

std::string to_dot(const EntityDependencyGraph& g, const EntityIndex& index) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  };
  std::ostringstream out;
  out << "digraph edg {\n";
  for (const std::string& n : g.nodes) {
    auto it = index.find(n);
    const char* kind = it == index.end() ? "?" : to_string(it->second.kind);
    const char* shape = it != index.end() && it->second.kind == EntityKind::Class ? "box"
                        : it != index.end() && it->second.kind == EntityKind::Variable
                            ? "ellipse"
                            : "oval";
    out << "  " << quote(n) << " [kind=" << quote(kind) << ", shape=" << shape << "];\n";
  }
  for (const DependencyEdge& e : g.edges) {
    out << "  " << quote(e.from) << " -> " << quote(e.to) << " [label=" << quote(to_string(e.kind));
    if (e.origin == EdgeOrigin::Probed) out << ", style=dashed";
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

nlohmann::json edge_to_json(const DependencyEdge& e) {
  return {{"from", e.from}, {"to", e.to}, {"kind", to_string(e.kind)},
          {"origin", to_string(e.origin)}};
}

DependencyEdge edge_from_json(const nlohmann::json& j) {
  return {j.at("from").get<std::string>(), j.at("to").get<std::string>(),
          edge_kind_from_string(j.at("kind").get<std::string>()),
          edge_origin_from_string(j.at("origin").get<std::string>())};
}

nlohmann::json to_json(const EntityDependencyGraph& g, const EntityIndex& index) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const std::string& n : g.nodes) {
    auto it = index.find(n);
    nodes.push_back({{"id", n}, {"kind", it == index.end() ? "?" : to_string(it->second.kind)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const DependencyEdge& e : g.edges) edges.push_back(edge_to_json(e));
  return {{"nodes", nodes}, {"edges", edges}};
}

}  // namespace edgtyper

#include "graph_oracle.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace edgtyper::testing {

EntityDependencyGraph random_graph(std::uint64_t seed, int max_nodes) {
  std::mt19937_64 rng(seed);
  int n = std::uniform_int_distribution<int>(1, max_nodes)(rng);
  // Mix sparse and dense graphs so both tiny and oversized SCCs show up.
  double density = std::uniform_real_distribution<double>(0.0, 0.25)(rng);
  EntityDependencyGraph g;
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) {
    std::string name = (i < 10 ? "n0" : "n") + std::to_string(i);
    names.push_back(name);
    g.nodes.insert(name);
  }
  std::bernoulli_distribution coin(density);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && coin(rng)) g.add_edge({names[a], names[b], EdgeKind::Call, EdgeOrigin::Pattern});
  return g;
}

namespace {

std::vector<std::vector<bool>> closure(const EntityDependencyGraph& g,
                                       const std::vector<std::string>& names) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < names.size(); ++i) pos[names[i]] = i;
  std::size_t n = names.size();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) r[i][i] = true;
  for (const DependencyEdge& e : g.edges) r[pos.at(e.from)][pos.at(e.to)] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (r[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (r[k][j]) r[i][j] = true;
  return r;
}

}  // namespace

std::set<std::set<std::string>> reachability_components(const EntityDependencyGraph& g) {
  std::vector<std::string> names(g.nodes.begin(), g.nodes.end());
  auto r = closure(g, names);
  std::set<std::set<std::string>> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::set<std::string> c;
    for (std::size_t j = 0; j < names.size(); ++j)
      if (r[i][j] && r[j][i]) c.insert(names[j]);
    out.insert(c);
  }
  return out;
}

std::string check_condensation(const EntityDependencyGraph& g, const ClusterDAG& dag,
                               std::size_t bound) {
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < dag.clusters.size(); ++i) {
    const EntityCluster& c = dag.clusters[i];
    if (c.members.empty()) return "empty cluster";
    if (c.members.size() > bound) return "cluster " + c.id + " exceeds the bound";
    for (const std::string& m : c.members) {
      if (!g.nodes.count(m)) return "unknown member " + m;
      if (seen[m]++) return "node " + m + " in two clusters";
      auto it = dag.cluster_of.find(m);
      if (it == dag.cluster_of.end() || it->second != i) return "cluster_of disagrees for " + m;
    }
  }
  for (const std::string& n : g.nodes)
    if (!seen.count(n)) return "node " + n + " in no cluster";

  auto comps = reachability_components(g);
  std::map<std::string, const std::set<std::string>*> comp_of;
  for (const auto& c : comps)
    for (const std::string& m : c) comp_of[m] = &c;
  for (const EntityCluster& c : dag.clusters)
    for (const std::string& m : c.members)
      if (comp_of.at(m) != comp_of.at(c.members.front()))
        return "cluster " + c.id + " spans two components";

  // Acyclic: Kahn's algorithm over the cluster edges.
  std::size_t n = dag.clusters.size();
  std::vector<int> indeg(n, 0);
  for (auto [a, b] : dag.edges) {
    if (a >= n || b >= n || a == b) return "bad cluster edge";
    ++indeg[b];
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (!indeg[i]) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    std::size_t c = ready.back();
    ready.pop_back();
    ++visited;
    for (auto [a, b] : dag.edges)
      if (a == c && --indeg[b] == 0) ready.push_back(b);
  }
  if (visited != n) return "cluster graph has a cycle";

  std::set<std::pair<std::size_t, std::size_t>> justified;
  for (const DependencyEdge& e : g.edges) {
    std::size_t a = dag.cluster_of.at(e.from), b = dag.cluster_of.at(e.to);
    if (a == b) continue;
    if (dag.edges.count({a, b})) {
      justified.insert({a, b});
      continue;
    }
    const auto& removed = dag.clusters[a].removed_internal_edges;
    if (std::find(removed.begin(), removed.end(), e) == removed.end())
      return "edge " + e.from + " -> " + e.to + " was lost";
    if (comp_of.at(e.from) != comp_of.at(e.to)) return "removed edge between components";
  }
  if (justified.size() != dag.edges.size()) return "cluster edge without an entity edge";
  return {};
}

namespace {

SlotState state_of(const SlotStates& states, const std::string& slot) {
  auto it = states.find(slot);
  return it == states.end() ? SlotState::Unannotated : it->second;
}

bool any_unannotated(const EntityCluster& c, const SlotStates& states, const EntityIndex& index) {
  for (const std::string& m : c.members) {
    auto e = index.find(m);
    if (e == index.end()) continue;
    for (const TypeSlot& s : e->second.slots)
      if (state_of(states, s.slot_id) == SlotState::Unannotated) return true;
  }
  return false;
}

}  // namespace

std::string check_wave(const ClusterDAG& dag, const std::vector<std::size_t>& wave,
                       const SlotStates& states, const EntityIndex& index) {
  std::set<std::size_t> in_wave(wave.begin(), wave.end());
  if (in_wave.size() != wave.size()) return "cluster selected twice";
  for (std::size_t c : wave) {
    if (c >= dag.clusters.size()) return "unknown cluster";
    if (!any_unannotated(dag.clusters[c], states, index))
      return dag.clusters[c].id + " has nothing to annotate";
    for (std::size_t dep : dag.successors(c)) {
      if (in_wave.count(dep)) return dag.clusters[c].id + " depends on a wave member";
      if (any_unannotated(dag.clusters[dep], states, index))
        return dag.clusters[c].id + " depends on unannotated " + dag.clusters[dep].id;
    }
  }
  for (std::size_t c = 0; c < dag.clusters.size(); ++c) {
    if (in_wave.count(c) || !any_unannotated(dag.clusters[c], states, index)) continue;
    bool ready = true;
    for (std::size_t dep : dag.successors(c))
      if (any_unannotated(dag.clusters[dep], states, index)) ready = false;
    if (ready) return "ready cluster " + dag.clusters[c].id + " was not selected";
  }
  for (std::size_t i = 1; i < wave.size(); ++i) {
    const EntityCluster& a = dag.clusters[wave[i - 1]];
    const EntityCluster& b = dag.clusters[wave[i]];
    if (std::pair(a.members.size(), a.members.front()) > std::pair(b.members.size(), b.members.front()))
      return "wave out of order at " + b.id;
  }
  return {};
}

}  // namespace edgtyper::testing

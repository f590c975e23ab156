#include <gtest/gtest.h>

#include "edgtyper/edg.hpp"
#include "graph_oracle.hpp"

using namespace edgtyper;
using namespace edgtyper::testing;

namespace {

struct Built {
  SourceRepo repo;
  ExtractResult ex;
  EntityDependencyGraph g;
};

Built build(std::vector<SourceFile> files) {
  Built b;
  b.repo.root = "/virtual";
  b.repo.files = std::move(files);
  b.ex = extract_entities(b.repo);
  b.g = build_edg(b.ex.entities, resolve_statement_refs(b.repo, b.ex.entities));
  return b;
}

bool has(const EntityDependencyGraph& g, const std::string& from, const std::string& to,
         EdgeKind kind) {
  for (const DependencyEdge& e : g.edges)
    if (e.from == from && e.to == to && e.kind == kind) return true;
  return false;
}

EntityDependencyGraph ring(int n) {
  EntityDependencyGraph g;
  for (int i = 0; i < n; ++i) g.nodes.insert("r" + std::to_string(i));
  for (int i = 0; i < n; ++i)
    g.add_edge({"r" + std::to_string(i), "r" + std::to_string((i + 1) % n), EdgeKind::Call,
                EdgeOrigin::Pattern});
  return g;
}

}  // namespace

TEST(Edg, PatternEdges) {
  Built b = build({{"m.py",
                    "LIMIT = 3\n\n\nclass Base:\n    def __init__(self, n):\n        self.n = n\n\n\n"
                    "class Child(Base):\n    pass\n\n\ndef make():\n    return Child(LIMIT)\n\n\n"
                    "def helper():\n    return make()\n"}});
  const auto& g = b.g;
  EXPECT_TRUE(has(g, "m.Child", "m.Base", EdgeKind::Inheritance));
  EXPECT_TRUE(has(g, "m.helper", "m.make", EdgeKind::Call));
  EXPECT_TRUE(has(g, "m.make", "m.LIMIT", EdgeKind::Access));
  // self.n is written in __init__: the attribute depends on its definer.
  EXPECT_TRUE(has(g, "m.Base.n", "m.Base.__init__", EdgeKind::Definition));
  for (const DependencyEdge& e : g.edges) {
    EXPECT_NE(e.from, e.to);
    EXPECT_EQ(e.origin, EdgeOrigin::Pattern);
  }
  EXPECT_TRUE(std::is_sorted(g.edges.begin(), g.edges.end()));
}

TEST(Edg, AddEdgeUpgradesAndCountsChanges) {
  EntityDependencyGraph g;
  g.nodes = {"a", "b"};
  EXPECT_TRUE(g.add_edge({"a", "b", EdgeKind::Call, EdgeOrigin::Probed}));
  EXPECT_FALSE(g.add_edge({"a", "b", EdgeKind::Call, EdgeOrigin::Probed}));
  EXPECT_TRUE(g.has_edge("a", "b"));
  EXPECT_FALSE(g.has_edge("b", "a"));
  EXPECT_EQ(g.edges.size(), 1u);
}

TEST(Edg, TarjanMatchesReachability) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    EntityDependencyGraph g = random_graph(seed, 30);
    auto sccs = strongly_connected_components(g.nodes, g.edges);
    std::set<std::set<std::string>> got;
    for (const auto& c : sccs) got.insert(std::set<std::string>(c.begin(), c.end()));
    ASSERT_EQ(got, reachability_components(g)) << "seed " << seed;
  }
}

TEST(Edg, UnboundedCondensationIsTheSccPartition) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    EntityDependencyGraph g = random_graph(seed, 30);
    ClusterDAG dag = condense_and_bound(g, g.nodes.size());
    std::set<std::set<std::string>> got;
    for (const EntityCluster& c : dag.clusters)
      got.insert(std::set<std::string>(c.members.begin(), c.members.end()));
    ASSERT_EQ(got, reachability_components(g)) << "seed " << seed;
    ASSERT_EQ(check_condensation(g, dag, g.nodes.size()), "") << "seed " << seed;
  }
}

TEST(Edg, BoundSplitsLargeCycles) {
  EntityDependencyGraph g = ring(12);
  ClusterDAG dag = condense_and_bound(g, 5);
  EXPECT_EQ(check_condensation(g, dag, 5), "");
  EXPECT_GE(dag.clusters.size(), 3u);
  std::size_t removed = 0;
  for (const EntityCluster& c : dag.clusters) removed += c.removed_internal_edges.size();
  EXPECT_GE(removed, 1u);
}

TEST(Edg, BoundHoldsOnRandomGraphs) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    EntityDependencyGraph g = random_graph(seed, 40);
    for (std::size_t bound : {1u, 2u, 5u}) {
      ClusterDAG dag = condense_and_bound(g, bound);
      ASSERT_EQ(check_condensation(g, dag, bound), "") << "seed " << seed << " bound " << bound;
    }
  }
}

TEST(Edg, CondensationIsDeterministic) {
  EntityDependencyGraph g = random_graph(77, 40);
  ClusterDAG a = condense_and_bound(g), b = condense_and_bound(g);
  ASSERT_EQ(a.clusters.size(), b.clusters.size());
  for (std::size_t i = 0; i < a.clusters.size(); ++i) EXPECT_EQ(a.clusters[i].id, b.clusters[i].id);
  EXPECT_EQ(a.edges, b.edges);
}

TEST(Edg, SelectTargetsWaitsForDependencies) {
  Built b = build({{"m.py", "def leaf(x):\n    return x\n\n\ndef mid(y):\n    return leaf(y)\n\n\n"
                            "def top():\n    return mid(1)\n"}});
  ClusterDAG dag = condense_and_bound(b.g);
  SlotStates states;
  auto names = [&](const std::vector<std::size_t>& ts) {
    std::vector<std::string> out;
    for (std::size_t t : ts) out.push_back(dag.clusters[t].id);
    return out;
  };
  EXPECT_EQ(names(select_targets(dag, b.ex.entities, states)), std::vector<std::string>{"m.leaf"});
  states["m.leaf#param:x"] = SlotState::Validated;
  states["m.leaf#return"] = SlotState::Fallback;
  EXPECT_EQ(names(select_targets(dag, b.ex.entities, states)), std::vector<std::string>{"m.mid"});
  states["m.mid#param:y"] = SlotState::Inferred;
  states["m.mid#return"] = SlotState::Inferred;
  // Inferred counts as annotated for scheduling; `top` only has a return slot left.
  EXPECT_EQ(names(select_targets(dag, b.ex.entities, states)), std::vector<std::string>{"m.top"});
}

TEST(Edg, SelectTargetsOrdersBySizeThenName) {
  EntityDependencyGraph g;
  g.nodes = {"m.a", "m.b", "m.c", "m.d"};
  g.add_edge({"m.c", "m.d", EdgeKind::Call, EdgeOrigin::Pattern});
  g.add_edge({"m.d", "m.c", EdgeKind::Call, EdgeOrigin::Pattern});
  EntityIndex index;
  for (const std::string& n : g.nodes) {
    Entity e;
    e.id = n;
    e.kind = EntityKind::Variable;
    TypeSlot slot;
    slot.slot_id = n + "#var";
    slot.role = "var";
    e.slots.push_back(slot);
    index[n] = e;
  }
  ClusterDAG dag = condense_and_bound(g);
  std::vector<std::string> order;
  for (std::size_t t : select_targets(dag, index, {})) order.push_back(dag.clusters[t].id);
  EXPECT_EQ(order, (std::vector<std::string>{"m.a", "m.b", "m.c|m.d"}));
}

TEST(Edg, MergeRejectsUnknownAndSelfLoops) {
  Built b = build({{"m.py", "def f():\n    return 1\n\n\ndef g():\n    return 2\n"}});
  std::uint64_t v = b.g.version;
  MergeReport r = merge_new_edges(
      b.g,
      {{"m.f", "m.g", EdgeKind::Call, EdgeOrigin::Pattern},
       {"m.f", "m.f", EdgeKind::Call, EdgeOrigin::Pattern},
       {"m.f", "m.nope", EdgeKind::Access, EdgeOrigin::Pattern}},
      b.ex.entities);
  ASSERT_EQ(r.added.size(), 1u);
  EXPECT_EQ(r.added[0].origin, EdgeOrigin::Probed);
  EXPECT_EQ(r.rejected.size(), 2u);
  EXPECT_EQ(b.g.version, v + 1);
  MergeReport again = merge_new_edges(b.g, {{"m.f", "m.g", EdgeKind::Call, EdgeOrigin::Probed}},
                                      b.ex.entities);
  EXPECT_TRUE(again.added.empty());
  EXPECT_EQ(b.g.version, v + 1);
}

TEST(Edg, ExportFormats) {
  Built b = build({{"m.py", "def f():\n    return g()\n\n\ndef g():\n    return 2\n"}});
  std::string dot = to_dot(b.g, b.ex.entities);
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  EXPECT_NE(dot.find("\"m.f\" -> \"m.g\""), std::string::npos);
  nlohmann::json j = to_json(b.g, b.ex.entities);
  ASSERT_TRUE(j.contains("edges"));
  DependencyEdge e = edge_from_json(edge_to_json(b.g.edges.front()));
  EXPECT_EQ(e, b.g.edges.front());
  EXPECT_EQ(edge_kind_from_string(to_string(EdgeKind::Inheritance)), EdgeKind::Inheritance);
  EXPECT_EQ(edge_origin_from_string(to_string(EdgeOrigin::Probed)), EdgeOrigin::Probed);
}

TEST(Edg, GreedyCutsTheLexicographicallyFirstBridge) {
  EntityDependencyGraph g;
  g.nodes = {"a", "b", "c", "d", "e", "f"};
  for (auto [x, y] : std::vector<std::pair<std::string, std::string>>{
           {"a", "b"}, {"b", "c"}, {"c", "a"}, {"d", "e"}, {"e", "f"}, {"f", "d"},
           {"c", "d"}, {"f", "a"}})
    g.add_edge({x, y, EdgeKind::Call, EdgeOrigin::Pattern});
  ClusterDAG dag = condense_and_bound(g, 3);
  ASSERT_EQ(dag.clusters.size(), 2u);
  EXPECT_EQ(dag.clusters[0].id, "a|b|c");
  EXPECT_EQ(dag.clusters[1].id, "d|e|f");
  ASSERT_EQ(dag.clusters[0].removed_internal_edges.size(), 1u);
  EXPECT_EQ(dag.clusters[0].removed_internal_edges[0].to, "d");
  // f -> a survives as the only cluster edge.
  EXPECT_EQ(dag.edges, (std::set<std::pair<std::size_t, std::size_t>>{{1, 0}}));
}

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgtyper/frontend.hpp"

namespace edgtyper {

enum class EdgeKind { Call, Access, Inheritance, Definition };
enum class EdgeOrigin { Pattern, Probed };
const char* to_string(EdgeKind kind);
const char* to_string(EdgeOrigin origin);
EdgeKind edge_kind_from_string(std::string_view text);
EdgeOrigin edge_origin_from_string(std::string_view text);

// `from` depends on `to`.
struct DependencyEdge {
  std::string from;
  std::string to;
  EdgeKind kind = EdgeKind::Access;
  EdgeOrigin origin = EdgeOrigin::Pattern;

  auto key() const { return std::tie(from, to, kind); }
  friend bool operator<(const DependencyEdge& a, const DependencyEdge& b) {
    return a.key() < b.key();
  }
  friend bool operator==(const DependencyEdge& a, const DependencyEdge& b) {
    return a.key() == b.key() && a.origin == b.origin;
  }
};

struct EntityDependencyGraph {
  std::set<std::string> nodes;
  std::vector<DependencyEdge> edges;  // sorted by (from, to, kind), unique
  std::uint64_t version = 0;

  // Inserts or upgrades an edge; returns true if the edge set changed.
  bool add_edge(DependencyEdge e);
  bool has_edge(std::string_view from, std::string_view to) const;
};

EntityDependencyGraph build_edg(const EntityIndex& index, const std::vector<StatementRef>& refs);

struct EntityCluster {
  std::string id;                            // members joined with '|'
  std::vector<std::string> members;          // sorted
  std::vector<DependencyEdge> removed_internal_edges;
};

struct ClusterDAG {
  std::vector<EntityCluster> clusters;                       // sorted by id
  std::map<std::string, std::size_t> cluster_of;             // entity -> cluster index
  std::set<std::pair<std::size_t, std::size_t>> edges;       // dependent -> dependency

  std::vector<std::size_t> successors(std::size_t cluster) const;
};

inline constexpr std::size_t kDefaultClusterBound = 5;

ClusterDAG condense_and_bound(const EntityDependencyGraph& g,
                              std::size_t bound = kDefaultClusterBound);

// Plain strongly connected components (Tarjan), each sorted, list sorted.
std::vector<std::vector<std::string>> strongly_connected_components(
    const std::set<std::string>& nodes, const std::vector<DependencyEdge>& edges);

using SlotStates = std::map<std::string, SlotState>;

bool cluster_has_unannotated(const EntityCluster& c, const EntityIndex& index,
                             const SlotStates& slots);
bool cluster_fully_annotated(const EntityCluster& c, const EntityIndex& index,
                             const SlotStates& slots);

// Clusters with an unannotated slot whose dependency clusters are all fully
// annotated, ordered by (size, smallest member).
std::vector<std::size_t> select_targets(const ClusterDAG& dag, const EntityIndex& index,
                                        const SlotStates& slots);

struct RejectedEdge {
  DependencyEdge edge;
  std::string reason;
};

struct MergeReport {
  std::vector<DependencyEdge> added;
  std::vector<RejectedEdge> rejected;
};

// Adds probed edges (origin forced to Probed). Unknown endpoints and
// self-loops are rejected. Bumps the version iff the edge set changed.
MergeReport merge_new_edges(EntityDependencyGraph& g, const std::vector<DependencyEdge>& probed,
                            const EntityIndex& index);

std::string to_dot(const EntityDependencyGraph& g, const EntityIndex& index);
nlohmann::json to_json(const EntityDependencyGraph& g, const EntityIndex& index);
nlohmann::json edge_to_json(const DependencyEdge& e);
DependencyEdge edge_from_json(const nlohmann::json& j);

}  // namespace edgtyper

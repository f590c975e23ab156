#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "edgtyper/edg.hpp"

namespace edgtyper::testing {

// Seeded random digraph with 1..max_nodes nodes named n00, n01, ...
EntityDependencyGraph random_graph(std::uint64_t seed, int max_nodes);

// Components by brute-force mutual reachability (transitive closure).
std::set<std::set<std::string>> reachability_components(const EntityDependencyGraph& g);

// Empty when `dag` is a valid bounded condensation of `g`: a partition of
// the nodes, clusters of at most `bound` members, each inside one
// reachability component, an acyclic cluster graph justified by real edges,
// and every edge kept inside a cluster, on the DAG, or recorded as removed.
std::string check_condensation(const EntityDependencyGraph& g, const ClusterDAG& dag,
                               std::size_t bound);

// Empty when `wave` is exactly the set of ready clusters: each has an
// unannotated slot, every dependency cluster is fully annotated, no two
// members depend on each other, and no ready cluster was left out. Order
// must be (size, smallest member).
std::string check_wave(const ClusterDAG& dag, const std::vector<std::size_t>& wave,
                       const SlotStates& states, const EntityIndex& index);

}  // namespace edgtyper::testing

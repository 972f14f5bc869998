#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modeller/planner.hpp"

namespace modeller {

using Edge = std::pair<std::string, std::string>;

// Labelled digraph. Nodes compare by label across networks.
struct Digraph {
    std::set<std::string> nodes;
    std::set<Edge> edges;
    std::set<Edge> alternatives;  // conditioning edges; subset of `edges`
    std::set<std::string> goals;

    void add_edge(const std::string& a, const std::string& b);
    void remove_edge(const std::string& a, const std::string& b);
    void remove_node(const std::string& n);
    std::vector<std::string> preds(const std::string& n) const;
    std::vector<std::string> succs(const std::string& n) const;
    bool has_path(const std::string& a, const std::string& b) const;  // length >= 1
    std::set<std::string> ancestors(const std::string& n) const;
    Digraph induced(const std::set<std::string>& keep) const;
    void merge(const Digraph& o);

    bool operator==(const Digraph& o) const { return nodes == o.nodes && edges == o.edges; }
};

struct EncapsulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EncapsulationLimits {
    std::size_t max_alternatives = 4096;
    std::size_t max_paths = 10000;
    int max_depth = 16;
};

// Label used for an action-network node: "<sv>-A", "<sv>-1", "C<id>", ...
std::string node_label(const Model& m, const GroupedModel& g, const PlanNode& n);
Digraph to_digraph(const ActionNetwork& an, const Model& m, const GroupedModel& g);

// One network per combination of conditioning alternatives reachable from
// the goals; nodes that no longer lead to a goal are dropped.
std::vector<Digraph> split_alternatives(const Digraph& an, const EncapsulationLimits& lim = {});

// Removes edge (n0, n1) and links every predecessor of n0 to every
// successor of n1.
void remove_with_rerelation(Digraph& net, const std::string& n0, const std::string& n1);

// Removes a node, linking its predecessors to its successors.
void remove_node_with_rerelation(Digraph& net, const std::string& n);

Digraph construct_encapsulated_an(const std::vector<Digraph>& nets);

Digraph get_connecting_subnetwork(const Digraph& net, const std::string& source, const std::string& target,
                                  const EncapsulationLimits& lim = {});

struct Ean {
    Digraph graph;
    bool leaf = false;
    std::vector<Digraph> inputs;  // distinct networks this level was built from
    // Per skeleton edge: one entry per group of alternative pathways.
    std::map<Edge, std::vector<Ean>> payload;

    std::size_t depth() const;
};

// Groups networks that share a node outside `skeleton` (transitively).
std::vector<std::vector<Digraph>> group_pathways(const std::vector<Digraph>& subs,
                                                 const std::set<std::string>& skeleton);

Ean encapsulate_behavior(const std::vector<Digraph>& nets, const EncapsulationLimits& lim = {}, int depth = 0);

std::string to_dot(const Digraph& g, const std::string& name = "an");
std::string to_json(const Ean& e);

}  // namespace modeller

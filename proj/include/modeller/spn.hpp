#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace modeller {

using NodeId = std::uint32_t;
using NodeEdge = std::pair<NodeId, NodeId>;

// Presence counters for statistical refinement.
struct Presence {
    std::uint64_t observed = 1;  // genesis counts as one observation
    std::uint64_t absent = 0;
    bool operator==(const Presence&) const = default;
};

struct SpnNode {
    std::string type;
    double x = 0.0;
    double y = 0.0;
    std::uint64_t n_pos = 1;  // samples in the running position average
    Presence presence;
    bool operator==(const SpnNode&) const = default;
};

struct StateNetwork {
    std::map<NodeEdge, Presence> edges;

    bool has_edge(NodeId a, NodeId b) const { return edges.count({a, b}) > 0; }
    std::vector<NodeId> preds(NodeId n) const;
    std::vector<NodeId> succs(NodeId n) const;
    bool operator==(const StateNetwork&) const = default;
};

struct SpnError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Keyed state networks over one shared node set.
struct Spn {
    std::map<NodeId, SpnNode> nodes;
    std::vector<std::pair<std::string, StateNetwork>> nets;

    NodeId add_node(const std::string& type, double x, double y);
    StateNetwork& net(const std::string& key);
    const StateNetwork& net(const std::string& key) const;
    std::size_t edge_count() const;
    std::vector<std::string> keys() const;
    // Throws SpnError on duplicate keys or dangling edges.
    void validate() const;
    bool operator==(const Spn&) const = default;
};

using Assignment = std::map<NodeId, NodeId>;

// Reachability (paths of length >= 1) of each SN of a refiner SPN.
class Reach {
public:
    explicit Reach(const Spn& p);
    bool path(std::size_t net, NodeId a, NodeId b) const;
    const Spn& spn() const { return *p_; }

private:
    const Spn* p_;
    std::map<NodeId, std::size_t> idx_;
    std::vector<std::vector<std::vector<bool>>> r_;
};

void check_keys(const Spn& p0, const Spn& p1);

bool is_satisfied_by(const Spn& p0, const Spn& p1, const Assignment& f);
bool is_satisfied_by(const Spn& p0, const Reach& r1, const Assignment& f);

std::size_t mismatch_score(const Spn& p0, const Spn& p1, const Assignment& f);
std::size_t mismatch_score(const Spn& p0, const Reach& r1, const Assignment& f);

// Removes an edge and rerelates with predecessor and successor sets that
// include the endpoints themselves: P(a) x {b} and {a} x S(b). Returns the
// edges added.
std::vector<NodeEdge> remove_edge_with_rerelation(StateNetwork& sn, NodeId a, NodeId b);
// Removes all edges at `n`, linking its predecessors to its successors.
std::vector<NodeEdge> remove_node_with_rerelation(StateNetwork& sn, NodeId n);

struct RefineReport {
    std::vector<NodeId> nodes_removed;
    std::size_t edges_removed = 0;
    std::size_t edges_added = 0;
    bool changed() const { return !nodes_removed.empty() || edges_removed > 0 || edges_added > 0; }
};

// Plain refinement: every absent element is removed.
RefineReport refine_by(Spn& p0, const Spn& p1, const Assignment& f);
// Absences are counted; an element is removed once absent/observed > t_ref.
// Mapped nodes also move their running position toward the refiner's.
RefineReport statistical_refine_by(Spn& p0, const Spn& p1, const Assignment& f, double t_ref);

// Population of type-preserving injective assignments. Pairs are drawn one at
// a time with probability proportional to exp(-d), d the distance between
// node positions. Entries of `fixed` are kept as they are.
std::vector<Assignment> generate_assignment_population(const Spn& p0, const Spn& p1,
                                                       std::size_t population_size,
                                                       std::mt19937_64& rng,
                                                       const Assignment& fixed = {});

// Lowest mismatch; ties go to the lowest index. Also returns the score.
std::pair<Assignment, std::size_t> best_assignment(const Spn& p0, const Reach& r1,
                                                   const std::vector<Assignment>& population);
Assignment best_assignment(const Spn& p0, const Spn& p1, const std::vector<Assignment>& population);

}  // namespace modeller

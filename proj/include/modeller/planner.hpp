#pragma once

#include <compare>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "modeller/model.hpp"

namespace modeller {

// Desired change or state of an SV. CSV nodes carry None.
enum class Effect : std::uint8_t { A, D, One, Zero, None };

const char* to_string(Effect e);
// (A, D, One, Zero) -> (Zero, One, A, D).
Effect precondition(Effect e);

struct PlanNode {
    SvId sv = 0;
    Effect effect = Effect::None;
    auto operator<=>(const PlanNode&) const = default;
};

struct GroupSv {
    SvId id = 0;
    IdSet constituents;  // BSV ids, at least two
};

// Model view with BSV groups. Group ids start after the model's ids.
struct GroupedModel {
    std::uint64_t revision = 0;
    std::map<SvId, GroupSv> groups;
    std::map<IdSet, SvId> by_set;
    std::map<SvId, IdSet> constituencies;  // BSV or group -> groups strictly containing it

    struct CsvView {
        std::vector<PlanNode> sources;  // positive as One/A/D, negative as Zero
        std::vector<PlanNode> events;   // predicted events and conditioned CSVs
    };
    std::map<SvId, CsvView> csvs;  // unblocked CSVs only
    std::map<PlanNode, IdSet> conditioners;

    bool is_group(SvId id) const { return groups.count(id) != 0; }
};

GroupedModel build_group_svs(const Model& m);

enum class EdgeRole : std::uint8_t { Precondition, Constituent, Constituency, Conditioner, Source };

struct ActionNetwork {
    std::set<PlanNode> nodes;
    std::map<std::pair<PlanNode, PlanNode>, EdgeRole> edges;  // (predecessor, successor)
    std::map<PlanNode, std::vector<std::pair<PlanNode, EdgeRole>>> incoming;
    std::set<PlanNode> roots;
    std::set<PlanNode> alive;
    std::vector<PlanNode> goals;

    const std::vector<std::pair<PlanNode, EdgeRole>>& predecessors(const PlanNode& n) const;
    bool is_dead(const PlanNode& n) const { return nodes.count(n) && !alive.count(n); }
    bool goals_alive() const;
};

bool satisfied_by_current(const Model& m, const GroupedModel& g, const PlanNode& n);

// Adds the upstream network of `n`. Returns true when `n` is satisfied now,
// false when it has no pathway at all.
bool generate_upstream_an(const Model& m, const GroupedModel& g, const PlanNode& n, ActionNetwork& an);

ActionNetwork plan(const Model& m, const GroupedModel& g, const std::vector<PlanNode>& goals);

// Actions that fire a CSV of the network right now and produce a possible
// event that is a goal, or after which every source of some downstream CSV
// of the network holds.
IdSet candidate_actions(const ActionNetwork& an, const Model& m, const GroupedModel& g);

// Index into `actions`: uniform over candidates, or over all actions when
// the goals are dead or nothing is enabled.
std::size_t select_action(const ActionNetwork& an, const Model& m, const GroupedModel& g,
                          const std::vector<SvId>& actions, std::mt19937_64& rng);

// Caches the grouping until the model revision changes.
class Planner {
public:
    const GroupedModel& groups(const Model& m);
    ActionNetwork plan(const Model& m, const std::vector<PlanNode>& goals);

private:
    const Model* model_ = nullptr;
    bool valid_ = false;
    GroupedModel cache_;
};

}  // namespace modeller

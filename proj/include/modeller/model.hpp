#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "modeller/stats.hpp"

namespace modeller {

using SvId = std::uint32_t;
using IdSet = std::set<SvId>;

enum class SvState : std::uint8_t { Inactive, Unobserved, Active };
enum class SvKind : std::uint8_t { Base, Dynamics, Conditioning };
enum class DsvKind : std::uint8_t { Activation, Deactivation };

// Monotone: Unconditional -> Conditional -> PossiblyConditional.
enum class Flag : std::uint8_t { Unconditional, Conditional, PossiblyConditional };

// Which BSV events end the persistence of an active DSV.
enum class Persistence : std::uint8_t { ModelWide, PerOwner, None };

const char* to_string(SvState s);
const char* to_string(Flag f);
const char* to_string(DsvKind k);

struct StructuralError : std::logic_error {
    using std::logic_error::logic_error;
};

inline SvState from_bool(bool b) { return b ? SvState::Active : SvState::Inactive; }

// Raise the flag to at least `f`; never lowers it.
inline void advance(Flag& flag, Flag f) {
    if (static_cast<int>(f) > static_cast<int>(flag)) flag = f;
}

struct BaseSv {
    SvId id = 0;
    std::string label;
    bool is_action = false;
    SvState prev = SvState::Inactive;
    SvState cur = SvState::Inactive;
    SvId dsv_a = 0;  // unused for action BSVs
    SvId dsv_d = 0;
};

struct DynamicsSv {
    SvId id = 0;
    SvId owner = 0;
    DsvKind kind = DsvKind::Activation;
    SvState prev = SvState::Unobserved;
    SvState state = SvState::Unobserved;
    Flag flag = Flag::Conditional;
    std::string label;
};

struct ConditioningSv {
    SvId id = 0;
    IdSet pos;
    IdSet neg;
    IdSet targets;
    bool neg_formed = false;
    Flag flag = Flag::Unconditional;
    SvState state = SvState::Unobserved;
    bool blocked = false;
    std::map<SvId, RelationStats> stats;  // per target
    std::string label;
};

struct ModelConfig {
    Persistence persistence = Persistence::ModelWide;
    bool reset_stats_on_change = false;
    bool reset_stats_on_protect = false;
    bool nce_blocking = false;
    double eps_T = 0.25;
};

class Model {
public:
    explicit Model(ModelConfig cfg = {}) : cfg_(cfg) {}

    // Adds a BSV; non-action BSVs get an activation and a deactivation DSV.
    SvId add_bsv(const std::string& label, bool is_action = false);

    SvKind kind(SvId id) const;
    bool contains(SvId id) const;

    const BaseSv& bsv(SvId id) const;
    BaseSv& bsv(SvId id);
    const DynamicsSv& dsv(SvId id) const;
    DynamicsSv& dsv(SvId id);
    const ConditioningSv& csv(SvId id) const;
    ConditioningSv& csv(SvId id);

    const std::vector<SvId>& bsv_ids() const { return bsv_order_; }
    const std::map<SvId, BaseSv>& bsvs() const { return bsvs_; }
    const std::map<SvId, DynamicsSv>& dsvs() const { return dsvs_; }
    const std::map<SvId, ConditioningSv>& csvs() const { return csvs_; }
    std::optional<SvId> find_label(const std::string& label) const;
    std::string label(SvId id) const;

    // State of a source SV in the previous step. Action BSVs are stamped with
    // the action taken in the previous step, so their current value is used.
    SvState source_state(SvId id) const;
    // State of a conditioning target (DSV or CSV) in the current step.
    SvState target_state(SvId id) const;
    // Current state of any SV (BSV current value for BSVs).
    SvState current_state(SvId id) const;
    // True when every positive source is Active and no negative source is
    // Active in the previous step.
    bool sources_satisfied(const ConditioningSv& c) const;

    const IdSet& conditioners(SvId target) const;

    SvId create_csv(IdSet pos, IdSet neg, IdSet targets);
    // New CSV with the same sources, flags and blocked bit; stats copied for
    // the given targets. Conditioners of `src` also condition the copy.
    SvId duplicate_csv(SvId src, const IdSet& targets);
    void set_targets(SvId csv, IdSet targets);
    void remove_csv(SvId csv);
    // Every conditioner of `from` now conditions `to` instead.
    void retarget_conditioners(SvId from, SvId to);

    // Previous-step snapshot for an isolated transition: DSVs become Unobserved.
    void reset_history(const std::vector<bool>& snapshot);
    bool has_history() const { return has_history_; }
    void set_has_history(bool v) { has_history_ = v; }

    // True when an Active DSV keeps its Active state this step.
    bool dsv_persists(const DynamicsSv& d) const;
    bool any_bsv_event() const;

    // Incremented on every structural change; used by caches.
    std::uint64_t revision() const { return revision_; }
    void touch() { ++revision_; }

    ModelConfig& config() { return cfg_; }
    const ModelConfig& config() const { return cfg_; }

    std::uint64_t step_count() const { return steps_; }
    void set_step_count(std::uint64_t s) { steps_ = s; }
    SvId next_id() const { return next_id_; }
    void set_next_id(SvId n) { next_id_ = n; }

    // Raw inserts for deserialization.
    void insert_bsv(BaseSv b);
    void insert_dsv(DynamicsSv d);
    void insert_csv(ConditioningSv c);

private:
    ModelConfig cfg_;
    SvId next_id_ = 0;
    std::map<SvId, BaseSv> bsvs_;
    std::map<SvId, DynamicsSv> dsvs_;
    std::map<SvId, ConditioningSv> csvs_;
    std::map<SvId, SvKind> kinds_;
    std::map<SvId, IdSet> conditioners_;
    std::vector<SvId> bsv_order_;
    bool has_history_ = false;
    std::uint64_t revision_ = 0;
    std::uint64_t steps_ = 0;

    void link(SvId csv, SvId target);
    void unlink(SvId csv, SvId target);
};

// Layers of CSV ids: layer 0 conditions only DSVs, layer k conditions at least
// one layer k-1 CSV. Traversal during learning runs from layer 0 upward.
std::vector<std::vector<SvId>> computation_levels(const Model& m);

// Sources of every SV strictly downstream of `id` along conditioning edges,
// plus the owner BSV of every DSV reached (including `id` itself).
IdSet trivial_sources(const Model& m, SvId id);

// Positive sources of `csv` and of every CSV upstream of it.
IdSet upstream_positive_sources(const Model& m, SvId csv);

// State of a CSV given source states in the previous step and target
// states in the current step. All-Unobserved targets give Unobserved.
SvState relation_state(const IdSet& pos, const IdSet& neg, const std::map<SvId, SvState>& sources,
                   const std::map<SvId, SvState>& targets);

}  // namespace modeller

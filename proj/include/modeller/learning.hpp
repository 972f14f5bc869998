#pragma once

#include <map>
#include <utility>
#include <vector>

#include "modeller/model.hpp"

namespace modeller {

struct StepReport {
    std::uint64_t step = 0;
    std::map<SvId, SvState> states;  // DSVs and CSVs after the step
    std::vector<SvId> created;
    std::map<SvId, IdSet> refined;  // CSV -> sources removed this step
    std::vector<std::pair<SvId, SvId>> duplications;  // (original, copy)
    std::vector<SvId> negatives_formed;
    std::vector<SvId> unexplained;  // left without a conditioner after genesis
    std::vector<SvId> pruned;

    bool empty() const {
        return created.empty() && refined.empty() && duplications.empty() &&
               negatives_formed.empty() && pruned.empty();
    }
};

// Hooks into the learning step. Used by the replay recorder in tests.
class StepObserver {
public:
    virtual ~StepObserver() = default;
    virtual void on_adapted(const Model&, SvId) {}
    virtual void on_created(const Model&, SvId) {}
    virtual void on_duplicate(const Model&, SvId, SvId) {}
    virtual void on_negatives_formed(const Model&, SvId) {}
    virtual void on_removed(const Model&, SvId) {}
    virtual void on_step_end(const Model&) {}
};

struct StepContext {
    StepReport* report = nullptr;
    StepObserver* observer = nullptr;
};

// Computes and stores DSV states from the BSV snapshots held by the model.
std::map<SvId, SvState> compute_dsv_states(Model& m);

// Full learning step. `obs` lists every BSV in `Model::bsv_ids()` order.
StepReport process_environment_step(Model& m, const std::vector<bool>& obs,
                                    StepObserver* observer = nullptr);

// State update with learning disabled: no structural change, no statistics.
void observe_environment_step(Model& m, const std::vector<bool>& obs);
SvState compute_and_adapt_csv(Model& m, SvId csv, StepContext& ctx);
void form_negative_connections(Model& m, SvId csv, StepContext& ctx);
std::pair<SvId, SvId> duplicate_csv_by_targets(Model& m, SvId csv, StepContext& ctx);

// SVs that are Active, have no Active conditioner and are not Unconditional.
std::vector<SvId> collect_unexplained(const Model& m);

// Creates one CSV for the unexplained SVs, or none. Targets left out get
// their flag raised to PossiblyConditional.
std::optional<SvId> generate_explanatory_csv(Model& m, const std::vector<SvId>& unexplained,
                                             StepContext& ctx);

// Merges duplicate CSVs and removes CSVs without positive sources or targets.
std::vector<SvId> model_refinement(Model& m, StepObserver* observer = nullptr);

// Marks CSVs blocked when every target relation is insignificant.
IdSet apply_nce_blocking(Model& m, double eps_T);

// Recorded evaluation of a CSV: previous-step source states and current
// target states, together with the source sets in force at recording time.
struct Instance {
    std::map<SvId, SvState> sources;
    std::map<SvId, SvState> targets;
    IdSet pos;
    IdSet neg;
    std::uint64_t step = 0;
    bool in_scope = true;
};

// Pure state of the CSV's current sets on a recorded instance,
// restricted to the CSV's current targets.
SvState replay_instance(const ConditioningSv& c, const Instance& inst);

Instance capture_instance(const Model& m, SvId csv);

// Records an instance per CSV per step and checks, after each step, that
// every modified CSV still replays its past instances unchanged. Instances
// are dropped when the CSV forms negatives or gains a target.
class ReplayRecorder : public StepObserver {
public:
    struct Counts {
        std::uint64_t recorded = 0;
        std::uint64_t checks = 0;
        std::uint64_t violations = 0;
        // Past instances outside the proof's premise whose replay changed.
        std::uint64_t partial_flips = 0;
        std::uint64_t emptied_negative_flips = 0;
    };

    void on_adapted(const Model& m, SvId id) override;
    void on_created(const Model& m, SvId id) override;
    void on_duplicate(const Model& m, SvId src, SvId copy) override;
    void on_negatives_formed(const Model& m, SvId id) override;
    void on_removed(const Model& m, SvId id) override;
    void on_step_end(const Model& m) override;

    const Counts& counts() const { return counts_; }
    const std::vector<std::string>& messages() const { return messages_; }

private:
    struct Shape {
        IdSet pos, neg, targets;
        bool operator==(const Shape&) const = default;
    };
    std::map<SvId, std::vector<Instance>> instances_;
    std::map<SvId, Shape> shapes_;
    Counts counts_;
    std::vector<std::string> messages_;
    std::uint64_t step_ = 0;
};

}  // namespace modeller

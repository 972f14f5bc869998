#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "modeller/spn.hpp"
#include "modeller/stats.hpp"

namespace modeller {

using MnrId = std::uint32_t;

enum class Polarity : std::uint8_t { Positive, Negative };

// Targets are class labels (ids below kMnrCsvBase) or other CSVs.
inline constexpr MnrId kMnrCsvBase = 1u << 20;

struct MnrCsv {
    MnrId id = 0;
    Spn source;
    MnrId target = 0;
    Polarity polarity = Polarity::Positive;
    bool unconditional = true;  // cleared on the first Inactive state
    RelationStats stats;
    std::uint32_t depth = 0;
    bool operator==(const MnrCsv&) const = default;
};

// When a conditioner whose target event occurred takes part in the step and
// is refined: AnyNode needs one mapped source node, AllNodes needs every
// source node mapped, Upstream uses AnyNode at depth 0 and AllNodes above.
enum class Engage : std::uint8_t { AnyNode, AllNodes, Upstream };

struct MnrConfig {
    Engage engage = Engage::Upstream;
    double t_ref = 0.05;
    double eps_sign = 0.05;
    std::size_t population = 10;
    std::uint32_t max_depth = 24;
};

struct MnrStepReport {
    std::vector<MnrId> created;
    std::vector<MnrId> refined;
    std::vector<MnrId> removed;
};

class MnrModel {
public:
    explicit MnrModel(MnrConfig cfg = {}) : cfg_(cfg) {}

    const MnrConfig& config() const { return cfg_; }
    MnrConfig& config() { return cfg_; }

    MnrId add_csv(MnrCsv c);
    void insert_csv(MnrCsv c);  // keeps c.id; for deserialization
    void remove_csv(MnrId id);  // with its upstream conditioners
    const MnrCsv& csv(MnrId id) const { return csvs_.at(id); }
    MnrCsv& csv(MnrId id) { return csvs_.at(id); }
    const std::map<MnrId, MnrCsv>& csvs() const { return csvs_; }
    std::vector<MnrId> conditioners(MnrId target) const;
    std::vector<MnrId> conditioners(MnrId target, Polarity p) const;
    std::set<MnrId> labels() const { return labels_; }
    void add_label(MnrId label) { labels_.insert(label); }

    MnrId next_id() const { return next_id_; }
    void set_next_id(MnrId n) { next_id_ = n; }
    NodeId next_node() { return next_node_++; }
    NodeId next_node_id() const { return next_node_; }
    void set_next_node(NodeId n) { next_node_ = n; }
    std::uint64_t steps() const { return steps_; }
    void set_steps(std::uint64_t s) { steps_ = s; }
    bool operator==(const MnrModel&) const;

private:
    MnrConfig cfg_;
    std::map<MnrId, MnrCsv> csvs_;
    std::multimap<MnrId, MnrId> by_target_;
    std::set<MnrId> labels_;
    MnrId next_id_ = kMnrCsvBase;
    NodeId next_node_ = 0;
    std::uint64_t steps_ = 0;
};

// One labelled observation.
MnrStepReport mnr_learn_step(MnrModel& m, const Spn& obs, MnrId label, std::mt19937_64& rng);

// Removes conditioners with P(SS|I) below eps_sign. Returns removed ids.
std::vector<MnrId> mnr_filter_check(MnrModel& m);

// Activation probability of a CSV whose sources are satisfied: P(I|SS)
// without conditioners, else (1 - p_max_neg) * p_max_pos.
double combine_probability(double own, std::optional<double> p_max_pos,
                           std::optional<double> p_max_neg);

// Probability per label.
std::map<MnrId, double> predict(const MnrModel& m, const Spn& obs, std::uint64_t seed);

// Label with the highest probability, lowest id on ties; nullopt when all
// probabilities are zero.
std::optional<MnrId> classify(const MnrModel& m, const Spn& obs, std::uint64_t seed);

}  // namespace modeller

#include "modeller/mnr.hpp"

#include <algorithm>
#include <deque>

namespace modeller {

MnrId MnrModel::add_csv(MnrCsv c) {
    c.id = next_id_++;
    by_target_.emplace(c.target, c.id);
    const MnrId id = c.id;
    csvs_.emplace(id, std::move(c));
    return id;
}

void MnrModel::insert_csv(MnrCsv c) {
    next_id_ = std::max(next_id_, c.id + 1);
    by_target_.emplace(c.target, c.id);
    const MnrId id = c.id;
    csvs_.emplace(id, std::move(c));
}

void MnrModel::remove_csv(MnrId id) {
    auto it = csvs_.find(id);
    if (it == csvs_.end()) return;
    for (MnrId up : conditioners(id)) remove_csv(up);
    auto [lo, hi] = by_target_.equal_range(it->second.target);
    for (auto j = lo; j != hi; ++j)
        if (j->second == id) {
            by_target_.erase(j);
            break;
        }
    csvs_.erase(it);
}

std::vector<MnrId> MnrModel::conditioners(MnrId target) const {
    std::vector<MnrId> out;
    auto [lo, hi] = by_target_.equal_range(target);
    for (auto j = lo; j != hi; ++j) out.push_back(j->second);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<MnrId> MnrModel::conditioners(MnrId target, Polarity p) const {
    std::vector<MnrId> out;
    for (MnrId id : conditioners(target))
        if (csvs_.at(id).polarity == p) out.push_back(id);
    return out;
}

bool MnrModel::operator==(const MnrModel& o) const {
    return cfg_.t_ref == o.cfg_.t_ref && cfg_.eps_sign == o.cfg_.eps_sign &&
           cfg_.population == o.cfg_.population && cfg_.max_depth == o.cfg_.max_depth &&
           csvs_ == o.csvs_ && labels_ == o.labels_ && next_id_ == o.next_id_ &&
           next_node_ == o.next_node_ && steps_ == o.steps_;
}

namespace {

enum class Seen { Unobserved, Active, Inactive };

struct Pending {
    MnrId sv;  // label or CSV
    bool is_label;
    Seen state;
    Assignment f;  // source nodes of `sv` -> observation nodes
};

Assignment propagate(const Assignment& f_target, const Spn& source) {
    Assignment out;
    for (const auto& [a, b] : f_target)
        if (source.nodes.count(a)) out[a] = b;
    return out;
}

// Copy of the observation where nodes already assigned to the target keep
// the target's ids.
Spn genesis_copy(MnrModel& m, const Spn& obs, const Assignment& f_target) {
    std::map<NodeId, NodeId> rename;
    for (const auto& [a, b] : f_target) rename[b] = a;
    for (const auto& [id, _] : obs.nodes)
        if (!rename.count(id)) rename[id] = m.next_node();
    Spn out;
    for (const auto& [id, n] : obs.nodes) {
        SpnNode c = n;
        c.n_pos = 1;
        c.presence = {};
        out.nodes[rename.at(id)] = c;
    }
    for (const auto& [k, sn] : obs.nets) {
        auto& dst = out.net(k);
        for (const auto& [e, _] : sn.edges) dst.edges[{rename.at(e.first), rename.at(e.second)}] = {};
    }
    return out;
}

}  // namespace

MnrStepReport mnr_learn_step(MnrModel& m, const Spn& obs, MnrId label, std::mt19937_64& rng) {
    MnrStepReport rep;
    m.add_label(label);
    m.set_steps(m.steps() + 1);
    const Reach reach(obs);
    const auto& cfg = m.config();

    std::deque<Pending> work;
    for (MnrId l : m.labels())
        work.push_back({l, true, l == label ? Seen::Active : Seen::Inactive, {}});

    while (!work.empty()) {
        Pending t = std::move(work.front());
        work.pop_front();
        bool pos_active = false, neg_active = false;
        for (MnrId xid : m.conditioners(t.sv)) {
            auto& x = m.csv(xid);
            const bool event =
                x.polarity == Polarity::Positive ? t.state == Seen::Active : t.state == Seen::Inactive;
            const Assignment fixed = propagate(t.f, x.source);
            const auto pop = generate_assignment_population(x.source, obs, cfg.population, rng, fixed);
            auto [f, score] = best_assignment(x.source, reach, pop);
            Seen s = Seen::Unobserved;
            const bool all = f.size() == x.source.nodes.size();
            const bool engaged = cfg.engage == Engage::AnyNode    ? !f.empty()
                                 : cfg.engage == Engage::AllNodes ? all
                                                                  : (x.depth == 0 ? !f.empty() : all);
            if (event && engaged) {
                // Run on every engagement so presence counters see each encounter.
                if (statistical_refine_by(x.source, obs, f, cfg.t_ref).changed()) rep.refined.push_back(xid);
                for (auto it = f.begin(); it != f.end();)
                    it = x.source.nodes.count(it->first) ? std::next(it) : f.erase(it);
                score = mismatch_score(x.source, reach, f);
                s = Seen::Active;
            } else if (!event && score == 0) {
                s = Seen::Inactive;
                x.unconditional = false;
            }
            x.stats.record(score == 0, event, true);
            if (s == Seen::Active) (x.polarity == Polarity::Positive ? pos_active : neg_active) = true;
            if (s != Seen::Unobserved) work.push_back({xid, false, s, std::move(f)});
        }

        const std::uint32_t depth = t.is_label ? 0 : m.csv(t.sv).depth + 1;
        if (depth > cfg.max_depth) continue;
        auto create = [&](Polarity p) {
            MnrCsv c;
            c.source = genesis_copy(m, obs, t.f);
            c.target = t.sv;
            c.polarity = p;
            c.depth = depth;
            c.stats.record(true, true, true);
            const MnrId id = m.add_csv(std::move(c));
            rep.created.push_back(id);
        };
        const bool conditional = t.is_label || !m.csv(t.sv).unconditional;
        if (t.state == Seen::Active && conditional && !pos_active) create(Polarity::Positive);
        if (!t.is_label && t.state == Seen::Inactive && !neg_active) create(Polarity::Negative);
    }

    for (MnrId id : mnr_filter_check(m)) rep.removed.push_back(id);
    return rep;
}

std::vector<MnrId> mnr_filter_check(MnrModel& m) {
    std::vector<MnrId> drop;
    for (const auto& [id, c] : m.csvs())
        if (mnr_filter_remove(c.stats, m.config().eps_sign)) drop.push_back(id);
    std::vector<MnrId> removed;
    for (MnrId id : drop)
        if (m.csvs().count(id)) {
            m.remove_csv(id);
            removed.push_back(id);
        }
    return removed;
}

double combine_probability(double own, std::optional<double> p_max_pos,
                           std::optional<double> p_max_neg) {
    return (1.0 - p_max_neg.value_or(0.0)) * p_max_pos.value_or(own);
}

namespace {

struct Predictor {
    const MnrModel& m;
    const Spn& obs;
    const Reach reach;
    std::mt19937_64 rng;

    // nullopt when the sources are not satisfied.
    std::optional<double> prob(MnrId id, const Assignment& f_target) {
        const auto& x = m.csv(id);
        const Assignment fixed = propagate(f_target, x.source);
        const auto pop = generate_assignment_population(x.source, obs, m.config().population, rng, fixed);
        auto [f, score] = best_assignment(x.source, reach, pop);
        if (score > 0) return std::nullopt;
        const auto conds = m.conditioners(id);
        const double own = incidence_given_ss(x.stats);
        if (conds.empty()) return own;
        std::optional<double> pos, neg;
        for (MnrId c : conds) {
            const auto p = prob(c, f);
            if (!p) continue;
            auto& slot = m.csv(c).polarity == Polarity::Positive ? pos : neg;
            slot = std::max(slot.value_or(0.0), *p);
        }
        return combine_probability(own, pos, neg);
    }
};

}  // namespace

std::map<MnrId, double> predict(const MnrModel& m, const Spn& obs, std::uint64_t seed) {
    Predictor pr{m, obs, Reach(obs), std::mt19937_64(seed)};
    std::map<MnrId, double> out;
    for (MnrId l : m.labels()) {
        double best = 0.0;
        for (MnrId c : m.conditioners(l, Polarity::Positive))
            if (auto p = pr.prob(c, {})) best = std::max(best, *p);
        out[l] = best;
    }
    return out;
}

std::optional<MnrId> classify(const MnrModel& m, const Spn& obs, std::uint64_t seed) {
    std::optional<MnrId> best;
    double bp = 0.0;
    for (const auto& [l, p] : predict(m, obs, seed))
        if (p > bp) {
            bp = p;
            best = l;
        }
    return best;
}

}  // namespace modeller

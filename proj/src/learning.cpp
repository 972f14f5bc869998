#include "modeller/learning.hpp"

#include <algorithm>
#include <sstream>

namespace modeller {

namespace {

bool any_active(const Model& m, const IdSet& ids) {
    for (SvId s : ids)
        if (m.source_state(s) == SvState::Active) return true;
    return false;
}

bool all_active(const Model& m, const IdSet& ids) {
    for (SvId s : ids)
        if (m.source_state(s) != SvState::Active) return false;
    return true;
}

// Every BSV and DSV whose previous-step state is Active.
IdSet active_sources(const Model& m) {
    IdSet out;
    for (const auto& [id, b] : m.bsvs())
        if (m.source_state(id) == SvState::Active) out.insert(id);
    for (const auto& [id, d] : m.dsvs())
        if (d.prev == SvState::Active) out.insert(id);
    return out;
}

void note_refined(StepContext& ctx, SvId id, SvId removed) {
    if (ctx.report) ctx.report->refined[id].insert(removed);
}

// True when `to` is reachable from `from` along conditioning edges.
bool reaches(const Model& m, SvId from, SvId to) {
    IdSet seen{from};
    std::vector<SvId> stack{from};
    while (!stack.empty()) {
        SvId x = stack.back();
        stack.pop_back();
        if (x == to) return true;
        if (m.kind(x) != SvKind::Conditioning) continue;
        for (SvId t : m.csv(x).targets)
            if (seen.insert(t).second) stack.push_back(t);
    }
    return false;
}

void reset_stats(ConditioningSv& c) {
    for (auto& [t, s] : c.stats) s = RelationStats{};
}

}  // namespace

std::map<SvId, SvState> compute_dsv_states(Model& m) {
    std::map<SvId, SvState> out;
    for (const auto& [id, d0] : m.dsvs()) {
        auto& d = m.dsv(id);
        const auto& b = m.bsv(d.owner);
        const SvState before = d.kind == DsvKind::Activation ? SvState::Inactive : SvState::Active;
        SvState s;
        if (b.prev != before) {
            s = SvState::Unobserved;
        } else {
            s = b.cur != before ? SvState::Active : SvState::Inactive;
        }
        if (s != SvState::Active && d.prev == SvState::Active && m.dsv_persists(d)) s = SvState::Active;
        d.state = s;
        out[id] = s;
    }
    return out;
}

std::pair<SvId, SvId> duplicate_csv_by_targets(Model& m, SvId id, StepContext& ctx) {
    const auto& c = m.csv(id);
    IdSet a_side, i_side;
    for (SvId t : c.targets) {
        const SvState s = m.target_state(t);
        if (s != SvState::Inactive) a_side.insert(t);
        if (s != SvState::Active) i_side.insert(t);
    }
    if (a_side.size() == c.targets.size() || i_side.size() == c.targets.size()) return {id, id};
    const SvId copy = m.duplicate_csv(id, i_side);
    m.set_targets(id, a_side);
    if (ctx.report) ctx.report->duplications.emplace_back(id, copy);
    if (ctx.observer) ctx.observer->on_duplicate(m, id, copy);
    return {id, copy};
}

void form_negative_connections(Model& m, SvId id, StepContext& ctx) {
    if (m.csv(id).neg_formed) throw std::logic_error("negative sources already formed");
    IdSet unobserved, observed;
    for (SvId t : m.csv(id).targets)
        (m.target_state(t) == SvState::Unobserved ? unobserved : observed).insert(t);
    if (!unobserved.empty() && !observed.empty()) {
        const SvId prot = m.duplicate_csv(id, unobserved);
        m.set_targets(id, observed);
        auto& p = m.csv(prot);
        p.state = SvState::Unobserved;
        if (m.config().reset_stats_on_protect) reset_stats(p);
        if (ctx.report) ctx.report->duplications.emplace_back(id, prot);
        if (ctx.observer) ctx.observer->on_duplicate(m, id, prot);
    }
    IdSet cand = active_sources(m);
    for (SvId s : trivial_sources(m, id)) cand.erase(s);
    for (SvId s : upstream_positive_sources(m, id)) cand.erase(s);
    auto& c = m.csv(id);
    // nothing to explain the failure with: wait for a later one
    if (cand.empty()) {
        advance(c.flag, Flag::Conditional);
        return;
    }
    c.neg = std::move(cand);
    c.neg_formed = true;
    if (m.config().reset_stats_on_change) reset_stats(c);
    m.touch();
    if (ctx.report) ctx.report->negatives_formed.push_back(id);
    if (ctx.observer) ctx.observer->on_negatives_formed(m, id);
}

SvState compute_and_adapt_csv(Model& m, SvId id, StepContext& ctx) {
    auto finish = [&](SvState s) {
        m.csv(id).state = s;
        if (ctx.observer) ctx.observer->on_adapted(m, id);
        return s;
    };
    if (!any_active(m, m.csv(id).pos)) return finish(SvState::Unobserved);

    bool has_a = false, has_i = false;
    for (SvId t : m.csv(id).targets) {
        const SvState s = m.target_state(t);
        has_a |= s == SvState::Active;
        has_i |= s == SvState::Inactive;
    }
    if (!has_a && !has_i) return finish(SvState::Unobserved);
    if (has_a && has_i) {
        const auto [keep, copy] = duplicate_csv_by_targets(m, id, ctx);
        compute_and_adapt_csv(m, copy, ctx);
        has_i = false;
    }

    auto& c = m.csv(id);
    if (has_a) {
        bool changed = false;
        for (auto it = c.pos.begin(); it != c.pos.end();) {
            if (m.source_state(*it) != SvState::Active) {
                note_refined(ctx, id, *it);
                it = c.pos.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
        for (auto it = c.neg.begin(); it != c.neg.end();) {
            if (m.source_state(*it) == SvState::Active) {
                note_refined(ctx, id, *it);
                it = c.neg.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
        if (changed) {
            if (m.config().reset_stats_on_change) reset_stats(c);
            m.touch();
        }
        return finish(SvState::Active);
    }

    if (!all_active(m, c.pos)) return finish(SvState::Unobserved);
    if (any_active(m, c.neg)) {
        bool changed = false;
        for (auto it = c.neg.begin(); it != c.neg.end();) {
            if (m.source_state(*it) != SvState::Active) {
                note_refined(ctx, id, *it);
                it = c.neg.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
        if (changed) {
            if (m.config().reset_stats_on_change) reset_stats(c);
            m.touch();
        }
        return finish(SvState::Unobserved);
    }
    if (!c.neg_formed) {
        form_negative_connections(m, id, ctx);
    } else {
        advance(m.csv(id).flag, Flag::Conditional);
    }
    return finish(SvState::Inactive);
}

std::vector<SvId> collect_unexplained(const Model& m) {
    auto explained = [&](SvId id) {
        for (SvId c : m.conditioners(id))
            if (m.csv(c).state == SvState::Active) return true;
        return false;
    };
    std::vector<SvId> out;
    for (const auto& [id, d] : m.dsvs())
        if (d.state == SvState::Active && d.flag != Flag::Unconditional && !explained(id))
            out.push_back(id);
    for (const auto& [id, c] : m.csvs())
        if (c.state == SvState::Active && c.flag != Flag::Unconditional && !explained(id))
            out.push_back(id);
    return out;
}

std::optional<SvId> generate_explanatory_csv(Model& m, const std::vector<SvId>& unexplained,
                                             StepContext& ctx) {
    if (unexplained.empty()) return std::nullopt;
    std::vector<SvId> prospective;
    std::vector<SvId> left_out;
    for (SvId t : unexplained) {
        if (m.kind(t) == SvKind::Conditioning) {
            const auto& c = m.csv(t);
            if (c.flag == Flag::Unconditional || c.blocked) {
                left_out.push_back(t);
                continue;
            }
        }
        prospective.push_back(t);
    }
    std::map<SvId, IdSet> trivial;
    for (SvId t : prospective) {
        IdSet tr = trivial_sources(m, t);
        if (m.kind(t) == SvKind::Conditioning) {
            const auto& c = m.csv(t);
            tr.insert(c.pos.begin(), c.pos.end());
            tr.insert(c.neg.begin(), c.neg.end());
        }
        trivial[t] = std::move(tr);
    }
    const IdSet active = active_sources(m);
    IdSet sources;
    for (SvId s : active)
        for (SvId t : prospective)
            if (!trivial[t].count(s)) {
                sources.insert(s);
                break;
            }
    IdSet targets;
    for (SvId t : prospective) {
        bool useful = false;
        for (SvId s : sources)
            if (!trivial[t].count(s)) {
                useful = true;
                break;
            }
        if (useful) {
            targets.insert(t);
        } else {
            left_out.push_back(t);
        }
    }
    auto raise = [&](SvId t) {
        if (m.kind(t) == SvKind::Dynamics) {
            advance(m.dsv(t).flag, Flag::PossiblyConditional);
        } else {
            advance(m.csv(t).flag, Flag::PossiblyConditional);
        }
    };
    for (SvId t : left_out) raise(t);
    if (sources.empty() || targets.empty()) return std::nullopt;

    const SvId id = m.create_csv(sources, {}, targets);
    auto& c = m.csv(id);
    c.state = SvState::Active;
    for (SvId t : targets) c.stats[t].record(true, true, true);
    if (ctx.report) ctx.report->created.push_back(id);
    if (ctx.observer) ctx.observer->on_created(m, id);
    return id;
}

std::vector<SvId> model_refinement(Model& m, StepObserver* observer) {
    std::vector<SvId> removed;
    auto drop = [&](SvId id) {
        m.remove_csv(id);
        removed.push_back(id);
        if (observer) observer->on_removed(m, id);
    };
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<std::tuple<IdSet, IdSet, IdSet>, SvId> seen;
        std::vector<std::pair<SvId, SvId>> merges;  // (drop, keep)
        for (const auto& [id, c] : m.csvs()) {
            auto key = std::make_tuple(c.pos, c.neg, c.targets);
            auto [it, fresh] = seen.emplace(std::move(key), id);
            if (!fresh) merges.emplace_back(id, it->second);
        }
        for (auto [gone, keep] : merges) {
            if (!m.contains(gone) || !m.contains(keep)) continue;
            for (SvId up : IdSet(m.conditioners(gone))) {
                if (up == keep || reaches(m, keep, up)) {
                    auto& u = m.csv(up);
                    IdSet t = u.targets;
                    t.erase(gone);
                    m.set_targets(up, t);
                }
            }
            m.retarget_conditioners(gone, keep);
            drop(gone);
            changed = true;
        }
        std::vector<SvId> empties;
        for (const auto& [id, c] : m.csvs())
            if (c.pos.empty() || c.targets.empty()) empties.push_back(id);
        for (SvId id : empties) {
            if (!m.contains(id)) continue;
            drop(id);
            changed = true;
        }
    }
    return removed;
}

IdSet apply_nce_blocking(Model& m, double eps_T) {
    IdSet blocked;
    bool changed = false;
    for (const auto& [id, c0] : m.csvs()) {
        auto& c = m.csv(id);
        bool all_insig = !c.targets.empty();
        for (SvId t : c.targets) {
            auto it = c.stats.find(t);
            if (it == c.stats.end() || !nce_insignificant(it->second, eps_T)) {
                all_insig = false;
                break;
            }
        }
        changed |= c.blocked != all_insig;
        c.blocked = all_insig;
        if (all_insig) blocked.insert(id);
    }
    if (changed) m.touch();
    return blocked;
}

StepReport process_environment_step(Model& m, const std::vector<bool>& obs, StepObserver* observer) {
    const auto& order = m.bsv_ids();
    if (obs.size() != order.size())
        throw std::invalid_argument("observation covers " + std::to_string(obs.size()) + " of " +
                                    std::to_string(order.size()) + " BSVs");
    StepReport report;
    m.set_step_count(m.step_count() + 1);
    report.step = m.step_count();
    if (!m.has_history()) {
        m.reset_history(obs);
        return report;
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& b = m.bsv(order[i]);
        b.prev = b.cur;
        b.cur = from_bool(obs[i]);
    }
    for (const auto& [id, d] : m.dsvs()) m.dsv(id).prev = d.state;
    for (const auto& [id, c] : m.csvs()) m.csv(id).state = SvState::Unobserved;

    StepContext ctx{&report, observer};
    compute_dsv_states(m);

    const auto levels = computation_levels(m);
    for (const auto& layer : levels)
        for (SvId id : layer)
            if (m.contains(id)) compute_and_adapt_csv(m, id, ctx);

    for (const auto& [id, c0] : m.csvs()) {
        auto& c = m.csv(id);
        const bool ss = m.sources_satisfied(c);
        for (SvId t : c.targets) {
            const SvState s = m.target_state(t);
            c.stats[t].record(ss, s == SvState::Active, s != SvState::Unobserved);
        }
    }

    const auto unexplained = collect_unexplained(m);
    generate_explanatory_csv(m, unexplained, ctx);
    report.unexplained = collect_unexplained(m);
    report.pruned = model_refinement(m, observer);
    if (m.config().nce_blocking) apply_nce_blocking(m, m.config().eps_T);

    for (const auto& [id, d] : m.dsvs()) report.states[id] = d.state;
    for (const auto& [id, c] : m.csvs()) report.states[id] = c.state;
    if (observer) observer->on_step_end(m);
    return report;
}

void observe_environment_step(Model& m, const std::vector<bool>& obs) {
    const auto& order = m.bsv_ids();
    if (obs.size() != order.size())
        throw std::invalid_argument("observation covers " + std::to_string(obs.size()) + " of " +
                                    std::to_string(order.size()) + " BSVs");
    m.set_step_count(m.step_count() + 1);
    if (!m.has_history()) {
        m.reset_history(obs);
        return;
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& b = m.bsv(order[i]);
        b.prev = b.cur;
        b.cur = from_bool(obs[i]);
    }
    for (const auto& [id, d] : m.dsvs()) m.dsv(id).prev = d.state;
    compute_dsv_states(m);
    for (const auto& layer : computation_levels(m))
        for (SvId id : layer) {
            auto& c = m.csv(id);
            std::map<SvId, SvState> sources, targets;
            for (SvId x : c.pos) sources[x] = m.source_state(x);
            for (SvId x : c.neg) sources[x] = m.source_state(x);
            for (SvId t : c.targets) targets[t] = m.target_state(t);
            c.state = relation_state(c.pos, c.neg, sources, targets);
        }
}

SvState replay_instance(const ConditioningSv& c, const Instance& inst) {
    std::map<SvId, SvState> targets;
    for (SvId t : c.targets) {
        auto it = inst.targets.find(t);
        targets[t] = it == inst.targets.end() ? SvState::Unobserved : it->second;
    }
    return relation_state(c.pos, c.neg, inst.sources, targets);
}

Instance capture_instance(const Model& m, SvId id) {
    const auto& c = m.csv(id);
    Instance inst;
    for (SvId s : c.pos) inst.sources[s] = m.source_state(s);
    for (SvId s : c.neg) inst.sources[s] = m.source_state(s);
    for (SvId t : c.targets) inst.targets[t] = m.target_state(t);
    inst.pos = c.pos;
    inst.neg = c.neg;
    inst.step = m.step_count();
    bool all_pos_off = true, all_neg_on = !c.neg.empty();
    for (SvId s : c.pos) all_pos_off &= inst.sources[s] != SvState::Active;
    for (SvId s : c.neg) all_neg_on &= inst.sources[s] == SvState::Active;
    inst.in_scope = m.sources_satisfied(c) || all_pos_off || all_neg_on;
    return inst;
}

void ReplayRecorder::on_adapted(const Model& m, SvId id) {
    instances_[id].push_back(capture_instance(m, id));
    ++counts_.recorded;
}

void ReplayRecorder::on_created(const Model& m, SvId id) { on_adapted(m, id); }

void ReplayRecorder::on_duplicate(const Model&, SvId src, SvId copy) {
    instances_[copy] = instances_[src];
    if (auto it = shapes_.find(src); it != shapes_.end()) shapes_[copy] = it->second;
}

void ReplayRecorder::on_negatives_formed(const Model&, SvId id) { instances_[id].clear(); }

void ReplayRecorder::on_removed(const Model&, SvId id) {
    instances_.erase(id);
    shapes_.erase(id);
}

void ReplayRecorder::on_step_end(const Model& m) {
    ++step_;
    for (auto it = instances_.begin(); it != instances_.end();) {
        if (!m.contains(it->first)) {
            shapes_.erase(it->first);
            it = instances_.erase(it);
            continue;
        }
        const auto& c = m.csv(it->first);
        Shape now{c.pos, c.neg, c.targets};
        auto sh = shapes_.find(it->first);
        const bool modified = sh == shapes_.end() || !(sh->second == now);
        shapes_[it->first] = now;
        if (modified) {
            auto& list = it->second;
            std::vector<Instance> kept;
            kept.reserve(list.size());
            for (auto& inst : list) {
                bool covered = true;
                for (SvId t : c.targets) covered &= inst.targets.count(t) != 0;
                if (!covered) continue;  // target set grew; outside the replay premise
                ConditioningSv then;
                then.pos = inst.pos;
                then.neg = inst.neg;
                then.targets = c.targets;
                const SvState before = replay_instance(then, inst);
                const SvState after = replay_instance(c, inst);
                ++counts_.checks;
                if (before != after) {
                    const bool neg_case = before == SvState::Unobserved && !inst.neg.empty() &&
                                          c.neg.empty();
                    if (!inst.in_scope) {
                        ++counts_.partial_flips;
                    } else if (neg_case) {
                        ++counts_.emptied_negative_flips;
                    } else {
                        ++counts_.violations;
                        if (messages_.size() < 20) {
                            std::ostringstream os;
                            os << "C" << it->first << " instance@" << inst.step << " " << to_string(before)
                               << " -> " << to_string(after) << " at step " << m.step_count();
                            messages_.push_back(os.str());
                        }
                    }
                }
                kept.push_back(std::move(inst));
            }
            list = std::move(kept);
        }
        ++it;
    }
}

}  // namespace modeller

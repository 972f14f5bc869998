#include "modeller/planner.hpp"

#include <algorithm>

namespace modeller {

const char* to_string(Effect e) {
    switch (e) {
        case Effect::A: return "A";
        case Effect::D: return "D";
        case Effect::One: return "1";
        case Effect::Zero: return "0";
        case Effect::None: return "";
    }
    return "?";
}

Effect precondition(Effect e) {
    switch (e) {
        case Effect::A: return Effect::Zero;
        case Effect::D: return Effect::One;
        case Effect::One: return Effect::A;
        case Effect::Zero: return Effect::D;
        case Effect::None: return Effect::None;
    }
    return Effect::None;
}

namespace {

SvId group_of(GroupedModel& g, SvId& next, const IdSet& set) {
    if (auto it = g.by_set.find(set); it != g.by_set.end()) return it->second;
    const SvId id = next++;
    g.groups[id] = GroupSv{id, set};
    g.by_set[set] = id;
    return id;
}

// Single BSV node, or a group node when the set has several members.
PlanNode bsv_set_node(GroupedModel& g, SvId& next, const IdSet& set, Effect e) {
    if (set.size() == 1) return {*set.begin(), e};
    return {group_of(g, next, set), e};
}

}  // namespace

GroupedModel build_group_svs(const Model& m) {
    GroupedModel g;
    g.revision = m.revision();
    SvId next = m.next_id();
    for (const auto& [id, c] : m.csvs()) {
        if (c.blocked) continue;
        auto& view = g.csvs[id];
        IdSet pos_b, neg_b, ev_a, ev_d;
        for (SvId s : c.pos) {
            if (m.kind(s) == SvKind::Dynamics) {
                const auto& d = m.dsv(s);
                view.sources.push_back({d.owner, d.kind == DsvKind::Activation ? Effect::A : Effect::D});
            } else if (m.bsv(s).is_action) {
                view.sources.push_back({s, Effect::One});
            } else {
                pos_b.insert(s);
            }
        }
        // Negative DSV and action sources are not planned for.
        for (SvId s : c.neg)
            if (m.kind(s) == SvKind::Base && !m.bsv(s).is_action) neg_b.insert(s);
        if (!pos_b.empty()) view.sources.push_back(bsv_set_node(g, next, pos_b, Effect::One));
        if (!neg_b.empty()) view.sources.push_back(bsv_set_node(g, next, neg_b, Effect::Zero));
        for (SvId t : c.targets) {
            if (m.kind(t) == SvKind::Conditioning) {
                view.events.push_back({t, Effect::None});
            } else {
                const auto& d = m.dsv(t);
                (d.kind == DsvKind::Activation ? ev_a : ev_d).insert(d.owner);
            }
        }
        if (!ev_a.empty()) view.events.push_back(bsv_set_node(g, next, ev_a, Effect::A));
        if (!ev_d.empty()) view.events.push_back(bsv_set_node(g, next, ev_d, Effect::D));
        for (const auto& e : view.events) g.conditioners[e].insert(id);
    }
    for (const auto& [gid, grp] : g.groups) {
        for (SvId b : grp.constituents) g.constituencies[b].insert(gid);
        for (const auto& [hid, h] : g.groups)
            if (hid != gid && h.constituents.size() > grp.constituents.size() &&
                std::includes(h.constituents.begin(), h.constituents.end(), grp.constituents.begin(),
                              grp.constituents.end()))
                g.constituencies[gid].insert(hid);
    }
    return g;
}

bool satisfied_by_current(const Model& m, const GroupedModel& g, const PlanNode& n) {
    if (n.effect == Effect::None) return false;
    if (auto it = g.groups.find(n.sv); it != g.groups.end()) {
        for (SvId b : it->second.constituents)
            if (!satisfied_by_current(m, g, {b, n.effect})) return false;
        return true;
    }
    const auto& b = m.bsv(n.sv);
    if (b.is_action) return true;  // under the agent's control
    switch (n.effect) {
        case Effect::One: return b.cur == SvState::Active;
        case Effect::Zero: return b.cur == SvState::Inactive;
        case Effect::A: return m.dsv(b.dsv_a).state == SvState::Active;
        case Effect::D: return m.dsv(b.dsv_d).state == SvState::Active;
        case Effect::None: break;
    }
    return false;
}

namespace {

std::vector<std::pair<PlanNode, EdgeRole>> upstream(const GroupedModel& g, const PlanNode& n) {
    std::vector<std::pair<PlanNode, EdgeRole>> out;
    auto add_conditioners = [&] {
        if (auto it = g.conditioners.find(n); it != g.conditioners.end())
            for (SvId c : it->second) out.push_back({{c, Effect::None}, EdgeRole::Conditioner});
    };
    if (n.effect == Effect::None) {
        auto it = g.csvs.find(n.sv);
        if (it == g.csvs.end()) return out;
        for (const auto& s : it->second.sources) out.push_back({s, EdgeRole::Source});
        add_conditioners();
        return out;
    }
    out.push_back({{n.sv, precondition(n.effect)}, EdgeRole::Precondition});
    if (auto it = g.groups.find(n.sv); it != g.groups.end())
        for (SvId b : it->second.constituents) out.push_back({{b, n.effect}, EdgeRole::Constituent});
    if (auto it = g.constituencies.find(n.sv); it != g.constituencies.end())
        for (SvId h : it->second) out.push_back({{h, n.effect}, EdgeRole::Constituency});
    if (n.effect == Effect::A || n.effect == Effect::D) add_conditioners();
    return out;
}

bool node_alive(const Model& m, const ActionNetwork& an, const PlanNode& n) {
    if (an.roots.count(n)) return true;
    const auto& preds = an.predecessors(n);
    auto is_alive = [&](const PlanNode& p) { return an.alive.count(p) != 0; };
    if (n.effect == Effect::None) {
        bool sources = true, any_cond = false, has_cond = false;
        for (const auto& [p, role] : preds) {
            if (role == EdgeRole::Source) sources = sources && is_alive(p);
            if (role == EdgeRole::Conditioner) {
                has_cond = true;
                any_cond = any_cond || is_alive(p);
            }
        }
        const bool needs_cond = m.csv(n.sv).flag == Flag::Conditional && has_cond;
        return sources && (!needs_cond || any_cond);
    }
    bool pre = false, alt = false, constituents = true, has_constituents = false;
    for (const auto& [p, role] : preds) {
        switch (role) {
            case EdgeRole::Precondition: pre = is_alive(p); break;
            case EdgeRole::Constituent:
                has_constituents = true;
                constituents = constituents && is_alive(p);
                break;
            default: alt = alt || is_alive(p);
        }
    }
    alt = alt || (has_constituents && constituents);
    if (n.effect == Effect::A || n.effect == Effect::D) return pre && alt;
    return pre || alt;
}

}  // namespace

const std::vector<std::pair<PlanNode, EdgeRole>>& ActionNetwork::predecessors(const PlanNode& n) const {
    static const std::vector<std::pair<PlanNode, EdgeRole>> none;
    auto it = incoming.find(n);
    return it == incoming.end() ? none : it->second;
}

bool ActionNetwork::goals_alive() const {
    return !goals.empty() && std::all_of(goals.begin(), goals.end(), [&](const PlanNode& g) { return alive.count(g); });
}

bool generate_upstream_an(const Model& m, const GroupedModel& g, const PlanNode& n, ActionNetwork& an) {
    if (!an.nodes.insert(n).second) return true;
    if (satisfied_by_current(m, g, n)) {
        an.roots.insert(n);
        return true;
    }
    const auto preds = upstream(g, n);
    if (preds.empty()) return false;
    for (const auto& [p, role] : preds) {
        if (an.edges.emplace(std::pair{p, n}, role).second) an.incoming[n].push_back({p, role});
        generate_upstream_an(m, g, p, an);
    }
    return true;
}

ActionNetwork plan(const Model& m, const GroupedModel& g, const std::vector<PlanNode>& goals) {
    ActionNetwork an;
    an.goals = goals;
    for (const auto& goal : goals) generate_upstream_an(m, g, goal, an);
    // Least fixpoint of the liveness rules.
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& n : an.nodes)
            if (!an.alive.count(n) && node_alive(m, an, n)) {
                an.alive.insert(n);
                changed = true;
            }
    }
    return an;
}

namespace {

// Sources of `c` hold now when action `a` is taken.
bool sources_hold(const Model& m, SvId c, SvId a) {
    const auto& csv = m.csv(c);
    for (SvId s : csv.pos) {
        if (m.kind(s) == SvKind::Base && m.bsv(s).is_action) {
            if (s != a) return false;
        } else if (m.current_state(s) != SvState::Active) {
            return false;
        }
    }
    for (SvId s : csv.neg) {
        if (m.kind(s) == SvKind::Base && m.bsv(s).is_action) {
            if (s == a) return false;
        } else if (m.current_state(s) == SvState::Active) {
            return false;
        }
    }
    return true;
}

// A CSV that is not unconditional also needs one of its conditioners to
// fire, when it has any.
bool conditioners_allow(const Model& m, SvId c, SvId a, int depth) {
    if (depth > 64) return false;
    if (m.csv(c).flag == Flag::Unconditional) return true;
    bool any = false;
    for (SvId k : m.conditioners(c)) {
        if (m.csv(k).blocked) continue;
        any = true;
        if (sources_hold(m, k, a) && conditioners_allow(m, k, a, depth + 1)) return true;
    }
    return !any;
}

bool targets_allow(const Model& m, SvId c, SvId a, int depth) {
    if (depth > 64) return false;
    for (SvId t : m.csv(c).targets)
        if (m.kind(t) == SvKind::Conditioning && !(sources_hold(m, t, a) && targets_allow(m, t, a, depth + 1)))
            return false;
    return true;
}

// Whether `c` fires now given action `a`, including the CSVs it conditions.
bool fires_with(const Model& m, SvId c, SvId a) {
    return sources_hold(m, c, a) && conditioners_allow(m, c, a, 0) && targets_allow(m, c, a, 0);
}

// Events predicted by `c` when it fires, following conditioned CSVs.
void collect_events(const GroupedModel& g, SvId c, std::vector<PlanNode>& out, int depth = 0) {
    auto it = g.csvs.find(c);
    if (it == g.csvs.end() || depth > 64) return;
    for (const auto& e : it->second.events) {
        if (e.effect == Effect::None)
            collect_events(g, e.sv, out, depth + 1);
        else
            out.push_back(e);
    }
}

void expand_bsv_events(const GroupedModel& g, const PlanNode& e, std::set<PlanNode>& out) {
    if (auto it = g.groups.find(e.sv); it != g.groups.end()) {
        for (SvId b : it->second.constituents) out.insert({b, e.effect});
    } else {
        out.insert(e);
    }
}

// Whether `n` holds on the next step when the events in `produced` happen.
bool will_hold(const Model& m, const GroupedModel& g, const PlanNode& n, const std::set<PlanNode>& produced) {
    if (auto it = g.groups.find(n.sv); it != g.groups.end()) {
        for (SvId b : it->second.constituents)
            if (!will_hold(m, g, {b, n.effect}, produced)) return false;
        return true;
    }
    const auto& b = m.bsv(n.sv);
    if (b.is_action) return true;
    const bool on = b.cur == SvState::Active;
    switch (n.effect) {
        case Effect::One: return produced.count({n.sv, Effect::A}) || (on && !produced.count({n.sv, Effect::D}));
        case Effect::Zero: return produced.count({n.sv, Effect::D}) || (!on && !produced.count({n.sv, Effect::A}));
        case Effect::A:
        case Effect::D: return produced.count(n) != 0;
        case Effect::None: break;
    }
    return false;
}

// CSV nodes of the network reached from an event through its resulting
// state and through groups containing it.
std::set<SvId> consumers(const ActionNetwork& an, const PlanNode& e) {
    std::map<PlanNode, std::vector<std::pair<PlanNode, EdgeRole>>> out_edges;
    std::set<SvId> found;
    std::vector<PlanNode> todo{e};
    std::set<PlanNode> seen{e};
    while (!todo.empty()) {
        const PlanNode n = todo.back();
        todo.pop_back();
        auto lo = an.edges.lower_bound({n, PlanNode{0, Effect::A}});
        for (auto it = lo; it != an.edges.end() && it->first.first == n; ++it) {
            const PlanNode& s = it->first.second;
            const EdgeRole role = it->second;
            if (s.effect == Effect::None) {
                if (role == EdgeRole::Source) found.insert(s.sv);
                continue;
            }
            const bool settles = role == EdgeRole::Precondition &&
                                 ((n.effect == Effect::A && s.effect == Effect::One) ||
                                  (n.effect == Effect::D && s.effect == Effect::Zero));
            if ((settles || role == EdgeRole::Constituent) && seen.insert(s).second) todo.push_back(s);
        }
    }
    return found;
}

}  // namespace

IdSet candidate_actions(const ActionNetwork& an, const Model& m, const GroupedModel& g) {
    // Events each action would produce now, over the whole model.
    std::map<SvId, std::vector<SvId>> firing;  // action -> CSVs
    for (const auto& [id, view] : g.csvs) {
        SvId action = 0;
        int n_actions = 0;
        for (SvId s : m.csv(id).pos)
            if (m.kind(s) == SvKind::Base && m.bsv(s).is_action) {
                action = s;
                ++n_actions;
            }
        if (n_actions == 1 && fires_with(m, id, action)) firing[action].push_back(id);
    }
    const std::set<PlanNode> goals(an.goals.begin(), an.goals.end());
    IdSet out;
    for (const auto& [action, csvs] : firing) {
        std::set<PlanNode> produced;
        std::vector<std::vector<PlanNode>> events(csvs.size());
        for (std::size_t i = 0; i < csvs.size(); ++i) {
            collect_events(g, csvs[i], events[i]);
            for (const auto& e : events[i])
                if (satisfied_by_current(m, g, {e.sv, precondition(e.effect)})) expand_bsv_events(g, e, produced);
        }
        bool useful = false;
        for (std::size_t i = 0; i < csvs.size() && !useful; ++i) {
            if (!an.nodes.count({csvs[i], Effect::None})) continue;
            for (const auto& e : events[i]) {
                if (!an.nodes.count(e) || !satisfied_by_current(m, g, {e.sv, precondition(e.effect)})) continue;
                if (goals.count(e)) {
                    useful = true;
                    break;
                }
                for (SvId k : consumers(an, e)) {
                    bool ready = true;
                    for (const auto& src : g.csvs.at(k).sources)
                        if (!will_hold(m, g, src, produced)) {
                            ready = false;
                            break;
                        }
                    if (ready) {
                        useful = true;
                        break;
                    }
                }
                if (useful) break;
            }
        }
        if (useful) out.insert(action);
    }
    return out;
}

std::size_t select_action(const ActionNetwork& an, const Model& m, const GroupedModel& g,
                          const std::vector<SvId>& actions, std::mt19937_64& rng) {
    std::vector<std::size_t> idx;
    if (an.goals_alive()) {
        const IdSet cand = candidate_actions(an, m, g);
        for (std::size_t i = 0; i < actions.size(); ++i)
            if (cand.count(actions[i])) idx.push_back(i);
    }
    if (idx.empty()) return std::uniform_int_distribution<std::size_t>(0, actions.size() - 1)(rng);
    return idx[std::uniform_int_distribution<std::size_t>(0, idx.size() - 1)(rng)];
}

const GroupedModel& Planner::groups(const Model& m) {
    if (!valid_ || model_ != &m || cache_.revision != m.revision()) {
        cache_ = build_group_svs(m);
        model_ = &m;
        valid_ = true;
    }
    return cache_;
}

ActionNetwork Planner::plan(const Model& m, const std::vector<PlanNode>& goals) {
    return modeller::plan(m, groups(m), goals);
}

}  // namespace modeller

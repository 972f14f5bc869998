#include "modeller/model.hpp"

#include <algorithm>
#include <functional>

namespace modeller {

const char* to_string(SvState s) {
    switch (s) {
        case SvState::Active: return "active";
        case SvState::Inactive: return "inactive";
        case SvState::Unobserved: return "unobserved";
    }
    return "?";
}

const char* to_string(Flag f) {
    switch (f) {
        case Flag::Unconditional: return "unconditional";
        case Flag::Conditional: return "conditional";
        case Flag::PossiblyConditional: return "possibly_conditional";
    }
    return "?";
}

const char* to_string(DsvKind k) { return k == DsvKind::Activation ? "A" : "D"; }

SvId Model::add_bsv(const std::string& label, bool is_action) {
    BaseSv b;
    b.id = next_id_++;
    b.label = label;
    b.is_action = is_action;
    if (!is_action) {
        DynamicsSv a;
        a.id = next_id_++;
        a.owner = b.id;
        a.kind = DsvKind::Activation;
        a.label = label + "-A";
        DynamicsSv d;
        d.id = next_id_++;
        d.owner = b.id;
        d.kind = DsvKind::Deactivation;
        d.label = label + "-D";
        b.dsv_a = a.id;
        b.dsv_d = d.id;
        insert_dsv(a);
        insert_dsv(d);
    }
    insert_bsv(b);
    touch();
    return b.id;
}

void Model::insert_bsv(BaseSv b) {
    kinds_[b.id] = SvKind::Base;
    bsv_order_.push_back(b.id);
    next_id_ = std::max(next_id_, b.id + 1);
    bsvs_[b.id] = std::move(b);
}

void Model::insert_dsv(DynamicsSv d) {
    kinds_[d.id] = SvKind::Dynamics;
    next_id_ = std::max(next_id_, d.id + 1);
    dsvs_[d.id] = std::move(d);
}

void Model::insert_csv(ConditioningSv c) {
    kinds_[c.id] = SvKind::Conditioning;
    next_id_ = std::max(next_id_, c.id + 1);
    const SvId id = c.id;
    IdSet targets = c.targets;
    csvs_[id] = std::move(c);
    for (SvId t : targets) conditioners_[t].insert(id);
}

SvKind Model::kind(SvId id) const {
    auto it = kinds_.find(id);
    if (it == kinds_.end()) throw StructuralError("unknown SV id " + std::to_string(id));
    return it->second;
}

bool Model::contains(SvId id) const { return kinds_.count(id) != 0; }

const BaseSv& Model::bsv(SvId id) const {
    auto it = bsvs_.find(id);
    if (it == bsvs_.end()) throw StructuralError("unknown BSV id " + std::to_string(id));
    return it->second;
}
BaseSv& Model::bsv(SvId id) { return const_cast<BaseSv&>(std::as_const(*this).bsv(id)); }

const DynamicsSv& Model::dsv(SvId id) const {
    auto it = dsvs_.find(id);
    if (it == dsvs_.end()) throw StructuralError("unknown DSV id " + std::to_string(id));
    return it->second;
}
DynamicsSv& Model::dsv(SvId id) { return const_cast<DynamicsSv&>(std::as_const(*this).dsv(id)); }

const ConditioningSv& Model::csv(SvId id) const {
    auto it = csvs_.find(id);
    if (it == csvs_.end()) throw StructuralError("unknown CSV id " + std::to_string(id));
    return it->second;
}
ConditioningSv& Model::csv(SvId id) {
    return const_cast<ConditioningSv&>(std::as_const(*this).csv(id));
}

std::optional<SvId> Model::find_label(const std::string& label) const {
    for (const auto& [id, b] : bsvs_)
        if (b.label == label) return id;
    for (const auto& [id, d] : dsvs_)
        if (d.label == label) return id;
    for (const auto& [id, c] : csvs_)
        if (c.label == label) return id;
    return std::nullopt;
}

std::string Model::label(SvId id) const {
    switch (kind(id)) {
        case SvKind::Base: return bsv(id).label;
        case SvKind::Dynamics: return dsv(id).label;
        case SvKind::Conditioning: {
            const auto& c = csv(id);
            return c.label.empty() ? "C" + std::to_string(id) : c.label;
        }
    }
    return {};
}

SvState Model::source_state(SvId id) const {
    switch (kind(id)) {
        case SvKind::Base: {
            const auto& b = bsv(id);
            return b.is_action ? b.cur : b.prev;
        }
        case SvKind::Dynamics: return dsv(id).prev;
        case SvKind::Conditioning: break;
    }
    throw StructuralError("CSV used as a source");
}

SvState Model::target_state(SvId id) const {
    switch (kind(id)) {
        case SvKind::Dynamics: return dsv(id).state;
        case SvKind::Conditioning: return csv(id).state;
        case SvKind::Base: break;
    }
    throw StructuralError("BSV used as a target");
}

SvState Model::current_state(SvId id) const {
    switch (kind(id)) {
        case SvKind::Base: return bsv(id).cur;
        case SvKind::Dynamics: return dsv(id).state;
        case SvKind::Conditioning: return csv(id).state;
    }
    return SvState::Unobserved;
}

bool Model::sources_satisfied(const ConditioningSv& c) const {
    for (SvId s : c.pos)
        if (source_state(s) != SvState::Active) return false;
    for (SvId s : c.neg)
        if (source_state(s) == SvState::Active) return false;
    return true;
}

const IdSet& Model::conditioners(SvId target) const {
    static const IdSet empty;
    auto it = conditioners_.find(target);
    return it == conditioners_.end() ? empty : it->second;
}

void Model::link(SvId c, SvId t) {
    const SvKind k = kind(t);
    if (k == SvKind::Base) throw StructuralError("BSV cannot be a conditioning target");
    conditioners_[t].insert(c);
}

void Model::unlink(SvId c, SvId t) {
    auto it = conditioners_.find(t);
    if (it == conditioners_.end()) return;
    it->second.erase(c);
    if (it->second.empty()) conditioners_.erase(it);
}

SvId Model::create_csv(IdSet pos, IdSet neg, IdSet targets) {
    for (SvId s : pos)
        if (kind(s) == SvKind::Conditioning) throw StructuralError("CSV as positive source");
    for (SvId s : neg)
        if (kind(s) == SvKind::Conditioning) throw StructuralError("CSV as negative source");
    ConditioningSv c;
    c.id = next_id_++;
    c.pos = std::move(pos);
    c.neg = std::move(neg);
    c.targets = std::move(targets);
    kinds_[c.id] = SvKind::Conditioning;
    for (SvId t : c.targets) {
        link(c.id, t);
        c.stats[t];
    }
    const SvId id = c.id;
    csvs_[id] = std::move(c);
    touch();
    return id;
}

SvId Model::duplicate_csv(SvId src, const IdSet& targets) {
    ConditioningSv copy = csv(src);
    copy.id = next_id_++;
    copy.label.clear();
    copy.targets = targets;
    std::map<SvId, RelationStats> st;
    for (SvId t : targets) {
        auto it = copy.stats.find(t);
        st[t] = it == copy.stats.end() ? RelationStats{} : it->second;
    }
    copy.stats = std::move(st);
    kinds_[copy.id] = SvKind::Conditioning;
    for (SvId t : targets) link(copy.id, t);
    const SvId id = copy.id;
    csvs_[id] = std::move(copy);
    for (SvId up : IdSet(conditioners(src))) {
        auto& u = csvs_.at(up);
        u.targets.insert(id);
        u.stats[id] = u.stats[src];
        link(up, id);
    }
    touch();
    return id;
}

void Model::set_targets(SvId id, IdSet targets) {
    auto& c = csv(id);
    for (SvId t : c.targets)
        if (!targets.count(t)) {
            unlink(id, t);
            c.stats.erase(t);
        }
    for (SvId t : targets)
        if (!c.targets.count(t)) {
            link(id, t);
            c.stats[t];
        }
    c.targets = std::move(targets);
    touch();
}

void Model::remove_csv(SvId id) {
    auto it = csvs_.find(id);
    if (it == csvs_.end()) return;
    for (SvId t : it->second.targets) unlink(id, t);
    for (SvId up : IdSet(conditioners(id))) {
        auto& u = csvs_.at(up);
        u.targets.erase(id);
        u.stats.erase(id);
    }
    conditioners_.erase(id);
    csvs_.erase(it);
    kinds_.erase(id);
    touch();
}

void Model::retarget_conditioners(SvId from, SvId to) {
    for (SvId up : IdSet(conditioners(from))) {
        auto& u = csvs_.at(up);
        RelationStats st = u.stats[from];
        u.targets.erase(from);
        u.stats.erase(from);
        unlink(up, from);
        if (up == to) continue;
        if (u.targets.insert(to).second) u.stats[to] = st;
        link(up, to);
    }
    touch();
}

void Model::reset_history(const std::vector<bool>& snapshot) {
    if (snapshot.size() != bsv_order_.size())
        throw std::invalid_argument("snapshot does not cover every BSV");
    for (std::size_t i = 0; i < bsv_order_.size(); ++i) {
        auto& b = bsvs_.at(bsv_order_[i]);
        b.cur = b.prev = from_bool(snapshot[i]);
    }
    for (auto& [id, d] : dsvs_) d.prev = d.state = SvState::Unobserved;
    for (auto& [id, c] : csvs_) c.state = SvState::Unobserved;
    has_history_ = true;
}

bool Model::any_bsv_event() const {
    for (const auto& [id, b] : bsvs_)
        if (b.cur != b.prev) return true;
    return false;
}

bool Model::dsv_persists(const DynamicsSv& d) const {
    switch (cfg_.persistence) {
        case Persistence::ModelWide: return !any_bsv_event();
        case Persistence::PerOwner: {
            const auto& b = bsv(d.owner);
            return b.cur == b.prev;
        }
        case Persistence::None: return false;
    }
    return false;
}

std::vector<std::vector<SvId>> computation_levels(const Model& m) {
    std::map<SvId, int> level;
    std::map<SvId, int> mark;  // 1 = on stack, 2 = done
    std::function<int(SvId)> visit = [&](SvId id) -> int {
        auto mk = mark.find(id);
        if (mk != mark.end()) {
            if (mk->second == 1) throw StructuralError("conditioning cycle through C" + std::to_string(id));
            return level.at(id);
        }
        mark[id] = 1;
        int lv = 0;
        for (SvId t : m.csv(id).targets)
            if (m.kind(t) == SvKind::Conditioning) lv = std::max(lv, visit(t) + 1);
        mark[id] = 2;
        level[id] = lv;
        return lv;
    };
    for (const auto& [id, c] : m.csvs()) visit(id);
    std::vector<std::vector<SvId>> layers;
    for (const auto& [id, lv] : level) {
        if (static_cast<int>(layers.size()) <= lv) layers.resize(lv + 1);
        layers[lv].push_back(id);
    }
    return layers;
}

IdSet trivial_sources(const Model& m, SvId id) {
    IdSet out;
    IdSet seen;
    std::vector<SvId> stack;
    auto reach = [&](SvId x) {
        if (!seen.insert(x).second) return;
        if (m.kind(x) == SvKind::Dynamics) {
            out.insert(m.dsv(x).owner);
        } else if (m.kind(x) == SvKind::Conditioning) {
            stack.push_back(x);
        }
    };
    if (m.kind(id) == SvKind::Dynamics) {
        out.insert(m.dsv(id).owner);
        return out;
    }
    if (m.kind(id) != SvKind::Conditioning) return out;
    seen.insert(id);
    for (SvId t : m.csv(id).targets) reach(t);
    while (!stack.empty()) {
        SvId x = stack.back();
        stack.pop_back();
        const auto& c = m.csv(x);
        out.insert(c.pos.begin(), c.pos.end());
        out.insert(c.neg.begin(), c.neg.end());
        for (SvId t : c.targets) reach(t);
    }
    return out;
}

IdSet upstream_positive_sources(const Model& m, SvId id) {
    IdSet out;
    IdSet seen{id};
    std::vector<SvId> stack{id};
    while (!stack.empty()) {
        SvId x = stack.back();
        stack.pop_back();
        const auto& c = m.csv(x);
        out.insert(c.pos.begin(), c.pos.end());
        for (SvId up : m.conditioners(x))
            if (seen.insert(up).second) stack.push_back(up);
    }
    return out;
}

SvState relation_state(const IdSet& pos, const IdSet& neg, const std::map<SvId, SvState>& sources,
                   const std::map<SvId, SvState>& targets) {
    auto src = [&](SvId s) {
        auto it = sources.find(s);
        return it == sources.end() ? SvState::Unobserved : it->second;
    };
    for (SvId s : pos)
        if (src(s) != SvState::Active) return SvState::Unobserved;
    for (SvId s : neg)
        if (src(s) == SvState::Active) return SvState::Unobserved;
    bool any_active = false, any_inactive = false;
    for (const auto& [t, st] : targets) {
        any_active |= st == SvState::Active;
        any_inactive |= st == SvState::Inactive;
    }
    if (any_active && !any_inactive) return SvState::Active;
    if (any_inactive && !any_active) return SvState::Inactive;
    return SvState::Unobserved;
}

}  // namespace modeller

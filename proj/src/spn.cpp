#include "modeller/spn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace modeller {

std::vector<NodeId> StateNetwork::preds(NodeId n) const {
    std::vector<NodeId> out;
    for (const auto& [e, _] : edges)
        if (e.second == n) out.push_back(e.first);
    return out;
}

std::vector<NodeId> StateNetwork::succs(NodeId n) const {
    std::vector<NodeId> out;
    for (auto it = edges.lower_bound({n, 0}); it != edges.end() && it->first.first == n; ++it)
        out.push_back(it->first.second);
    return out;
}

NodeId Spn::add_node(const std::string& type, double x, double y) {
    const NodeId id = nodes.empty() ? 0 : nodes.rbegin()->first + 1;
    SpnNode n;
    n.type = type;
    n.x = x;
    n.y = y;
    nodes[id] = n;
    return id;
}

StateNetwork& Spn::net(const std::string& key) {
    for (auto& [k, sn] : nets)
        if (k == key) return sn;
    nets.emplace_back(key, StateNetwork{});
    return nets.back().second;
}

const StateNetwork& Spn::net(const std::string& key) const {
    for (const auto& [k, sn] : nets)
        if (k == key) return sn;
    throw SpnError("no state network with key " + key);
}

std::size_t Spn::edge_count() const {
    std::size_t n = 0;
    for (const auto& [_, sn] : nets) n += sn.edges.size();
    return n;
}

std::vector<std::string> Spn::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : nets) out.push_back(k);
    return out;
}

void Spn::validate() const {
    std::set<std::string> seen;
    for (const auto& [k, sn] : nets) {
        if (!seen.insert(k).second) throw SpnError("duplicate key " + k);
        for (const auto& [e, _] : sn.edges)
            if (!nodes.count(e.first) || !nodes.count(e.second))
                throw SpnError("edge endpoint missing in " + k);
    }
    for (const auto& [id, n] : nodes)
        if (!std::isfinite(n.x) || !std::isfinite(n.y)) throw SpnError("non-finite position");
}

Reach::Reach(const Spn& p) : p_(&p) {
    std::size_t i = 0;
    for (const auto& [id, _] : p.nodes) idx_[id] = i++;
    const std::size_t n = i;
    for (const auto& [_, sn] : p.nets) {
        std::vector<std::vector<NodeId>> adj(n);
        for (const auto& [e, __] : sn.edges) adj[idx_.at(e.first)].push_back(idx_.at(e.second));
        std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
        for (std::size_t s = 0; s < n; ++s) {
            std::deque<std::size_t> q(adj[s].begin(), adj[s].end());
            while (!q.empty()) {
                const auto v = q.front();
                q.pop_front();
                if (r[s][v]) continue;
                r[s][v] = true;
                for (auto w : adj[v])
                    if (!r[s][w]) q.push_back(w);
            }
        }
        r_.push_back(std::move(r));
    }
}

bool Reach::path(std::size_t net, NodeId a, NodeId b) const {
    auto ia = idx_.find(a), ib = idx_.find(b);
    if (ia == idx_.end() || ib == idx_.end()) return false;
    return r_[net][ia->second][ib->second];
}

void check_keys(const Spn& p0, const Spn& p1) {
    if (p0.keys() != p1.keys()) throw SpnError("state polynetworks have different keys");
}

namespace {

std::size_t missing(const Spn& p0, const Reach& r1, const Assignment& f, bool stop_at_first) {
    std::size_t n = 0;
    for (const auto& [id, _] : p0.nodes)
        if (!f.count(id)) {
            ++n;
            if (stop_at_first) return n;
        }
    for (std::size_t k = 0; k < p0.nets.size(); ++k)
        for (const auto& [e, _] : p0.nets[k].second.edges) {
            auto a = f.find(e.first), b = f.find(e.second);
            if (a == f.end() || b == f.end() || !r1.path(k, a->second, b->second)) {
                ++n;
                if (stop_at_first) return n;
            }
        }
    return n;
}

}  // namespace

bool is_satisfied_by(const Spn& p0, const Reach& r1, const Assignment& f) {
    check_keys(p0, r1.spn());
    return missing(p0, r1, f, true) == 0;
}

bool is_satisfied_by(const Spn& p0, const Spn& p1, const Assignment& f) {
    return is_satisfied_by(p0, Reach(p1), f);
}

std::size_t mismatch_score(const Spn& p0, const Reach& r1, const Assignment& f) {
    check_keys(p0, r1.spn());
    return missing(p0, r1, f, false);
}

std::size_t mismatch_score(const Spn& p0, const Spn& p1, const Assignment& f) {
    return mismatch_score(p0, Reach(p1), f);
}

std::vector<NodeEdge> remove_edge_with_rerelation(StateNetwork& sn, NodeId a, NodeId b) {
    std::vector<NodeEdge> added;
    auto it = sn.edges.find({a, b});
    if (it == sn.edges.end()) return added;
    const Presence pres = it->second;
    sn.edges.erase(it);
    auto add = [&](NodeId p, NodeId s) {
        if (p == s) return;
        if (sn.edges.emplace(NodeEdge{p, s}, Presence{pres.observed, 0}).second) added.push_back({p, s});
    };
    // Predecessors of `a` keep reaching `b`, `a` keeps reaching the
    // successors of `b`. Longer bypasses appear if these are rejected too.
    for (NodeId p : sn.preds(a)) add(p, b);
    for (NodeId s : sn.succs(b)) add(a, s);
    return added;
}

std::vector<NodeEdge> remove_node_with_rerelation(StateNetwork& sn, NodeId n) {
    std::vector<NodeEdge> added;
    const auto ps = sn.preds(n);
    const auto ss = sn.succs(n);
    std::uint64_t obs = 1;
    for (NodeId p : ps) obs = std::max(obs, sn.edges.at({p, n}).observed);
    for (NodeId p : ps) sn.edges.erase({p, n});
    for (NodeId s : ss) sn.edges.erase({n, s});
    for (NodeId p : ps)
        for (NodeId s : ss) {
            if (p == s) continue;
            if (sn.edges.emplace(NodeEdge{p, s}, Presence{obs, 0}).second) added.push_back({p, s});
        }
    return added;
}

namespace {

// Counts one encounter; true when the element should go.
bool encounter(Presence& p, bool present, double t_ref) {
    ++p.observed;
    if (present) return false;
    ++p.absent;
    return static_cast<double>(p.absent) / static_cast<double>(p.observed) > t_ref;
}

RefineReport refine_impl(Spn& p0, const Spn& p1, const Assignment& f, double t_ref, bool stats) {
    check_keys(p0, p1);
    const Reach r1(p1);
    RefineReport rep;

    std::vector<NodeId> drop;
    for (auto& [id, node] : p0.nodes) {
        auto it = f.find(id);
        const bool present = it != f.end() && p1.nodes.count(it->second);
        if (present) {
            const auto& m = p1.nodes.at(it->second);
            if (stats) {
                ++node.n_pos;
                node.x += (m.x - node.x) / static_cast<double>(node.n_pos);
                node.y += (m.y - node.y) / static_cast<double>(node.n_pos);
            }
        }
        if (stats ? encounter(node.presence, present, t_ref) : !present) drop.push_back(id);
    }
    for (NodeId id : drop) {
        for (auto& [_, sn] : p0.nets) {
            const auto before = sn.edges.size();
            const auto added = remove_node_with_rerelation(sn, id);
            rep.edges_added += added.size();
            rep.edges_removed += before + added.size() - sn.edges.size();
        }
        p0.nodes.erase(id);
        rep.nodes_removed.push_back(id);
    }

    for (std::size_t k = 0; k < p0.nets.size(); ++k) {
        auto& sn = p0.nets[k].second;
        std::set<NodeEdge> rejected;
        std::set<NodeEdge> checked;
        std::deque<NodeEdge> work;
        for (const auto& [e, _] : sn.edges) work.push_back(e);
        while (!work.empty()) {
            const NodeEdge e = work.front();
            work.pop_front();
            auto it = sn.edges.find(e);
            if (it == sn.edges.end() || !checked.insert(e).second) continue;
            auto a = f.find(e.first), b = f.find(e.second);
            const bool present = a != f.end() && b != f.end() && r1.path(k, a->second, b->second);
            if (!(stats ? encounter(it->second, present, t_ref) : !present)) continue;
            rejected.insert(e);
            const auto added = remove_edge_with_rerelation(sn, e.first, e.second);
            ++rep.edges_removed;
            for (const auto& n : added) {
                // Rejected edges are never brought back.
                if (rejected.count(n)) {
                    sn.edges.erase(n);
                    continue;
                }
                ++rep.edges_added;
                work.push_back(n);
            }
        }
    }
    return rep;
}

}  // namespace

RefineReport refine_by(Spn& p0, const Spn& p1, const Assignment& f) {
    return refine_impl(p0, p1, f, 0.0, false);
}

RefineReport statistical_refine_by(Spn& p0, const Spn& p1, const Assignment& f, double t_ref) {
    return refine_impl(p0, p1, f, t_ref, true);
}

std::vector<Assignment> generate_assignment_population(const Spn& p0, const Spn& p1,
                                                       std::size_t population_size,
                                                       std::mt19937_64& rng,
                                                       const Assignment& fixed) {
    struct Pair {
        NodeId a, b;
        double d;
    };
    std::set<NodeId> used_b;
    for (const auto& [a, b] : fixed) used_b.insert(b);
    std::vector<Pair> pairs;
    for (const auto& [a, na] : p0.nodes) {
        if (fixed.count(a)) continue;
        for (const auto& [b, nb] : p1.nodes) {
            if (used_b.count(b) || na.type != nb.type) continue;
            pairs.push_back({a, b, std::hypot(na.x - nb.x, na.y - nb.y)});
        }
    }
    std::vector<Assignment> out;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < std::max<std::size_t>(population_size, 1); ++i) {
        Assignment f = fixed;
        std::vector<Pair> left = pairs;
        while (!left.empty()) {
            double dmin = left[0].d;
            for (const auto& p : left) dmin = std::min(dmin, p.d);
            std::vector<double> w(left.size());
            double total = 0.0;
            for (std::size_t j = 0; j < left.size(); ++j) total += w[j] = std::exp(dmin - left[j].d);
            double r = u(rng) * total;
            std::size_t pick = left.size() - 1;
            for (std::size_t j = 0; j < left.size(); ++j) {
                r -= w[j];
                if (r < 0) {
                    pick = j;
                    break;
                }
            }
            const Pair chosen = left[pick];
            f[chosen.a] = chosen.b;
            std::erase_if(left, [&](const Pair& p) { return p.a == chosen.a || p.b == chosen.b; });
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::pair<Assignment, std::size_t> best_assignment(const Spn& p0, const Reach& r1,
                                                   const std::vector<Assignment>& population) {
    if (population.empty()) throw SpnError("empty assignment population");
    std::size_t best = 0, score = mismatch_score(p0, r1, population[0]);
    for (std::size_t i = 1; i < population.size() && score > 0; ++i) {
        const auto s = mismatch_score(p0, r1, population[i]);
        if (s < score) {
            score = s;
            best = i;
        }
    }
    return {population[best], score};
}

Assignment best_assignment(const Spn& p0, const Spn& p1, const std::vector<Assignment>& population) {
    return best_assignment(p0, Reach(p1), population).first;
}

}  // namespace modeller

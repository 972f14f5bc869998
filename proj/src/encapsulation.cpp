#include "modeller/encapsulation.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace modeller {

void Digraph::add_edge(const std::string& a, const std::string& b) {
    nodes.insert(a);
    nodes.insert(b);
    edges.insert({a, b});
}

void Digraph::remove_edge(const std::string& a, const std::string& b) {
    edges.erase({a, b});
    alternatives.erase({a, b});
}

void Digraph::remove_node(const std::string& n) {
    for (auto it = edges.begin(); it != edges.end();) {
        if (it->first == n || it->second == n) {
            alternatives.erase(*it);
            it = edges.erase(it);
        } else {
            ++it;
        }
    }
    nodes.erase(n);
    goals.erase(n);
}

std::vector<std::string> Digraph::preds(const std::string& n) const {
    std::vector<std::string> out;
    for (const auto& [a, b] : edges)
        if (b == n) out.push_back(a);
    return out;
}

std::vector<std::string> Digraph::succs(const std::string& n) const {
    std::vector<std::string> out;
    for (auto it = edges.lower_bound({n, std::string()}); it != edges.end() && it->first == n; ++it)
        out.push_back(it->second);
    return out;
}

bool Digraph::has_path(const std::string& a, const std::string& b) const {
    std::set<std::string> seen;
    std::vector<std::string> todo = succs(a);
    while (!todo.empty()) {
        const std::string n = todo.back();
        todo.pop_back();
        if (n == b) return true;
        if (!seen.insert(n).second) continue;
        for (auto& s : succs(n)) todo.push_back(s);
    }
    return false;
}

std::set<std::string> Digraph::ancestors(const std::string& n) const {
    std::map<std::string, std::vector<std::string>> in;
    for (const auto& [a, b] : edges) in[b].push_back(a);
    std::set<std::string> out;
    std::vector<std::string> todo{n};
    while (!todo.empty()) {
        const std::string x = todo.back();
        todo.pop_back();
        for (const auto& p : in[x])
            if (out.insert(p).second) todo.push_back(p);
    }
    out.erase(n);
    return out;
}

Digraph Digraph::induced(const std::set<std::string>& keep) const {
    Digraph out;
    for (const auto& n : keep)
        if (nodes.count(n)) out.nodes.insert(n);
    for (const auto& e : edges)
        if (out.nodes.count(e.first) && out.nodes.count(e.second)) {
            out.edges.insert(e);
            if (alternatives.count(e)) out.alternatives.insert(e);
        }
    for (const auto& g : goals)
        if (out.nodes.count(g)) out.goals.insert(g);
    return out;
}

void Digraph::merge(const Digraph& o) {
    nodes.insert(o.nodes.begin(), o.nodes.end());
    edges.insert(o.edges.begin(), o.edges.end());
    alternatives.insert(o.alternatives.begin(), o.alternatives.end());
    goals.insert(o.goals.begin(), o.goals.end());
}

std::string node_label(const Model& m, const GroupedModel& g, const PlanNode& n) {
    if (n.effect == Effect::None) return m.label(n.sv);
    const std::string base = g.is_group(n.sv) ? "Group" + std::to_string(n.sv) : m.label(n.sv);
    return base + "-" + to_string(n.effect);
}

Digraph to_digraph(const ActionNetwork& an, const Model& m, const GroupedModel& g) {
    Digraph d;
    for (const auto& n : an.nodes) d.nodes.insert(node_label(m, g, n));
    for (const auto& [e, role] : an.edges) {
        const std::string a = node_label(m, g, e.first), b = node_label(m, g, e.second);
        d.edges.insert({a, b});
        if (role == EdgeRole::Conditioner) d.alternatives.insert({a, b});
    }
    for (const auto& goal : an.goals) d.goals.insert(node_label(m, g, goal));
    return d;
}

namespace {

struct SplitState {
    std::set<std::string> visited;
    std::vector<std::string> frontier;
    std::set<Edge> edges;
};

void split_from(const Digraph& an, SplitState s, std::vector<Digraph>& out, std::set<std::set<Edge>>& seen,
                const EncapsulationLimits& lim) {
    while (!s.frontier.empty()) {
        const std::string n = s.frontier.back();
        s.frontier.pop_back();
        std::vector<std::string> alts;
        auto take = [&n](SplitState& st, const std::string& p) {
            st.edges.insert({p, n});
            if (st.visited.insert(p).second) st.frontier.push_back(p);
        };
        for (const auto& p : an.preds(n)) {
            if (an.alternatives.count({p, n}))
                alts.push_back(p);
            else
                take(s, p);
        }
        if (alts.size() <= 1) {
            for (const auto& p : alts) take(s, p);
            continue;
        }
        for (const auto& p : alts) {
            SplitState c = s;
            take(c, p);
            split_from(an, std::move(c), out, seen, lim);
        }
        return;
    }
    if (!seen.insert(s.edges).second) return;
    if (out.size() >= lim.max_alternatives)
        throw EncapsulationError("alternative networks exceed cap of " + std::to_string(lim.max_alternatives));
    Digraph d = an.induced(s.visited);
    d.edges = s.edges;
    d.alternatives.clear();
    for (const auto& e : s.edges)
        if (an.alternatives.count(e)) d.alternatives.insert(e);
    out.push_back(std::move(d));
}

}  // namespace

std::vector<Digraph> split_alternatives(const Digraph& an, const EncapsulationLimits& lim) {
    SplitState s;
    for (const auto& g : an.goals) {
        s.visited.insert(g);
        s.frontier.push_back(g);
    }
    std::vector<Digraph> out;
    std::set<std::set<Edge>> seen;
    split_from(an, std::move(s), out, seen, lim);
    return out;
}

void remove_with_rerelation(Digraph& net, const std::string& n0, const std::string& n1) {
    for (const auto& p : net.preds(n0))
        for (const auto& s : net.succs(n1))
            if (p != s) net.edges.insert({p, s});
    net.remove_edge(n0, n1);
}

void remove_node_with_rerelation(Digraph& net, const std::string& n) {
    for (const auto& p : net.preds(n))
        for (const auto& s : net.succs(n))
            if (p != s && p != n && s != n) net.edges.insert({p, s});
    net.remove_node(n);
}

Digraph construct_encapsulated_an(const std::vector<Digraph>& nets) {
    if (nets.empty()) return {};
    Digraph e = nets[0];
    e.alternatives.clear();
    const std::vector<std::string> order(e.nodes.begin(), e.nodes.end());
    for (const auto& n : order) {
        const bool everywhere =
            std::all_of(nets.begin() + 1, nets.end(), [&](const Digraph& d) { return d.nodes.count(n) != 0; });
        if (!everywhere) remove_node_with_rerelation(e, n);
    }
    auto reliable = [&](const Edge& ed) {
        return std::all_of(nets.begin(), nets.end(), [&](const Digraph& d) { return d.has_path(ed.first, ed.second); });
    };
    // An edge rejected once is never reliable, so it is not re-added.
    std::set<Edge> rejected;
    for (bool changed = true; changed;) {
        changed = false;
        const std::vector<Edge> edges(e.edges.begin(), e.edges.end());
        for (const auto& ed : edges) {
            if (!e.edges.count(ed) || reliable(ed)) continue;
            rejected.insert(ed);
            for (const auto& p : e.preds(ed.first))
                for (const auto& s : e.succs(ed.second))
                    if (p != s && !rejected.count({p, s})) e.edges.insert({p, s});
            e.remove_edge(ed.first, ed.second);
            changed = true;
        }
    }
    return e;
}

Digraph get_connecting_subnetwork(const Digraph& net, const std::string& source, const std::string& target,
                                  const EncapsulationLimits& lim) {
    std::set<std::string> on_path;
    std::size_t n_paths = 0;
    std::vector<std::string> path{source};
    std::set<std::string> in_path{source};
    std::function<void(const std::string&)> dfs = [&](const std::string& n) {
        for (const auto& s : net.succs(n)) {
            if (s == target) {
                if (++n_paths > lim.max_paths)
                    throw EncapsulationError("simple paths exceed cap of " + std::to_string(lim.max_paths));
                on_path.insert(path.begin(), path.end());
                on_path.insert(target);
                continue;
            }
            if (in_path.count(s)) continue;
            path.push_back(s);
            in_path.insert(s);
            dfs(s);
            in_path.erase(s);
            path.pop_back();
        }
    };
    if (!net.nodes.count(source) || !net.nodes.count(target)) return {};
    dfs(source);
    if (on_path.empty()) return {};
    Digraph out = net.induced(on_path);
    std::set<std::string> upstream;
    for (const auto& n : on_path) {
        if (n == source || n == target) continue;
        upstream.insert(n);
        auto anc = net.ancestors(n);
        upstream.insert(anc.begin(), anc.end());
    }
    out.merge(net.induced(upstream));
    return out;
}

std::size_t Ean::depth() const {
    if (leaf) return 0;
    std::size_t d = 0;
    for (const auto& [e, groups] : payload)
        for (const auto& g : groups) d = std::max(d, g.depth());
    return d + 1;
}

std::vector<std::vector<Digraph>> group_pathways(const std::vector<Digraph>& subs,
                                                 const std::set<std::string>& skeleton) {
    std::vector<std::size_t> parent(subs.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        return parent[i] == i ? i : parent[i] = find(parent[i]);
    };
    std::map<std::string, std::size_t> owner;
    for (std::size_t i = 0; i < subs.size(); ++i)
        for (const auto& n : subs[i].nodes) {
            if (skeleton.count(n)) continue;
            auto [it, fresh] = owner.emplace(n, i);
            if (!fresh) parent[find(i)] = find(it->second);
        }
    std::map<std::size_t, std::vector<Digraph>> groups;
    for (std::size_t i = 0; i < subs.size(); ++i) groups[find(i)].push_back(subs[i]);
    std::vector<std::vector<Digraph>> out;
    for (auto& [root, g] : groups) out.push_back(std::move(g));
    return out;
}

namespace {

std::vector<Digraph> distinct(const std::vector<Digraph>& nets) {
    std::vector<Digraph> out;
    for (const auto& n : nets)
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    return out;
}

Ean leaf_of(const Digraph& d) {
    Ean e;
    e.graph = d;
    e.leaf = true;
    return e;
}

}  // namespace

Ean encapsulate_behavior(const std::vector<Digraph>& nets_in, const EncapsulationLimits& lim, int depth) {
    if (depth > lim.max_depth) throw EncapsulationError("encapsulation depth exceeds " + std::to_string(lim.max_depth));
    const auto nets = distinct(nets_in);
    if (nets.empty()) return leaf_of({});
    if (nets.size() == 1) return leaf_of(nets[0]);
    Ean out;
    out.inputs = nets;
    out.graph = construct_encapsulated_an(nets);
    std::size_t largest = 0;
    for (const auto& n : nets) largest = std::max(largest, n.nodes.size());
    for (const auto& edge : out.graph.edges) {
        std::vector<Digraph> subs;
        for (const auto& n : nets) {
            auto s = get_connecting_subnetwork(n, edge.first, edge.second, lim);
            if (!s.nodes.empty()) subs.push_back(std::move(s));
        }
        auto& slot = out.payload[edge];
        for (auto& group : group_pathways(distinct(subs), out.graph.nodes)) {
            const bool shrinks = std::all_of(group.begin(), group.end(),
                                             [&](const Digraph& d) { return d.nodes.size() < largest; });
            if (group.size() > 1 && shrinks) {
                slot.push_back(encapsulate_behavior(group, lim, depth + 1));
            } else {
                for (const auto& d : group) slot.push_back(leaf_of(d));
            }
        }
    }
    return out;
}

std::string to_dot(const Digraph& g, const std::string& name) {
    std::ostringstream os;
    os << "digraph " << name << " {\n";
    for (const auto& n : g.nodes) os << "  \"" << n << "\"" << (g.goals.count(n) ? " [shape=doublecircle]" : "") << ";\n";
    for (const auto& [a, b] : g.edges)
        os << "  \"" << a << "\" -> \"" << b << "\"" << (g.alternatives.count({a, b}) ? " [style=dashed]" : "") << ";\n";
    os << "}\n";
    return os.str();
}

namespace {

nlohmann::json graph_json(const Digraph& g) {
    nlohmann::json j;
    j["nodes"] = g.nodes;
    j["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : g.edges) j["edges"].push_back({a, b});
    j["goals"] = g.goals;
    return j;
}

nlohmann::json ean_json(const Ean& e) {
    nlohmann::json j = graph_json(e.graph);
    j["leaf"] = e.leaf;
    if (!e.leaf) {
        j["payload"] = nlohmann::json::array();
        for (const auto& [edge, groups] : e.payload) {
            nlohmann::json p;
            p["edge"] = {edge.first, edge.second};
            p["groups"] = nlohmann::json::array();
            for (const auto& g : groups) p["groups"].push_back(ean_json(g));
            j["payload"].push_back(p);
        }
    }
    return j;
}

}  // namespace

std::string to_json(const Ean& e) { return ean_json(e).dump(2); }

}  // namespace modeller

#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "modeller/spn.hpp"

using namespace modeller;

namespace {

// Nodes named by single letters; the type is the name.
struct Named {
    Spn p;
    std::map<std::string, NodeId> id;

    explicit Named(std::vector<std::string> keys = {"k"}) {
        for (const auto& k : keys) p.net(k);
    }
    NodeId node(const std::string& n, double x = 0, double y = 0) {
        if (!id.count(n)) id[n] = p.add_node(n, x, y);
        return id[n];
    }
    void edge(const std::string& a, const std::string& b, const std::string& key = "k") {
        p.net(key).edges[{node(a), node(b)}] = {};
    }
    bool has(const std::string& a, const std::string& b, const std::string& key = "k") const {
        return p.net(key).has_edge(id.at(a), id.at(b));
    }
};

Assignment by_name(const Named& a, const Named& b) {
    Assignment f;
    for (const auto& [n, i] : a.id)
        if (b.id.count(n)) f[i] = b.id.at(n);
    return f;
}

// Floyd-Warshall closure of one SN; path of length >= 1.
std::set<NodeEdge> closure(const Spn& p, std::size_t k) {
    std::vector<NodeId> v;
    for (const auto& [id, _] : p.nodes) v.push_back(id);
    std::set<NodeEdge> r;
    for (const auto& [e, _] : p.nets[k].second.edges) r.insert(e);
    for (NodeId m : v)
        for (NodeId a : v)
            for (NodeId b : v)
                if (r.count({a, m}) && r.count({m, b})) r.insert({a, b});
    return r;
}

bool oracle_satisfied(const Spn& p0, const Spn& p1, const Assignment& f) {
    for (const auto& [id, _] : p0.nodes)
        if (!f.count(id)) return false;
    for (std::size_t k = 0; k < p0.nets.size(); ++k) {
        const auto c = closure(p1, k);
        for (const auto& [e, _] : p0.nets[k].second.edges)
            if (!c.count({f.at(e.first), f.at(e.second)})) return false;
    }
    return true;
}

Spn random_spn(std::mt19937_64& rng, int max_nodes, double p_edge, int n_types = 3) {
    Spn s;
    s.net("h");
    s.net("v");
    std::uniform_int_distribution<int> nn(1, max_nodes), ty(0, n_types - 1);
    std::uniform_real_distribution<double> u(0, 1), pos(0, 10);
    const int n = nn(rng);
    for (int i = 0; i < n; ++i) s.add_node(std::string(1, static_cast<char>('a' + ty(rng))), pos(rng), pos(rng));
    for (auto& [k, sn] : s.nets)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && (k == "h" ? i < j : i > j) && u(rng) < p_edge)
                    sn.edges[{static_cast<NodeId>(i), static_cast<NodeId>(j)}] = {};
    return s;
}

// Every type-preserving injective partial assignment.
std::vector<Assignment> all_assignments(const Spn& p0, const Spn& p1) {
    std::vector<NodeId> src;
    for (const auto& [id, _] : p0.nodes) src.push_back(id);
    std::vector<Assignment> out;
    Assignment cur;
    std::set<NodeId> used;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == src.size()) {
            out.push_back(cur);
            return;
        }
        rec(i + 1);
        for (const auto& [b, nb] : p1.nodes) {
            if (used.count(b) || nb.type != p0.nodes.at(src[i]).type) continue;
            cur[src[i]] = b;
            used.insert(b);
            rec(i + 1);
            used.erase(b);
            cur.erase(src[i]);
        }
    };
    rec(0);
    return out;
}

// Refinement example: A->B->{D,C} with a Z->Y->X->C chain and A->Z in the
// source; the refiner reaches D and C from A through K and C from Z through L.
std::pair<Named, Named> refinement_example() {
    Named s, r;
    for (auto e : {std::pair{"A", "B"}, {"B", "D"}, {"B", "C"}, {"A", "Z"}, {"Z", "Y"}, {"Y", "X"}, {"X", "C"}})
        s.edge(e.first, e.second);
    for (auto e : {std::pair{"A", "B"}, {"B", "M"}, {"A", "K"}, {"K", "D"}, {"K", "C"}, {"Z", "L"}, {"L", "C"}})
        r.edge(e.first, e.second);
    return {s, r};
}

}  // namespace

TEST_CASE("satisfaction") {
    Named empty, any;
    any.edge("a", "b");
    CHECK(is_satisfied_by(empty.p, any.p, {}));

    Named p0, p1;
    p0.edge("a", "b");
    p1.edge("a", "x");
    p1.edge("x", "b");
    CHECK(is_satisfied_by(p0.p, p1.p, by_name(p0, p1)));

    Named q1;
    q1.edge("a", "x");
    q1.edge("b", "x");
    q1.node("y");
    CHECK_FALSE(is_satisfied_by(p0.p, q1.p, by_name(p0, q1)));
    CHECK(oracle_satisfied(p0.p, p1.p, by_name(p0, p1)));
    CHECK_FALSE(oracle_satisfied(p0.p, q1.p, by_name(p0, q1)));

    CHECK_FALSE(is_satisfied_by(p0.p, p1.p, {}));

    Named other({"z"});
    other.node("a");
    CHECK_THROWS_AS(is_satisfied_by(p0.p, other.p, {}), SpnError);
}

TEST_CASE("satisfaction agrees with closure oracle on random pairs") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 300; ++t) {
        const Spn a = random_spn(rng, 4, 0.4), b = random_spn(rng, 4, 0.4);
        for (const auto& f : all_assignments(a, b)) CHECK(is_satisfied_by(a, b, f) == oracle_satisfied(a, b, f));
    }
}

TEST_CASE("refinement example") {
    auto [s, r] = refinement_example();
    const auto f = by_name(s, r);
    CHECK(mismatch_score(s.p, r.p, f) == 8);
    const auto rep = refine_by(s.p, r.p, f);
    CHECK(rep.nodes_removed.size() == 2);
    CHECK(s.p.nodes.size() == 5);
    CHECK(s.has("A", "B"));
    CHECK(s.has("A", "D"));
    CHECK(s.has("A", "C"));
    CHECK(s.has("Z", "C"));
    CHECK_FALSE(s.has("A", "Z"));
    CHECK_FALSE(s.has("B", "D"));
    CHECK(s.p.net("k").edges.size() == 4);
    CHECK(is_satisfied_by(s.p, r.p, f));
}

TEST_CASE("refining by itself changes nothing") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 50; ++t) {
        Spn p = random_spn(rng, 6, 0.4);
        const Spn before = p;
        Assignment id;
        for (const auto& [n, _] : p.nodes) id[n] = n;
        CHECK_FALSE(refine_by(p, before, id).changed());
        CHECK(p == before);
    }
}

TEST_CASE("edge rerelation") {
    StateNetwork sn;
    for (auto e : {NodeEdge{0, 1}, {1, 2}, {2, 3}}) sn.edges[e] = {};
    const auto added = remove_edge_with_rerelation(sn, 1, 2);
    CHECK(sn.has_edge(0, 2));
    CHECK(sn.has_edge(1, 3));
    CHECK_FALSE(sn.has_edge(1, 2));
    CHECK(added.size() == 2);

    StateNetwork chain;
    for (auto e : {NodeEdge{0, 1}, {1, 2}}) chain.edges[e] = {};
    remove_node_with_rerelation(chain, 1);
    CHECK(chain.edges.size() == 1);
    CHECK(chain.has_edge(0, 2));
}

TEST_CASE("refinement: single step agrees with path oracle") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        Spn p0 = random_spn(rng, 7, 0.35);
        const Spn p1 = random_spn(rng, 7, 0.35);
        const auto pop = generate_assignment_population(p0, p1, 4, rng);
        const auto f = best_assignment(p0, p1, pop);
        const Spn before = p0;
        std::vector<std::set<NodeEdge>> pre;
        for (std::size_t k = 0; k < before.nets.size(); ++k) pre.push_back(closure(before, k));
        refine_by(p0, p1, f);

        for (const auto& [id, n] : before.nodes) {
            CHECK(p0.nodes.count(id) == f.count(id));
            if (p0.nodes.count(id)) CHECK(p0.nodes.at(id).type == n.type);
        }
        for (std::size_t k = 0; k < before.nets.size(); ++k) {
            const auto c1 = closure(p1, k);
            for (const auto& [e, _] : before.nets[k].second.edges) {
                if (!p0.nodes.count(e.first) || !p0.nodes.count(e.second)) continue;
                const bool path = c1.count({f.at(e.first), f.at(e.second)}) > 0;
                CHECK(p0.nets[k].second.has_edge(e.first, e.second) == path);
            }
            for (const auto& [e, _] : p0.nets[k].second.edges) {
                CHECK(pre[k].count(e));
                CHECK(c1.count({f.at(e.first), f.at(e.second)}));
            }
        }
        CHECK(p0.nodes.size() <= before.nodes.size());
    }
}

TEST_CASE("sequential refinement stays satisfied by every refiner") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 200; ++t) {
        Spn p0 = random_spn(rng, 8, 0.4, 2);
        std::vector<std::pair<Spn, Assignment>> used;
        const int k = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < k; ++i) {
            Spn r = random_spn(rng, 8, 0.4, 2);
            const auto f = best_assignment(p0, r, generate_assignment_population(p0, r, 10, rng));
            statistical_refine_by(p0, r, f, 0.0);
            used.emplace_back(std::move(r), f);
        }
        for (const auto& [r, f] : used) {
            Assignment g;
            for (const auto& [a, b] : f)
                if (p0.nodes.count(a)) g[a] = b;
            CHECK(is_satisfied_by(p0, r, g));
            CHECK(oracle_satisfied(p0, r, g));
        }
    }
}

TEST_CASE("statistical refinement counters") {
    Named s, r;
    s.node("a");
    s.node("b");
    r.node("a");
    const auto f = by_name(s, r);
    const NodeId b = s.id["b"];
    // Present 38 more times, then absent once: 1/40 <= 0.05.
    s.p.nodes[b].presence = {38, 0};
    Named full;
    full.node("a");
    full.node("b");
    statistical_refine_by(s.p, full.p, by_name(s, full), 0.05);
    CHECK(s.p.nodes[b].presence.observed == 39);
    statistical_refine_by(s.p, r.p, f, 0.05);
    CHECK(s.p.nodes.count(b));
    CHECK(s.p.nodes[b].presence.absent == 1);
    CHECK(s.p.nodes[b].presence.observed == 40);

    Named t, empty;
    t.node("q");
    empty.node("z");
    statistical_refine_by(t.p, empty.p, {}, 0.05);
    CHECK(t.p.nodes.empty());
}

TEST_CASE("statistical refinement averages positions") {
    Named s, r;
    s.node("a", 0, 0);
    r.node("a", 4, 2);
    statistical_refine_by(s.p, r.p, by_name(s, r), 0.05);
    CHECK(s.p.nodes.begin()->second.x == doctest::Approx(2.0));
    CHECK(s.p.nodes.begin()->second.y == doctest::Approx(1.0));
}

TEST_CASE("assignment population") {
    std::mt19937_64 rng(5);
    Named s, r;
    s.node("a", 0, 0);
    r.node("a", 3, 3);
    r.node("b", 0, 0);
    for (const auto& f : generate_assignment_population(s.p, r.p, 10, rng)) {
        REQUIRE(f.size() == 1);
        CHECK(f.begin()->second == r.id["a"]);
    }

    // Same-type candidates at distances 1 and 5.
    Spn src, ref;
    src.net("k");
    ref.net("k");
    src.add_node("t", 0, 0);
    const NodeId near = ref.add_node("t", 1, 0);
    ref.add_node("t", 0, 5);
    const auto pop = generate_assignment_population(src, ref, 10000, rng);
    int hits = 0;
    for (const auto& f : pop) hits += f.at(0) == near;
    const double expect = std::exp(-1.0) / (std::exp(-1.0) + std::exp(-5.0));
    CHECK(static_cast<double>(hits) / 10000.0 == doctest::Approx(expect).epsilon(0.005));
}

TEST_CASE("assignments are type-preserving, injective and keep fixed entries") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        const Spn a = random_spn(rng, 8, 0.3), b = random_spn(rng, 8, 0.3);
        Assignment fixed;
        if (!a.nodes.empty() && !b.nodes.empty() && a.nodes.begin()->second.type == b.nodes.begin()->second.type)
            fixed[a.nodes.begin()->first] = b.nodes.begin()->first;
        for (const auto& f : generate_assignment_population(a, b, 5, rng, fixed)) {
            std::set<NodeId> img;
            for (const auto& [x, y] : f) {
                CHECK(a.nodes.at(x).type == b.nodes.at(y).type);
                CHECK(img.insert(y).second);
            }
            for (const auto& [x, y] : fixed) CHECK(f.at(x) == y);
        }
    }
}

TEST_CASE("mismatch and best assignment against exhaustive search") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 100; ++t) {
        const Spn a = random_spn(rng, 5, 0.4), b = random_spn(rng, 5, 0.4);
        const auto all = all_assignments(a, b);
        std::size_t best = SIZE_MAX;
        std::size_t first = 0;
        for (std::size_t i = 0; i < all.size(); ++i) {
            const auto s = mismatch_score(a, b, all[i]);
            if (s < best) {
                best = s;
                first = i;
            }
        }
        const auto pop = generate_assignment_population(a, b, 10, rng);
        for (const auto& f : pop) CHECK(mismatch_score(a, b, f) >= best);
        const auto [f, score] = best_assignment(a, Reach(b), all);
        CHECK(score == best);
        CHECK(f == all[first]);
        if (score == 0) CHECK(is_satisfied_by(a, b, f));
    }
}

TEST_CASE("best assignment ties go to the lowest index") {
    Named s, r;
    s.node("a");
    r.node("a");
    const Assignment one = by_name(s, r);
    const auto [f, score] = best_assignment(s.p, Reach(r.p), {Assignment{}, one, one});
    CHECK(score == 0);
    CHECK(f == one);
    CHECK_THROWS_AS(best_assignment(s.p, Reach(r.p), {}), SpnError);
}

TEST_CASE("spn validation") {
    Spn p;
    p.net("a");
    p.add_node("t", 0, 0);
    CHECK_NOTHROW(p.validate());
    p.net("a").edges[{0, 7}] = {};
    CHECK_THROWS_AS(p.validate(), SpnError);
    Spn q;
    q.nets.emplace_back("a", StateNetwork{});
    q.nets.emplace_back("a", StateNetwork{});
    CHECK_THROWS_AS(q.validate(), SpnError);
}

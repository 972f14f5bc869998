#include <algorithm>
#include <random>

#include "doctest.h"
#include "modeller/learning.hpp"
#include "modeller/model.hpp"

using namespace modeller;

namespace {

std::vector<bool> snap(std::initializer_list<int> v) {
    std::vector<bool> out;
    for (int x : v) out.push_back(x != 0);
    return out;
}

}  // namespace

TEST_CASE("dsv states follow owner transitions") {
    Model m;
    const SvId x = m.add_bsv("X");
    const SvId other = m.add_bsv("O");
    const auto& b = m.bsv(x);

    m.reset_history(snap({0, 0}));
    process_environment_step(m, snap({1, 1}));
    CHECK(m.dsv(b.dsv_a).state == SvState::Active);
    CHECK(m.dsv(b.dsv_d).state == SvState::Unobserved);

    // Another BSV changes, so persistence ends; X stays active.
    process_environment_step(m, snap({1, 0}));
    CHECK(m.dsv(b.dsv_a).state == SvState::Unobserved);
    CHECK(m.dsv(b.dsv_d).state == SvState::Inactive);

    m.reset_history(snap({0, 0}));
    process_environment_step(m, snap({0, 1}));
    CHECK(m.dsv(b.dsv_a).state == SvState::Inactive);
    CHECK(m.dsv(b.dsv_d).state == SvState::Unobserved);
    (void)other;
}

TEST_CASE("active dsv persists while no bsv changes") {
    Model m;
    const SvId x = m.add_bsv("X");
    m.add_bsv("O");
    const SvId a = m.bsv(x).dsv_a;
    m.reset_history(snap({0, 0}));
    process_environment_step(m, snap({1, 0}));
    process_environment_step(m, snap({1, 0}));
    CHECK(m.dsv(a).state == SvState::Active);
    process_environment_step(m, snap({1, 1}));
    CHECK(m.dsv(a).state == SvState::Unobserved);

    Model n(ModelConfig{Persistence::None});
    const SvId y = n.add_bsv("Y");
    n.reset_history(snap({0}));
    process_environment_step(n, snap({1}));
    process_environment_step(n, snap({1}));
    CHECK(n.dsv(n.bsv(y).dsv_a).state == SvState::Unobserved);
}

TEST_CASE("observation size mismatch is an input error") {
    Model m;
    m.add_bsv("X");
    CHECK_THROWS_AS(process_environment_step(m, snap({1, 0})), std::invalid_argument);
}

TEST_CASE("action bsvs own no dsvs and read their current value as previous-step") {
    Model m;
    const SvId act = m.add_bsv("a", true);
    CHECK(m.dsvs().empty());
    m.reset_history(snap({0}));
    process_environment_step(m, snap({1}));
    CHECK(m.source_state(act) == SvState::Active);
}

TEST_CASE("sources satisfied") {
    Model m;
    const SvId x0 = m.add_bsv("X0");
    const SvId x2 = m.add_bsv("X2");
    const SvId y = m.add_bsv("Y");
    const SvId c = m.create_csv({x0}, {x2}, {m.bsv(y).dsv_a});
    auto set_prev = [&](SvId id, bool on) { m.bsv(id).prev = from_bool(on); };
    set_prev(x0, true);
    set_prev(x2, false);
    CHECK(m.sources_satisfied(m.csv(c)));
    set_prev(x2, true);
    CHECK_FALSE(m.sources_satisfied(m.csv(c)));

    ConditioningSv empty;
    CHECK(m.sources_satisfied(empty));
}

TEST_CASE("computation levels") {
    Model m;
    CHECK(computation_levels(m).empty());
    const SvId x = m.add_bsv("X");
    const SvId b = m.add_bsv("B");
    const SvId c0 = m.create_csv({x}, {}, {m.bsv(b).dsv_a});
    const SvId c1 = m.create_csv({x}, {}, {c0});
    auto lv = computation_levels(m);
    REQUIRE(lv.size() == 2);
    CHECK(lv[0] == std::vector<SvId>{c0});
    CHECK(lv[1] == std::vector<SvId>{c1});

    const SvId c2 = m.create_csv({x}, {}, {c1});
    const SvId c3 = m.create_csv({b}, {}, {c1});
    lv = computation_levels(m);
    REQUIRE(lv.size() == 3);
    CHECK(lv[2] == std::vector<SvId>{c2, c3});
}

TEST_CASE("computation levels agree with a longest-path oracle on random DAGs") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Model m;
        const SvId x = m.add_bsv("X");
        const SvId d = m.bsv(x).dsv_a;
        std::vector<SvId> csvs;
        for (int i = 0; i < 8; ++i) {
            IdSet targets;
            if (csvs.empty() || rng() % 3 == 0) targets.insert(d);
            for (SvId c : csvs)
                if (rng() % 3 == 0) targets.insert(c);
            if (targets.empty()) targets.insert(csvs[rng() % csvs.size()]);
            csvs.push_back(m.create_csv({x}, {}, targets));
        }
        // Oracle: level = longest path (in CSV hops) down to a DSV-only CSV.
        std::map<SvId, int> oracle;
        for (SvId c : csvs) {
            int lv = 0;
            for (SvId t : m.csv(c).targets)
                if (m.kind(t) == SvKind::Conditioning) lv = std::max(lv, oracle.at(t) + 1);
            oracle[c] = lv;
        }
        auto layers = computation_levels(m);
        for (std::size_t k = 0; k < layers.size(); ++k)
            for (SvId c : layers[k]) CHECK(oracle.at(c) == static_cast<int>(k));
    }
}

TEST_CASE("conditioning cycle is a structural error") {
    Model m;
    const SvId x = m.add_bsv("X");
    const SvId c0 = m.create_csv({x}, {}, {m.bsv(x).dsv_a});
    const SvId c1 = m.create_csv({x}, {}, {c0});
    m.set_targets(c0, {c1});
    CHECK_THROWS_AS(computation_levels(m), StructuralError);
}

TEST_CASE("trivial sources") {
    Model m;
    const SvId x0 = m.add_bsv("X0");
    const SvId x1 = m.add_bsv("X1");
    const SvId b2 = m.add_bsv("B2");
    const SvId c0 = m.create_csv({x0}, {}, {m.bsv(b2).dsv_d});
    const SvId c1 = m.create_csv({x1}, {}, {c0});
    const IdSet t = trivial_sources(m, c1);
    CHECK(t.count(x0));
    CHECK(t.count(b2));
    CHECK_FALSE(t.count(x1));

    const SvId lonely = m.create_csv({x0}, {}, {});
    CHECK(trivial_sources(m, lonely).empty());
}

TEST_CASE("trivial sources equal a DFS reachability oracle on chains") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        Model m;
        std::vector<SvId> bsvs;
        for (int i = 0; i < 6; ++i) bsvs.push_back(m.add_bsv("B" + std::to_string(i)));
        auto pick = [&] {
            IdSet s;
            for (SvId b : bsvs)
                if (rng() % 3 == 0) s.insert(b);
            if (s.empty()) s.insert(bsvs[0]);
            return s;
        };
        std::vector<SvId> chain;
        chain.push_back(m.create_csv(pick(), {}, {m.bsv(bsvs[rng() % 6]).dsv_a}));
        for (int i = 1; i < 5; ++i) chain.push_back(m.create_csv(pick(), pick(), {chain.back()}));
        for (std::size_t i = 0; i < chain.size(); ++i) {
            IdSet oracle;
            for (std::size_t j = 0; j < i; ++j) {
                const auto& c = m.csv(chain[j]);
                oracle.insert(c.pos.begin(), c.pos.end());
                oracle.insert(c.neg.begin(), c.neg.end());
            }
            const SvId dsv = *m.csv(chain[0]).targets.begin();
            oracle.insert(m.dsv(dsv).owner);
            CHECK(trivial_sources(m, chain[i]) == oracle);
        }
    }
}

TEST_CASE("flag advance is monotone") {
    Flag f = Flag::Unconditional;
    advance(f, Flag::Conditional);
    CHECK(f == Flag::Conditional);
    advance(f, Flag::Unconditional);
    CHECK(f == Flag::Conditional);
    advance(f, Flag::PossiblyConditional);
    advance(f, Flag::Conditional);
    CHECK(f == Flag::PossiblyConditional);
}

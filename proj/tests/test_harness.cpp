#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "modeller/harness.hpp"
#include "modeller/learning.hpp"
#include "modeller/persist.hpp"
#include "modeller/planner.hpp"

using namespace modeller;

namespace {

ExperimentConfig small(int trials = 2) {
    ExperimentConfig c;
    c.trials = trials;
    c.random_steps = 600;
    c.planned_steps = 300;
    return c;
}

void check_sound(const Ean& e) {
    for (const auto& [a, b] : e.graph.edges)
        for (const auto& in : e.inputs) CHECK(in.has_path(a, b));
    for (const auto& [_, groups] : e.payload)
        for (const auto& sub : groups) check_sound(sub);
}

}  // namespace

TEST_CASE("config sections, bare keys and comments") {
    const auto c = parse_config(
        "# experiment\n"
        "[run]\nseed = 7\ntrials=3\n"
        "[plan]\nrandom_steps=10  # short\nexploration=0.2\n"
        "planned_steps=0\n"
        "mnist.n_classes=5\n");
    CHECK(c.seed == 7);
    CHECK(c.trials == 3);
    CHECK(c.random_steps == 10);
    CHECK(c.planned_steps == 0);
    CHECK(c.exploration == doctest::Approx(0.2));
    CHECK(c.n_classes == 5);
    CHECK(c.samples_per_iteration() == 10);
    CHECK(c.tests_per_class() == 20);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("[plan]\nno_such=1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("trials=three\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("exploration=1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("seed\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("subtype=Kitchen\n"), ConfigError);
    ExperimentConfig c;
    CHECK_THROWS_AS(apply_setting(c, "run.bogus", "1"), ConfigError);
    apply_setting(c, "continual.readaptation", "true");
    CHECK(c.readaptation);
}

TEST_CASE("config dump round trip") {
    ExperimentConfig c;
    c.seed = 42;
    c.eps_T = 0.125;
    c.subtype = Subtype::SGS;
    c.random_variant = true;
    c.schedule = {"RS-L", "NEG-NL"};
    c.data_dir = "/tmp/x";
    const auto text = dump_config(c);
    CHECK(dump_config(parse_config(text)) == text);
    const auto back = parse_config(text);
    CHECK(back.seed == 42);
    CHECK(back.eps_T == 0.125);
    CHECK(back.subtype == Subtype::SGS);
    CHECK(back.schedule == c.schedule);
}

TEST_CASE("phase statistics average per trial first") {
    Metrics m;
    // trial 0: 10, 20; trial 1: 40
    m.episodes = {{0, "p", "RS", 10, 10}, {0, "p", "RS", 30, 20}, {1, "p", "RS", 40, 40}, {1, "q", "RS", 45, 5}};
    const auto s = phase_stats(m);
    REQUIRE(s.size() == 2);
    CHECK(s[0].phase == "p");
    CHECK(s[0].episodes == 3);
    CHECK(s[0].mean == doctest::Approx((15.0 + 40.0) / 2));
    CHECK(s[0].std == doctest::Approx(12.5));
    CHECK(find_phase(s, "q")->mean == doctest::Approx(5.0));
    CHECK(find_phase(s, "r") == nullptr);
}

TEST_CASE("mnist summary matches a hand tally") {
    Metrics m;
    // two classes, two cycles, one trial
    const double acc[2][2][2] = {{{1.0, 0.0}, {0.5, 0.5}}, {{0.9, 0.1}, {0.6, 0.8}}};
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) m.accuracy.push_back({0, c, i, k, acc[c][i][k]});
    const auto s = mnist_summary(m, 0);
    CHECK(s.cycles == 2);
    CHECK(s.classes == 2);
    CHECK(s.final_mean == doctest::Approx(0.7));
    CHECK(s.max_drop == doctest::Approx(0.5));
    CHECK(mnist_summary(m, 1).max_drop == doctest::Approx(0.3));
    // a second trial halves into the average
    for (auto a : Metrics(m).accuracy) {
        a.trial = 1;
        a.accuracy = 0.0;
        m.accuracy.push_back(a);
    }
    CHECK(mnist_summary(m, 0).final_mean == doctest::Approx(0.35));
}

TEST_CASE("zero planned steps leaves only the random phase") {
    auto c = small(1);
    c.planned_steps = 0;
    const auto s = phase_stats(run_base_planning(c));
    REQUIRE(s.size() == 1);
    CHECK(s[0].phase == "random");
}

TEST_CASE("runs are reproducible and independent of threads") {
    const auto c = small();
    const auto a = run_base_planning(c);
    const auto b = run_base_planning(c);
    CHECK(episodes_csv(a) == episodes_csv(b));
    CHECK(sizes_csv(a) == sizes_csv(b));
    CHECK(summary_json("plan-base", c, a) == summary_json("plan-base", c, b));
    auto t = c;
    t.threads = 2;
    CHECK(episodes_csv(run_base_planning(t)) == episodes_csv(a));
    auto other = c;
    other.seed = 2;
    CHECK(episodes_csv(run_base_planning(other)) != episodes_csv(a));
}

TEST_CASE("metrics files are written") {
    const auto dir = (std::filesystem::temp_directory_path() / "modeller_metrics_test").string();
    std::filesystem::remove_all(dir);
    const auto c = small(1);
    const auto m = run_base_planning(c);
    write_metrics(dir, "plan-base", c, m);
    CHECK(read_file(dir + "/episodes.csv") == episodes_csv(m));
    CHECK(read_file(dir + "/summary.json") == summary_json("plan-base", c, m));
    CHECK(std::filesystem::exists(dir + "/accuracy.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("continual schedules tag phases") {
    auto c = small(1);
    c.window = 200;
    const auto v = phase_stats(run_continual(c));
    for (const auto& p : v)
        CHECK((p.phase.rfind("baseline-", 0) == 0 || p.phase.find("-L") != std::string::npos ||
               p.phase.find("-NL") != std::string::npos));
    c.readaptation = true;
    c.readapt_window = 100;
    c.schedule = {"RS", "SGS"};
    const auto m = run_continual(c);
    for (const auto& e : m.episodes)
        CHECK((e.phase == "w00-RS" || e.phase == "w01-SGS" || e.phase.rfind("baseline-", 0) == 0));
    c.schedule = {"RS-XL"};
    CHECK_THROWS_AS(run_continual(c), ConfigError);
}

TEST_CASE("observing without learning changes no structure") {
    ExperimentConfig c;
    Agent a(c, trial_seed(1, 0));
    Metrics sink;
    a.run(800, false, true, "random", 0, sink);
    const auto before = dump_model(a.model());
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) observe_environment_step(a.model(), a.env().step(static_cast<int>(rng() % kActions)));
    const auto after = parse_model(dump_model(a.model()));
    const auto ref = parse_model(before);
    REQUIRE(after.csvs().size() == ref.csvs().size());
    for (const auto& [id, x] : ref.csvs()) {
        const auto& y = after.csv(id);
        CHECK(x.pos == y.pos);
        CHECK(x.neg == y.neg);
        CHECK(x.targets == y.targets);
        CHECK(x.flag == y.flag);
        CHECK(x.stats == y.stats);
    }
    CHECK(after.dsvs().size() == ref.dsvs().size());
}

TEST_CASE("empty model round trip") {
    const Model m;
    const auto text = dump_model(m);
    CHECK(dump_model(parse_model(text)) == text);
}

TEST_CASE("trained model round trip continues identically") {
    ExperimentConfig c;
    Agent a(c, trial_seed(3, 0));
    Metrics sink;
    a.run(1500, false, true, "random", 0, sink);
    Model b = parse_model(dump_model(a.model()));
    CHECK(dump_model(b) == dump_model(a.model()));
    Planner pa, pb;
    std::mt19937_64 ra(9), rb(9), pick(11);
    const SvId goal = *b.find_label("1G");
    for (int i = 0; i < 100; ++i) {
        const auto an_a = pa.plan(a.model(), {{goal, Effect::A}});
        const auto an_b = pb.plan(b, {{goal, Effect::A}});
        const auto ia = select_action(an_a, a.model(), pa.groups(a.model()), a.actions(), ra);
        const auto ib = select_action(an_b, b, pb.groups(b), a.actions(), rb);
        REQUIRE(ia == ib);
        const int act = pick() % 4 == 0 ? static_cast<int>(pick() % kActions) : static_cast<int>(ia);
        const auto& obs = a.env().step(act);
        process_environment_step(a.model(), obs);
        process_environment_step(b, obs);
    }
    CHECK(dump_model(b) == dump_model(a.model()));
}

TEST_CASE("persist errors") {
    const auto text = dump_model(Model{});
    auto bumped = text;
    bumped.replace(bumped.find("\"version\": 1"), 12, "\"version\": 2");
    CHECK_THROWS_AS(parse_model(bumped), PersistError);
    CHECK_THROWS_AS(parse_model("{"), PersistError);
    CHECK_THROWS_AS(parse_mnr(text), PersistError);
    CHECK_THROWS_AS(parse_model("{\"format\": \"modeller-model\", \"version\": 1}"), PersistError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), PersistError);
}

TEST_CASE("model dot export names every CSV") {
    ExperimentConfig c;
    Agent a(c, trial_seed(1, 0));
    Metrics sink;
    a.run(500, false, true, "random", 0, sink);
    const auto dot = model_to_dot(a.model());
    CHECK(dot.rfind("digraph model {", 0) == 0);
    for (const auto& [id, _] : a.model().csvs()) CHECK(dot.find("\"" + a.model().label(id) + "\" [shape=box") != std::string::npos);
}

TEST_CASE("missing mnist data names the files") {
    ExperimentConfig c;
    c.data_dir = "/nonexistent/mnist";
    try {
        run_mnist_continual(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("train-images-idx3-ubyte") != std::string::npos);
        CHECK(msg.find("MODELLER_DATA_DIR") != std::string::npos);
    }
}

TEST_CASE("mnist with no training samples scores zero") {
    ExperimentConfig c;
    if (!std::filesystem::exists(data_dir() + "/train-images-idx3-ubyte")) {
        MESSAGE("MNIST data not found, skipped");
        return;
    }
    c.trials = 1;
    c.n_classes = 2;
    c.n_sample = 0;
    c.n_test = 3;
    c.cycles = 1;
    const auto m = run_mnist_continual(c);
    REQUIRE(m.accuracy.size() == 4);
    for (const auto& a : m.accuracy) CHECK(a.accuracy == 0.0);
}

TEST_CASE("mnr model round trip is byte identical") {
    ExperimentConfig c;
    if (!std::filesystem::exists(data_dir() + "/train-images-idx3-ubyte")) {
        MESSAGE("MNIST data not found, skipped");
        return;
    }
    c.n_classes = 2;
    c.n_sample = 3;
    c.n_test = 2;
    c.cycles = 1;
    const auto m = train_mnr_model(c);
    const auto text = dump_mnr(m);
    CHECK(!m.csvs().empty());
    CHECK(dump_mnr(parse_mnr(text)) == text);
}

TEST_CASE("encapsulation demo is sound") {
    auto c = small(1);
    c.random_steps = 3000;
    c.planned_steps = 500;
    const auto r = run_encapsulation_demo(c);
    REQUIRE(!r.alternatives.empty());
    CHECK(!r.ean.graph.edges.empty());
    for (const auto& [a, b] : r.ean.graph.edges)
        for (const auto& alt : r.alternatives) CHECK(alt.has_path(a, b));
    check_sound(r.ean);
}

TEST_CASE("restart returns to the start state without learning the jump") {
    ExperimentConfig c;
    Agent a(c, trial_seed(1, 0));
    Metrics sink;
    a.run(300, false, true, "random", 0, sink);
    a.restart();
    CHECK(a.env().cells() == a.env().table().start());
    const auto before = dump_model(a.model());
    const auto again = parse_model(before);
    CHECK(again.has_history());
    for (SvId id : a.model().bsv_ids())
        if (!a.model().bsv(id).is_action)
            CHECK(a.model().bsv(id).prev == a.model().bsv(id).cur);
}

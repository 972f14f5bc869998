#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "modeller/harness.hpp"
#include "modeller/persist.hpp"

using namespace modeller;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = "out";
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "base seed (overrides the config)")->each([&](const std::string&) {
        c.seed_set = true;
    });
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--set", c.sets, "override, e.g. --set plan.random_steps=1000");
}

ExperimentConfig resolve(const Common& c, ExperimentConfig base = {}) {
    ExperimentConfig cfg = c.config.empty() ? base : load_config(c.config, base);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value: " + s);
        apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (c.seed_set) cfg.seed = c.seed;
    return cfg;
}

void print_phases(const Metrics& m) {
    for (const auto& p : phase_stats(m))
        std::cout << p.phase << ": mean episode duration " << p.mean << " (std " << p.std << ", " << p.episodes
                  << " episodes)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continual model learning experiments"};
    app.require_subcommand(1);

    Common plan_c, cont_c, enc_c, mnist_c, exp_c;
    auto* plan = app.add_subcommand("plan-base", "random-action learning, then planning");
    add_common(plan, plan_c);
    auto* cont = app.add_subcommand("continual", "learning across changing subtypes");
    add_common(cont, cont_c);
    bool readapt = false;
    cont->add_flag("--readaptation", readapt, "learning always on, switches at episode ends");
    auto* enc = app.add_subcommand("encapsulate", "action network of a trained model and its encapsulation");
    add_common(enc, enc_c);
    auto* mnist = app.add_subcommand("mnist", "class-incremental MNIST");
    add_common(mnist, mnist_c);
    auto* exp = app.add_subcommand("export-model", "train and export a model, or re-export a saved one");
    add_common(exp, exp_c);
    std::string kind = "fsm", input;
    exp->add_option("--kind", kind, "fsm or mnr")->check(CLI::IsMember({"fsm", "mnr"}));
    exp->add_option("--input", input, "saved model to load and re-export")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plan) {
            const auto cfg = resolve(plan_c);
            const auto m = run_base_planning(cfg);
            write_metrics(plan_c.out, "plan-base", cfg, m);
            print_phases(m);
        } else if (*cont) {
            auto cfg = resolve(cont_c);
            if (readapt) cfg.readaptation = true;
            const auto m = run_continual(cfg);
            write_metrics(cont_c.out, "continual", cfg, m);
            print_phases(m);
        } else if (*enc) {
            const auto cfg = resolve(enc_c);
            const auto r = run_encapsulation_demo(cfg);
            std::filesystem::create_directories(enc_c.out);
            write_file(enc_c.out + "/an.dot", to_dot(r.an, "an"));
            for (std::size_t i = 0; i < r.alternatives.size(); ++i)
                write_file(enc_c.out + "/alternative_" + std::to_string(i) + ".dot",
                           to_dot(r.alternatives[i], "alt" + std::to_string(i)));
            write_file(enc_c.out + "/ean.dot", to_dot(r.ean.graph, "ean"));
            write_file(enc_c.out + "/ean.json", to_json(r.ean) + "\n");
            std::cout << "action network: " << r.an.nodes.size() << " nodes, " << r.an.edges.size() << " edges; "
                      << r.alternatives.size() << " alternatives; EAN " << r.ean.graph.nodes.size() << " nodes, "
                      << r.ean.graph.edges.size() << " edges, depth " << r.ean.depth() << "\n";
        } else if (*mnist) {
            const auto cfg = resolve(mnist_c);
            const auto m = run_mnist_continual(cfg);
            write_metrics(mnist_c.out, "mnist", cfg, m);
            const auto s = mnist_summary(m);
            std::cout << "final mean accuracy " << s.final_mean << ", max drop after cycle 3 " << s.max_drop << "\n";
        } else if (*exp) {
            const auto cfg = resolve(exp_c);
            std::filesystem::create_directories(exp_c.out);
            if (kind == "fsm") {
                const Model m = input.empty() ? train_fsm_model(cfg) : load_model(input);
                save_model(exp_c.out + "/model.json", m);
                write_file(exp_c.out + "/model.dot", model_to_dot(m));
                std::cout << m.csvs().size() << " CSVs written to " << exp_c.out << "/model.json\n";
            } else {
                const MnrModel m = input.empty() ? train_mnr_model(cfg) : load_mnr(input);
                save_mnr(exp_c.out + "/model.json", m);
                std::cout << m.csvs().size() << " CSVs written to " << exp_c.out << "/model.json\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

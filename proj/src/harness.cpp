#include "modeller/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"
#include "modeller/learning.hpp"
#include "modeller/persist.hpp"
#include "modeller/vision.hpp"

namespace modeller {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long long to_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": not an integer: " + v);
    return x;
}

std::size_t to_count(const std::string& key, const std::string& v) {
    const auto x = to_int(key, v);
    if (x < 0) throw ConfigError(key + ": must not be negative");
    return static_cast<std::size_t>(x);
}

double to_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(x)) throw ConfigError(key + ": not a number: " + v);
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(key + ": not a boolean: " + v);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Key {
    std::string name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Key>& keys() {
    using C = ExperimentConfig;
    static const std::vector<Key> k{
        {"run.seed", [](C& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_count("seed", v)); },
         [](const C& c) { return std::to_string(c.seed); }},
        {"run.trials", [](C& c, const std::string& v) { c.trials = static_cast<int>(to_count("trials", v)); },
         [](const C& c) { return std::to_string(c.trials); }},
        {"run.threads",
         [](C& c, const std::string& v) { c.threads = std::max(1, static_cast<int>(to_count("threads", v))); },
         [](const C& c) { return std::to_string(c.threads); }},
        {"env.subtype",
         [](C& c, const std::string& v) {
             try {
                 c.subtype = parse_subtype(v);
             } catch (const std::exception&) {
                 throw ConfigError("subtype: unknown " + v);
             }
         },
         [](const C& c) { return std::string(to_string(c.subtype)); }},
        {"env.random_variant", [](C& c, const std::string& v) { c.random_variant = to_bool("random_variant", v); },
         [](const C& c) { return std::string(c.random_variant ? "true" : "false"); }},
        {"env.fsm_path", [](C& c, const std::string& v) { c.fsm_path = v; }, [](const C& c) { return c.fsm_path; }},
        {"plan.random_steps", [](C& c, const std::string& v) { c.random_steps = to_count("random_steps", v); },
         [](const C& c) { return std::to_string(c.random_steps); }},
        {"plan.planned_steps", [](C& c, const std::string& v) { c.planned_steps = to_count("planned_steps", v); },
         [](const C& c) { return std::to_string(c.planned_steps); }},
        {"plan.exploration",
         [](C& c, const std::string& v) {
             c.exploration = to_real("exploration", v);
             if (c.exploration < 0 || c.exploration > 1) throw ConfigError("exploration: outside [0,1]");
         },
         [](const C& c) { return num(c.exploration); }},
        {"learning.eps_T", [](C& c, const std::string& v) { c.eps_T = to_real("eps_T", v); },
         [](const C& c) { return num(c.eps_T); }},
        {"learning.nce_blocking",
         [](C& c, const std::string& v) { c.nce_blocking = v == "auto" ? -1 : to_bool("nce_blocking", v); },
         [](const C& c) { return std::string(c.nce_blocking < 0 ? "auto" : c.nce_blocking ? "true" : "false"); }},
        {"learning.t_ref", [](C& c, const std::string& v) { c.t_ref = to_real("t_ref", v); },
         [](const C& c) { return num(c.t_ref); }},
        {"learning.eps_sign", [](C& c, const std::string& v) { c.eps_sign = to_real("eps_sign", v); },
         [](const C& c) { return num(c.eps_sign); }},
        {"learning.population",
         [](C& c, const std::string& v) { c.population = std::max<std::size_t>(1, to_count("population", v)); },
         [](const C& c) { return std::to_string(c.population); }},
        {"continual.readaptation", [](C& c, const std::string& v) { c.readaptation = to_bool("readaptation", v); },
         [](const C& c) { return std::string(c.readaptation ? "true" : "false"); }},
        {"continual.window", [](C& c, const std::string& v) { c.window = to_count("window", v); },
         [](const C& c) { return std::to_string(c.window); }},
        {"continual.readapt_window",
         [](C& c, const std::string& v) { c.readapt_window = to_count("readapt_window", v); },
         [](const C& c) { return std::to_string(c.readapt_window); }},
        {"continual.schedule",
         [](C& c, const std::string& v) {
             c.schedule.clear();
             std::stringstream in(v);
             std::string item;
             while (std::getline(in, item, ','))
                 if (!trim(item).empty()) c.schedule.push_back(trim(item));
         },
         [](const C& c) {
             std::string out;
             for (const auto& s : c.schedule) out += (out.empty() ? "" : ",") + s;
             return out;
         }},
        {"encapsulate.max_alternatives",
         [](C& c, const std::string& v) { c.max_alternatives = to_count("max_alternatives", v); },
         [](const C& c) { return std::to_string(c.max_alternatives); }},
        {"encapsulate.max_paths", [](C& c, const std::string& v) { c.max_paths = to_count("max_paths", v); },
         [](const C& c) { return std::to_string(c.max_paths); }},
        {"mnist.n_classes",
         [](C& c, const std::string& v) {
             c.n_classes = static_cast<int>(to_count("n_classes", v));
             if (c.n_classes < 1 || c.n_classes > 10) throw ConfigError("n_classes: outside 1..10");
         },
         [](const C& c) { return std::to_string(c.n_classes); }},
        {"mnist.n_sample", [](C& c, const std::string& v) { c.n_sample = static_cast<int>(to_int("n_sample", v)); },
         [](const C& c) { return std::to_string(c.n_sample); }},
        {"mnist.n_test", [](C& c, const std::string& v) { c.n_test = static_cast<int>(to_int("n_test", v)); },
         [](const C& c) { return std::to_string(c.n_test); }},
        {"mnist.cycles", [](C& c, const std::string& v) { c.cycles = static_cast<int>(to_count("cycles", v)); },
         [](const C& c) { return std::to_string(c.cycles); }},
        {"mnist.data_dir", [](C& c, const std::string& v) { c.data_dir = v; },
         [](const C& c) { return c.data_dir; }},
    };
    return k;
}

const Key& find_key(const std::string& section, const std::string& key) {
    const std::string full = key.find('.') != std::string::npos ? key : section.empty() ? "" : section + "." + key;
    const Key* hit = nullptr;
    for (const auto& k : keys()) {
        if (!full.empty()) {
            if (k.name == full) return k;
            continue;
        }
        if (k.name.substr(k.name.find('.') + 1) == key) {
            if (hit) throw ConfigError("ambiguous key " + key);
            hit = &k;
        }
    }
    if (!hit) throw ConfigError("unknown key " + (full.empty() ? key : full));
    return *hit;
}

}  // namespace

int ExperimentConfig::samples_per_iteration() const {
    if (n_sample >= 0) return n_sample;
    return n_classes <= 3 ? 20 : n_classes <= 5 ? 10 : 5;
}

int ExperimentConfig::tests_per_class() const {
    if (n_test >= 0) return n_test;
    return n_classes <= 3 ? 50 : n_classes <= 5 ? 20 : 10;
}

std::vector<std::string> ExperimentConfig::effective_schedule() const {
    if (!schedule.empty()) return schedule;
    if (readaptation) return {"RS", "SGS", "NEG", "RS", "SGS", "NEG", "RS", "SGS", "NEG"};
    return {"RS-L", "SGS-L", "NEG-L", "RS-NL", "SGS-NL"};
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    find_key("", key).set(cfg, trim(value));
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg) {
    std::stringstream in(text);
    std::string line, section;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no) + ": expected key=value");
        const auto key = trim(line.substr(0, eq));
        try {
            find_key(section, key).set(cfg, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(no) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
    try {
        return parse_config(read_file(path), std::move(base));
    } catch (const PersistError& e) {
        throw ConfigError(e.what());
    }
}

std::string dump_config(const ExperimentConfig& cfg) {
    std::string out, section;
    for (const auto& k : keys()) {
        const auto dot = k.name.find('.');
        const auto s = k.name.substr(0, dot);
        if (s != section) {
            out += (out.empty() ? "[" : "\n[") + s + "]\n";
            section = s;
        }
        out += k.name.substr(dot + 1) + "=" + k.get(cfg) + "\n";
    }
    return out;
}

void Metrics::append(const Metrics& o) {
    episodes.insert(episodes.end(), o.episodes.begin(), o.episodes.end());
    accuracy.insert(accuracy.end(), o.accuracy.begin(), o.accuracy.end());
    sizes.insert(sizes.end(), o.sizes.begin(), o.sizes.end());
}

std::vector<PhaseStats> phase_stats(const Metrics& m) {
    std::vector<std::string> order;
    std::map<std::string, std::map<int, std::pair<double, std::size_t>>> acc;
    for (const auto& e : m.episodes) {
        if (!acc.count(e.phase)) order.push_back(e.phase);
        auto& [sum, n] = acc[e.phase][e.trial];
        sum += static_cast<double>(e.duration);
        ++n;
    }
    std::vector<PhaseStats> out;
    for (const auto& p : order) {
        PhaseStats s;
        s.phase = p;
        for (const auto& [_, sn] : acc[p]) {
            s.per_trial.push_back(sn.first / static_cast<double>(sn.second));
            s.episodes += sn.second;
        }
        for (double v : s.per_trial) s.mean += v;
        s.mean /= static_cast<double>(s.per_trial.size());
        for (double v : s.per_trial) s.std += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(s.std / static_cast<double>(s.per_trial.size()));
        out.push_back(std::move(s));
    }
    return out;
}

const PhaseStats* find_phase(const std::vector<PhaseStats>& s, const std::string& phase) {
    for (const auto& p : s)
        if (p.phase == phase) return &p;
    return nullptr;
}

MnistSummary mnist_summary(const Metrics& m, int from_cycle) {
    MnistSummary s;
    std::set<int> trials;
    for (const auto& a : m.accuracy) {
        s.cycles = std::max(s.cycles, a.cycle + 1);
        s.classes = std::max(s.classes, a.cls + 1);
        trials.insert(a.trial);
    }
    if (trials.empty()) return s;
    s.accuracy.assign(s.cycles, std::vector<std::vector<double>>(s.classes, std::vector<double>(s.classes, 0.0)));
    for (const auto& a : m.accuracy)
        s.accuracy[a.cycle][a.iteration][a.cls] += a.accuracy / static_cast<double>(trials.size());
    const auto& last = s.accuracy[s.cycles - 1][s.classes - 1];
    for (double v : last) s.final_mean += v / static_cast<double>(s.classes);
    for (int c = from_cycle; c < s.cycles; ++c)
        for (int i = 0; i < s.classes; ++i)
            for (int j = i + 1; j < s.classes; ++j)
                s.max_drop = std::max(s.max_drop, s.accuracy[c][i][i] - s.accuracy[c][j][i]);
    return s;
}

std::string episodes_csv(const Metrics& m) {
    std::string out = "trial,phase,subtype,step,duration\n";
    for (const auto& e : m.episodes)
        out += std::to_string(e.trial) + "," + e.phase + "," + e.subtype + "," + std::to_string(e.step) + "," +
               std::to_string(e.duration) + "\n";
    return out;
}

std::string accuracy_csv(const Metrics& m) {
    std::string out = "trial,cycle,iteration,class,accuracy\n";
    for (const auto& a : m.accuracy)
        out += std::to_string(a.trial) + "," + std::to_string(a.cycle) + "," + std::to_string(a.iteration) + "," +
               std::to_string(a.cls) + "," + fmt(a.accuracy) + "\n";
    return out;
}

std::string sizes_csv(const Metrics& m) {
    std::string out = "trial,phase,step,svs\n";
    for (const auto& s : m.sizes)
        out += std::to_string(s.trial) + "," + s.phase + "," + std::to_string(s.step) + "," + std::to_string(s.svs) +
               "\n";
    return out;
}

std::string summary_json(const std::string& experiment, const ExperimentConfig& cfg, const Metrics& m) {
    using nlohmann::json;
    json j;
    j["experiment"] = experiment;
    j["config"] = dump_config(cfg);
    json phases = json::array();
    for (const auto& p : phase_stats(m))
        phases.push_back({{"phase", p.phase}, {"mean", p.mean}, {"std", p.std}, {"episodes", p.episodes},
                          {"per_trial", p.per_trial}});
    j["phases"] = phases;
    if (!m.accuracy.empty()) {
        const auto s = mnist_summary(m);
        j["mnist"] = {{"final_mean_accuracy", s.final_mean}, {"max_drop_after_cycle_3", s.max_drop},
                      {"accuracy", s.accuracy}};
    }
    return j.dump(1) + "\n";
}

void write_metrics(const std::string& dir, const std::string& experiment, const ExperimentConfig& cfg,
                   const Metrics& m) {
    std::filesystem::create_directories(dir);
    write_file(dir + "/episodes.csv", episodes_csv(m));
    write_file(dir + "/accuracy.csv", accuracy_csv(m));
    write_file(dir + "/sizes.csv", sizes_csv(m));
    write_file(dir + "/summary.json", summary_json(experiment, cfg, m));
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) { return seed * 1000 + static_cast<std::uint64_t>(trial); }

namespace {

FsmTable load_table(const ExperimentConfig& cfg) {
    return FsmTable::load(cfg.fsm_path.empty() ? default_fsm_path() : cfg.fsm_path);
}

ModelConfig model_config(const ExperimentConfig& cfg) {
    ModelConfig mc;
    mc.eps_T = cfg.eps_T;
    mc.nce_blocking = cfg.nce_blocking_on();
    return mc;
}

// Runs trials, `threads` at a time; results are merged in trial order.
Metrics run_trials(const ExperimentConfig& cfg, const std::function<Metrics(int)>& trial) {
    Metrics out;
    const int batch = std::max(1, cfg.threads);
    for (int t0 = 0; t0 < cfg.trials; t0 += batch) {
        std::vector<std::future<Metrics>> fs;
        for (int t = t0; t < std::min(cfg.trials, t0 + batch); ++t)
            fs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred, trial, t));
        for (auto& f : fs) out.append(f.get());
    }
    return out;
}

}  // namespace

Agent::Agent(const ExperimentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      env_(load_table(cfg), EnvConfig{cfg.subtype, cfg.random_variant, seed}),
      model_(model_config(cfg)),
      rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
    for (const auto& [label, is_action] : env_.bsv_layout()) {
        const SvId id = model_.add_bsv(label, is_action);
        if (is_action) actions_.push_back(id);
    }
    model_.reset_history(env_.observation());
    goal_ = *model_.find_label("1G");
}

int Agent::choose(bool planned) {
    std::uniform_int_distribution<int> any(0, kActions - 1);
    if (!planned || std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < cfg_.exploration) return any(rng_);
    const auto an = planner_.plan(model_, {{goal_, Effect::A}});
    return static_cast<int>(select_action(an, model_, planner_.groups(model_), actions_, rng_));
}

void Agent::act(int action, bool learn) {
    const auto& obs = env_.step(action);
    if (learn)
        process_environment_step(model_, obs);
    else
        observe_environment_step(model_, obs);
}

bool Agent::step_once(bool planned, bool learn, const std::string& phase, int trial, Metrics& out) {
    act(choose(planned), learn);
    ++steps_;
    ++episode_;
    if (!env_.goal_reached()) return false;
    out.episodes.push_back({trial, phase, to_string(env_.config().subtype), steps_, episode_});
    episode_ = 0;
    // Any action restarts the episode.
    act(std::uniform_int_distribution<int>(0, kActions - 1)(rng_), learn);
    return true;
}

void Agent::run(std::size_t steps, bool planned, bool learn, const std::string& phase, int trial, Metrics& out) {
    for (std::size_t i = 0; i < steps; ++i) step_once(planned, learn, phase, trial, out);
}

void Agent::run_until_episode_end(std::size_t steps, bool planned, bool learn, const std::string& phase, int trial,
                                  Metrics& out) {
    run(steps, planned, learn, phase, trial, out);
    for (std::size_t i = 0; i < steps && episode_ > 0; ++i) step_once(planned, learn, phase, trial, out);
}

void Agent::restart() {
    env_.reset();
    model_.reset_history(env_.observation());
    episode_ = 0;
}

void Agent::record_size(const std::string& phase, int trial, Metrics& out) const {
    out.sizes.push_back({trial, phase, steps_, model_.bsvs().size() + model_.dsvs().size() + model_.csvs().size()});
}

Metrics run_base_planning(const ExperimentConfig& cfg) {
    return run_trials(cfg, [&](int t) {
        Metrics out;
        Agent a(cfg, trial_seed(cfg.seed, t));
        a.run(cfg.random_steps, false, true, "random", t, out);
        a.record_size("random", t, out);
        if (cfg.planned_steps > 0) {
            a.run(cfg.planned_steps, true, true, "planned", t, out);
            a.record_size("planned", t, out);
        }
        return out;
    });
}

namespace {

// "SGS-NL" -> (SGS, false); bare names learn.
std::pair<Subtype, bool> parse_phase(const std::string& p) {
    const auto dash = p.find('-');
    const std::string name = p.substr(0, dash);
    const std::string mode = dash == std::string::npos ? "L" : p.substr(dash + 1);
    if (mode != "L" && mode != "NL") throw ConfigError("schedule entry " + p + ": expected -L or -NL");
    try {
        return {parse_subtype(name), mode == "L"};
    } catch (const std::exception&) {
        throw ConfigError("schedule entry " + p + ": unknown subtype");
    }
}

}  // namespace

Metrics run_continual(const ExperimentConfig& cfg) {
    const auto schedule = cfg.effective_schedule();
    std::vector<std::pair<Subtype, bool>> phases;
    for (const auto& p : schedule) phases.push_back(parse_phase(p));
    return run_trials(cfg, [&](int t) {
        Metrics out;
        ExperimentConfig c = cfg;
        c.subtype = phases.empty() ? cfg.subtype : phases.front().first;
        Agent a(c, trial_seed(cfg.seed, t));
        for (std::size_t k = 0; k < phases.size(); ++k) {
            const auto [st, learn] = phases[k];
            a.env().set_subtype(st);
            if (cfg.readaptation) {
                char tag[32];
                std::snprintf(tag, sizeof tag, "w%02zu-%s", k, to_string(st));
                a.run_until_episode_end(cfg.readapt_window, true, true, tag, t, out);
                a.record_size(tag, t, out);
            } else {
                // Hard switch: a state of the old subtype can be a dead end in the new one.
                if (k > 0) a.restart();
                a.run(cfg.window, true, learn, schedule[k], t, out);
                a.record_size(schedule[k], t, out);
            }
        }
        // Uniform random play per subtype, no model.
        std::set<Subtype> seen;
        for (const auto& [st, _] : phases) {
            if (!seen.insert(st).second) continue;
            ExperimentConfig b = c;
            b.subtype = st;
            Agent r(b, trial_seed(cfg.seed, t) + 7919 * (1 + static_cast<int>(st)));
            r.run(cfg.readaptation ? cfg.readapt_window : cfg.window, false, false,
                  std::string("baseline-") + to_string(st), t, out);
        }
        return out;
    });
}

namespace {

struct MnistData {
    ImageSet train, test;
};

MnistData load_mnist(const ExperimentConfig& cfg) {
    const std::string dir = cfg.data_dir.empty() ? data_dir() : cfg.data_dir;
    const std::string names[] = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                                 "t10k-labels-idx1-ubyte"};
    for (const auto& n : names)
        if (!std::filesystem::exists(dir + "/" + n))
            throw ConfigError("missing " + dir + "/" + n +
                              ". Download the MNIST IDX files (train-images-idx3-ubyte, train-labels-idx1-ubyte, "
                              "t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte, gunzipped) into that directory, "
                              "point MODELLER_DATA_DIR or mnist.data_dir at them, or convert a CSV export with "
                              "tools/mnist_csv_to_idx.py.");
    return {load_idx(dir + "/" + names[0], dir + "/" + names[1]), load_idx(dir + "/" + names[2], dir + "/" + names[3])};
}

MnrConfig mnr_config(const ExperimentConfig& cfg) {
    MnrConfig mc;
    mc.t_ref = cfg.t_ref;
    mc.eps_sign = cfg.eps_sign;
    mc.population = cfg.population;
    return mc;
}

Metrics mnist_trial(const ExperimentConfig& cfg, const MnistData& data, int t, MnrModel* keep) {
    Metrics out;
    std::mt19937_64 rng(trial_seed(cfg.seed, t));
    std::vector<int> classes(10);
    for (int i = 0; i < 10; ++i) classes[i] = i;
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(static_cast<std::size_t>(cfg.n_classes));

    const int nc = cfg.n_classes;
    std::vector<std::vector<std::size_t>> pool(nc);
    std::vector<std::vector<Spn>> tests(nc);
    for (int k = 0; k < nc; ++k) {
        for (std::size_t i = 0; i < data.train.labels.size(); ++i)
            if (data.train.labels[i] == classes[k]) pool[k].push_back(i);
        std::shuffle(pool[k].begin(), pool[k].end(), rng);
        for (std::size_t i = 0; i < data.test.labels.size(); ++i)
            if (data.test.labels[i] == classes[k] && static_cast<int>(tests[k].size()) < cfg.tests_per_class())
                tests[k].push_back(image_to_spn(data.test.images[i]));
        if (pool[k].empty() || tests[k].empty())
            throw ConfigError("no samples of digit " + std::to_string(classes[k]) + " in the data set");
    }

    MnrModel m(mnr_config(cfg));
    std::vector<std::size_t> next(nc, 0);
    for (int cy = 0; cy < cfg.cycles; ++cy)
        for (int k = 0; k < nc; ++k) {
            for (int s = 0; s < cfg.samples_per_iteration(); ++s) {
                const auto idx = pool[k][next[k]++ % pool[k].size()];
                mnr_learn_step(m, image_to_spn(data.train.images[idx]), static_cast<MnrId>(classes[k]), rng);
            }
            for (int j = 0; j < nc; ++j) {
                int ok = 0;
                for (std::size_t q = 0; q < tests[j].size(); ++q) {
                    const auto r = classify(m, tests[j][q], q);
                    ok += r && static_cast<int>(*r) == classes[j];
                }
                out.accuracy.push_back(
                    {t, cy, k, j, static_cast<double>(ok) / static_cast<double>(tests[j].size())});
            }
        }
    out.sizes.push_back({t, "mnist", m.steps(), m.csvs().size()});
    if (keep) *keep = std::move(m);
    return out;
}

}  // namespace

Metrics run_mnist_continual(const ExperimentConfig& cfg) {
    const auto data = load_mnist(cfg);
    return run_trials(cfg, [&](int t) { return mnist_trial(cfg, data, t, nullptr); });
}

MnrModel train_mnr_model(const ExperimentConfig& cfg) {
    const auto data = load_mnist(cfg);
    MnrModel m;
    mnist_trial(cfg, data, 0, &m);
    return m;
}

Model train_fsm_model(const ExperimentConfig& cfg) {
    Metrics sink;
    Agent a(cfg, trial_seed(cfg.seed, 0));
    a.run(cfg.random_steps, false, true, "random", 0, sink);
    a.run(cfg.planned_steps, true, true, "planned", 0, sink);
    return a.model();
}

EncapsulationResult run_encapsulation_demo(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.subtype = Subtype::Complete;
    c.random_variant = false;
    EncapsulationResult r;
    r.model = train_fsm_model(c);
    // Plan from the start state.
    SmrEnv env(load_table(c), EnvConfig{Subtype::Complete, false, c.seed});
    env.reset();
    r.model.reset_history(env.observation());
    // Step once with a no-op so the current snapshot is the start state.
    observe_environment_step(r.model, env.observation());
    const auto goal = *r.model.find_label("1G");
    const auto g = build_group_svs(r.model);
    const auto an = plan(r.model, g, {{goal, Effect::A}});
    r.an = to_digraph(an, r.model, g);
    EncapsulationLimits lim;
    lim.max_alternatives = c.max_alternatives;
    lim.max_paths = c.max_paths;
    r.alternatives = split_alternatives(r.an, lim);
    r.ean = encapsulate_behavior(r.alternatives, lim);
    return r;
}

}  // namespace modeller

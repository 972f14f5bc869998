#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "modeller/encapsulation.hpp"
#include "modeller/env.hpp"
#include "modeller/mnr.hpp"
#include "modeller/model.hpp"

namespace modeller {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    // [run]
    std::uint64_t seed = 1;
    int trials = 5;
    int threads = 1;

    // [env]
    Subtype subtype = Subtype::Complete;
    bool random_variant = false;
    std::string fsm_path;  // empty: data directory default

    // [plan]
    std::size_t random_steps = 4000;
    std::size_t planned_steps = 4000;
    double exploration = 0.1;

    // [learning]
    double eps_T = 0.25;
    int nce_blocking = -1;  // -1: on for the random variant only
    double t_ref = 0.05;
    double eps_sign = 0.05;
    std::size_t population = 10;

    // [continual]
    bool readaptation = false;
    std::size_t window = 1000;          // vanilla schedule
    std::size_t readapt_window = 500;   // readaptation schedule
    std::vector<std::string> schedule;  // empty: default for the mode

    // [encapsulate]
    std::size_t max_alternatives = 4096;
    std::size_t max_paths = 10000;

    // [mnist]
    int n_classes = 3;
    int n_sample = -1;  // -1: 20, 10, 5 for 3, 5, 10 classes
    int n_test = -1;    // -1: 50, 20, 10
    int cycles = 10;
    std::string data_dir;  // empty: MODELLER_DATA_DIR or the source tree

    bool nce_blocking_on() const { return nce_blocking < 0 ? random_variant : nce_blocking != 0; }
    int samples_per_iteration() const;
    int tests_per_class() const;
    std::vector<std::string> effective_schedule() const;
};

// key=value lines, optional [section] headers, '#' comments. Keys are
// accepted bare or as section.key. Unknown keys throw.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
// One key=value assignment, as on the command line.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string dump_config(const ExperimentConfig& cfg);

struct EpisodeRecord {
    int trial = 0;
    std::string phase;    // "random", "planned", "RS-L", "w03" ...
    std::string subtype;  // environment subtype in force
    std::uint64_t step = 0;  // step index at episode end, per trial
    std::uint64_t duration = 0;
};

struct AccuracyRecord {
    int trial = 0;
    int cycle = 0;
    int iteration = 0;
    int cls = 0;
    double accuracy = 0.0;
};

struct SizeRecord {
    int trial = 0;
    std::string phase;
    std::uint64_t step = 0;
    std::size_t svs = 0;
};

struct Metrics {
    std::vector<EpisodeRecord> episodes;
    std::vector<AccuracyRecord> accuracy;
    std::vector<SizeRecord> sizes;

    void append(const Metrics& o);
};

struct PhaseStats {
    std::string phase;
    std::vector<double> per_trial;  // mean duration in each trial; trials without episodes skipped
    double mean = 0.0;              // mean of per-trial means
    double std = 0.0;               // population std of per-trial means
    std::size_t episodes = 0;
};

// Phases in order of first appearance.
std::vector<PhaseStats> phase_stats(const Metrics& m);
const PhaseStats* find_phase(const std::vector<PhaseStats>& s, const std::string& phase);

struct MnistSummary {
    int cycles = 0;
    int classes = 0;
    // [cycle][iteration][class], averaged over trials
    std::vector<std::vector<std::vector<double>>> accuracy;
    double final_mean = 0.0;
    // Largest fall of a class's accuracy after its own iteration within a
    // cycle, over cycles from `from_cycle` (0-based) on.
    double max_drop = 0.0;
};

MnistSummary mnist_summary(const Metrics& m, int from_cycle = 3);

std::string episodes_csv(const Metrics& m);
std::string accuracy_csv(const Metrics& m);
std::string sizes_csv(const Metrics& m);
std::string summary_json(const std::string& experiment, const ExperimentConfig& cfg, const Metrics& m);
// Writes episodes.csv, accuracy.csv, sizes.csv and summary.json into `dir`.
void write_metrics(const std::string& dir, const std::string& experiment, const ExperimentConfig& cfg,
                   const Metrics& m);

// Seed of trial `t`.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

// Agent: one SMR environment and one model.
class Agent {
public:
    Agent(const ExperimentConfig& cfg, std::uint64_t seed);

    // Runs `steps` steps. Episodes end at the goal; the restart step after
    // a goal is not counted. `planned` picks actions from the planner with
    // the configured exploration rate.
    void run(std::size_t steps, bool planned, bool learn, const std::string& phase, int trial, Metrics& out);
    // Same, but once `steps` have passed it keeps going until the current
    // episode ends, capped at another `steps`.
    void run_until_episode_end(std::size_t steps, bool planned, bool learn, const std::string& phase, int trial,
                               Metrics& out);

    // Starts a new episode from the start state. The model sees the jump as
    // a fresh history, not as a transition.
    void restart();

    SmrEnv& env() { return env_; }
    Model& model() { return model_; }
    const std::vector<SvId>& actions() const { return actions_; }
    SvId goal() const { return goal_; }
    std::uint64_t steps() const { return steps_; }
    void record_size(const std::string& phase, int trial, Metrics& out) const;

private:
    ExperimentConfig cfg_;
    SmrEnv env_;
    Model model_;
    Planner planner_;
    std::vector<SvId> actions_;
    SvId goal_ = 0;
    std::mt19937_64 rng_;
    std::uint64_t steps_ = 0;
    std::uint64_t episode_ = 0;

    int choose(bool planned);
    void act(int action, bool learn);
    bool step_once(bool planned, bool learn, const std::string& phase, int trial, Metrics& out);
};

Metrics run_base_planning(const ExperimentConfig& cfg);
// Vanilla: L phases learn, NL phases only observe. Readaptation: learning
// always on, changes wait for the end of an episode. Also runs a uniform
// random baseline per subtype, tagged "baseline".
Metrics run_continual(const ExperimentConfig& cfg);
Metrics run_mnist_continual(const ExperimentConfig& cfg);

struct EncapsulationResult {
    Digraph an;
    std::vector<Digraph> alternatives;
    Ean ean;
    Model model;
};

// Trains on Complete, plans from the start state to the goal and
// encapsulates the action network.
EncapsulationResult run_encapsulation_demo(const ExperimentConfig& cfg);

// Trained models for export.
Model train_fsm_model(const ExperimentConfig& cfg);
MnrModel train_mnr_model(const ExperimentConfig& cfg);

}  // namespace modeller

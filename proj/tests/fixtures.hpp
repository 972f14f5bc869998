#pragma once

#include <random>
#include <vector>

#include "modeller/learning.hpp"

namespace fixtures {

using namespace modeller;

// Five BSVs X0..X3 and Y; Y follows "X0 and not X2" one step later.
struct TwoRule {
    Model m;
    SvId x[4]{};
    SvId y = 0;

    TwoRule() {
        for (int i = 0; i < 4; ++i) x[i] = m.add_bsv("X" + std::to_string(i));
        y = m.add_bsv("Y");
    }

    SvId y_a() const { return m.bsv(y).dsv_a; }

    // One isolated transition: sources shown with Y inactive, then the outcome.
    StepReport observe(std::initializer_list<int> active, bool y_on, StepObserver* obs = nullptr) {
        std::vector<bool> before(5, false);
        for (int i : active) before[i] = true;
        std::vector<bool> after = before;
        after[4] = y_on;
        m.reset_history(before);
        return process_environment_step(m, after, obs);
    }

    void run_sequence(StepObserver* obs = nullptr) {
        observe({0, 1}, true, obs);
        observe({0}, true, obs);
        observe({0, 2, 3}, false, obs);
        observe({0, 2}, false, obs);
    }
};

// Random rule-driven stream: each non-action BSV flips according to a few
// randomly drawn rules over the previous snapshot and the chosen action.
class RuleStream {
public:
    RuleStream(unsigned seed, int n_state = 6, int n_actions = 4) : rng_(seed), n_state_(n_state), n_actions_(n_actions) {
        std::uniform_int_distribution<int> pick(0, n_state - 1);
        std::uniform_int_distribution<int> act(0, n_actions - 1);
        // Every state BSV gets one setting and one clearing rule, plus extras.
        for (int r = 0; r < n_state * 3; ++r) {
            Rule rule;
            rule.action = act(rng_);
            rule.need = pick(rng_);
            rule.block = rng_() % 3 == 0 ? pick(rng_) : -1;
            rule.target = r < n_state * 2 ? r / 2 : pick(rng_);
            rule.value = r < n_state * 2 ? r % 2 == 0 : rng_() % 2 == 0;
            rule.need_value = rng_() % 2 == 0;
            rule.prob = rng_() % 4 == 0 ? 0.5 : 1.0;
            rules_.push_back(rule);
        }
        state_.assign(n_state, false);
        for (int i = 0; i < n_state; ++i) state_[i] = rng_() % 2 == 0;
    }

    void build(Model& m) const {
        for (int i = 0; i < n_state_; ++i) m.add_bsv("S" + std::to_string(i));
        for (int a = 0; a < n_actions_; ++a) m.add_bsv("act" + std::to_string(a), true);
    }

    std::vector<bool> next() {
        const int a = std::uniform_int_distribution<int>(0, n_actions_ - 1)(rng_);
        std::vector<bool> nxt = state_;
        for (const auto& r : rules_) {
            if (r.action != a || state_[r.need] != r.need_value) continue;
            if (r.block >= 0 && state_[r.block]) continue;
            if (r.prob < 1.0 && std::uniform_real_distribution<double>(0, 1)(rng_) >= r.prob) continue;
            nxt[r.target] = r.value;
        }
        for (std::size_t i = 0; i < nxt.size(); ++i)
            if (std::uniform_real_distribution<double>(0, 1)(rng_) < 0.02) nxt[i] = !nxt[i];
        state_ = nxt;
        std::vector<bool> obs = state_;
        for (int i = 0; i < n_actions_; ++i) obs.push_back(i == a);
        return obs;
    }

private:
    struct Rule {
        int action, need, block, target;
        bool value, need_value;
        double prob;
    };
    std::mt19937 rng_;
    int n_state_, n_actions_;
    std::vector<Rule> rules_;
    std::vector<bool> state_;
};

}  // namespace fixtures

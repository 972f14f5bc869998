#include "modeller/env.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef MODELLER_SOURCE_DATA_DIR
#define MODELLER_SOURCE_DATA_DIR "data"
#endif

namespace modeller {

namespace {

const char* const kCellNames[] = {"DO", "DC", "W", "G", "SG1", "SG2", "X", "-"};

Cells parse_cells(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("bad cell pair: " + s);
    return {parse_cell(s.substr(0, comma)), parse_cell(s.substr(comma + 1))};
}

}  // namespace

const char* to_string(Cell c) { return kCellNames[static_cast<int>(c)]; }

const char* to_string(Subtype s) {
    switch (s) {
        case Subtype::RS: return "RS";
        case Subtype::SGS: return "SGS";
        case Subtype::NEG: return "NEG";
        case Subtype::Complete: return "Complete";
    }
    return "?";
}

Cell parse_cell(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(Cell::Empty); ++i)
        if (s == kCellNames[i]) return static_cast<Cell>(i);
    throw std::invalid_argument("unknown cell value: " + s);
}

Subtype parse_subtype(const std::string& s) {
    if (s == "RS") return Subtype::RS;
    if (s == "SGS") return Subtype::SGS;
    if (s == "NEG") return Subtype::NEG;
    if (s == "Complete") return Subtype::Complete;
    throw std::invalid_argument("unknown subtype: " + s);
}

FsmTable FsmTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open FSM table: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

FsmTable FsmTable::parse(const std::string& text) {
    FsmTable t;
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        auto fail = [&](const std::string& why) {
            throw std::invalid_argument("FSM table line " + std::to_string(lineno) + ": " + why);
        };
        if (head == "action") {
            std::string name;
            int id = -1;
            if (!(ls >> name >> id) || id < 0 || id >= kActions) fail("bad action line");
            t.actions_[name] = id;
            continue;
        }
        if (head == "start") {
            std::string c;
            if (!(ls >> c)) fail("missing start cells");
            t.start_ = parse_cells(c);
            continue;
        }
        if (head != "all" && head != "RS" && head != "SGS" && head != "NEG") fail("unknown subtype " + head);
        Row row;
        row.subtype = head;
        std::string cells, action;
        if (!(ls >> cells >> action)) fail("incomplete row");
        row.cells = parse_cells(cells);
        auto it = t.actions_.find(action);
        if (it == t.actions_.end()) fail("undeclared action " + action);
        row.action = it->second;
        std::string tok;
        while (ls >> tok) {
            if (tok == "|") continue;
            Outcome o;
            if (auto star = tok.find('*'); star != std::string::npos) {
                o.weight = std::stod(tok.substr(star + 1));
                tok.resize(star);
            }
            o.cells = parse_cells(tok);
            row.outcomes.push_back(o);
        }
        if (row.outcomes.empty()) fail("row without outcomes");
        t.rows_.push_back(std::move(row));
    }
    return t;
}

bool FsmTable::enabled(const std::string& row_subtype, Subtype st) {
    return row_subtype == "all" || st == Subtype::Complete || row_subtype == to_string(st);
}

std::vector<FsmTable::Outcome> FsmTable::outcomes(Subtype st, Cells cells, int action) const {
    std::vector<Outcome> out;
    for (const auto& r : rows_)
        if (r.cells == cells && r.action == action && enabled(r.subtype, st))
            out.insert(out.end(), r.outcomes.begin(), r.outcomes.end());
    return out;
}

int FsmTable::action_id(const std::string& name) const {
    auto it = actions_.find(name);
    if (it == actions_.end()) throw std::invalid_argument("unknown action: " + name);
    return it->second;
}

std::vector<std::pair<Cells, int>> FsmTable::listed(Subtype st) const {
    std::vector<std::pair<Cells, int>> out;
    for (const auto& r : rows_)
        if (enabled(r.subtype, st)) out.emplace_back(r.cells, r.action);
    return out;
}

std::string data_dir() {
    if (const char* env = std::getenv("MODELLER_DATA_DIR"); env && *env) return env;
    return MODELLER_SOURCE_DATA_DIR;
}

std::string default_fsm_path() { return data_dir() + "/smr_fsm.txt"; }

SmrEnv::SmrEnv(FsmTable table, EnvConfig cfg) : table_(std::move(table)), cfg_(cfg), rng_(cfg.seed) { reset(); }

void SmrEnv::reset() {
    cells_ = table_.start();
    random_.fill(false);
    encode(-1);
}

const std::vector<bool>& SmrEnv::step(int action) {
    if (action < 0 || action >= kActions) throw std::invalid_argument("action out of range: " + std::to_string(action));
    if (goal_reached()) {
        cells_ = table_.start();
    } else {
        auto outs = table_.outcomes(cfg_.subtype, cells_, action);
        if (outs.size() == 1) {
            cells_ = outs[0].cells;
        } else if (!outs.empty()) {
            std::vector<double> w;
            for (const auto& o : outs) w.push_back(o.weight);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            cells_ = outs[pick(rng_)].cells;
        }
    }
    if (cfg_.random_variant)
        for (auto& r : random_) r = std::bernoulli_distribution(0.5)(rng_);
    encode(action);
    return obs_;
}

std::size_t SmrEnv::n_bsvs() const { return 2 * kCellValues + kActions + (cfg_.random_variant ? kRandomBsvs : 0); }

std::vector<std::pair<std::string, bool>> SmrEnv::bsv_layout() const {
    std::vector<std::pair<std::string, bool>> out;
    for (int c = 0; c < 2; ++c)
        for (int v = 0; v < kCellValues; ++v)
            out.emplace_back(std::to_string(c + 1) + kCellNames[v], false);
    for (int a = 0; a < kActions; ++a) out.emplace_back("a" + std::to_string(a), true);
    if (cfg_.random_variant)
        for (int r = 0; r < kRandomBsvs; ++r) out.emplace_back("R" + std::to_string(r), false);
    return out;
}

void SmrEnv::encode(int action) {
    obs_.assign(n_bsvs(), false);
    if (cells_.first != Cell::Empty) obs_[cell_index(0, cells_.first)] = true;
    if (cells_.second != Cell::Empty) obs_[cell_index(1, cells_.second)] = true;
    if (action >= 0) obs_[action_index(action)] = true;
    if (cfg_.random_variant)
        for (int r = 0; r < kRandomBsvs; ++r) obs_[2 * kCellValues + kActions + r] = random_[r];
}

}  // namespace modeller

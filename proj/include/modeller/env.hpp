#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace modeller {

enum class Cell : std::uint8_t { DO, DC, W, G, SG1, SG2, X, Empty };
enum class Subtype : std::uint8_t { RS, SGS, NEG, Complete };

inline constexpr int kCellValues = 7;  // Empty has no BSV
inline constexpr int kActions = 20;
inline constexpr int kRandomBsvs = 2;

using Cells = std::pair<Cell, Cell>;

const char* to_string(Cell c);
const char* to_string(Subtype s);
Cell parse_cell(const std::string& s);
Subtype parse_subtype(const std::string& s);

// Transition table read from a plain-text file.
class FsmTable {
public:
    struct Outcome {
        Cells cells;
        double weight = 1.0;
    };

    static FsmTable load(const std::string& path);
    static FsmTable parse(const std::string& text);

    // Outcomes of `action` in `cells` for a subtype; empty means no change.
    std::vector<Outcome> outcomes(Subtype st, Cells cells, int action) const;
    Cells start() const { return start_; }
    int action_id(const std::string& name) const;
    const std::map<std::string, int>& actions() const { return actions_; }
    // Every (cells, action) with a listed transition in a subtype.
    std::vector<std::pair<Cells, int>> listed(Subtype st) const;

private:
    struct Row {
        std::string subtype;  // "all", "RS", "SGS", "NEG"
        Cells cells;
        int action = 0;
        std::vector<Outcome> outcomes;
    };
    std::vector<Row> rows_;
    std::map<std::string, int> actions_;
    Cells start_{Cell::DC, Cell::W};

    static bool enabled(const std::string& row_subtype, Subtype st);
};

// Data directory: $MODELLER_DATA_DIR if set, else the source tree's data/.
std::string data_dir();
std::string default_fsm_path();

struct EnvConfig {
    Subtype subtype = Subtype::Complete;
    bool random_variant = false;
    std::uint64_t seed = 0;
};

class SmrEnv {
public:
    SmrEnv(FsmTable table, EnvConfig cfg);

    void reset();
    // Applies an action; when the goal is showing, any action restarts.
    const std::vector<bool>& step(int action);

    bool goal_reached() const { return cells_.first == Cell::G; }
    Cells cells() const { return cells_; }
    const std::vector<bool>& observation() const { return obs_; }

    void set_subtype(Subtype st) { cfg_.subtype = st; }
    const EnvConfig& config() const { return cfg_; }
    const FsmTable& table() const { return table_; }

    std::size_t n_bsvs() const;
    // Labels in observation order; the last flag tells which are actions.
    std::vector<std::pair<std::string, bool>> bsv_layout() const;
    // Observation index of cell value `v` in cell 0 or 1.
    static std::size_t cell_index(int cell, Cell v) { return cell * kCellValues + static_cast<int>(v); }
    static std::size_t action_index(int a) { return 2 * kCellValues + a; }

private:
    FsmTable table_;
    EnvConfig cfg_;
    std::mt19937_64 rng_;
    Cells cells_;
    std::array<bool, kRandomBsvs> random_{};
    std::vector<bool> obs_;

    void encode(int action);
};

}  // namespace modeller

#pragma once

#include <stdexcept>
#include <string>

#include "modeller/mnr.hpp"
#include "modeller/model.hpp"
#include "modeller/spn.hpp"

namespace modeller {

struct PersistError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;

// JSON documents tagged with a format name and version. Parsing throws
// PersistError on a wrong tag, a version mismatch or malformed content.
std::string dump_model(const Model& m);
Model parse_model(const std::string& text);

std::string dump_spn(const Spn& p);
Spn parse_spn(const std::string& text);

std::string dump_mnr(const MnrModel& m);
MnrModel parse_mnr(const std::string& text);

void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

void save_model(const std::string& path, const Model& m);
Model load_model(const std::string& path);
void save_mnr(const std::string& path, const MnrModel& m);
MnrModel load_mnr(const std::string& path);

// Conditioning structure as a DOT graph: sources -> CSV -> targets.
std::string model_to_dot(const Model& m);

}  // namespace modeller

#pragma once

// Run configuration (JSON) and the CSV/JSON output conventions shared by the
// command-line tool.

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "magsync/dynamics.hpp"
#include "magsync/model.hpp"
#include "magsync/sideband.hpp"
#include "magsync/sweep.hpp"
#include "magsync/sync.hpp"

namespace magsync::io {

using json = nlohmann::json;

/// Malformed or physically invalid configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct IntegrationConfig {
    double t_end = 0.0;        // s; <= 0: window.hi
    double dt = 0.0;           // s; <= 0: the default step
    int sample_stride = 0;     // trajectory rows every n steps; <= 0: one row per period
    Method method = Method::RK4;
    TimeWindow window;         // s; hi <= lo: [9/gamma_1, 19/gamma_1]
    double record_from = 0.0;  // s
    bool thermal_initial = true;  // false: start from the zero state
};

struct EnsembleConfig {
    int n_trajectories = 500;
    double bin_width = 2.0 * constants::pi / 200.0;
};

struct SidebandConfig {
    SidebandOptions options;
    // |B~| grid in units of omega_bar
    double B_min = 0.05;
    double B_max = 4.0;
    int count = 200;
};

struct LocusConfig {
    double P_threshold = 0.995;
    int samples = 2001;
};

struct ConstraintConfig {
    int theta_count = 721;
};

struct HopfConfig {
    bool enabled = false;
    double lo = -2.0;
    double hi = 0.0;
    int samples = 41;
};

struct RunConfig {
    SystemParams params;      // after desk scaling
    double desk_scale = 1.0;
    IntegrationConfig integration;
    EnsembleConfig ensemble;
    std::optional<GridSpec> grid;
    SidebandConfig sideband;
    LocusConfig locus;
    ConstraintConfig constraint;
    HopfConfig hopf;
    std::uint64_t seed = 0;
    json resolved;  // the effective configuration document
    std::string hash;

    [[nodiscard]] TimeWindow window() const;
};

/// Parses a configuration document. Frequencies and rates under "params"
/// are ordinary Hz and are multiplied by 2pi; unknown keys are rejected.
[[nodiscard]] RunConfig parse_config(const json& doc);

/// Applies "a.b.c=value" to the document; value is parsed as JSON when
/// possible, otherwise taken as a string.
void apply_override(json& doc, const std::string& assignment);

/// 16 hex digits identifying a configuration document.
[[nodiscard]] std::string config_hash(const json& doc);

/// Round-trip decimal form of a double (17 significant digits).
[[nodiscard]] std::string format_number(double v);

/// CSV with '#' header lines (tool, command, config hash) and a column row.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& command, const std::string& hash,
              const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
    std::size_t columns_;
};

/// Writes a JSON document (two-space indent, trailing newline).
void write_json(const std::string& path, const json& doc);

/// Parses a CSV written by CsvWriter: returns the header comments, column
/// names and rows of cells.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};
[[nodiscard]] CsvTable read_csv(const std::string& path);

[[nodiscard]] json to_json(const SystemParams& params);
[[nodiscard]] json to_json(const GridSpec& grid);
[[nodiscard]] json to_json(const SteadyState& s);
[[nodiscard]] json to_json(const EnsembleStats& s);

}  // namespace magsync::io

// scenario.hpp — Declarative scenario runner behind the CLI: config loading
// with strict schema validation, dispatch to the engines, and deterministic
// CSV/JSON emission with a full metadata echo.

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "zeno/detector.hpp"
#include "zeno/fock.hpp"
#include "zeno/spectral.hpp"
#include "zeno/system.hpp"

namespace zeno::scenario {

inline constexpr const char* kEngineName = "zeno";
inline constexpr const char* kEngineVersion = "0.1.0";

enum class Command { Decoherence, Lineshape, Jump, RateScan, Verify };

const char* command_name(Command c);
Command command_from_name(const std::string& name);

struct OutputSpec {
    std::string path;          // empty: stdout
    std::string format = "csv"; // csv | json
};

struct DecoherenceSpec {
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> times;
};

struct GridSpec {
    double center = 0.0;
    double half_width = 0.0;
    int points = 0;
};

struct LineshapeSpec {
    sys::StateRef initial;
    sys::StateRef final_state;
    double t = 0.0;
    std::optional<GridSpec> grid; // absent: auto-sized
    double gate_ratio = 0.1;
};

struct JumpSpec {
    sys::StateRef initial;
    sys::StateRef final_state;
    std::vector<double> times;
    double gate_ratio = 0.1;
};

struct RateScanSpec {
    sys::StateRef initial;
    sys::StateRef final_state;
    std::vector<double> nbar_list;   // exactly one of the two lists is used
    std::vector<double> lambda_list;
};

struct VerifySpec {
    std::pair<int, int> pair{0, 1};          // level pair for the chi checks
    std::vector<double> times{0.05, 0.1, 0.2};
    std::vector<std::pair<double, double>> t1t2_pairs; // default: 3x3 grid
    bool include_jump = false;
    double jump_t = 0.25;
    double tol_char = 1e-6;
    double tol_jump = 1e-4;
    int dim = 0; // 0: truncation audit decides
};

struct ScenarioConfig {
    Command command = Command::Verify;
    detector::DetectorParams detector;
    sys::MeasuredSystemSpec system;
    spectral::QuadratureControls quadrature;
    fock::IntegratorControls integrator;
    OutputSpec output;
    int workers = 1;

    DecoherenceSpec decoherence;
    LineshapeSpec lineshape;
    JumpSpec jump;
    RateScanSpec rate_scan;
    VerifySpec verify;

    // The fully resolved config with every default materialized; echoed
    // into result metadata.
    nlohmann::ordered_json resolved() const;
};

// Parses and validates a config document.  cli_command, when given, must
// agree with any "command" key in the document.
ScenarioConfig parse_config(const nlohmann::json& doc,
                            std::optional<Command> cli_command = std::nullopt);
ScenarioConfig load_config(const std::string& path,
                           std::optional<Command> cli_command = std::nullopt);

struct ResultTable {
    std::vector<std::string> columns;       // numeric column names
    std::vector<std::vector<double>> rows;  // row-major
    std::string label_column;               // nonempty: leading string column
    std::vector<std::string> labels;
    nlohmann::ordered_json metadata;
    bool all_checks_passed = true;
};

ResultTable run_scenario(const ScenarioConfig& config);

// CSV: header row, '.' decimal, 17 significant digits, LF endings.
std::string to_csv(const ResultTable& table);
// JSON: columns, data and the metadata block, deterministic byte-for-byte.
std::string to_json_text(const ResultTable& table);

// Writes table to path (or stdout when path is empty) in the given format.
void emit(const ResultTable& table, const std::string& format,
          const std::string& path);

} // namespace zeno::scenario

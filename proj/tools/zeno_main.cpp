// zeno_main.cpp — Scenario-runner CLI.
//
// Usage: zeno <decoherence|lineshape|jump|rate-scan|verify> --config <path>
//             [--out <path>] [--format csv|json] [--workers N]
//
// Exit codes: 0 success (all requested computations and checks passed),
// 1 verify-check failure, 2 config parse error, 3 validation error,
// 4 fast-dissipation gate refusal, 5 quadrature budget exceeded,
// 6 truncation audit failure, 7 output I/O failure.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zeno/scenario.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Detector-temperature Zeno-effect simulation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string format;
    int workers = 0;

    const std::vector<std::string> names = {"decoherence", "lineshape", "jump",
                                            "rate-scan", "verify"};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "scenario config (JSON)")
            ->required();
        sub->add_option("--out", out_path, "output path (default: stdout)");
        sub->add_option("--format", format, "csv|json (default: from config)");
        sub->add_option("--workers", workers, "worker pool size for scan points");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string sub_name = app.get_subcommands().front()->get_name();

    auto cfg = zeno::scenario::load_config(
        config_path, zeno::scenario::command_from_name(sub_name));
    if (!out_path.empty()) cfg.output.path = out_path;
    if (!format.empty()) {
        if (format != "csv" && format != "json")
            throw zeno::ValidationError("--format must be csv or json");
        cfg.output.format = format;
    }
    if (workers > 0) cfg.workers = workers;

    const auto table = zeno::scenario::run_scenario(cfg);
    zeno::scenario::emit(table, cfg.output.format, cfg.output.path);

    if (!table.all_checks_passed) {
        std::cerr << "zeno: one or more verification checks failed\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "zeno: config parse error: " << e.what() << "\n";
        return 2;
    } catch (const zeno::ValidationError& e) {
        std::cerr << "zeno: " << e.what() << "\n";
        return 3;
    } catch (const zeno::GateError& e) {
        std::cerr << "zeno: " << e.what() << "\n";
        return 4;
    } catch (const zeno::QuadratureBudgetError& e) {
        std::cerr << "zeno: " << e.what() << "\n";
        return 5;
    } catch (const zeno::TruncationError& e) {
        std::cerr << "zeno: " << e.what() << "\n";
        return 6;
    } catch (const zeno::IoError& e) {
        std::cerr << "zeno: " << e.what() << "\n";
        return 7;
    } catch (const std::exception& e) {
        std::cerr << "zeno: " << e.what() << "\n";
        return 1;
    }
}

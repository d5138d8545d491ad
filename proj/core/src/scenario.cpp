#include "zeno/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "zeno/charfunc.hpp"
#include "zeno/oracle.hpp"

namespace zeno::scenario {

using nlohmann::json;
using nlohmann::ordered_json;

const char* command_name(Command c) {
    switch (c) {
        case Command::Decoherence: return "decoherence";
        case Command::Lineshape: return "lineshape";
        case Command::Jump: return "jump";
        case Command::RateScan: return "rate-scan";
        case Command::Verify: return "verify";
    }
    return "?";
}

Command command_from_name(const std::string& name) {
    if (name == "decoherence") return Command::Decoherence;
    if (name == "lineshape") return Command::Lineshape;
    if (name == "jump") return Command::Jump;
    if (name == "rate-scan") return Command::RateScan;
    if (name == "verify") return Command::Verify;
    throw ValidationError("unknown command '" + name + "'");
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path + ": expected an object");
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError(path + ": unknown key '" + it.key() + "'");
}

double get_number(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ValidationError(path + "." + key + ": missing");
    if (!j.at(key).is_number())
        throw ValidationError(path + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback,
                     const std::string& path) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw ValidationError(path + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

int get_int_or(const json& j, const std::string& key, int fallback,
               const std::string& path) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer())
        throw ValidationError(path + "." + key + ": expected an integer");
    return j.at(key).get<int>();
}

std::vector<double> get_number_list(const json& j, const std::string& key,
                                    const std::string& path) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw ValidationError(path + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number())
            throw ValidationError(path + "." + key + ": expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

detector::DetectorParams parse_detector(const json& j) {
    require_object(j, "detector");
    reject_unknown_keys(j, {"omega", "gamma_phase", "gamma_down", "nbar", "T", "gamma_up"},
                        "detector");
    const double omega = get_number(j, "omega", "detector");
    const double gphase = get_number(j, "gamma_phase", "detector");
    const double gdown = get_number(j, "gamma_down", "detector");

    std::optional<double> nbar;
    if (j.contains("nbar")) nbar = get_number(j, "nbar", "detector");
    std::optional<double> temp;
    if (j.contains("T")) temp = get_number(j, "T", "detector");
    if (!nbar && !temp)
        throw ValidationError("detector: one of 'nbar' or 'T' is required");
    if (nbar && temp) {
        const double from_t = detector::nbar_of_temperature(omega, *temp);
        if (std::abs(from_t - *nbar) > 1e-9 * std::max(1.0, std::abs(*nbar)))
            throw ValidationError(
                "detector: both 'T' and 'nbar' given and they disagree (nbar(T) = " +
                std::to_string(from_t) + ", nbar = " + std::to_string(*nbar) +
                "); give one or make them consistent");
    }
    const double nbar_val = nbar ? *nbar : detector::nbar_of_temperature(omega, *temp);
    auto det = detector::DetectorParams::from_nbar(omega, gphase, gdown, nbar_val);

    if (j.contains("gamma_up")) {
        const double gup = get_number(j, "gamma_up", "detector");
        const double expected = detector::gamma_up_from_nbar(gdown, nbar_val);
        if (std::abs(gup - expected) > 1e-9 * std::max(1.0, expected))
            throw ValidationError(
                "detector.gamma_up: violates detailed balance with (nbar, gamma_down): "
                "expected " +
                std::to_string(expected) + ", got " + std::to_string(gup));
    }
    return det;
}

sys::StateRef parse_state_ref(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown_keys(j, {"level", "sublevel"}, path);
    sys::StateRef s;
    s.level = get_int_or(j, "level", 0, path);
    if (!j.contains("level")) throw ValidationError(path + ".level: missing");
    if (j.contains("sublevel")) {
        if (!j.at("sublevel").is_string())
            throw ValidationError(path + ".sublevel: expected a string");
        s.sublevel = j.at("sublevel").get<std::string>();
    }
    return s;
}

sys::MeasuredSystemSpec parse_system(const json& j, double lambda) {
    require_object(j, "system");
    reject_unknown_keys(j, {"levels", "sublevels", "v_elements"}, "system");
    sys::MeasuredSystemSpec spec;
    spec.lambda = lambda;
    if (!j.contains("levels") || !j.at("levels").is_array())
        throw ValidationError("system.levels: expected an array");
    for (const auto& lv : j.at("levels")) {
        require_object(lv, "system.levels[]");
        reject_unknown_keys(lv, {"index", "omega"}, "system.levels[]");
        sys::Level level;
        if (!lv.contains("index")) throw ValidationError("system.levels[].index: missing");
        level.index = lv.at("index").get<int>();
        level.omega = get_number(lv, "omega", "system.levels[]");
        spec.levels.push_back(level);
    }
    if (j.contains("sublevels")) {
        for (const auto& sv : j.at("sublevels")) {
            require_object(sv, "system.sublevels[]");
            reject_unknown_keys(sv, {"level", "label", "omega1"}, "system.sublevels[]");
            sys::Sublevel sub;
            sub.level = sv.at("level").get<int>();
            sub.label = sv.at("label").get<std::string>();
            sub.omega1 = get_number(sv, "omega1", "system.sublevels[]");
            spec.sublevels.push_back(sub);
        }
    }
    if (j.contains("v_elements")) {
        for (const auto& ve : j.at("v_elements")) {
            require_object(ve, "system.v_elements[]");
            reject_unknown_keys(ve, {"from", "to", "re", "im"}, "system.v_elements[]");
            sys::VElement e;
            e.from = parse_state_ref(ve.at("from"), "system.v_elements[].from");
            e.to = parse_state_ref(ve.at("to"), "system.v_elements[].to");
            e.value = sys::Complex(get_number(ve, "re", "system.v_elements[]"),
                                   get_number_or(ve, "im", 0.0, "system.v_elements[]"));
            spec.v_elements.push_back(e);
        }
    }
    spec.validate();
    return spec;
}

} // namespace

ScenarioConfig parse_config(const json& doc, std::optional<Command> cli_command) {
    require_object(doc, "config");
    reject_unknown_keys(doc,
                        {"command", "detector", "system", "lambda", "decoherence",
                         "lineshape", "jump", "rate_scan", "verify", "quadrature",
                         "integrator", "output", "workers"},
                        "config");

    ScenarioConfig cfg;
    std::optional<Command> doc_command;
    if (doc.contains("command")) {
        if (!doc.at("command").is_string())
            throw ValidationError("config.command: expected a string");
        doc_command = command_from_name(doc.at("command").get<std::string>());
    }
    if (cli_command && doc_command && *cli_command != *doc_command)
        throw ValidationError(std::string("config.command: '") +
                              command_name(*doc_command) +
                              "' disagrees with the CLI subcommand '" +
                              command_name(*cli_command) + "'");
    if (!cli_command && !doc_command)
        throw ValidationError("config.command: missing and no CLI subcommand given");
    cfg.command = cli_command ? *cli_command : *doc_command;

    if (!doc.contains("detector")) throw ValidationError("config.detector: missing");
    cfg.detector = parse_detector(doc.at("detector"));

    const double lambda = get_number_or(doc, "lambda", 0.0, "config");
    if (lambda < 0.0) throw ValidationError("config.lambda: must be nonnegative");

    if (doc.contains("system")) {
        cfg.system = parse_system(doc.at("system"), lambda);
    } else {
        cfg.system.lambda = lambda;
        if (cfg.command != Command::Verify && cfg.command != Command::Decoherence)
            throw ValidationError("config.system: required for command '" +
                                  std::string(command_name(cfg.command)) + "'");
        // verify/decoherence default to the symmetric two-level system
        cfg.system.levels = {{0, 1.0}, {1, -1.0}};
    }

    if (doc.contains("quadrature")) {
        const json& q = doc.at("quadrature");
        require_object(q, "quadrature");
        reject_unknown_keys(q, {"rel_tol", "max_subdivisions", "omega_points"},
                            "quadrature");
        cfg.quadrature.rel_tol = get_number_or(q, "rel_tol", cfg.quadrature.rel_tol,
                                               "quadrature");
        cfg.quadrature.max_subdivisions = static_cast<std::size_t>(get_int_or(
            q, "max_subdivisions", static_cast<int>(cfg.quadrature.max_subdivisions),
            "quadrature"));
        cfg.quadrature.omega_points =
            get_int_or(q, "omega_points", cfg.quadrature.omega_points, "quadrature");
        if (!(cfg.quadrature.rel_tol > 0.0 && cfg.quadrature.rel_tol < 1.0))
            throw ValidationError("quadrature.rel_tol: must lie in (0, 1)");
        if (cfg.quadrature.omega_points < 2)
            throw ValidationError("quadrature.omega_points: must be >= 2");
    }
    if (doc.contains("integrator")) {
        const json& g = doc.at("integrator");
        require_object(g, "integrator");
        reject_unknown_keys(g, {"rel_tol", "abs_tol", "max_step"}, "integrator");
        cfg.integrator.rel_tol =
            get_number_or(g, "rel_tol", cfg.integrator.rel_tol, "integrator");
        cfg.integrator.abs_tol =
            get_number_or(g, "abs_tol", cfg.integrator.abs_tol, "integrator");
        cfg.integrator.max_step =
            get_number_or(g, "max_step", cfg.integrator.max_step, "integrator");
        cfg.integrator.to_step_controls(); // validates
    }
    if (doc.contains("output")) {
        const json& o = doc.at("output");
        require_object(o, "output");
        reject_unknown_keys(o, {"path", "format"}, "output");
        if (o.contains("path")) cfg.output.path = o.at("path").get<std::string>();
        if (o.contains("format")) cfg.output.format = o.at("format").get<std::string>();
        if (cfg.output.format != "csv" && cfg.output.format != "json")
            throw ValidationError("output.format: must be 'csv' or 'json'");
    }
    cfg.workers = get_int_or(doc, "workers", 1, "config");
    if (cfg.workers < 1) throw ValidationError("config.workers: must be >= 1");

    switch (cfg.command) {
        case Command::Decoherence: {
            if (!doc.contains("decoherence"))
                throw ValidationError("config.decoherence: missing");
            const json& d = doc.at("decoherence");
            require_object(d, "decoherence");
            reject_unknown_keys(d, {"pairs", "times"}, "decoherence");
            if (!d.contains("pairs") || !d.at("pairs").is_array() || d.at("pairs").empty())
                throw ValidationError("decoherence.pairs: expected a nonempty array");
            for (const auto& p : d.at("pairs")) {
                if (!p.is_array() || p.size() != 2)
                    throw ValidationError("decoherence.pairs[]: expected [m, n]");
                cfg.decoherence.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
                cfg.system.omega_of_level(cfg.decoherence.pairs.back().first);
                cfg.system.omega_of_level(cfg.decoherence.pairs.back().second);
            }
            cfg.decoherence.times = get_number_list(d, "times", "decoherence");
            if (cfg.decoherence.times.empty())
                throw ValidationError("decoherence.times: must be nonempty");
            break;
        }
        case Command::Lineshape: {
            if (!doc.contains("lineshape")) throw ValidationError("config.lineshape: missing");
            const json& l = doc.at("lineshape");
            require_object(l, "lineshape");
            reject_unknown_keys(l, {"initial", "final", "t", "grid", "gate_ratio"},
                                "lineshape");
            cfg.lineshape.initial = parse_state_ref(l.at("initial"), "lineshape.initial");
            cfg.lineshape.final_state = parse_state_ref(l.at("final"), "lineshape.final");
            cfg.lineshape.t = get_number(l, "t", "lineshape");
            cfg.lineshape.gate_ratio =
                get_number_or(l, "gate_ratio", cfg.lineshape.gate_ratio, "lineshape");
            if (l.contains("grid")) {
                const json& g = l.at("grid");
                require_object(g, "lineshape.grid");
                reject_unknown_keys(g, {"center", "half_width", "points"},
                                    "lineshape.grid");
                GridSpec grid;
                grid.center = get_number(g, "center", "lineshape.grid");
                grid.half_width = get_number(g, "half_width", "lineshape.grid");
                grid.points = get_int_or(g, "points", cfg.quadrature.omega_points,
                                         "lineshape.grid");
                if (grid.half_width <= 0.0 || grid.points < 2)
                    throw ValidationError("lineshape.grid: bad half_width/points");
                cfg.lineshape.grid = grid;
            }
            break;
        }
        case Command::Jump: {
            if (!doc.contains("jump")) throw ValidationError("config.jump: missing");
            const json& jj = doc.at("jump");
            require_object(jj, "jump");
            reject_unknown_keys(jj, {"initial", "final", "times", "gate_ratio"}, "jump");
            cfg.jump.initial = parse_state_ref(jj.at("initial"), "jump.initial");
            cfg.jump.final_state = parse_state_ref(jj.at("final"), "jump.final");
            cfg.jump.times = get_number_list(jj, "times", "jump");
            if (cfg.jump.times.empty())
                throw ValidationError("jump.times: must be nonempty");
            cfg.jump.gate_ratio =
                get_number_or(jj, "gate_ratio", cfg.jump.gate_ratio, "jump");
            break;
        }
        case Command::RateScan: {
            if (!doc.contains("rate_scan")) throw ValidationError("config.rate_scan: missing");
            const json& r = doc.at("rate_scan");
            require_object(r, "rate_scan");
            reject_unknown_keys(r, {"initial", "final", "nbar_list", "lambda_list"},
                                "rate_scan");
            cfg.rate_scan.initial = parse_state_ref(r.at("initial"), "rate_scan.initial");
            cfg.rate_scan.final_state = parse_state_ref(r.at("final"), "rate_scan.final");
            const bool has_nbar = r.contains("nbar_list");
            const bool has_lambda = r.contains("lambda_list");
            if (has_nbar == has_lambda)
                throw ValidationError(
                    "rate_scan: exactly one of nbar_list / lambda_list is required");
            if (has_nbar) cfg.rate_scan.nbar_list = get_number_list(r, "nbar_list", "rate_scan");
            if (has_lambda)
                cfg.rate_scan.lambda_list = get_number_list(r, "lambda_list", "rate_scan");
            break;
        }
        case Command::Verify: {
            if (doc.contains("verify")) {
                const json& v = doc.at("verify");
                require_object(v, "verify");
                reject_unknown_keys(v,
                                    {"pair", "times", "t1t2_pairs", "include_jump",
                                     "jump_t", "tol_char", "tol_jump", "dim"},
                                    "verify");
                if (v.contains("pair")) {
                    const auto& p = v.at("pair");
                    if (!p.is_array() || p.size() != 2)
                        throw ValidationError("verify.pair: expected [m, n]");
                    cfg.verify.pair = {p.at(0).get<int>(), p.at(1).get<int>()};
                }
                if (v.contains("times"))
                    cfg.verify.times = get_number_list(v, "times", "verify");
                if (v.contains("t1t2_pairs")) {
                    cfg.verify.t1t2_pairs.clear();
                    for (const auto& p : v.at("t1t2_pairs")) {
                        if (!p.is_array() || p.size() != 2)
                            throw ValidationError("verify.t1t2_pairs[]: expected [t1, t2]");
                        cfg.verify.t1t2_pairs.emplace_back(p.at(0).get<double>(),
                                                           p.at(1).get<double>());
                    }
                }
                if (v.contains("include_jump"))
                    cfg.verify.include_jump = v.at("include_jump").get<bool>();
                cfg.verify.jump_t = get_number_or(v, "jump_t", cfg.verify.jump_t, "verify");
                cfg.verify.tol_char =
                    get_number_or(v, "tol_char", cfg.verify.tol_char, "verify");
                cfg.verify.tol_jump =
                    get_number_or(v, "tol_jump", cfg.verify.tol_jump, "verify");
                cfg.verify.dim = get_int_or(v, "dim", cfg.verify.dim, "verify");
            }
            cfg.system.omega_of_level(cfg.verify.pair.first);
            cfg.system.omega_of_level(cfg.verify.pair.second);
            if (cfg.verify.t1t2_pairs.empty())
                for (double t1 : {0.1, 0.2, 0.3})
                    for (double frac : {0.25, 0.5, 0.75})
                        cfg.verify.t1t2_pairs.emplace_back(t1, frac * t1);
            break;
        }
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path, std::optional<Command> cli_command) {
    std::ifstream in(path);
    if (!in) throw IoError("load_config: cannot open '" + path + "'");
    json doc = json::parse(in); // nlohmann::json::parse_error on bad input
    return parse_config(doc, cli_command);
}

// ---------------------------------------------------------------------------
// Resolved-config echo
// ---------------------------------------------------------------------------

namespace {

ordered_json state_ref_json(const sys::StateRef& s) {
    ordered_json j;
    j["level"] = s.level;
    if (!s.sublevel.empty()) j["sublevel"] = s.sublevel;
    return j;
}

} // namespace

ordered_json ScenarioConfig::resolved() const {
    ordered_json j;
    j["command"] = command_name(command);
    j["detector"] = {{"omega", detector.omega},
                     {"gamma_phase", detector.gamma_phase},
                     {"gamma_down", detector.gamma_down},
                     {"nbar", detector.nbar},
                     {"gamma_up", detector.gamma_up},
                     {"gamma_eff", detector.gamma_eff}};
    ordered_json levels = ordered_json::array();
    for (const auto& lv : system.levels)
        levels.push_back({{"index", lv.index}, {"omega", lv.omega}});
    ordered_json sublevels = ordered_json::array();
    for (const auto& sv : system.sublevels)
        sublevels.push_back(
            {{"level", sv.level}, {"label", sv.label}, {"omega1", sv.omega1}});
    ordered_json vels = ordered_json::array();
    for (const auto& ve : system.v_elements) {
        ordered_json e;
        e["from"] = state_ref_json(ve.from);
        e["to"] = state_ref_json(ve.to);
        e["re"] = ve.value.real();
        e["im"] = ve.value.imag();
        vels.push_back(e);
    }
    j["system"] = {{"levels", levels}, {"sublevels", sublevels}, {"v_elements", vels}};
    j["lambda"] = system.lambda;
    j["quadrature"] = {{"rel_tol", quadrature.rel_tol},
                       {"max_subdivisions", quadrature.max_subdivisions},
                       {"omega_points", quadrature.omega_points}};
    j["integrator"] = {{"rel_tol", integrator.rel_tol},
                       {"abs_tol", integrator.abs_tol},
                       {"max_step", std::isfinite(integrator.max_step)
                                        ? ordered_json(integrator.max_step)
                                        : ordered_json("inf")}};
    j["output"] = {{"path", output.path}, {"format", output.format}};
    j["workers"] = workers;

    switch (command) {
        case Command::Decoherence: {
            ordered_json pairs = ordered_json::array();
            for (const auto& [m, n] : decoherence.pairs) pairs.push_back({m, n});
            j["decoherence"] = {{"pairs", pairs}, {"times", decoherence.times}};
            break;
        }
        case Command::Lineshape: {
            ordered_json l;
            l["initial"] = state_ref_json(lineshape.initial);
            l["final"] = state_ref_json(lineshape.final_state);
            l["t"] = lineshape.t;
            l["gate_ratio"] = lineshape.gate_ratio;
            if (lineshape.grid) {
                l["grid"] = {{"center", lineshape.grid->center},
                             {"half_width", lineshape.grid->half_width},
                             {"points", lineshape.grid->points}};
            } else {
                l["grid"] = "auto";
            }
            j["lineshape"] = l;
            break;
        }
        case Command::Jump:
            j["jump"] = {{"initial", state_ref_json(jump.initial)},
                         {"final", state_ref_json(jump.final_state)},
                         {"times", jump.times},
                         {"gate_ratio", jump.gate_ratio}};
            break;
        case Command::RateScan: {
            ordered_json r;
            r["initial"] = state_ref_json(rate_scan.initial);
            r["final"] = state_ref_json(rate_scan.final_state);
            if (!rate_scan.nbar_list.empty()) r["nbar_list"] = rate_scan.nbar_list;
            if (!rate_scan.lambda_list.empty()) r["lambda_list"] = rate_scan.lambda_list;
            j["rate_scan"] = r;
            break;
        }
        case Command::Verify: {
            ordered_json pairs = ordered_json::array();
            for (const auto& [t1, t2] : verify.t1t2_pairs) pairs.push_back({t1, t2});
            j["verify"] = {{"pair", {verify.pair.first, verify.pair.second}},
                           {"times", verify.times},
                           {"t1t2_pairs", pairs},
                           {"include_jump", verify.include_jump},
                           {"jump_t", verify.jump_t},
                           {"tol_char", verify.tol_char},
                           {"tol_jump", verify.tol_jump},
                           {"dim", verify.dim}};
            break;
        }
    }
    return j;
}

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

namespace {

// Ordered fan-out over independent items; results land by index.
template <class Fn>
void parallel_for(int workers, std::size_t count, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(workers, static_cast<int>(count));
    pool.reserve(n);
    for (int w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

ordered_json base_metadata(const ScenarioConfig& cfg) {
    ordered_json meta;
    meta["engine"] = {{"name", kEngineName}, {"version", kEngineVersion}};
    meta["config"] = cfg.resolved();
    meta["flags"] = ordered_json::object();
    return meta;
}

ResultTable run_decoherence(const ScenarioConfig& cfg) {
    ResultTable table;
    table.metadata = base_metadata(cfg);
    table.columns = {"t"};
    for (const auto& [m, n] : cfg.decoherence.pairs) {
        const std::string suffix = std::to_string(m) + "_" + std::to_string(n);
        table.columns.push_back("suppression_" + suffix);
        table.columns.push_back("re_c00_" + suffix);
        table.columns.push_back("im_c00_" + suffix);
    }
    ordered_json rates = ordered_json::object();
    for (const auto& [m, n] : cfg.decoherence.pairs) {
        charfunc::LevelPair pair{m, n, cfg.system.omega_of_level(m),
                                 cfg.system.omega_of_level(n)};
        rates[std::to_string(m) + "_" + std::to_string(n)] =
            charfunc::decoherence_rate(pair, cfg.system.lambda, cfg.detector);
    }
    table.metadata["flags"]["asymptotic_decoherence_rates"] = rates;

    for (double t : cfg.decoherence.times) {
        std::vector<double> row{t};
        for (const auto& [m, n] : cfg.decoherence.pairs) {
            charfunc::LevelPair pair{m, n, cfg.system.omega_of_level(m),
                                     cfg.system.omega_of_level(n)};
            const auto coeffs =
                charfunc::measurement_coeffs(pair, cfg.system.lambda, t, cfg.detector);
            const auto c00 = coeffs.get(0, 0);
            row.push_back(std::exp(c00.real()));
            row.push_back(c00.real());
            row.push_back(c00.imag());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

ResultTable run_lineshape(const ScenarioConfig& cfg) {
    const auto& ls = cfg.lineshape;
    const double wi = cfg.system.omega_of_level(ls.initial.level);
    const double wf = cfg.system.omega_of_level(ls.final_state.level);

    spectral::LineShape shape;
    if (ls.grid) {
        std::vector<double> grid(ls.grid->points);
        for (int i = 0; i < ls.grid->points; ++i)
            grid[i] = ls.grid->center - ls.grid->half_width +
                      2.0 * ls.grid->half_width * i / (ls.grid->points - 1);
        shape = spectral::line_shape(wi, wf, cfg.detector, cfg.system.lambda, ls.t,
                                     grid, cfg.quadrature, ls.gate_ratio);
    } else {
        shape = spectral::auto_line_shape(wi, wf, cfg.detector, cfg.system.lambda,
                                          ls.t, cfg.quadrature, ls.gate_ratio);
    }

    ResultTable table;
    table.metadata = base_metadata(cfg);
    table.columns = {"omega", "p"};
    for (std::size_t i = 0; i < shape.omega_grid.size(); ++i)
        table.rows.push_back({shape.omega_grid[i], shape.p_values[i]});
    table.metadata["flags"]["omega_if"] = shape.omega_if;
    table.metadata["flags"]["mass_captured"] = shape.mass_captured;
    table.metadata["flags"]["min_value"] = shape.min_value;
    table.metadata["flags"]["narrow_grid_warning"] = shape.narrow_grid_warning;
    table.metadata["flags"]["negative_lobe_warning"] = shape.negative_lobe_warning;
    return table;
}

ResultTable run_jump(const ScenarioConfig& cfg) {
    const auto& js = cfg.jump;
    const bool gated_in =
        spectral::fast_dissipation_gate(cfg.detector, js.gate_ratio);

    ResultTable table;
    table.metadata = base_metadata(cfg);
    table.columns = {"t", "w_general"};
    if (gated_in) table.columns.push_back("w_fast");
    table.columns.push_back("residual_imag");
    table.metadata["flags"]["fast_dissipation_gated_in"] = gated_in;

    std::vector<std::vector<double>> rows(js.times.size());
    parallel_for(cfg.workers, js.times.size(), [&](std::size_t i) {
        const double t = js.times[i];
        const auto res = spectral::jump_probability_general_ex(
            cfg.system, cfg.detector, js.initial, js.final_state, t, cfg.quadrature);
        std::vector<double> row{t, res.probability};
        if (gated_in)
            row.push_back(spectral::jump_probability_fast_dissipation(
                cfg.system, cfg.detector, js.initial, js.final_state, t,
                cfg.quadrature, js.gate_ratio));
        row.push_back(res.imag_residual);
        rows[i] = std::move(row);
    });
    table.rows = std::move(rows);
    return table;
}

ResultTable run_rate_scan(const ScenarioConfig& cfg) {
    const auto& rs = cfg.rate_scan;
    ResultTable table;
    table.metadata = base_metadata(cfg);

    if (!rs.nbar_list.empty()) {
        table.columns = {"nbar", "rate", "invariant"};
        const auto rows = spectral::rate_temperature_scan(
            cfg.system, cfg.detector, rs.initial, rs.final_state, rs.nbar_list);
        for (const auto& r : rows)
            table.rows.push_back({r.nbar, r.rate, r.invariant});
    } else {
        table.columns = {"lambda", "rate", "invariant"};
        for (double lambda : rs.lambda_list) {
            sys::MeasuredSystemSpec spec = cfg.system;
            spec.lambda = lambda;
            const double r =
                spectral::asymptotic_rate(spec, cfg.detector, rs.initial, rs.final_state);
            table.rows.push_back(
                {lambda, r, r * lambda * std::sqrt(1.0 + 2.0 * cfg.detector.nbar)});
        }
    }
    return table;
}

ResultTable run_verify(const ScenarioConfig& cfg) {
    const auto& v = cfg.verify;
    ResultTable table;
    table.metadata = base_metadata(cfg);
    table.label_column = "check";
    table.columns = {"analytic", "oracle", "rel_error", "tolerance", "passed"};

    const double wm = cfg.system.omega_of_level(v.pair.first);
    const double wn = cfg.system.omega_of_level(v.pair.second);
    const double lambda = cfg.system.lambda;
    const auto& det = cfg.detector;

    // One truncation audit covers the whole check set; the resolved
    // dimension lands in the metadata.
    double t_max = 1e-3;
    for (double t : v.times) t_max = std::max(t_max, t);
    for (const auto& [t1, t2] : v.t1t2_pairs) t_max = std::max(t_max, t1);
    const int dim = v.dim > 0 ? v.dim
                              : fock::audit_pair_dim(wm, wn, lambda, t_max, det,
                                                     cfg.integrator);
    table.metadata["flags"]["truncation_dim"] = dim;

    struct Check {
        std::string name;
        std::function<std::pair<std::complex<double>, std::complex<double>>()> run;
        double tol;
    };
    std::vector<Check> checks;

    const int char_dim =
        std::max(fock::thermal_dim_required(det.nbar), 48);
    checks.push_back(
        {"thermal_char(xi=1)",
         [&, char_dim] {
             const auto rho = fock::thermal_state(det.nbar, char_dim);
             return std::make_pair(detector::thermal_char({1.0, 0.0}, det.nbar),
                                   fock::char_function(rho, {1.0, 0.0}));
         },
         v.tol_char});

    checks.push_back(
        {"relaxation(nbar0=nbar+2, t=1)",
         [&] {
             const double nbar0 = det.nbar + 2.0;
             const int relax_dim = std::max(fock::thermal_dim_required(nbar0) + 16, 48);
             auto rho = fock::thermal_state(nbar0, relax_dim);
             const auto spec = fock::LindbladSpec::detector_only(det, relax_dim);
             rho = fock::propagate(rho, spec, 1.0, cfg.integrator);
             const double analytic =
                 det.nbar + (nbar0 - det.nbar) * std::exp(-det.gamma_net());
             return std::make_pair(std::complex<double>(analytic, 0.0),
                                   std::complex<double>(fock::expectation_number(rho), 0.0));
         },
         v.tol_char});

    for (double t : v.times) {
        checks.push_back(
            {"measurement_chi(t=" + std::to_string(t) + ")",
             [&, t] {
                 charfunc::LevelPair pair{v.pair.first, v.pair.second, wm, wn};
                 const auto coeffs = charfunc::measurement_coeffs(pair, lambda, t, det);
                 const auto analytic = std::exp(coeffs.get(0, 0));
                 const auto oracle = fock::oracle_measurement_char(
                     wm, wn, lambda, t, det, {0.0, 0.0}, cfg.integrator, dim);
                 return std::make_pair(analytic, oracle);
             },
             v.tol_char});
    }

    for (const auto& [t1, t2] : v.t1t2_pairs) {
        checks.push_back(
            {"two_time_chi(t1=" + std::to_string(t1) + ", t2=" + std::to_string(t2) + ")",
             [&, t1, t2] {
                 const double wphase = wm - wn;
                 const auto analytic =
                     spectral::chi_two_time(wm, wn, t1, t2, lambda, det, wphase);
                 const auto oracle = fock::oracle_chi_two_time(
                     wm, wn, wm, wphase, t1, t2, lambda, det, cfg.integrator, dim);
                 return std::make_pair(analytic, oracle);
             },
             v.tol_char});
    }

    if (v.include_jump) {
        checks.push_back(
            {"jump_equivalence(t=" + std::to_string(v.jump_t) + ")",
             [&] {
                 const auto analytic = spectral::jump_probability_general(
                     cfg.system, det, sys::StateRef{v.pair.first, ""},
                     sys::StateRef{v.pair.second, ""}, v.jump_t, cfg.quadrature);
                 const auto oracle = fock::jump_probability_second_order(
                     cfg.system, det, lambda, sys::StateRef{v.pair.first, ""},
                     sys::StateRef{v.pair.second, ""}, v.jump_t, cfg.integrator, dim);
                 return std::make_pair(std::complex<double>(analytic, 0.0),
                                       std::complex<double>(oracle.probability, 0.0));
             },
             v.tol_jump});
    }

    std::vector<std::vector<double>> rows(checks.size());
    std::vector<std::string> labels(checks.size());
    parallel_for(cfg.workers, checks.size(), [&](std::size_t i) {
        const auto [analytic, oracle] = checks[i].run();
        const double denom = std::max(std::abs(oracle), 1e-300);
        const double rel = std::abs(analytic - oracle) / denom;
        const bool pass = rel <= checks[i].tol;
        labels[i] = checks[i].name;
        rows[i] = {std::abs(analytic), std::abs(oracle), rel, checks[i].tol,
                   pass ? 1.0 : 0.0};
    });
    table.labels = std::move(labels);
    table.rows = std::move(rows);
    for (const auto& row : table.rows)
        if (row.back() != 1.0) table.all_checks_passed = false;
    table.metadata["flags"]["all_checks_passed"] = table.all_checks_passed;
    return table;
}

} // namespace

ResultTable run_scenario(const ScenarioConfig& cfg) {
    switch (cfg.command) {
        case Command::Decoherence: return run_decoherence(cfg);
        case Command::Lineshape: return run_lineshape(cfg);
        case Command::Jump: return run_jump(cfg);
        case Command::RateScan: return run_rate_scan(cfg);
        case Command::Verify: return run_verify(cfg);
    }
    throw ValidationError("run_scenario: bad command");
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string to_csv(const ResultTable& table) {
    std::ostringstream out;
    bool first = true;
    if (!table.label_column.empty()) {
        out << table.label_column;
        first = false;
    }
    for (const auto& c : table.columns) {
        if (!first) out << ',';
        out << c;
        first = false;
    }
    out << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        first = true;
        if (!table.label_column.empty()) {
            out << table.labels[r];
            first = false;
        }
        for (double v : table.rows[r]) {
            if (!first) out << ',';
            out << format_double(v);
            first = false;
        }
        out << '\n';
    }
    return out.str();
}

std::string to_json_text(const ResultTable& table) {
    ordered_json j;
    j["columns"] = table.columns;
    if (!table.label_column.empty()) {
        j["label_column"] = table.label_column;
        j["labels"] = table.labels;
    }
    j["data"] = table.rows;
    j["metadata"] = table.metadata;
    return j.dump(2) + "\n";
}

void emit(const ResultTable& table, const std::string& format,
          const std::string& path) {
    if (format != "csv" && format != "json")
        throw ValidationError("emit: format must be 'csv' or 'json'");
    const std::string body = format == "csv" ? to_csv(table) : to_json_text(table);
    if (path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("emit: cannot open '" + path + "' for writing");
    out << body;
    out.flush();
    if (!out) throw IoError("emit: write to '" + path + "' failed");
}

} // namespace zeno::scenario

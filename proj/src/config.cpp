#include "mkv/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace mkv {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Entry {
    std::string value;
    int line;
};

using Section = std::map<std::string, Entry>;

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
    throw ConfigError(path + ":" + std::to_string(line) + ": " + what);
}

Real to_real(const std::string& path, const Entry& e) {
    try {
        std::size_t used = 0;
        const Real v = std::stod(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail(path, e.line, "expected a number, got '" + e.value + "'");
    }
}

long to_long(const std::string& path, const Entry& e) {
    try {
        std::size_t used = 0;
        const long v = std::stol(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail(path, e.line, "expected an integer, got '" + e.value + "'");
    }
}

bool to_bool(const std::string& path, const Entry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    fail(path, e.line, "expected a boolean, got '" + e.value + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& path) {
    std::map<std::string, Section> sections;
    std::map<std::string, int> section_lines;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(path, lineno, "unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current != "model" && current != "grid" && current != "solver" &&
                current != "output")
                fail(path, lineno, "unknown section [" + current + "]");
            section_lines[current] = lineno;
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(path, lineno, "expected 'key = value'");
        if (current.empty()) fail(path, lineno, "key outside of any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) fail(path, lineno, "empty key or value");
        if (sections[current].count(key)) fail(path, lineno, "duplicate key '" + key + "'");
        sections[current][key] = {value, lineno};
    }

    ExperimentConfig cfg;

    // [model]
    if (!sections.count("model")) throw ConfigError(path + ": missing [model] section");
    Section model = sections["model"];
    if (!model.count("name"))
        fail(path, section_lines["model"], "missing model name in [model]");
    cfg.model_name = model["name"].value;
    model.erase("name");
    for (const auto& [key, entry] : model) cfg.model_params[key] = to_real(path, entry);

    // [grid]
    if (!sections.count("grid")) throw ConfigError(path + ": missing [grid] section");
    Section grid = sections["grid"];
    if (!grid.count("T")) fail(path, section_lines["grid"], "missing T in [grid]");
    cfg.horizon = to_real(path, grid["T"]);
    if (!(cfg.horizon > 0)) fail(path, grid["T"].line, "T must be positive");
    const bool has_n = grid.count("N") > 0, has_dt = grid.count("dt") > 0;
    if (has_n == has_dt)
        fail(path, section_lines["grid"], "give exactly one of N or dt in [grid]");
    if (has_n) {
        cfg.steps = static_cast<int>(to_long(path, grid["N"]));
        if (cfg.steps <= 0) fail(path, grid["N"].line, "N must be positive");
    } else {
        const Real dt = to_real(path, grid["dt"]);
        if (!(dt > 0)) fail(path, grid["dt"].line, "dt must be positive");
        const Real ratio = cfg.horizon / dt;
        const int n = static_cast<int>(std::lround(ratio));
        if (n <= 0 || std::abs(ratio - n) > 1e-9 * std::max<Real>(1.0, ratio))
            fail(path, grid["dt"].line, "dt must divide T into an integer step count");
        cfg.steps = n;
    }
    for (const auto& [key, entry] : grid)
        if (key != "T" && key != "N" && key != "dt")
            fail(path, entry.line, "unknown key '" + key + "' in [grid]");

    // [solver]
    if (!sections.count("solver")) throw ConfigError(path + ": missing [solver] section");
    for (const auto& [key, entry] : sections["solver"]) {
        SolverConfig& s = cfg.solver;
        if (key == "scheme") {
            try {
                s.scheme = scheme_from_name(entry.value);
            } catch (const ConfigError& e) {
                fail(path, entry.line, e.what());
            }
        } else if (key == "B")
            s.batch = static_cast<int>(to_long(path, entry));
        else if (key == "K")
            s.iterations = to_long(path, entry);
        else if (key == "M")
            s.memory = static_cast<int>(to_long(path, entry));
        else if (key == "R")
            s.law_samples = static_cast<int>(to_long(path, entry));
        else if (key == "H")
            s.inner_steps = static_cast<int>(to_long(path, entry));
        else if (key == "lambda")
            s.penalty = to_real(path, entry);
        else if (key == "lr")
            s.learning_rate = to_real(path, entry);
        else if (key == "seed")
            s.seed = static_cast<std::uint64_t>(to_long(path, entry));
        else if (key == "hidden_layers")
            s.hidden_layers = static_cast<int>(to_long(path, entry));
        else if (key == "hidden_width")
            s.hidden_width = static_cast<int>(to_long(path, entry));
        else if (key == "eval_batch")
            s.eval_batch = static_cast<int>(to_long(path, entry));
        else if (key == "record_law")
            s.record_law = to_bool(path, entry);
        else
            fail(path, entry.line, "unknown key '" + key + "' in [solver]");
    }

    // [output] (optional)
    if (sections.count("output")) {
        for (const auto& [key, entry] : sections["output"]) {
            if (key == "dir")
                cfg.output_dir = entry.value;
            else if (key == "repetitions") {
                cfg.repetitions = static_cast<int>(to_long(path, entry));
                if (cfg.repetitions <= 0) fail(path, entry.line, "repetitions must be positive");
            } else
                fail(path, entry.line, "unknown key '" + key + "' in [output]");
        }
    }

    // fail early on malformed model/solver settings
    build_model(cfg.model_name, cfg.model_params);
    cfg.solver.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

namespace {

Real param_or(const std::map<std::string, Real>& params, const std::string& key, Real fallback,
              std::map<std::string, Real>& consumed) {
    consumed[key] = fallback;
    const auto it = params.find(key);
    if (it == params.end()) return fallback;
    consumed[key] = it->second;
    return it->second;
}

void reject_unknown(const std::string& model, const std::map<std::string, Real>& params,
                    const std::map<std::string, Real>& known) {
    for (const auto& [key, value] : params) {
        (void)value;
        if (!known.count(key))
            throw ConfigError("unknown parameter '" + key + "' for model " + model);
    }
}

}  // namespace

ModelDefinition build_model(const std::string& name, const std::map<std::string, Real>& params) {
    std::map<std::string, Real> known;
    if (name == "price-impact-pontryagin" || name == "price-impact-weak") {
        PriceImpactParams p;
        p.c_alpha = param_or(params, "c_alpha", p.c_alpha, known);
        p.c_x = param_or(params, "c_x", p.c_x, known);
        p.c_g = param_or(params, "c_g", p.c_g, known);
        p.gamma = param_or(params, "gamma", p.gamma, known);
        p.sigma = param_or(params, "sigma", p.sigma, known);
        p.x0 = param_or(params, "x0", p.x0, known);
        p.d = static_cast<int>(param_or(params, "d", p.d, known));
        reject_unknown(name, params, known);
        return name == "price-impact-pontryagin" ? price_impact_pontryagin(p)
                                                 : price_impact_weak(p);
    }
    if (name == "population") {
        const Real rho = param_or(params, "rho", 1.0, known);
        const Real x0 = param_or(params, "x0", 1.0, known);
        const Real sigma = param_or(params, "sigma", 1.0, known);
        reject_unknown(name, params, known);
        return population_model(rho, x0, sigma);
    }
    if (name == "lognormal-linear" || name == "lognormal-quadratic") {
        LognormalParams p;
        p.a = param_or(params, "a", p.a, known);
        p.sigma = param_or(params, "sigma", p.sigma, known);
        p.alpha = param_or(params, "alpha", p.alpha, known);
        p.xi = param_or(params, "xi", p.xi, known);
        p.b_coef = param_or(params, "b_coef", p.b_coef, known);
        p.c_coef = param_or(params, "c_coef", p.c_coef, known);
        p.d = static_cast<int>(param_or(params, "d", p.d, known));
        reject_unknown(name, params, known);
        return name == "lognormal-linear" ? lognormal_linear(p) : lognormal_quadratic(p);
    }
    throw ConfigError("unknown model '" + name +
                      "' (known: price-impact-pontryagin, price-impact-weak, population, "
                      "lognormal-linear, lognormal-quadratic)");
}

std::string resolve_output_dir(const ExperimentConfig& cfg) {
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv("MKVBENCH_OUT"); env && *env) return env;
    return "mkvbench-out";
}

}  // namespace mkv

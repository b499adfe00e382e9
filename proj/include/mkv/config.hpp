#pragma once

#include <map>
#include <string>

#include "mkv/solvers.hpp"

namespace mkv {

/// One experiment: model + grid + solver + output destination.
///
/// Config files are flat INI-style text with the sections
/// [model], [grid], [solver], [output]; see the README for the grammar.
struct ExperimentConfig {
    std::string model_name;
    std::map<std::string, Real> model_params;  // overrides of model defaults
    Real horizon = 1.0;
    int steps = 0;  // resolved N (from N= or dt=)
    SolverConfig solver;
    std::string output_dir;  // empty: $MKVBENCH_OUT or ./mkvbench-out
    int repetitions = 1;
};

/// Parses and validates a config file. Throws ConfigError with
/// "<path>:<line>: ..." diagnostics.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& path = "<config>");

/// Instantiates one of the five benchmark models by name, applying
/// parameter overrides. Known names: price-impact-pontryagin,
/// price-impact-weak, population, lognormal-linear, lognormal-quadratic.
ModelDefinition build_model(const std::string& name, const std::map<std::string, Real>& params);

/// Resolved output directory for a run.
std::string resolve_output_dir(const ExperimentConfig& cfg);

}  // namespace mkv

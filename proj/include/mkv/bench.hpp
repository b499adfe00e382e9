#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mkv/config.hpp"

namespace mkv {

/// CLI exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitDiverged = 2,
    kExitTolerance = 3,
};

/// Executes a parsed experiment (all repetitions), writes report.json,
/// loss curves and optional law trajectories under the resolved output
/// directory. Returns kExitOk or kExitDiverged; partial files are written
/// for diverged runs.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// One cell of a reproduction table.
struct TableCell {
    std::string method;     // row label
    Real maturity;          // T
    ExperimentConfig cfg;   // fully resolved run
    Real reference;         // closed-form / ODE reference value
    Real expected;          // value the cell should reproduce (paper value)
    Real tolerance;         // |result − expected| gate
    bool expect_divergence; // paper marks this cell DV
};

struct TableSpec {
    std::string id;
    std::string scale;  // desk | full
    std::vector<TableCell> cells;
    std::vector<std::string> scale_notes;  // budget deviations, printed in the header
};

/// Cell grid for a table id ("price-impact", "linear", "quadratic") at a
/// scale ("desk" or "full").
TableSpec make_table(const std::string& id, const std::string& scale);

/// Runs every cell and writes table.tsv under out_dir. Returns kExitOk when
/// all cells reproduce their expected values (divergent cells count as
/// reproduced when the paper marks them DV), kExitTolerance otherwise.
int run_table(const TableSpec& spec, const std::string& out_dir, std::ostream& log);

/// Reference values for `oracle <model> <t...>`: the mean ODE solution for
/// the price impact model, the closed-form mean for the log-normal models.
/// Throws UsageError for models without an oracle.
Real oracle_value(const std::string& model, Real t);

}  // namespace mkv

// Benchmark harness for the MKV FBSDE solvers.
//
//   mkvbench run <config.ini>
//   mkvbench table <price-impact|linear|quadratic> [--scale desk|full] [--out DIR]
//   mkvbench oracle <model> <t...>
//
// Exit codes: 0 success, 1 config/usage error, 2 diverged run,
// 3 tolerance failure in table mode.

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "mkv/bench.hpp"

int main(int argc, char** argv) {
    CLI::App app{"MKV FBSDE solver benchmark harness"};
    app.require_subcommand(1);

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "execute one experiment from a config file");
    run->add_option("config", config_path, "path to the INI config")->required();

    std::string table_id, scale = "desk", out_dir = "";
    CLI::App* table = app.add_subcommand("table", "reproduce a results table");
    table->add_option("id", table_id, "price-impact | linear | quadratic")->required();
    table->add_option("--scale", scale, "desk (reduced budgets) or full (paper budgets)");
    table->add_option("--out", out_dir, "output directory");

    std::string oracle_model;
    std::vector<double> oracle_times;
    CLI::App* oracle = app.add_subcommand("oracle", "print reference values");
    oracle->add_option("model", oracle_model, "price-impact | lognormal")->required();
    oracle->add_option("t", oracle_times, "evaluation times")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return mkv::kExitConfig;
    }

    try {
        if (*run) {
            const mkv::ExperimentConfig cfg = mkv::parse_config_file(config_path);
            return mkv::run_experiment(cfg, std::cout);
        }
        if (*table) {
            const mkv::TableSpec spec = mkv::make_table(table_id, scale);
            std::string dir = out_dir;
            if (dir.empty()) {
                mkv::ExperimentConfig dummy;
                dir = mkv::resolve_output_dir(dummy);
            }
            return mkv::run_table(spec, dir, std::cout);
        }
        if (*oracle) {
            std::cout << std::setprecision(10);
            for (double t : oracle_times)
                std::cout << oracle_model << " t=" << t << " reference "
                          << mkv::oracle_value(oracle_model, t) << "\n";
            return mkv::kExitOk;
        }
    } catch (const mkv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return mkv::kExitConfig;
    } catch (const mkv::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return mkv::kExitConfig;
    } catch (const mkv::DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return mkv::kExitDiverged;
    } catch (const mkv::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return mkv::kExitConfig;
    }
    return mkv::kExitConfig;
}

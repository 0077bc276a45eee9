// Command-line driver for the steric Poisson-Boltzmann solver.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stericpb/stericpb.hpp"

namespace {

stericpb::RunConfig load_config(const std::string& path, double tol_override, bool classical,
                                bool no_table) {
    std::ifstream in(path);
    if (!in) throw stericpb::IoError("cannot open config file " + path);
    stericpb::RunConfig cfg = stericpb::parse_config(in);
    if (tol_override > 0.0) cfg.tol = tol_override;
    if (classical) cfg.mode = stericpb::ClosureMode::classical;
    if (no_table) cfg.use_table = false;
    return cfg;
}

std::vector<int> levels_to_interior_counts(const std::string& levels, double half_width) {
    std::vector<int> out;
    std::stringstream ss(levels);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const double h = std::strtod(tok.c_str(), nullptr);
        if (!(h > 0.0)) throw stericpb::ConfigError("bad mms level '" + tok + "'");
        const double n_real = 2.0 * half_width / h - 1.0;
        const int n = static_cast<int>(std::llround(n_real));
        if (n < 1 || std::abs(n_real - n) > 1e-9)
            throw stericpb::ConfigError("spacing " + tok + " does not fit the box: 2L/h-1 = " +
                                        std::to_string(n_real) + " is not an integer");
        out.push_back(n);
    }
    return out;
}

void print_info(const stericpb::RunConfig& cfg) {
    using namespace stericpb;
    const PhysicalConstants constants = cfg.constants();
    const BulkState bulk = cfg.bulk();
    const UniformGrid3 grid = build_grid(cfg.half_width, cfg.interior_points);
    std::cout << std::setprecision(10);
    std::cout << "grid: L=" << grid.half_width << " A, N_h=" << grid.interior_per_axis
              << ", h=" << grid.spacing << " A, unknowns=" << grid.interior_count() << "\n";
    std::cout << "physics: T=" << cfg.temperature << " K, eps_m=" << cfg.eps_solute
              << ", eps_w=" << cfg.eps_solvent << ", tau=" << cfg.interface_width << " A\n";
    std::cout << "coupling length: " << constants.coupling_length() << " A\n";
    std::cout << "source scale 4*pi*lambda: " << constants.source_scale() << " A\n";
    if (bulk.count() > 0) {
        std::cout << "debye kappa: " << bulk.debye_kappa(constants, cfg.eps_solvent) << " 1/A\n";
        std::cout << "gamma_inf: " << bulk.gamma_inf << "\n";
        for (int l = 0; l < bulk.count(); ++l) {
            const auto& sp = bulk.species[static_cast<size_t>(l)];
            std::cout << "species " << (l + 1) << ": z=" << sp.valence << ", v=" << sp.volume
                      << " A^3, c_inf=" << density_to_molar(sp.bulk_density)
                      << " M, saturation=" << density_to_molar(1.0 / sp.volume) << " M\n";
        }
    }
    std::cout << "closure: " << (cfg.mode == ClosureMode::steric ? "steric" : "classical")
              << (cfg.use_table ? " with precomputed table" : " direct") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-difference solver for steric and classical Poisson-Boltzmann theories"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 1;
    double tol_override = -1.0;
    bool classical = false;
    bool no_table = false;
    app.add_option("--config", config_path, "run configuration file")->required();
    app.add_option("--threads", threads, "worker threads for grid sweeps");
    app.add_option("--tol", tol_override, "override the Newton residual tolerance");
    app.add_flag("--classical", classical, "force the classical closure");
    app.add_flag("--no-table", no_table, "disable the precompute-interpolation path");

    auto* solve_cmd = app.add_subcommand("solve", "run the full pipeline and report");
    auto* mms_cmd = app.add_subcommand("mms", "manufactured-solution convergence study");
    std::string levels = "0.4,0.2";
    mms_cmd->add_option("--levels", levels, "comma-separated grid spacings");
    auto* table_cmd = app.add_subcommand("table", "precompute the closure table and dump it");
    std::string table_path = "steric_table.txt";
    table_cmd->add_option("--output", table_path, "table output path");
    auto* bounds_cmd = app.add_subcommand("bounds", "compute the truncation bounds");
    auto* info_cmd = app.add_subcommand("info", "echo the parsed configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        stericpb::worker_count() = std::max(1, threads);
        stericpb::RunConfig cfg = load_config(config_path, tol_override, classical, no_table);

        if (info_cmd->parsed()) {
            print_info(cfg);
        } else if (solve_cmd->parsed()) {
            const auto art = stericpb::run_solve(cfg, &std::cout, cfg.mms_enabled);
            std::cout << "converged in " << art.newton.steps << " steps, wall "
                      << std::setprecision(4) << art.wall_seconds << " s\n";
            art.report.write(std::cout);
        } else if (mms_cmd->parsed()) {
            const auto counts = levels_to_interior_counts(levels, cfg.half_width);
            const auto study = stericpb::run_mms(cfg, counts, &std::cout);
            std::cout << "\n  h        rel_error    order   steps\n";
            for (size_t i = 0; i < study.levels.size(); ++i) {
                const auto& lvl = study.levels[i];
                std::cout << std::setw(6) << std::setprecision(4) << lvl.spacing << "   "
                          << std::setw(10) << std::setprecision(4) << lvl.rel_error << "   ";
                if (std::isnan(study.rows[i].order)) std::cout << "   --  ";
                else std::cout << std::setw(6) << std::setprecision(3) << study.rows[i].order;
                std::cout << "   " << lvl.steps << "\n";
            }
        } else if (table_cmd->parsed()) {
            stericpb::run_table_dump(cfg, table_path, &std::cout);
            std::cout << "wrote " << table_path << "\n";
        } else if (bounds_cmd->parsed()) {
            const auto s = stericpb::run_bounds(cfg);
            std::cout << std::setprecision(10);
            std::cout << "lower bound range: [" << s.lower_min << ", " << s.lower_max << "]\n";
            std::cout << "upper bound range: [" << s.upper_min << ", " << s.upper_max << "]\n";
            std::cout << "table interval:    [" << s.table_min << ", " << s.table_max << "]\n";
        }
    } catch (const stericpb::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stericpb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stericpb::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const stericpb::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

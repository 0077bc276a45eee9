#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stericpb/assembly.hpp"
#include "stericpb/closure.hpp"
#include "stericpb/config.hpp"
#include "stericpb/dielectric.hpp"
#include "stericpb/errors.hpp"
#include "stericpb/field_io.hpp"
#include "stericpb/grid.hpp"
#include "stericpb/linsolve.hpp"
#include "stericpb/newton.hpp"
#include "stericpb/postproc.hpp"
#include "stericpb/solute.hpp"
#include "stericpb/steric_table.hpp"
#include "stericpb/units.hpp"

namespace stericpb {

/// Geometry, fields and the assembled discrete system for one run.
struct PreparedProblem {
    UniformGrid3 grid;
    PhysicalConstants constants;
    BulkState bulk;
    SoluteModel solute;
    GridFunction levelset;
    DielectricModel dielectric;
    GridFunction singular;   // dimensionless psi_f on all nodes
    GridFunction dirichlet;  // boundary data on boundary nodes
    AssembledSystem system;
    std::optional<MmsProblem> mms;
};

namespace detail {

inline SoluteModel load_geometry_atoms(const RunConfig& cfg) {
    SoluteModel solute;
    if (cfg.source == GeometrySource::sphere) {
        solute.atoms.push_back(Atom{{0.0, 0.0, 0.0}, cfg.sphere_charge, cfg.sphere_radius});
    } else if (!cfg.pqr_path.empty()) {
        std::ifstream in(cfg.pqr_path);
        if (!in) throw IoError("cannot open PQR file " + cfg.pqr_path);
        solute = parse_pqr(in);
    }
    return solute;
}

inline std::unique_ptr<PotentialClosure> reference_closure(const RunConfig& cfg,
                                                           const BulkState& bulk) {
    if (bulk.count() == 0) return std::make_unique<ZeroClosure>();
    if (cfg.mode == ClosureMode::classical) return std::make_unique<ClassicalClosure>(bulk);
    return std::make_unique<StericDirectClosure>(bulk);
}

}  // namespace detail

/// Builds grid, geometry, dielectric model, singular potential, boundary data
/// and the assembled system. For manufactured runs the Dirichlet data comes
/// from the exact field and the matching continuous source is added to b.
inline PreparedProblem prepare_problem(const RunConfig& cfg, bool manufactured,
                                       int interior_override = -1) {
    PreparedProblem prob;
    prob.grid = build_grid(cfg.half_width,
                           interior_override > 0 ? interior_override : cfg.interior_points);
    prob.constants = cfg.constants();
    prob.bulk = cfg.bulk();
    prob.solute = detail::load_geometry_atoms(cfg);

    if (cfg.source == GeometrySource::levelset)
        prob.levelset = load_levelset(cfg.levelset_path, prob.grid);
    else
        prob.levelset = sphere_union_levelset(prob.solute.atoms, prob.grid);

    prob.dielectric = build_dielectric(prob.levelset, cfg.eps_solute, cfg.eps_solvent,
                                       cfg.interface_width);
    prob.singular = singular_potential_field(prob.grid, prob.solute.atoms, prob.constants,
                                             cfg.eps_solute);

    const std::vector<double>* extra = nullptr;
    if (manufactured) {
        if (cfg.source != GeometrySource::sphere)
            throw ConfigError("manufactured runs require the analytic sphere geometry");
        auto closure = detail::reference_closure(cfg, prob.bulk);
        prob.mms = mms_source(prob.grid, cfg.eps_solute, cfg.eps_solvent, cfg.interface_width,
                              cfg.sphere_radius, cfg.sphere_charge, prob.constants, *closure,
                              cfg.mms_amplitude);
        prob.dirichlet = GridFunction(prob.grid, GridFunction::Unit::potential);
        const int p = prob.grid.points_per_axis();
        for (int k = 0; k < p; ++k)
            for (int j = 0; j < p; ++j)
                for (int i = 0; i < p; ++i)
                    if (!prob.grid.is_interior(i, j, k))
                        prob.dirichlet.at(i, j, k) = prob.mms->exact.at(i, j, k);
        extra = &prob.mms->extra_source;
    } else {
        prob.dirichlet = yukawa_dirichlet_field(prob.grid, prob.solute.atoms, prob.constants,
                                                prob.bulk, cfg.eps_solute, cfg.eps_solvent);
    }
    prob.system = assemble_system(prob.grid, prob.dielectric, prob.singular, prob.dirichlet,
                                  prob.constants.source_scale(), extra);
    return prob;
}

/// Steric-table interval estimate: range of psi_f + u_{-/+} over solvent
/// points, widened by the configured padding.
inline std::pair<double, double> table_interval(const PreparedProblem& prob, const Bounds& bounds,
                                                const RunConfig& cfg) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const long long count = prob.grid.interior_count();
    for (long long m = 0; m < count; ++m) {
        if (!(prob.system.solvent_mask[static_cast<size_t>(m)] > 0.0)) continue;
        const double uf = prob.system.singular[static_cast<size_t>(m)];
        lo = std::min(lo, uf + bounds.lower[static_cast<size_t>(m)]);
        hi = std::max(hi, uf + bounds.upper[static_cast<size_t>(m)]);
    }
    if (!(lo < hi)) {  // no solvent points; keep a token interval
        lo = -1.0;
        hi = 1.0;
    }
    lo -= cfg.table_padding;
    hi += cfg.table_padding;
    if (cfg.table_min) lo = *cfg.table_min;
    if (cfg.table_max) hi = *cfg.table_max;
    return {lo, hi};
}

inline StericTable build_run_table(const PreparedProblem& prob, const Bounds& bounds,
                                   const RunConfig& cfg) {
    const auto [lo, hi] = table_interval(prob, bounds, cfg);
    const long long n = std::max<long long>(4, static_cast<long long>(std::ceil((hi - lo) / cfg.table_spacing)));
    return StericTable::build(prob.bulk, lo, hi, n);
}

struct SolveArtifacts {
    PreparedProblem problem;
    bool has_bounds = false;
    Bounds bounds;
    std::optional<StericTable> table;
    NewtonState newton;
    GridFunction psi_r;  // solution on all nodes (interior + Dirichlet layer)
    SolveReport report;
    double wall_seconds = 0.0;
};

namespace detail {

inline GridFunction full_solution(const PreparedProblem& prob, const std::vector<double>& psi) {
    GridFunction out = prob.dirichlet;
    out.unit = GridFunction::Unit::potential;
    const int n = prob.grid.interior_per_axis;
    for (int k = 1; k <= n; ++k)
        for (int j = 1; j <= n; ++j)
            for (int i = 1; i <= n; ++i)
                out.at(i, j, k) = psi[static_cast<size_t>(prob.grid.interior_index(i, j, k))];
    return out;
}

inline void write_exports(const RunConfig& cfg, const SolveArtifacts& art,
                          const PotentialClosure& closure) {
    std::vector<GridFunction> extra_fields;
    std::vector<std::pair<std::string, const GridFunction*>> fields;
    GridFunction psi_total = art.psi_r;
    for (size_t n = 0; n < psi_total.values.size(); ++n)
        psi_total.values[n] += art.problem.singular.values[n];
    std::vector<GridFunction> conc;

    std::stringstream names(cfg.vtk_fields);
    std::string name;
    while (std::getline(names, name, ',')) {
        if (name == "psi_r") fields.emplace_back("psi_r", &art.psi_r);
        else if (name == "psi") fields.emplace_back("psi", &psi_total);
        else if (name == "chi") fields.emplace_back("chi", &art.problem.dielectric.chi);
        else if (name == "eps") fields.emplace_back("eps", &art.problem.dielectric.eps);
        else if (name == "phi") fields.emplace_back("phi", &art.problem.levelset);
        else if (name == "conc") {
            conc = concentration_fields(art.psi_r, art.problem.singular,
                                        art.problem.dielectric.chi, closure);
            for (size_t l = 0; l < conc.size(); ++l)
                fields.emplace_back("conc_" + std::to_string(l + 1), &conc[l]);
        } else if (!name.empty()) {
            throw ConfigError("[output] unknown vtk field '" + name + "'");
        }
    }
    if (!cfg.vtk_path.empty() && !fields.empty()) export_vtk(cfg.vtk_path, fields);

    if (!cfg.csv_line.empty() && !cfg.csv_line_path.empty()) {
        std::stringstream ss(cfg.csv_line);
        std::array<double, 3> p0{}, p1{};
        char comma = ',';
        if (!(ss >> p0[0] >> comma >> p0[1] >> comma >> p0[2] >> comma >> p1[0] >> comma >>
              p1[1] >> comma >> p1[2]))
            throw ConfigError("[output] csv_line must be x0,y0,z0,x1,y1,z1");
        export_csv_line(cfg.csv_line_path, fields, p0, p1, cfg.csv_line_samples);
    }
    if (cfg.iso_level && !cfg.iso_path.empty())
        export_csv_iso_band(cfg.iso_path, art.problem.levelset, *cfg.iso_level, cfg.iso_band,
                            fields);
}

}  // namespace detail

/// Full pipeline: ingest -> dielectric -> bounds -> table -> Newton -> report.
inline SolveArtifacts run_solve(const RunConfig& cfg, std::ostream* log = nullptr,
                                bool manufactured = false) {
    SolveArtifacts art;
    art.problem = prepare_problem(cfg, manufactured);
    const PreparedProblem& prob = art.problem;

    std::unique_ptr<MultigridHierarchy> mg;
    if (cfg.linear.method == LinearMethod::mgpcg)
        mg = std::make_unique<MultigridHierarchy>(prob.system.op, cfg.linear.smoother_sweeps,
                                                  cfg.linear.coarse_sweeps);

    const auto t0 = std::chrono::steady_clock::now();

    const bool steric = cfg.mode == ClosureMode::steric && prob.bulk.count() > 0;
    if (steric) {
        art.bounds = compute_bounds(prob.system, prob.bulk, cfg.linear, mg.get());
        art.has_bounds = true;
    }

    std::unique_ptr<PotentialClosure> closure;
    if (prob.bulk.count() == 0) {
        closure = std::make_unique<ZeroClosure>();
    } else if (cfg.mode == ClosureMode::classical) {
        closure = std::make_unique<ClassicalClosure>(prob.bulk);
    } else if (cfg.use_table) {
        art.table = build_run_table(prob, art.bounds, cfg);
        closure = std::make_unique<TableClosure>(*art.table);
    } else {
        closure = std::make_unique<StericDirectClosure>(prob.bulk);
    }

    NewtonOptions opts;
    opts.tol = cfg.tol;
    opts.max_steps = cfg.max_steps;
    opts.linear = cfg.linear;
    // Truncation needs two-sided charge saturation; single-signed mixtures
    // and classical runs iterate without it.
    opts.use_truncation = steric && prob.bulk.has_mixed_valences();
    opts.record_energy = closure->has_charge_integral();
    if (log) {
        opts.logger = [log](const NewtonStepRecord& r) {
            (*log) << "step " << r.step << "  |F| " << r.residual_norm << "  omega " << r.omega
                   << "  halvings " << r.halvings << "  clamps+ " << r.clamped_upper
                   << "  clamps- " << r.clamped_lower << "  linear_iters " << r.linear_iterations
                   << "\n";
        };
    }
    art.newton = newton_solve(prob.system, *closure, art.has_bounds ? &art.bounds : nullptr, opts,
                              mg.get());
    art.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    art.psi_r = detail::full_solution(prob, art.newton.psi);
    art.psi_r.check_finite("solution");

    // Report.
    SolveReport& rep = art.report;
    rep.closure_mode = prob.bulk.count() == 0
                           ? "none"
                           : (cfg.mode == ClosureMode::classical
                                  ? "classical"
                                  : (cfg.use_table ? "steric(table)" : "steric(direct)"));
    rep.reaction_energy_kT = reaction_field_energy(prob.solute.atoms, art.psi_r);
    const auto surf = surface_nodes(prob.dielectric.chi, prob.levelset, cfg.interface_width);
    if (!surf.empty()) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (long long n : surf) {
            const double u = art.psi_r[n] + prob.singular[n];
            lo = std::min(lo, u);
            hi = std::max(hi, u);
        }
        rep.surface_potential_min = lo;
        rep.surface_potential_max = hi;
    }
    if (prob.bulk.count() > 0) {
        const auto conc = concentration_fields(art.psi_r, prob.singular, prob.dielectric.chi,
                                               *closure);
        rep.max_concentration_molar.resize(conc.size(), 0.0);
        for (size_t l = 0; l < conc.size(); ++l)
            for (double v : conc[l].values)
                rep.max_concentration_molar[l] = std::max(rep.max_concentration_molar[l], v);
    }
    rep.newton_steps = art.newton.steps;
    rep.final_residual = art.newton.residual_norm;
    rep.total_linear_iterations = art.newton.total_linear_iterations;
    for (const auto& r : art.newton.history) {
        rep.clamped_upper += r.clamped_upper;
        rep.clamped_lower += r.clamped_lower;
    }
    rep.saturation_count = closure->saturation_count();

    detail::write_exports(cfg, art, *closure);
    if (!cfg.report_path.empty()) {
        std::ofstream out(cfg.report_path);
        if (!out) throw IoError("cannot write report " + cfg.report_path);
        rep.write(out);
    }
    return art;
}

struct MmsLevelResult {
    int interior_points = 0;
    double spacing = 0.0;
    double rel_error = 0.0;
    int steps = 0;
    NewtonState newton;
};

struct MmsStudy {
    std::vector<MmsLevelResult> levels;
    std::vector<ConvergenceRow> rows;
    std::optional<StericTable> table;  // shared across levels
};

/// Convergence study against the manufactured solution; one steric table,
/// built from the first level's bounds, is reused on every level.
inline MmsStudy run_mms(const RunConfig& cfg, const std::vector<int>& interior_points_list,
                        std::ostream* log = nullptr) {
    if (interior_points_list.empty()) throw ConfigError("mms: empty level list");
    MmsStudy study;
    std::vector<std::pair<double, double>> h_err;
    std::unique_ptr<PotentialClosure> closure;

    for (int n_h : interior_points_list) {
        PreparedProblem prob = prepare_problem(cfg, true, n_h);
        std::unique_ptr<MultigridHierarchy> mg;
        if (cfg.linear.method == LinearMethod::mgpcg)
            mg = std::make_unique<MultigridHierarchy>(prob.system.op, cfg.linear.smoother_sweeps,
                                                      cfg.linear.coarse_sweeps);
        const bool steric = cfg.mode == ClosureMode::steric && prob.bulk.count() > 0;
        Bounds bounds;
        if (steric) bounds = compute_bounds(prob.system, prob.bulk, cfg.linear, mg.get());

        if (!closure) {
            if (prob.bulk.count() == 0) closure = std::make_unique<ZeroClosure>();
            else if (cfg.mode == ClosureMode::classical)
                closure = std::make_unique<ClassicalClosure>(prob.bulk);
            else if (cfg.use_table) {
                study.table = build_run_table(prob, bounds, cfg);
                closure = std::make_unique<TableClosure>(*study.table);
            } else {
                closure = std::make_unique<StericDirectClosure>(prob.bulk);
            }
        }

        NewtonOptions opts;
        opts.tol = cfg.tol;
        opts.max_steps = cfg.max_steps;
        opts.linear = cfg.linear;
        opts.use_truncation = steric && prob.bulk.has_mixed_valences();
        opts.record_energy = closure->has_charge_integral();

        MmsLevelResult level;
        level.interior_points = n_h;
        level.spacing = prob.grid.spacing;
        level.newton = newton_solve(prob.system, *closure, steric ? &bounds : nullptr, opts,
                                    mg.get());
        level.steps = level.newton.steps;

        double err = 0.0, ref = 0.0;
        const int n = prob.grid.interior_per_axis;
        for (int k = 1; k <= n; ++k)
            for (int j = 1; j <= n; ++j)
                for (int i = 1; i <= n; ++i) {
                    const long long m = prob.grid.interior_index(i, j, k);
                    const double exact = prob.mms->exact.at(i, j, k);
                    err = std::max(err,
                                   std::abs(level.newton.psi[static_cast<size_t>(m)] - exact));
                    ref = std::max(ref, std::abs(exact));
                }
        level.rel_error = err / ref;
        h_err.emplace_back(level.spacing, level.rel_error);
        if (log)
            (*log) << "h " << level.spacing << "  rel_error " << level.rel_error << "  steps "
                   << level.steps << "\n";
        study.levels.push_back(std::move(level));
    }
    study.rows = convergence_report(h_err);
    return study;
}

struct BoundsSummary {
    double lower_min = 0.0, lower_max = 0.0;
    double upper_min = 0.0, upper_max = 0.0;
    double table_min = 0.0, table_max = 0.0;
};

inline BoundsSummary run_bounds(const RunConfig& cfg) {
    PreparedProblem prob = prepare_problem(cfg, cfg.mms_enabled);
    std::unique_ptr<MultigridHierarchy> mg;
    if (cfg.linear.method == LinearMethod::mgpcg)
        mg = std::make_unique<MultigridHierarchy>(prob.system.op, cfg.linear.smoother_sweeps,
                                                  cfg.linear.coarse_sweeps);
    const Bounds bounds = compute_bounds(prob.system, prob.bulk, cfg.linear, mg.get());
    BoundsSummary s;
    s.lower_min = *std::min_element(bounds.lower.begin(), bounds.lower.end());
    s.lower_max = *std::max_element(bounds.lower.begin(), bounds.lower.end());
    s.upper_min = *std::min_element(bounds.upper.begin(), bounds.upper.end());
    s.upper_max = *std::max_element(bounds.upper.begin(), bounds.upper.end());
    const auto [lo, hi] = table_interval(prob, bounds, cfg);
    s.table_min = lo;
    s.table_max = hi;
    return s;
}

/// Builds the run's steric table and writes it to a file.
inline void run_table_dump(const RunConfig& cfg, const std::string& path,
                           std::ostream* log = nullptr) {
    if (cfg.mode != ClosureMode::steric || cfg.species.empty())
        throw ConfigError("table dump requires steric mode with species");
    PreparedProblem prob = prepare_problem(cfg, cfg.mms_enabled);
    std::unique_ptr<MultigridHierarchy> mg;
    if (cfg.linear.method == LinearMethod::mgpcg)
        mg = std::make_unique<MultigridHierarchy>(prob.system.op, cfg.linear.smoother_sweeps,
                                                  cfg.linear.coarse_sweeps);
    const Bounds bounds = compute_bounds(prob.system, prob.bulk, cfg.linear, mg.get());
    const StericTable table = build_run_table(prob, bounds, cfg);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write table file " + path);
    table.dump(out);
    if (log)
        (*log) << "table range [" << table.psi_min() << ", " << table.psi_max() << "] nodes "
               << (table.intervals() + 1) << "  slope stencil deviation "
               << table.slope_stencil_deviation() << "\n";
}

}  // namespace stericpb

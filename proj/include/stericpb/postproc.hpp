#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "stericpb/closure.hpp"
#include "stericpb/dielectric.hpp"
#include "stericpb/errors.hpp"
#include "stericpb/grid.hpp"
#include "stericpb/solute.hpp"
#include "stericpb/units.hpp"

namespace stericpb {

/// Trilinear interpolation at an arbitrary point inside the box.
inline double trilinear_sample(const GridFunction& f, const std::array<double, 3>& point) {
    const UniformGrid3& g = f.grid;
    double w[3];
    int base[3];
    for (int a = 0; a < 3; ++a) {
        const double s = (point[a] + g.half_width) / g.spacing;
        if (s < 0.0 || s > g.points_per_axis() - 1)
            throw ConfigError("sample point outside the grid box");
        int i = static_cast<int>(std::floor(s));
        i = std::min(i, g.points_per_axis() - 2);
        base[a] = i;
        w[a] = s - i;
    }
    double v = 0.0;
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
                const double weight = (di ? w[0] : 1.0 - w[0]) * (dj ? w[1] : 1.0 - w[1]) *
                                      (dk ? w[2] : 1.0 - w[2]);
                v += weight * f.at(base[0] + di, base[1] + dj, base[2] + dk);
            }
    return v;
}

/// 1/2 sum_i Q_i psi_r(x_i) in kT (charges in e, psi_r dimensionless).
inline double reaction_field_energy(const std::vector<Atom>& atoms, const GridFunction& psi_r) {
    double e = 0.0;
    for (const auto& a : atoms) e += a.charge * trilinear_sample(psi_r, a.position);
    return 0.5 * e;
}

/// Species concentration fields in mol/L: c_l evaluated wherever chi > 0,
/// zero elsewhere.
inline std::vector<GridFunction> concentration_fields(const GridFunction& psi_r,
                                                      const GridFunction& singular,
                                                      const GridFunction& chi,
                                                      const PotentialClosure& closure) {
    const int m = closure.species_count();
    std::vector<GridFunction> fields(static_cast<size_t>(m),
                                     GridFunction(psi_r.grid, GridFunction::Unit::concentration));
    std::vector<double> c(static_cast<size_t>(m));
    for (long long node = 0; node < psi_r.grid.node_count(); ++node) {
        if (!(chi[node] > 0.0)) continue;
        closure.concentrations(singular[node] + psi_r[node], c.data());
        for (int l = 0; l < m; ++l) fields[static_cast<size_t>(l)][node] = density_to_molar(c[static_cast<size_t>(l)]);
    }
    return fields;
}

/// Legacy VTK structured-points writer; one named double scalar per field.
inline void export_vtk(const std::string& path,
                       const std::vector<std::pair<std::string, const GridFunction*>>& fields) {
    if (fields.empty()) throw std::invalid_argument("export_vtk: no fields");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write VTK file " + path);
    const UniformGrid3& g = fields.front().second->grid;
    const int p = g.points_per_axis();
    out << "# vtk DataFile Version 3.0\n";
    out << "stericpb fields\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << p << " " << p << " " << p << "\n";
    out << std::setprecision(17);
    out << "ORIGIN " << -g.half_width << " " << -g.half_width << " " << -g.half_width << "\n";
    out << "SPACING " << g.spacing << " " << g.spacing << " " << g.spacing << "\n";
    out << "POINT_DATA " << g.node_count() << "\n";
    for (const auto& [name, field] : fields) {
        out << "SCALARS " << name << " double 1\n";
        out << "LOOKUP_TABLE default\n";
        for (size_t n = 0; n < field->values.size(); ++n)
            out << field->values[n] << ((n + 1) % 6 == 0 ? '\n' : ' ');
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

/// Samples fields along the segment p0 -> p1 at n evenly spaced points.
inline void export_csv_line(const std::string& path,
                            const std::vector<std::pair<std::string, const GridFunction*>>& fields,
                            const std::array<double, 3>& p0, const std::array<double, 3>& p1,
                            int samples) {
    if (samples < 2) throw std::invalid_argument("export_csv_line: need at least 2 samples");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write CSV file " + path);
    out << "x,y,z";
    for (const auto& [name, field] : fields) out << "," << name;
    out << "\n" << std::setprecision(12);
    for (int s = 0; s < samples; ++s) {
        const double t = static_cast<double>(s) / (samples - 1);
        std::array<double, 3> x{p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]),
                                p0[2] + t * (p1[2] - p0[2])};
        out << x[0] << "," << x[1] << "," << x[2];
        for (const auto& [name, field] : fields) out << "," << trilinear_sample(*field, x);
        out << "\n";
    }
}

/// Grid nodes whose level-set value lies within +-band of the requested
/// iso-level; the stratification diagnostic samples fields on such shells.
inline std::vector<long long> iso_band_nodes(const GridFunction& levelset, double level,
                                             double band) {
    std::vector<long long> nodes;
    for (long long n = 0; n < levelset.grid.node_count(); ++n)
        if (std::abs(levelset[n] - level) <= band) nodes.push_back(n);
    return nodes;
}

inline double iso_band_mean(const GridFunction& field, const std::vector<long long>& nodes) {
    if (nodes.empty()) throw std::invalid_argument("iso_band_mean: empty node set");
    double s = 0.0;
    for (long long n : nodes) s += field[n];
    return s / static_cast<double>(nodes.size());
}

/// Writes one row per node in the band: coordinates, level-set value, fields.
inline void export_csv_iso_band(const std::string& path, const GridFunction& levelset,
                                double level, double band,
                                const std::vector<std::pair<std::string, const GridFunction*>>& fields) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write CSV file " + path);
    out << "x,y,z,phi";
    for (const auto& [name, f] : fields) out << "," << name;
    out << "\n" << std::setprecision(12);
    const UniformGrid3& g = levelset.grid;
    const int p = g.points_per_axis();
    for (long long n : iso_band_nodes(levelset, level, band)) {
        const int i = static_cast<int>(n % p);
        const int j = static_cast<int>((n / p) % p);
        const int k = static_cast<int>(n / (static_cast<long long>(p) * p));
        out << g.coord(i) << "," << g.coord(j) << "," << g.coord(k) << "," << levelset[n];
        for (const auto& [name, f] : fields) out << "," << (*f)[n];
        out << "\n";
    }
}

/// Table-3-style surface statistics: nodes with chi >= 0.5 lying within tau
/// of the zero level set.
inline std::vector<long long> surface_nodes(const GridFunction& chi, const GridFunction& levelset,
                                            double tau) {
    std::vector<long long> nodes;
    for (long long n = 0; n < chi.grid.node_count(); ++n)
        if (chi[n] >= 0.5 && std::abs(levelset[n]) <= tau) nodes.push_back(n);
    return nodes;
}

struct ConvergenceRow {
    double spacing = 0.0;
    double error = 0.0;
    double order = std::numeric_limits<double>::quiet_NaN();  // NaN on the first row / zero error
};

/// order between consecutive levels = log(e1/e2) / log(h1/h2).
inline std::vector<ConvergenceRow> convergence_report(
    const std::vector<std::pair<double, double>>& h_and_error) {
    std::vector<ConvergenceRow> rows;
    for (size_t i = 0; i < h_and_error.size(); ++i) {
        ConvergenceRow row;
        row.spacing = h_and_error[i].first;
        row.error = h_and_error[i].second;
        if (i > 0) {
            const double e1 = h_and_error[i - 1].second, e2 = row.error;
            const double h1 = h_and_error[i - 1].first, h2 = row.spacing;
            if (e1 > 0.0 && e2 > 0.0) row.order = std::log(e1 / e2) / std::log(h1 / h2);
        }
        rows.push_back(row);
    }
    return rows;
}

/// Summary of one solve; written as "key: value" lines.
struct SolveReport {
    double reaction_energy_kT = 0.0;
    double surface_potential_min = 0.0;
    double surface_potential_max = 0.0;
    std::vector<double> max_concentration_molar;  // per species, over chi > 0
    int newton_steps = 0;
    double final_residual = 0.0;
    long long total_linear_iterations = 0;
    long long clamped_upper = 0, clamped_lower = 0;
    long long saturation_count = 0;
    std::string closure_mode;

    void write(std::ostream& out) const {
        out << std::setprecision(10);
        out << "closure_mode: " << closure_mode << "\n";
        out << "reaction_field_energy_kT: " << reaction_energy_kT << "\n";
        out << "surface_potential_min_kT_e: " << surface_potential_min << "\n";
        out << "surface_potential_max_kT_e: " << surface_potential_max << "\n";
        for (size_t l = 0; l < max_concentration_molar.size(); ++l)
            out << "max_concentration_M_species_" << (l + 1) << ": "
                << max_concentration_molar[l] << "\n";
        out << "newton_steps: " << newton_steps << "\n";
        out << "final_residual_max_norm: " << final_residual << "\n";
        out << "linear_iterations_total: " << total_linear_iterations << "\n";
        out << "truncation_clamps_upper: " << clamped_upper << "\n";
        out << "truncation_clamps_lower: " << clamped_lower << "\n";
        out << "closure_saturation_count: " << saturation_count << "\n";
    }
};

}  // namespace stericpb

#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stericpb/errors.hpp"
#include "stericpb/grid.hpp"

namespace stericpb {

/// Plain text field layout: one header line "stericpb-field 1", one line
/// "N_h <n> L <L> h <h>", then (N_h+2)^3 values in x-fastest order.
inline void write_field_text(std::ostream& out, const GridFunction& f) {
    out << "stericpb-field 1\n";
    out << std::setprecision(17) << "N_h " << f.grid.interior_per_axis << " L "
        << f.grid.half_width << " h " << f.grid.spacing << "\n";
    for (size_t n = 0; n < f.values.size(); ++n)
        out << f.values[n] << ((n + 1) % 8 == 0 ? '\n' : ' ');
    out << "\n";
}

namespace detail {

inline void check_grid_match(const UniformGrid3& grid, int n_h, double half_width,
                             double spacing) {
    if (n_h != grid.interior_per_axis)
        throw ConfigError("field dimension mismatch: file has N_h=" + std::to_string(n_h) +
                          ", run grid has N_h=" + std::to_string(grid.interior_per_axis));
    const double tol = 1e-9 * (1.0 + std::abs(grid.half_width));
    if (std::abs(half_width - grid.half_width) > tol ||
        std::abs(spacing - grid.spacing) > 1e-9 * (1.0 + grid.spacing))
        throw ConfigError("field extent mismatch: file L/h do not match the run grid");
}

inline void read_values(std::istream& in, GridFunction& f) {
    for (size_t n = 0; n < f.values.size(); ++n) {
        if (!(in >> f.values[n]))
            throw ConfigError("field file truncated at value " + std::to_string(n));
        if (!std::isfinite(f.values[n]))
            throw ConfigError("field file has non-finite entry at index " + std::to_string(n));
    }
}

/// Legacy VTK structured-points reader for files written by write_field_vtk.
inline GridFunction read_field_vtk(std::istream& in, const UniformGrid3& grid,
                                   const std::string& wanted_name) {
    std::string line;
    int dims[3] = {0, 0, 0};
    double origin[3] = {0, 0, 0}, spacing[3] = {0, 0, 0};
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "DIMENSIONS") {
            ls >> dims[0] >> dims[1] >> dims[2];
        } else if (key == "ORIGIN") {
            ls >> origin[0] >> origin[1] >> origin[2];
        } else if (key == "SPACING") {
            ls >> spacing[0] >> spacing[1] >> spacing[2];
        } else if (key == "SCALARS") {
            std::string name;
            ls >> name;
            if (dims[0] != dims[1] || dims[0] != dims[2])
                throw ConfigError("VTK field file is not cubic");
            check_grid_match(grid, dims[0] - 2, -origin[0], spacing[0]);
            // skip LOOKUP_TABLE line
            std::getline(in, line);
            GridFunction f(grid, GridFunction::Unit::none);
            read_values(in, f);
            if (wanted_name.empty() || name == wanted_name) return f;
        }
    }
    throw ConfigError("VTK field file has no scalar field" +
                      (wanted_name.empty() ? std::string() : " named " + wanted_name));
}

}  // namespace detail

/// Reads a scalar field in either the plain text layout or the legacy VTK
/// structured-points layout; the sampled grid must match the run grid.
inline GridFunction read_field(std::istream& in, const UniformGrid3& grid,
                               const std::string& vtk_field_name = "") {
    std::string first;
    std::getline(in, first);
    if (first.rfind("# vtk", 0) == 0) return detail::read_field_vtk(in, grid, vtk_field_name);
    if (first.rfind("stericpb-field", 0) != 0)
        throw ConfigError("unrecognized field file header: " + first);
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string kn, kl, kh;
    int n_h = 0;
    double half_width = 0.0, spacing = 0.0;
    if (!(hs >> kn >> n_h >> kl >> half_width >> kh >> spacing) || kn != "N_h" || kl != "L" ||
        kh != "h")
        throw ConfigError("malformed field header: " + header);
    detail::check_grid_match(grid, n_h, half_width, spacing);
    GridFunction f(grid, GridFunction::Unit::none);
    detail::read_values(in, f);
    return f;
}

inline GridFunction read_field_file(const std::string& path, const UniformGrid3& grid,
                                    const std::string& vtk_field_name = "") {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open field file " + path);
    return read_field(in, grid, vtk_field_name);
}

}  // namespace stericpb

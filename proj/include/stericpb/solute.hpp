#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "stericpb/errors.hpp"
#include "stericpb/grid.hpp"
#include "stericpb/parallel.hpp"
#include "stericpb/species.hpp"
#include "stericpb/units.hpp"

namespace stericpb {

struct Atom {
    std::array<double, 3> position{};  // Angstrom
    double charge = 0.0;               // units of e
    double radius = 0.0;               // Angstrom
};

struct SoluteModel {
    std::vector<Atom> atoms;
    double total_charge() const {
        double q = 0.0;
        for (const auto& a : atoms) q += a.charge;
        return q;
    }
};

namespace detail {
inline double parse_strict_double(const std::string& tok, const char* what, long line) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || !std::isfinite(v))
        throw ParseError(std::string("malformed ") + what + " field '" + tok + "'", line);
    return v;
}
}  // namespace detail

/// Reads ATOM/HETATM records; the trailing five whitespace-delimited fields
/// are x y z charge radius. Every other line is ignored. An empty atom list
/// is permitted (pure-test geometries).
inline SoluteModel parse_pqr(std::istream& in) {
    SoluteModel model;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.empty()) continue;
        if (tokens[0] != "ATOM" && tokens[0] != "HETATM") continue;
        if (tokens.size() < 6)
            throw ParseError("record has fewer than five numeric fields", line_number);
        const size_t n = tokens.size();
        Atom a;
        a.position[0] = detail::parse_strict_double(tokens[n - 5], "x", line_number);
        a.position[1] = detail::parse_strict_double(tokens[n - 4], "y", line_number);
        a.position[2] = detail::parse_strict_double(tokens[n - 3], "z", line_number);
        a.charge = detail::parse_strict_double(tokens[n - 2], "charge", line_number);
        a.radius = detail::parse_strict_double(tokens[n - 1], "radius", line_number);
        if (a.radius < 0.0) throw ParseError("negative radius", line_number);
        model.atoms.push_back(a);
    }
    return model;
}

/// Distances below this are clamped in the singular potential; affected points
/// sit deep inside the solute where the flux coefficient vanishes.
inline constexpr double kMinAtomDistance = 1e-6;

/// Dimensionless vacuum-solute Coulomb potential beta*e*psi_f at a point.
inline double eval_psi_f(const std::vector<Atom>& atoms, const PhysicalConstants& constants,
                         double eps_solute, const std::array<double, 3>& point) {
    const double lambda = constants.coupling_length();
    double u = 0.0;
    for (const auto& a : atoms) {
        const double dx = point[0] - a.position[0];
        const double dy = point[1] - a.position[1];
        const double dz = point[2] - a.position[2];
        const double r = std::max(kMinAtomDistance, std::sqrt(dx * dx + dy * dy + dz * dz));
        u += lambda * a.charge / (eps_solute * r);
    }
    return u;
}

/// Dimensionless screened-Coulomb boundary potential beta*e*psi_inf with the
/// classical Debye constant from the bulk mixture.
inline double eval_yukawa_boundary(const std::vector<Atom>& atoms,
                                   const PhysicalConstants& constants, const BulkState& bulk,
                                   double eps_solvent, const std::array<double, 3>& point) {
    const double lambda = constants.coupling_length();
    const double kappa = bulk.debye_kappa(constants, eps_solvent);
    double u = 0.0;
    for (const auto& a : atoms) {
        const double dx = point[0] - a.position[0];
        const double dy = point[1] - a.position[1];
        const double dz = point[2] - a.position[2];
        const double r = std::max(kMinAtomDistance, std::sqrt(dx * dx + dy * dy + dz * dz));
        u += lambda * a.charge * std::exp(-kappa * r) / (eps_solvent * r);
    }
    return u;
}

/// beta*e*psi_f sampled on every node.
inline GridFunction singular_potential_field(const UniformGrid3& grid,
                                             const std::vector<Atom>& atoms,
                                             const PhysicalConstants& constants,
                                             double eps_solute) {
    GridFunction f(grid, GridFunction::Unit::potential);
    const int p = grid.points_per_axis();
    parallel_for(grid.node_count(), [&](long long node) {
        const int i = static_cast<int>(node % p);
        const int j = static_cast<int>((node / p) % p);
        const int k = static_cast<int>(node / (static_cast<long long>(p) * p));
        f[node] = eval_psi_f(atoms, constants, eps_solute,
                             {grid.coord(i), grid.coord(j), grid.coord(k)});
    });
    return f;
}

/// Dirichlet data for the reaction potential: psi_inf - psi_f on boundary
/// nodes, zero on interior nodes.
inline GridFunction yukawa_dirichlet_field(const UniformGrid3& grid,
                                           const std::vector<Atom>& atoms,
                                           const PhysicalConstants& constants,
                                           const BulkState& bulk, double eps_solute,
                                           double eps_solvent) {
    GridFunction g(grid, GridFunction::Unit::potential);
    const int p = grid.points_per_axis();
    for (int k = 0; k < p; ++k)
        for (int j = 0; j < p; ++j)
            for (int i = 0; i < p; ++i) {
                if (grid.is_interior(i, j, k)) continue;
                const std::array<double, 3> x{grid.coord(i), grid.coord(j), grid.coord(k)};
                g.at(i, j, k) = eval_yukawa_boundary(atoms, constants, bulk, eps_solvent, x) -
                                eval_psi_f(atoms, constants, eps_solute, x);
            }
    return g;
}

}  // namespace stericpb

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "stericpb/errors.hpp"
#include "stericpb/field_io.hpp"
#include "stericpb/grid.hpp"
#include "stericpb/parallel.hpp"
#include "stericpb/solute.hpp"

namespace stericpb {

/// Smooth ramp replacing the sharp solvent indicator: 0 for s < -tau, 1 for
/// s > tau, and 1/2 + s/(2 tau) + sin(pi s / tau)/(2 pi) in between. C^1 at
/// the matching points.
inline double smeared_heaviside(double s, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("smeared_heaviside: tau must be positive");
    if (s > tau) return 1.0;
    if (s < -tau) return 0.0;
    return 0.5 + 0.5 * s / tau +
           std::sin(std::numbers::pi * s / tau) / (2.0 * std::numbers::pi);
}

inline double smeared_heaviside_deriv(double s, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("smeared_heaviside_deriv: tau must be positive");
    if (s > tau || s < -tau) return 0.0;
    return (1.0 + std::cos(std::numbers::pi * s / tau)) / (2.0 * tau);
}

/// Face dielectric coefficient 2ab/(a+b).
inline double harmonic_average(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("harmonic_average: inputs must be positive");
    return 2.0 * a * b / (a + b);
}

/// Signed distance to a union of balls: phi(x) = min_i(|x - x_i| - r_i),
/// negative inside the solute. An empty atom list yields an all-solvent field.
inline GridFunction sphere_union_levelset(const std::vector<Atom>& atoms,
                                          const UniformGrid3& grid) {
    GridFunction phi(grid, GridFunction::Unit::none);
    const double far = 4.0 * grid.half_width + 1.0;
    const int p = grid.points_per_axis();
    parallel_for(grid.node_count(), [&](long long node) {
        const int i = static_cast<int>(node % p);
        const int j = static_cast<int>((node / p) % p);
        const int k = static_cast<int>(node / (static_cast<long long>(p) * p));
        const double x = grid.coord(i), y = grid.coord(j), z = grid.coord(k);
        double d = far;
        for (const auto& a : atoms) {
            const double dx = x - a.position[0], dy = y - a.position[1], dz = z - a.position[2];
            d = std::min(d, std::sqrt(dx * dx + dy * dy + dz * dz) - a.radius);
        }
        phi[node] = d;
    });
    return phi;
}

/// Reads an externally generated level-set field sampled on the run grid.
inline GridFunction load_levelset(const std::string& path, const UniformGrid3& grid) {
    GridFunction f = read_field_file(path, grid, "");
    f.unit = GridFunction::Unit::none;
    return f;
}

/// Solvent mask, smoothed dielectric and harmonic-average face coefficients
/// derived from a level-set field.
struct DielectricModel {
    double eps_solute = 1.0;
    double eps_solvent = 78.0;
    double transition_width = 1.5;  // tau, Angstrom

    GridFunction chi;  // smeared solvent indicator in [0,1]
    GridFunction eps;  // (1-chi) eps_m + chi eps_w

    /// Harmonic averages on the +x/+y/+z faces of each node; entry at node
    /// (i,j,k) is the face toward (i+1,j,k) etc. Top-index entries are unused.
    std::vector<double> face_x, face_y, face_z;

    double face(int axis, long long node) const {
        return axis == 0 ? face_x[static_cast<size_t>(node)]
                         : (axis == 1 ? face_y[static_cast<size_t>(node)]
                                      : face_z[static_cast<size_t>(node)]);
    }
};

inline DielectricModel build_dielectric(const GridFunction& levelset, double eps_solute,
                                        double eps_solvent, double tau) {
    if (!(eps_solute > 0.0) || !(eps_solvent > 0.0))
        throw std::invalid_argument("build_dielectric: permittivities must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("build_dielectric: tau must be positive");
    const UniformGrid3& grid = levelset.grid;
    DielectricModel model;
    model.eps_solute = eps_solute;
    model.eps_solvent = eps_solvent;
    model.transition_width = tau;
    model.chi = GridFunction(grid, GridFunction::Unit::none);
    model.eps = GridFunction(grid, GridFunction::Unit::none);
    const long long count = grid.node_count();
    parallel_for(count, [&](long long node) {
        const double h = smeared_heaviside(levelset[node], tau);
        model.chi[node] = h;
        model.eps[node] = (1.0 - h) * eps_solute + h * eps_solvent;
    });
    const int p = grid.points_per_axis();
    const long long sx = 1, sy = p, sz = static_cast<long long>(p) * p;
    model.face_x.assign(static_cast<size_t>(count), 0.0);
    model.face_y.assign(static_cast<size_t>(count), 0.0);
    model.face_z.assign(static_cast<size_t>(count), 0.0);
    parallel_for(count, [&](long long node) {
        const int i = static_cast<int>(node % p);
        const int j = static_cast<int>((node / p) % p);
        const int k = static_cast<int>(node / sz);
        const double e = model.eps[node];
        if (i + 1 < p) model.face_x[static_cast<size_t>(node)] = harmonic_average(e, model.eps[node + sx]);
        if (j + 1 < p) model.face_y[static_cast<size_t>(node)] = harmonic_average(e, model.eps[node + sy]);
        if (k + 1 < p) model.face_z[static_cast<size_t>(node)] = harmonic_average(e, model.eps[node + sz]);
    });
    return model;
}

}  // namespace stericpb

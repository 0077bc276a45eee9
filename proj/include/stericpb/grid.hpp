#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stericpb/errors.hpp"

namespace stericpb {

/// Uniform cubic mesh on [-L, L]^3 with N_h interior points per axis and
/// spacing h = 2L/(N_h+1). Point coordinates are x_i = -L + i*h for
/// i = 0 .. N_h+1; indices 0 and N_h+1 form the boundary layer.
struct UniformGrid3 {
    double half_width = 0.0;   // L, Angstrom
    int interior_per_axis = 0; // N_h
    double spacing = 0.0;      // h, Angstrom

    int points_per_axis() const { return interior_per_axis + 2; }
    long long node_count() const {
        const long long p = points_per_axis();
        return p * p * p;
    }
    long long interior_count() const {
        const long long n = interior_per_axis;
        return n * n * n;
    }

    double coord(int i) const { return -half_width + i * spacing; }

    bool is_interior(int i, int j, int k) const {
        return i >= 1 && i <= interior_per_axis && j >= 1 && j <= interior_per_axis &&
               k >= 1 && k <= interior_per_axis;
    }
    bool is_valid_node(int i, int j, int k) const {
        const int p = points_per_axis();
        return i >= 0 && i < p && j >= 0 && j < p && k >= 0 && k < p;
    }

    /// Flat index over all nodes, x-fastest.
    long long node_index(int i, int j, int k) const {
        const long long p = points_per_axis();
        return i + p * (j + p * static_cast<long long>(k));
    }

    /// Flat index over interior unknowns, x-fastest; (1,1,1) -> 0.
    /// Neighbor offsets are +-1, +-N_h, +-N_h^2.
    long long interior_index(int i, int j, int k) const {
        if (!is_interior(i, j, k))
            throw std::invalid_argument("interior_index: coordinate out of range (" +
                                        std::to_string(i) + "," + std::to_string(j) + "," +
                                        std::to_string(k) + ")");
        const long long n = interior_per_axis;
        return (i - 1) + n * ((j - 1) + n * static_cast<long long>(k - 1));
    }

    /// Inverse of interior_index.
    void interior_triple(long long m, int& i, int& j, int& k) const {
        const long long n = interior_per_axis;
        if (m < 0 || m >= interior_count())
            throw std::invalid_argument("interior_triple: flat index out of range");
        i = static_cast<int>(m % n) + 1;
        j = static_cast<int>((m / n) % n) + 1;
        k = static_cast<int>(m / (n * n)) + 1;
    }
};

inline UniformGrid3 build_grid(double half_width, int interior_per_axis) {
    if (!(half_width > 0.0)) throw std::invalid_argument("build_grid: half width must be positive");
    if (interior_per_axis < 1) throw std::invalid_argument("build_grid: need at least one interior point");
    UniformGrid3 g;
    g.half_width = half_width;
    g.interior_per_axis = interior_per_axis;
    g.spacing = 2.0 * half_width / (interior_per_axis + 1);
    return g;
}

/// Scalar field sampled on every node of a grid, boundary layer included.
struct GridFunction {
    enum class Unit { potential, concentration, none };

    UniformGrid3 grid;
    Unit unit = Unit::none;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(const UniformGrid3& g, Unit u, double fill = 0.0)
        : grid(g), unit(u), values(static_cast<size_t>(g.node_count()), fill) {}

    double& at(int i, int j, int k) { return values[static_cast<size_t>(grid.node_index(i, j, k))]; }
    double at(int i, int j, int k) const {
        return values[static_cast<size_t>(grid.node_index(i, j, k))];
    }
    double& operator[](long long node) { return values[static_cast<size_t>(node)]; }
    double operator[](long long node) const { return values[static_cast<size_t>(node)]; }

    /// Throws NumericalError naming the first non-finite entry, if any.
    void check_finite(const std::string& label) const {
        for (size_t n = 0; n < values.size(); ++n)
            if (!std::isfinite(values[n]))
                throw NumericalError(label + ": non-finite value at node " + std::to_string(n));
    }
};

}  // namespace stericpb

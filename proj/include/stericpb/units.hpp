#pragma once

#include <cmath>
#include <numbers>

#include "stericpb/errors.hpp"

namespace stericpb {

/// Unit conventions used throughout:
///   lengths in Angstrom, potentials dimensionless (beta*e*psi, numerically
///   equal to kT/e), concentrations in ions/Angstrom^3, energies in kT.
struct PhysicalConstants {
    double temperature = 298.15;  // K

    // CODATA 2018
    static constexpr double elementary_charge = 1.602176634e-19;     // C
    static constexpr double boltzmann = 1.380649e-23;                // J/K
    static constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
    static constexpr double avogadro = 6.02214076e23;                // 1/mol

    /// mol/L -> ions/Angstrom^3
    static constexpr double per_molar = 6.02214076e-4;

    /// beta e^2 / (4 pi eps0) in Angstrom. The dimensionless potential of a
    /// unit point charge in vacuum at distance r is coupling_length()/r.
    double coupling_length() const {
        if (temperature <= 0.0) throw ConfigError("temperature must be positive");
        const double e = elementary_charge;
        return e * e * 1e10 /
               (4.0 * std::numbers::pi * vacuum_permittivity * boltzmann * temperature);
    }

    /// beta e^2 / eps0 = 4 pi * coupling_length(), in Angstrom. Multiplies a
    /// net charge density (valence-weighted ions/A^3) in the scaled Poisson
    /// equation, yielding residuals in 1/Angstrom^2.
    double source_scale() const { return 4.0 * std::numbers::pi * coupling_length(); }
};

inline double molar_to_density(double molar) { return molar * PhysicalConstants::per_molar; }
inline double density_to_molar(double density) { return density / PhysicalConstants::per_molar; }

}  // namespace stericpb

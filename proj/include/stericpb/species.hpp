#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stericpb/errors.hpp"
#include "stericpb/units.hpp"

namespace stericpb {

/// One mobile ion species.
struct IonSpecies {
    int valence = 0;          // z, signed
    double volume = 0.0;      // v, Angstrom^3
    double bulk_density = 0.0; // c_inf, ions/Angstrom^3
};

/// Ionic mixture far from the solute. gamma_inf = 1 - sum(v_l c_l_inf) is the
/// bulk solvent volume fraction; it must lie in (0,1) whenever species are
/// present. An empty species list (pure dielectric problem) has gamma_inf = 1.
struct BulkState {
    std::vector<IonSpecies> species;
    double solvent_volume = 0.0; // v0, Angstrom^3
    double gamma_inf = 1.0;
    double log_gamma_inf = 0.0;

    int count() const { return static_cast<int>(species.size()); }

    double max_valence_to_volume() const {
        require_species("max_valence_to_volume");
        double m = species[0].valence / species[0].volume;
        for (const auto& s : species) m = std::max(m, s.valence / s.volume);
        return m;
    }
    double min_valence_to_volume() const {
        require_species("min_valence_to_volume");
        double m = species[0].valence / species[0].volume;
        for (const auto& s : species) m = std::min(m, s.valence / s.volume);
        return m;
    }
    /// True when both attracting and repelling species exist; the truncation
    /// bounds bracket the charge density only in that case.
    bool has_mixed_valences() const {
        if (species.empty()) return false;
        return min_valence_to_volume() < 0.0 && max_valence_to_volume() > 0.0;
    }

    /// Debye screening constant kappa in 1/Angstrom for the Yukawa boundary
    /// potential: kappa^2 = source_scale * sum(z^2 c_inf) / eps_w.
    double debye_kappa(const PhysicalConstants& constants, double eps_solvent) const {
        double zz = 0.0;
        for (const auto& s : species) zz += double(s.valence) * s.valence * s.bulk_density;
        return std::sqrt(constants.source_scale() * zz / eps_solvent);
    }

  private:
    void require_species(const char* who) const {
        if (species.empty()) throw std::invalid_argument(std::string(who) + ": no species defined");
    }
};

/// Validates volumes, concentrations and the bulk solvent fraction.
inline BulkState make_bulk(std::vector<IonSpecies> species, double solvent_volume) {
    if (!(solvent_volume > 0.0)) throw ConfigError("solvent volume must be positive");
    double occupied = 0.0;
    for (size_t l = 0; l < species.size(); ++l) {
        if (!(species[l].volume > 0.0))
            throw ConfigError("species " + std::to_string(l + 1) + ": volume must be positive");
        if (!(species[l].bulk_density > 0.0))
            throw ConfigError("species " + std::to_string(l + 1) +
                              ": bulk concentration must be positive");
        if (species[l].valence == 0)
            throw ConfigError("species " + std::to_string(l + 1) + ": valence must be nonzero");
        occupied += species[l].volume * species[l].bulk_density;
    }
    BulkState bulk;
    bulk.species = std::move(species);
    bulk.solvent_volume = solvent_volume;
    bulk.gamma_inf = 1.0 - occupied;
    if (!bulk.species.empty() && !(bulk.gamma_inf > 0.0 && bulk.gamma_inf < 1.0))
        throw ConfigError("bulk solvent fraction gamma_inf = " + std::to_string(bulk.gamma_inf) +
                          " lies outside (0,1); reduce bulk concentrations or ion volumes");
    bulk.log_gamma_inf = std::log(bulk.gamma_inf);
    return bulk;
}

}  // namespace stericpb

#pragma once

#include <cmath>
#include <cstdlib>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stericpb/errors.hpp"
#include "stericpb/linsolve.hpp"
#include "stericpb/species.hpp"
#include "stericpb/units.hpp"

namespace stericpb {

enum class ClosureMode { steric, classical };
enum class GeometrySource { sphere, pqr, levelset };

/// Fully validated run description. Concentrations are converted from mol/L
/// to ions/Angstrom^3 at ingest; volumes accept the "a^3" shorthand.
struct RunConfig {
    // [grid]
    double half_width = 10.0;
    int interior_points = 99;

    // [physics]
    double temperature = 298.15;
    double eps_solute = 1.0;
    double eps_solvent = 78.0;
    double interface_width = 1.5;

    // [solvent] + [species]
    double solvent_volume = 0.0;
    std::vector<IonSpecies> species;

    // [closure]
    ClosureMode mode = ClosureMode::steric;
    bool use_table = true;
    double table_spacing = 0.002;
    double table_padding = 2.0;
    std::optional<double> table_min, table_max;

    // [solver]
    double tol = 1e-6;
    int max_steps = 60;
    LinearSolveConfig linear{LinearMethod::mgpcg, 1e-10, 20000, 2, 40};

    // [geometry]
    GeometrySource source = GeometrySource::sphere;
    double sphere_radius = 5.0;
    double sphere_charge = -5.0;
    std::string pqr_path;
    std::string levelset_path;

    // [output]
    std::string report_path;
    std::string vtk_path;
    std::string vtk_fields = "psi_r";
    std::string csv_line;  // "x0,y0,z0,x1,y1,z1"
    int csv_line_samples = 101;
    std::string csv_line_path;
    std::optional<double> iso_level;
    double iso_band = 0.2;
    std::string iso_path;

    // [mms]
    bool mms_enabled = false;
    double mms_amplitude = 1000.0;

    PhysicalConstants constants() const { return PhysicalConstants{temperature}; }
    BulkState bulk() const { return make_bulk(species, solvent_volume > 0.0 ? solvent_volume : 1.0); }
};

namespace detail {

inline double parse_number(const std::string& raw, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0' || !std::isfinite(v))
        throw ConfigError(where + ": cannot parse number '" + raw + "'");
    return v;
}

/// Accepts a plain number or the side-length shorthand "a^b".
inline double parse_volume(const std::string& raw, const std::string& where) {
    const size_t caret = raw.find('^');
    if (caret == std::string::npos) return parse_number(raw, where);
    const double base = parse_number(raw.substr(0, caret), where);
    const double expo = parse_number(raw.substr(caret + 1), where);
    return std::pow(base, expo);
}

inline int parse_int(const std::string& raw, const std::string& where) {
    const double v = parse_number(raw, where);
    const int i = static_cast<int>(std::llround(v));
    if (std::abs(v - i) > 1e-9) throw ConfigError(where + ": expected an integer, got '" + raw + "'");
    return i;
}

inline bool parse_flag(const std::string& raw, const std::string& where) {
    if (raw == "on" || raw == "true" || raw == "yes" || raw == "1") return true;
    if (raw == "off" || raw == "false" || raw == "no" || raw == "0") return false;
    throw ConfigError(where + ": expected on/off, got '" + raw + "'");
}

inline std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Parses the sectioned key-value run description. Unknown sections or keys
/// are errors naming the offender; constraint violations report the computed
/// value. The [species] section may repeat, one block per species.
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string section;
    std::string line;
    long line_number = 0;
    IonSpecies* current_species = nullptr;

    const auto where = [&](const std::string& key) { return "[" + section + "] " + key; };

    while (std::getline(in, line)) {
        ++line_number;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_number);
            section = line.substr(1, line.size() - 2);
            if (section == "species") {
                cfg.species.emplace_back();
                current_species = &cfg.species.back();
            } else if (section != "grid" && section != "physics" && section != "solvent" &&
                       section != "closure" && section != "solver" && section != "geometry" &&
                       section != "output" && section != "mms") {
                throw ConfigError("unknown section [" + section + "]");
            }
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line_number);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty()) throw ParseError("key '" + key + "' outside any section", line_number);
        if (value.empty()) continue;  // blank value keeps the default

        if (section == "grid") {
            if (key == "half_width") cfg.half_width = detail::parse_number(value, where(key));
            else if (key == "interior_points") cfg.interior_points = detail::parse_int(value, where(key));
            else throw ConfigError("unknown key '" + key + "' in [grid]");
        } else if (section == "physics") {
            if (key == "temperature") cfg.temperature = detail::parse_number(value, where(key));
            else if (key == "eps_solute") cfg.eps_solute = detail::parse_number(value, where(key));
            else if (key == "eps_solvent") cfg.eps_solvent = detail::parse_number(value, where(key));
            else if (key == "interface_width") cfg.interface_width = detail::parse_number(value, where(key));
            else throw ConfigError("unknown key '" + key + "' in [physics]");
        } else if (section == "solvent") {
            if (key == "volume") cfg.solvent_volume = detail::parse_volume(value, where(key));
            else throw ConfigError("unknown key '" + key + "' in [solvent]");
        } else if (section == "species") {
            if (key == "valence") current_species->valence = detail::parse_int(value, where(key));
            else if (key == "volume") current_species->volume = detail::parse_volume(value, where(key));
            else if (key == "bulk") current_species->bulk_density =
                molar_to_density(detail::parse_number(value, where(key)));
            else throw ConfigError("unknown key '" + key + "' in [species]");
        } else if (section == "closure") {
            if (key == "mode") {
                if (value == "steric") cfg.mode = ClosureMode::steric;
                else if (value == "classical") cfg.mode = ClosureMode::classical;
                else throw ConfigError("[closure] mode must be steric or classical, got '" + value + "'");
            } else if (key == "table") cfg.use_table = detail::parse_flag(value, where(key));
            else if (key == "table_spacing") cfg.table_spacing = detail::parse_number(value, where(key));
            else if (key == "table_padding") cfg.table_padding = detail::parse_number(value, where(key));
            else if (key == "table_min") cfg.table_min = detail::parse_number(value, where(key));
            else if (key == "table_max") cfg.table_max = detail::parse_number(value, where(key));
            else throw ConfigError("unknown key '" + key + "' in [closure]");
        } else if (section == "solver") {
            if (key == "tol") cfg.tol = detail::parse_number(value, where(key));
            else if (key == "max_steps") cfg.max_steps = detail::parse_int(value, where(key));
            else if (key == "linear_method") {
                if (value == "cg") cfg.linear.method = LinearMethod::cg;
                else if (value == "mgpcg") cfg.linear.method = LinearMethod::mgpcg;
                else throw ConfigError("[solver] linear_method must be cg or mgpcg, got '" + value + "'");
            } else if (key == "linear_tol") cfg.linear.rel_tol = detail::parse_number(value, where(key));
            else if (key == "linear_max_iterations") cfg.linear.max_iterations = detail::parse_int(value, where(key));
            else if (key == "smoother_sweeps") cfg.linear.smoother_sweeps = detail::parse_int(value, where(key));
            else throw ConfigError("unknown key '" + key + "' in [solver]");
        } else if (section == "geometry") {
            if (key == "source") {
                if (value == "sphere") cfg.source = GeometrySource::sphere;
                else if (value == "pqr") cfg.source = GeometrySource::pqr;
                else if (value == "levelset") cfg.source = GeometrySource::levelset;
                else throw ConfigError("[geometry] source must be sphere, pqr or levelset");
            } else if (key == "radius") cfg.sphere_radius = detail::parse_number(value, where(key));
            else if (key == "charge") cfg.sphere_charge = detail::parse_number(value, where(key));
            else if (key == "pqr") cfg.pqr_path = value;
            else if (key == "levelset") cfg.levelset_path = value;
            else throw ConfigError("unknown key '" + key + "' in [geometry]");
        } else if (section == "output") {
            if (key == "report") cfg.report_path = value;
            else if (key == "vtk") cfg.vtk_path = value;
            else if (key == "vtk_fields") cfg.vtk_fields = value;
            else if (key == "csv_line") cfg.csv_line = value;
            else if (key == "csv_line_samples") cfg.csv_line_samples = detail::parse_int(value, where(key));
            else if (key == "csv_line_path") cfg.csv_line_path = value;
            else if (key == "iso_level") cfg.iso_level = detail::parse_number(value, where(key));
            else if (key == "iso_band") cfg.iso_band = detail::parse_number(value, where(key));
            else if (key == "iso_path") cfg.iso_path = value;
            else throw ConfigError("unknown key '" + key + "' in [output]");
        } else if (section == "mms") {
            if (key == "enabled") cfg.mms_enabled = detail::parse_flag(value, where(key));
            else if (key == "amplitude") cfg.mms_amplitude = detail::parse_number(value, where(key));
            else throw ConfigError("unknown key '" + key + "' in [mms]");
        }
    }

    // Cross-field validation.
    if (!(cfg.half_width > 0.0)) throw ConfigError("[grid] half_width must be positive");
    if (cfg.interior_points < 1) throw ConfigError("[grid] interior_points must be at least 1");
    if (!(cfg.temperature > 0.0)) throw ConfigError("[physics] temperature must be positive");
    if (!(cfg.eps_solute > 0.0) || !(cfg.eps_solvent > 0.0))
        throw ConfigError("[physics] permittivities must be positive");
    if (!(cfg.interface_width > 0.0)) throw ConfigError("[physics] interface_width must be positive");
    if (!(cfg.tol > 0.0)) throw ConfigError("[solver] tol must be positive");
    if (cfg.max_steps < 1) throw ConfigError("[solver] max_steps must be at least 1");
    if (!(cfg.linear.rel_tol > 0.0 && cfg.linear.rel_tol < 1.0))
        throw ConfigError("[solver] linear_tol must lie in (0,1)");
    if (cfg.linear.max_iterations < 1) throw ConfigError("[solver] linear_max_iterations must be positive");
    if (!(cfg.table_spacing > 0.0)) throw ConfigError("[closure] table_spacing must be positive");
    if (cfg.table_padding < 0.0) throw ConfigError("[closure] table_padding must be nonnegative");
    if (cfg.table_min && cfg.table_max && !(*cfg.table_min < *cfg.table_max))
        throw ConfigError("[closure] table_min must be below table_max");
    if (!cfg.species.empty() && !(cfg.solvent_volume > 0.0))
        throw ConfigError("[solvent] volume is required when species are present");
    if (cfg.source == GeometrySource::pqr && cfg.pqr_path.empty())
        throw ConfigError("[geometry] pqr path is required for source = pqr");
    if (cfg.source == GeometrySource::levelset && cfg.levelset_path.empty())
        throw ConfigError("[geometry] levelset path is required for source = levelset");
    if (cfg.source == GeometrySource::sphere && !(cfg.sphere_radius > 0.0))
        throw ConfigError("[geometry] radius must be positive");
    cfg.bulk();  // enforces volumes, concentrations and gamma_inf in (0,1)
    return cfg;
}

}  // namespace stericpb

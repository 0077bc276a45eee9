#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stericpb/errors.hpp"
#include "stericpb/species.hpp"

namespace stericpb {

/// Exponent cap for intermediate exp() evaluations far from a root; keeps
/// sums finite without affecting the sign or the located root.
inline constexpr double kExpCap = 600.0;

inline double capped_exp(double a) { return std::exp(std::min(a, kExpCap)); }

/// Residual of the scalar solvent-fraction equation at dimensionless
/// potential u:
///   f(gamma) = gamma - 1 + sum_j v_j c_j_inf (gamma/gamma_inf)^(v_j/v0) exp(-z_j u)
/// f is strictly increasing on (0,1) with a unique root there.
inline double f_gamma(double gamma, double u, const BulkState& bulk) {
    if (!(gamma > 0.0)) throw std::invalid_argument("f_gamma: gamma must be positive");
    const double t = std::log(gamma);
    double s = gamma - 1.0;
    for (const auto& sp : bulk.species) {
        const double ratio = sp.volume / bulk.solvent_volume;
        s += capped_exp(std::log(sp.volume * sp.bulk_density) +
                        ratio * (t - bulk.log_gamma_inf) - sp.valence * u);
    }
    return s;
}

/// f'(gamma) = 1 + sum_j (v_j/v0) v_j c_j_inf gamma^(v_j/v0-1) / gamma_inf^(v_j/v0) exp(-z_j u)
inline double f_gamma_deriv(double gamma, double u, const BulkState& bulk) {
    if (!(gamma > 0.0)) throw std::invalid_argument("f_gamma_deriv: gamma must be positive");
    const double t = std::log(gamma);
    double s = 1.0;
    for (const auto& sp : bulk.species) {
        const double ratio = sp.volume / bulk.solvent_volume;
        s += ratio / gamma *
             capped_exp(std::log(sp.volume * sp.bulk_density) + ratio * (t - bulk.log_gamma_inf) -
                        sp.valence * u);
    }
    return s;
}

struct GammaResult {
    double gamma = 1.0;
    double log_gamma = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

/// Root of f in (0,1), solved in the variable t = log(gamma) so that the
/// deeply saturated tails (gamma far below double range in linear form at
/// extreme potentials) stay representable. Newton steps use f' through the
/// chain rule dF/dt = gamma f'(gamma); iterates leaving the bracketing
/// interval fall back to bisection. Residual tolerance applies to |f|.
inline GammaResult solve_gamma_log(double u, const BulkState& bulk,
                                   std::optional<double> log_init, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("solve_gamma_log: tolerance must be positive");
    const int m = bulk.count();
    if (m == 0) return {1.0, 0.0, 0, 0.0};

    std::vector<double> base(static_cast<size_t>(m)), ratio(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const auto& sp = bulk.species[static_cast<size_t>(j)];
        ratio[j] = sp.volume / bulk.solvent_volume;
        base[j] = std::log(sp.volume * sp.bulk_density) - ratio[j] * bulk.log_gamma_inf -
                  sp.valence * u;
    }
    const auto eval = [&](double t, double& value, double& deriv) {
        const double g = std::exp(t);
        value = g - 1.0;
        deriv = g;
        for (int j = 0; j < m; ++j) {
            const double term = capped_exp(base[j] + ratio[j] * t);
            value += term;
            deriv += ratio[j] * term;
        }
    };

    // Default start: bulk state, refined by the single-species saturation
    // estimate t ~ -base_j v0/v_j for strongly attracting species.
    double t = log_init.value_or(bulk.log_gamma_inf);
    if (!log_init) {
        for (int j = 0; j < m; ++j)
            if (base[j] > 0.0) t = std::min(t, -base[j] / ratio[j]);
    }
    double gamma_at_t = log_init ? std::exp(t) : (t == bulk.log_gamma_inf ? bulk.gamma_inf
                                                                          : std::exp(t));

    double lo = -std::numeric_limits<double>::infinity();  // f < 0 side
    double hi = 0.0;                                       // f >= 0 at gamma = 1
    double value = 0.0, deriv = 0.0;
    int iterations = 0;
    const int max_iterations = 300;
    while (true) {
        eval(t, value, deriv);
        if (std::abs(value) <= tol) return {gamma_at_t, t, iterations, value};
        if (++iterations > max_iterations)
            throw NumericalError("solve_gamma: iteration budget exhausted at u=" +
                                     std::to_string(u),
                                 value);
        if (value > 0.0) hi = t; else lo = t;
        double next = t - value / deriv;
        const bool inside = std::isfinite(next) && next > lo && next < hi;
        if (!inside) {
            next = std::isfinite(lo) ? 0.5 * (lo + hi)
                                     : std::min(2.0 * t - 4.0, hi - 4.0);  // expand toward f<0
        }
        // Bracket exhausted at machine resolution: accept the best point if
        // the residual sits at its floating-point floor, otherwise fail.
        if (std::isfinite(lo) && hi - lo <= 8.0 * std::numeric_limits<double>::epsilon() *
                                               std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) {
            const double floor = std::max(tol, 64.0 * std::numeric_limits<double>::epsilon() *
                                                   deriv * std::max(1.0, std::abs(t)));
            if (std::abs(value) <= floor) return {gamma_at_t, t, iterations, value};
            throw NumericalError("solve_gamma: residual " + std::to_string(value) +
                                     " not resolvable at u=" + std::to_string(u),
                                 value);
        }
        t = next;
        gamma_at_t = std::exp(t);
    }
}

/// Root of f in (0,1). Default initial guess is the bulk fraction; the bulk
/// state at u = 0 is returned immediately with zero iterations.
inline double solve_gamma(double u, const BulkState& bulk,
                          std::optional<double> init_guess = std::nullopt,
                          double tol = 1e-14) {
    std::optional<double> log_init;
    if (init_guess) {
        if (!(*init_guess > 0.0 && *init_guess < 1.0))
            throw std::invalid_argument("solve_gamma: initial guess must lie in (0,1)");
        log_init = std::log(*init_guess);
    }
    return solve_gamma_log(u, bulk, log_init, tol).gamma;
}

/// c_l = c_l_inf (gamma/gamma_inf)^(v_l/v0) exp(-z_l u); each value lies in
/// (0, 1/v_l). Evaluated through logarithms so saturated states keep full
/// relative accuracy.
inline void concentrations_from_log_gamma(double log_gamma, double u, const BulkState& bulk,
                                          double* c) {
    for (size_t l = 0; l < bulk.species.size(); ++l) {
        const auto& sp = bulk.species[l];
        const double ratio = sp.volume / bulk.solvent_volume;
        c[l] = capped_exp(std::log(sp.bulk_density) + ratio * (log_gamma - bulk.log_gamma_inf) -
                          sp.valence * u);
    }
}

inline std::vector<double> concentrations_from_gamma(double gamma, double u,
                                                     const BulkState& bulk) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("concentrations_from_gamma: gamma must be positive");
    std::vector<double> c(bulk.species.size());
    concentrations_from_log_gamma(std::log(gamma), u, bulk, c.data());
    return c;
}

/// d(log gamma)/du = v0 sum(z_l v_l c_l) / (v0 gamma + sum(v_l^2 c_l)).
/// Bounded and smooth even where gamma itself underflows.
inline double log_gamma_slope(double gamma, const double* c, const BulkState& bulk) {
    double num = 0.0, den = bulk.solvent_volume * gamma;
    for (size_t l = 0; l < bulk.species.size(); ++l) {
        const auto& sp = bulk.species[l];
        num += sp.valence * sp.volume * c[l];
        den += sp.volume * sp.volume * c[l];
    }
    return bulk.solvent_volume * num / den;
}

/// d(gamma)/du in the dimensionless-potential convention.
inline double gamma_prime(double gamma, const std::vector<double>& c, const BulkState& bulk) {
    return gamma * log_gamma_slope(gamma, c.data(), bulk);
}

/// dc_l/du = (v_l slope / v0 - z_l) c_l with slope = d(log gamma)/du.
inline void concentration_prime_from_slope(double slope, const double* c, const BulkState& bulk,
                                           double* dc) {
    for (size_t l = 0; l < bulk.species.size(); ++l) {
        const auto& sp = bulk.species[l];
        dc[l] = (sp.volume * slope / bulk.solvent_volume - sp.valence) * c[l];
    }
}

/// dc_l/du from gamma and gamma' (the stored-table convention).
inline std::vector<double> concentration_prime(double gamma, double gamma_prime_value,
                                               const std::vector<double>& c,
                                               const BulkState& bulk) {
    std::vector<double> dc(c.size());
    concentration_prime_from_slope(gamma_prime_value / gamma, c.data(), bulk, dc.data());
    return dc;
}

/// Closure interface consumed by the nonlinear solver: the net mobile charge
/// density q(u) = sum(z_l c_l) in ions/A^3 (valence-weighted), its derivative
/// (never positive), species concentrations for postprocessing, and - when
/// available - the cumulative integral of q used by the discrete energy.
class PotentialClosure {
  public:
    virtual ~PotentialClosure() = default;
    virtual int species_count() const = 0;
    virtual void net_charge(double u, double& q, double& dq) const = 0;
    virtual void concentrations(double u, double* c) const = 0;
    virtual bool has_charge_integral() const { return false; }
    /// Integral of net_charge from a fixed base point to u; base-independent
    /// use only (callers always take differences).
    virtual double charge_integral(double /*u*/) const {
        throw std::invalid_argument("closure does not provide a charge integral");
    }
    virtual long long saturation_count() const { return 0; }

    double net_charge_value(double u) const {
        double q = 0.0, dq = 0.0;
        net_charge(u, q, dq);
        return q;
    }
};

/// No mobile species: q = 0 identically.
class ZeroClosure final : public PotentialClosure {
  public:
    int species_count() const override { return 0; }
    void net_charge(double, double& q, double& dq) const override { q = dq = 0.0; }
    void concentrations(double, double*) const override {}
    bool has_charge_integral() const override { return true; }
    double charge_integral(double) const override { return 0.0; }
};

/// Classical Boltzmann distributions c_l = c_l_inf exp(-z_l u). Exponent
/// arguments beyond +-700 are clamped with a saturation count.
class ClassicalClosure final : public PotentialClosure {
  public:
    explicit ClassicalClosure(const BulkState& bulk) : bulk_(bulk) {}

    int species_count() const override { return bulk_.count(); }

    void net_charge(double u, double& q, double& dq) const override {
        q = 0.0;
        dq = 0.0;
        for (const auto& sp : bulk_.species) {
            const double arg = -double(sp.valence) * u;
            const bool clamped = std::abs(arg) > 700.0;
            const double c = sp.bulk_density * std::exp(std::clamp(arg, -700.0, 700.0));
            if (clamped) saturated_.fetch_add(1, std::memory_order_relaxed);
            q += sp.valence * c;
            if (!clamped) dq -= double(sp.valence) * sp.valence * c;
        }
    }

    void concentrations(double u, double* c) const override {
        for (size_t l = 0; l < bulk_.species.size(); ++l) {
            const auto& sp = bulk_.species[l];
            c[l] = sp.bulk_density * std::exp(std::clamp(-double(sp.valence) * u, -700.0, 700.0));
        }
    }

    bool has_charge_integral() const override { return true; }
    double charge_integral(double u) const override {
        double s = 0.0;
        for (const auto& sp : bulk_.species)
            s += sp.bulk_density *
                 (1.0 - std::exp(std::clamp(-double(sp.valence) * u, -700.0, 700.0)));
        return s;
    }

    long long saturation_count() const override { return saturated_.load(); }

  private:
    BulkState bulk_;
    mutable std::atomic<long long> saturated_{0};
};

/// Lattice-gas distributions evaluated by solving the gamma equation at every
/// call. Pure and reentrant; no charge integral (use the precomputed table or
/// external quadrature when the energy is needed).
class StericDirectClosure final : public PotentialClosure {
  public:
    StericDirectClosure(const BulkState& bulk, double tol_gamma = 1e-14)
        : bulk_(bulk), tol_(tol_gamma) {}

    int species_count() const override { return bulk_.count(); }

    void net_charge(double u, double& q, double& dq) const override {
        const GammaResult r = solve_gamma_log(u, bulk_, std::nullopt, tol_);
        std::vector<double> c(static_cast<size_t>(bulk_.count()));
        concentrations_from_log_gamma(r.log_gamma, u, bulk_, c.data());
        const double slope = log_gamma_slope(r.gamma, c.data(), bulk_);
        q = 0.0;
        dq = 0.0;
        for (size_t l = 0; l < c.size(); ++l) {
            const auto& sp = bulk_.species[l];
            q += sp.valence * c[l];
            dq += sp.valence * (sp.volume * slope / bulk_.solvent_volume - sp.valence) * c[l];
        }
    }

    void concentrations(double u, double* c) const override {
        const GammaResult r = solve_gamma_log(u, bulk_, std::nullopt, tol_);
        concentrations_from_log_gamma(r.log_gamma, u, bulk_, c);
    }

    const BulkState& bulk() const { return bulk_; }
    double tolerance() const { return tol_; }

  private:
    BulkState bulk_;
    double tol_;
};

}  // namespace stericpb

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stericpb/assembly.hpp"
#include "stericpb/closure.hpp"
#include "stericpb/errors.hpp"
#include "stericpb/linsolve.hpp"
#include "stericpb/parallel.hpp"
#include "stericpb/species.hpp"

namespace stericpb {

/// Componentwise solution estimates from the saturated-charge comparison
/// problems; the nonlinear solution lies between them.
struct Bounds {
    std::vector<double> lower, upper;
};

/// Solves A u = chi*scale*(max|min of z_l/v_l) + b for the upper and lower
/// estimates, with the system's Dirichlet data folded into b. In saturated
/// regions the solution touches the exact bounds, so the computed estimates
/// are widened by a slack exceeding the attainable linear-solve error;
/// a wider interval is still a valid truncation set.
inline Bounds compute_bounds(const AssembledSystem& sys, const BulkState& bulk,
                             const LinearSolveConfig& cfg, MultigridHierarchy* mg = nullptr) {
    const double zv_max = bulk.max_valence_to_volume();
    const double zv_min = bulk.min_valence_to_volume();
    const size_t count = sys.rhs.size();
    std::vector<double> rhs(count);
    Bounds bounds;
    LinearSolveConfig tight = cfg;
    tight.rel_tol = std::min(cfg.rel_tol, 1e-11);
    for (int side = 0; side < 2; ++side) {
        const double zv = side == 0 ? zv_max : zv_min;
        for (size_t m = 0; m < count; ++m)
            rhs[m] = sys.solvent_mask[m] * sys.source_scale * zv + sys.rhs[m];
        std::vector<double>& target = side == 0 ? bounds.upper : bounds.lower;
        solve_spd(sys.op, nullptr, rhs, target, tight, mg);
    }
    double scale = 1.0;
    for (size_t m = 0; m < count; ++m)
        scale = std::max(scale, std::max(std::abs(bounds.upper[m]), std::abs(bounds.lower[m])));
    double worst = 0.0;
    for (size_t m = 0; m < count; ++m)
        worst = std::max(worst, bounds.lower[m] - bounds.upper[m]);
    if (worst > 1e-9 * scale)
        throw NumericalError("compute_bounds: lower estimate exceeds upper estimate by " +
                             std::to_string(worst));
    const double slack = 1e-4 * scale;
    for (size_t m = 0; m < count; ++m) {
        bounds.upper[m] += slack;
        bounds.lower[m] -= slack;
    }
    return bounds;
}

struct TruncationResult {
    long long clamped_upper = 0;
    long long clamped_lower = 0;
};

/// Componentwise clamp of psi into [lower, upper].
inline TruncationResult truncate(std::vector<double>& psi, const Bounds& bounds) {
    TruncationResult res;
    for (size_t m = 0; m < psi.size(); ++m) {
        if (psi[m] > bounds.upper[m]) {
            psi[m] = bounds.upper[m];
            ++res.clamped_upper;
        } else if (psi[m] < bounds.lower[m]) {
            psi[m] = bounds.lower[m];
            ++res.clamped_lower;
        }
    }
    return res;
}

/// Convex energy whose gradient is the residual F:
///   E(psi) = 1/2 psi^T A psi - sum_m chi_m scale [I(uf_m+psi_m) - I(uf_m)] - b^T psi
/// where I is the closure's cumulative net-charge integral.
inline double discrete_energy(const AssembledSystem& sys, const PotentialClosure& closure,
                              const std::vector<double>& psi) {
    if (!closure.has_charge_integral())
        throw std::invalid_argument("discrete_energy: closure lacks a charge integral");
    std::vector<double> apsi;
    sys.op.apply(psi, apsi);
    const long long count = static_cast<long long>(psi.size());
    return parallel_sum(count, [&](long long m) {
        const size_t i = static_cast<size_t>(m);
        double e = 0.5 * psi[i] * apsi[i] - sys.rhs[i] * psi[i];
        const double chi = sys.solvent_mask[i];
        if (chi > 0.0 && psi[i] != 0.0)
            e -= chi * sys.source_scale *
                 (closure.charge_integral(sys.singular[i] + psi[i]) -
                  closure.charge_integral(sys.singular[i]));
        return e;
    });
}

struct NewtonStepRecord {
    int step = 0;
    double residual_norm = 0.0;  // max norm of F after this step (post truncation)
    double omega = 1.0;
    int halvings = 0;
    long long clamped_upper = 0;
    long long clamped_lower = 0;
    int linear_iterations = 0;
    double energy_pre = 0.0;   // E before truncation
    double energy_post = 0.0;  // E after truncation
    bool has_energy = false;
};

struct NewtonOptions {
    double tol = 1e-6;  // max-norm residual stopping threshold
    int max_steps = 60;
    double omega_floor = 0x1p-30;
    bool use_truncation = true;
    bool record_energy = true;
    LinearSolveConfig linear;
    std::function<void(const NewtonStepRecord&)> logger;
};

struct NewtonState {
    std::vector<double> psi;
    double residual_norm = 0.0;
    double initial_residual = 0.0;
    int steps = 0;
    long long total_linear_iterations = 0;
    std::vector<NewtonStepRecord> history;
};

namespace detail {
inline double max_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}
}  // namespace detail

/// Damped Newton iteration with truncation for F(psi) = A psi - G(psi) = 0.
/// Each step solves (A - G'(psi)) delta = -F(psi), backtracks omega in
/// {1, 1/2, 1/4, ...} until the max-norm residual does not increase, then
/// clamps the iterate into the bounds. Truncation requires bounds; classical
/// runs pass use_truncation = false.
inline NewtonState newton_solve(const AssembledSystem& sys, const PotentialClosure& closure,
                                const Bounds* bounds, const NewtonOptions& opts,
                                MultigridHierarchy* mg = nullptr,
                                const std::vector<double>* initial = nullptr) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("newton_solve: tol must be positive");
    const bool truncating = opts.use_truncation && bounds != nullptr;
    const bool energies = opts.record_energy && closure.has_charge_integral();

    NewtonState state;
    state.psi = initial ? *initial : std::vector<double>(sys.rhs.size(), 0.0);
    if (truncating) truncate(state.psi, *bounds);

    std::vector<double> f, gprime, delta, trial, f_trial;
    residual(sys, closure, state.psi, f);
    double norm = detail::max_norm(f);
    state.initial_residual = norm;

    while (norm > opts.tol) {
        if (state.steps >= opts.max_steps)
            throw NumericalError("newton_solve: no convergence within " +
                                     std::to_string(opts.max_steps) + " steps",
                                 norm);
        jacobian_diag(sys, closure, state.psi, gprime);
        std::vector<double> shift(gprime.size());
        for (size_t m = 0; m < gprime.size(); ++m) shift[m] = -gprime[m];
        std::vector<double> neg_f(f.size());
        for (size_t m = 0; m < f.size(); ++m) neg_f[m] = -f[m];

        LinearSolveConfig lin = opts.linear;
        if (norm <= 1e3 * opts.tol) lin.rel_tol = std::min(lin.rel_tol, 1e-12);
        const LinearStats stats = solve_spd(sys.op, &shift, neg_f, delta, lin, mg);

        NewtonStepRecord rec;
        rec.step = state.steps + 1;
        rec.linear_iterations = stats.iterations;

        double omega = 1.0;
        while (true) {
            trial.resize(state.psi.size());
            for (size_t m = 0; m < trial.size(); ++m) trial[m] = state.psi[m] + omega * delta[m];
            residual(sys, closure, trial, f_trial);
            if (detail::max_norm(f_trial) <= norm) break;
            omega *= 0.5;
            ++rec.halvings;
            if (omega < opts.omega_floor)
                throw NumericalError("newton_solve: backtracking stalled at step " +
                                         std::to_string(rec.step) + " (residual " +
                                         std::to_string(norm) + ")",
                                     norm);
        }
        rec.omega = omega;

        if (energies) rec.energy_pre = discrete_energy(sys, closure, trial);
        if (truncating) {
            const TruncationResult tr = truncate(trial, *bounds);
            rec.clamped_upper = tr.clamped_upper;
            rec.clamped_lower = tr.clamped_lower;
            if (tr.clamped_upper + tr.clamped_lower > 0) residual(sys, closure, trial, f_trial);
        }
        if (energies) {
            rec.energy_post = rec.clamped_upper + rec.clamped_lower > 0
                                  ? discrete_energy(sys, closure, trial)
                                  : rec.energy_pre;
            rec.has_energy = true;
        }

        state.psi.swap(trial);
        f.swap(f_trial);
        norm = detail::max_norm(f);
        rec.residual_norm = norm;
        ++state.steps;
        state.total_linear_iterations += stats.iterations;
        state.history.push_back(rec);
        if (opts.logger) opts.logger(rec);
    }
    state.residual_norm = norm;
    return state;
}

}  // namespace stericpb

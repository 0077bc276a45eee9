#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "stericpb/closure.hpp"
#include "stericpb/dielectric.hpp"
#include "stericpb/errors.hpp"
#include "stericpb/grid.hpp"
#include "stericpb/parallel.hpp"
#include "stericpb/units.hpp"

namespace stericpb {

/// Seven-point variable-coefficient operator A for the scaled equation
/// -div(eps grad u). Face coefficients are the harmonic averages of the node
/// dielectric values; entries are eps_face/h^2. A is symmetric positive
/// definite with nonpositive off-diagonal entries.
struct StencilOperator {
    UniformGrid3 grid;
    std::vector<double> face_x, face_y, face_z;  // harmonic averages, node-indexed
    double inv_h2 = 0.0;

    long long stride_x() const { return 1; }
    long long stride_y() const { return grid.points_per_axis(); }
    long long stride_z() const {
        const long long p = grid.points_per_axis();
        return p * p;
    }

    /// y = (A + diag(shift)) x on interior vectors; boundary values are zero.
    void apply(const std::vector<double>& x, std::vector<double>& y,
               const std::vector<double>* shift = nullptr) const {
        const int n = grid.interior_per_axis;
        const int p = grid.points_per_axis();
        const long long sy = p, sz = static_cast<long long>(p) * p;
        y.resize(x.size());
        parallel_for(static_cast<long long>(n) * n, [&](long long jk) {
            const int j = static_cast<int>(jk % n) + 1;
            const int k = static_cast<int>(jk / n) + 1;
            long long node = grid.node_index(1, j, k);
            long long m = grid.interior_index(1, j, k);
            for (int i = 1; i <= n; ++i, ++node, ++m) {
                const double wx = face_x[static_cast<size_t>(node - 1)];
                const double ex = face_x[static_cast<size_t>(node)];
                const double wy = face_y[static_cast<size_t>(node - sy)];
                const double ey = face_y[static_cast<size_t>(node)];
                const double wz = face_z[static_cast<size_t>(node - sz)];
                const double ez = face_z[static_cast<size_t>(node)];
                double v = (wx + ex + wy + ey + wz + ez) * x[static_cast<size_t>(m)];
                if (i > 1) v -= wx * x[static_cast<size_t>(m - 1)];
                if (i < n) v -= ex * x[static_cast<size_t>(m + 1)];
                if (j > 1) v -= wy * x[static_cast<size_t>(m - n)];
                if (j < n) v -= ey * x[static_cast<size_t>(m + n)];
                if (k > 1) v -= wz * x[static_cast<size_t>(m - static_cast<long long>(n) * n)];
                if (k < n) v -= ez * x[static_cast<size_t>(m + static_cast<long long>(n) * n)];
                v *= inv_h2;
                if (shift) v += (*shift)[static_cast<size_t>(m)] * x[static_cast<size_t>(m)];
                y[static_cast<size_t>(m)] = v;
            }
        });
    }

    /// Exact discrete operator L_h applied to a grid function including its
    /// boundary layer; result on interior points.
    void apply_full(const GridFunction& u, std::vector<double>& out) const {
        const int n = grid.interior_per_axis;
        const int p = grid.points_per_axis();
        const long long sy = p, sz = static_cast<long long>(p) * p;
        out.resize(static_cast<size_t>(grid.interior_count()));
        parallel_for(static_cast<long long>(n) * n, [&](long long jk) {
            const int j = static_cast<int>(jk % n) + 1;
            const int k = static_cast<int>(jk / n) + 1;
            long long node = grid.node_index(1, j, k);
            long long m = grid.interior_index(1, j, k);
            for (int i = 1; i <= n; ++i, ++node, ++m) {
                const double um = u[node];
                double v = face_x[static_cast<size_t>(node - 1)] * (um - u[node - 1]) +
                           face_x[static_cast<size_t>(node)] * (um - u[node + 1]) +
                           face_y[static_cast<size_t>(node - sy)] * (um - u[node - sy]) +
                           face_y[static_cast<size_t>(node)] * (um - u[node + sy]) +
                           face_z[static_cast<size_t>(node - sz)] * (um - u[node - sz]) +
                           face_z[static_cast<size_t>(node)] * (um - u[node + sz]);
                out[static_cast<size_t>(m)] = v * inv_h2;
            }
        });
    }

    double diagonal(long long m) const {
        int i, j, k;
        grid.interior_triple(m, i, j, k);
        const long long node = grid.node_index(i, j, k);
        return inv_h2 * (face_x[static_cast<size_t>(node - 1)] + face_x[static_cast<size_t>(node)] +
                         face_y[static_cast<size_t>(node - stride_y())] +
                         face_y[static_cast<size_t>(node)] +
                         face_z[static_cast<size_t>(node - stride_z())] +
                         face_z[static_cast<size_t>(node)]);
    }
};

inline StencilOperator build_stencil(const UniformGrid3& grid, const DielectricModel& model) {
    StencilOperator op;
    op.grid = grid;
    op.face_x = model.face_x;
    op.face_y = model.face_y;
    op.face_z = model.face_z;
    op.inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    return op;
}

/// Discrete system for the reaction potential: A psi = chi*scale*q(uf+psi) + b
/// with b collecting the Dirichlet lift, the singular-potential flux source
/// and any extra manufactured source.
struct AssembledSystem {
    UniformGrid3 grid;
    StencilOperator op;
    std::vector<double> rhs;           // b, interior-indexed
    std::vector<double> solvent_mask;  // chi at interior points
    std::vector<double> singular;      // dimensionless psi_f at interior points
    GridFunction dirichlet;            // boundary nodes carry psi_inf - psi_f (or exact data)
    double source_scale = 0.0;         // 4 pi * coupling_length
};

/// The singular-source face coefficient is HA(eps_i, eps_j) - eps_m, which
/// vanishes identically wherever both cells are pure solute.
inline AssembledSystem assemble_system(const UniformGrid3& grid, const DielectricModel& model,
                                       const GridFunction& singular_full,
                                       const GridFunction& dirichlet, double source_scale,
                                       const std::vector<double>* extra_source = nullptr) {
    AssembledSystem sys;
    sys.grid = grid;
    sys.op = build_stencil(grid, model);
    sys.dirichlet = dirichlet;
    sys.source_scale = source_scale;
    const long long count = grid.interior_count();
    sys.rhs.assign(static_cast<size_t>(count), 0.0);
    sys.solvent_mask.resize(static_cast<size_t>(count));
    sys.singular.resize(static_cast<size_t>(count));

    const int n = grid.interior_per_axis;
    const int p = grid.points_per_axis();
    const long long sy = p, sz = static_cast<long long>(p) * p;
    const double inv_h2 = sys.op.inv_h2;
    const double eps_m = model.eps_solute;

    parallel_for(static_cast<long long>(n) * n, [&](long long jk) {
        const int j = static_cast<int>(jk % n) + 1;
        const int k = static_cast<int>(jk / n) + 1;
        long long node = grid.node_index(1, j, k);
        long long m = grid.interior_index(1, j, k);
        for (int i = 1; i <= n; ++i, ++node, ++m) {
            sys.solvent_mask[static_cast<size_t>(m)] = model.chi[node];
            sys.singular[static_cast<size_t>(m)] = singular_full[node];

            const long long nb[6] = {node - 1, node + 1, node - sy, node + sy, node - sz, node + sz};
            const double face[6] = {model.face_x[static_cast<size_t>(node - 1)],
                                    model.face_x[static_cast<size_t>(node)],
                                    model.face_y[static_cast<size_t>(node - sy)],
                                    model.face_y[static_cast<size_t>(node)],
                                    model.face_z[static_cast<size_t>(node - sz)],
                                    model.face_z[static_cast<size_t>(node)]};
            const bool interior_nb[6] = {i > 1, i < n, j > 1, j < n, k > 1, k < n};
            double b = extra_source ? (*extra_source)[static_cast<size_t>(m)] : 0.0;
            const double uf = singular_full[node];
            for (int f = 0; f < 6; ++f) {
                // flux-difference source from the singular potential
                b += (face[f] - eps_m) * inv_h2 * (singular_full[nb[f]] - uf);
                // Dirichlet lift
                if (!interior_nb[f]) b += face[f] * inv_h2 * dirichlet[nb[f]];
            }
            sys.rhs[static_cast<size_t>(m)] = b;
        }
    });
    return sys;
}

/// F(psi) = A psi - chi*scale*q(uf+psi) - b.
inline void residual(const AssembledSystem& sys, const PotentialClosure& closure,
                     const std::vector<double>& psi, std::vector<double>& out) {
    sys.op.apply(psi, out);
    const long long count = sys.grid.interior_count();
    parallel_for(count, [&](long long m) {
        const double chi = sys.solvent_mask[static_cast<size_t>(m)];
        double g = 0.0;
        if (chi > 0.0) {
            double q, dq;
            closure.net_charge(sys.singular[static_cast<size_t>(m)] + psi[static_cast<size_t>(m)],
                               q, dq);
            g = chi * sys.source_scale * q;
        }
        out[static_cast<size_t>(m)] -= g + sys.rhs[static_cast<size_t>(m)];
    });
}

/// Diagonal of G': g'(psi_m) = chi*scale*dq <= 0. Interpolation noise is
/// clamped at zero so the Jacobian A - G' stays positive definite.
inline void jacobian_diag(const AssembledSystem& sys, const PotentialClosure& closure,
                          const std::vector<double>& psi, std::vector<double>& gprime) {
    const long long count = sys.grid.interior_count();
    gprime.resize(static_cast<size_t>(count));
    parallel_for(count, [&](long long m) {
        const double chi = sys.solvent_mask[static_cast<size_t>(m)];
        double g = 0.0;
        if (chi > 0.0) {
            double q, dq;
            closure.net_charge(sys.singular[static_cast<size_t>(m)] + psi[static_cast<size_t>(m)],
                               q, dq);
            g = chi * sys.source_scale * std::min(0.0, dq);
        }
        gprime[static_cast<size_t>(m)] = g;
    });
}

/// Manufactured sphere problem: exact solution amp*exp(-r^2/L^2) with the
/// matching continuous source, for a radius-R solute carrying charge Q at the
/// origin. The source is the continuous-operator residual of the exact field,
/// so the discrete solution converges at the scheme's order.
struct MmsProblem {
    std::vector<double> extra_source;  // interior-indexed
    GridFunction exact;                // all nodes
};

inline MmsProblem mms_source(const UniformGrid3& grid, double eps_solute, double eps_solvent,
                             double tau, double sphere_radius, double atom_charge,
                             const PhysicalConstants& constants, const PotentialClosure& closure,
                             double amplitude = 1000.0) {
    MmsProblem mms;
    mms.exact = GridFunction(grid, GridFunction::Unit::potential);
    mms.extra_source.assign(static_cast<size_t>(grid.interior_count()), 0.0);

    const double L = grid.half_width;
    const double lambda_q = constants.coupling_length() * atom_charge / eps_solute;
    const double scale = constants.source_scale();
    const double deps_total = eps_solvent - eps_solute;
    const int p = grid.points_per_axis();

    parallel_for(grid.node_count(), [&](long long node) {
        const int i = static_cast<int>(node % p);
        const int j = static_cast<int>((node / p) % p);
        const int k = static_cast<int>(node / (static_cast<long long>(p) * p));
        const double x = grid.coord(i), y = grid.coord(j), z = grid.coord(k);
        const double r2 = x * x + y * y + z * z;
        const double r = std::sqrt(r2);
        const double psi = amplitude * std::exp(-r2 / (L * L));
        mms.exact[node] = psi;
        if (!grid.is_interior(i, j, k)) return;

        const double chi = smeared_heaviside(r - sphere_radius, tau);
        const double eps = eps_solute + deps_total * chi;
        const double deps = deps_total * smeared_heaviside_deriv(r - sphere_radius, tau);
        const double dpsi = -2.0 * r / (L * L) * psi;
        const double d2psi = (-2.0 / (L * L) + 4.0 * r2 / (L * L * L * L)) * psi;
        // radial divergence of eps grad psi; the r->0 limit of (2/r) dpsi is 2 psi''
        const double lap = r > 1e-12 ? d2psi + 2.0 / r * dpsi : 3.0 * d2psi;
        double source = -(deps * dpsi + eps * lap);
        if (chi > 0.0) {
            const double uf = lambda_q / std::max(r, kMinAtomDistance);
            source -= chi * scale * closure.net_charge_value(uf + psi);
        }
        if (deps != 0.0 && r > 1e-12) source += lambda_q * deps / r2;
        mms.extra_source[static_cast<size_t>(grid.interior_index(i, j, k))] = source;
    });
    return mms;
}

}  // namespace stericpb

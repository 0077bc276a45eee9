#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stericpb/assembly.hpp"
#include "stericpb/dielectric.hpp"
#include "stericpb/errors.hpp"
#include "stericpb/grid.hpp"
#include "stericpb/parallel.hpp"

namespace stericpb {

enum class LinearMethod { cg, mgpcg };

struct LinearSolveConfig {
    LinearMethod method = LinearMethod::cg;
    double rel_tol = 1e-10;   // on the 2-norm residual, relative to the rhs
    int max_iterations = 20000;
    int smoother_sweeps = 2;  // pre/post smoothing sweeps per V-cycle
    int coarse_sweeps = 40;   // symmetric sweeps on the coarsest level
};

struct LinearStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

namespace detail {

/// One lexicographic Gauss-Seidel sweep on (A + diag(shift)) x = b.
/// forward=true sweeps ascending, else descending; the pair is symmetric.
inline void gauss_seidel_sweep(const StencilOperator& op, const std::vector<double>* shift,
                               const std::vector<double>& b, std::vector<double>& x,
                               bool forward) {
    const int n = op.grid.interior_per_axis;
    const int p = op.grid.points_per_axis();
    const long long sy = p, sz = static_cast<long long>(p) * p;
    const long long nn = static_cast<long long>(n) * n;
    const double inv_h2 = op.inv_h2;
    const auto update = [&](int i, int j, int k) {
        const long long node = op.grid.node_index(i, j, k);
        const long long m = op.grid.interior_index(i, j, k);
        const double wx = op.face_x[static_cast<size_t>(node - 1)];
        const double ex = op.face_x[static_cast<size_t>(node)];
        const double wy = op.face_y[static_cast<size_t>(node - sy)];
        const double ey = op.face_y[static_cast<size_t>(node)];
        const double wz = op.face_z[static_cast<size_t>(node - sz)];
        const double ez = op.face_z[static_cast<size_t>(node)];
        double acc = b[static_cast<size_t>(m)];
        if (i > 1) acc += inv_h2 * wx * x[static_cast<size_t>(m - 1)];
        if (i < n) acc += inv_h2 * ex * x[static_cast<size_t>(m + 1)];
        if (j > 1) acc += inv_h2 * wy * x[static_cast<size_t>(m - n)];
        if (j < n) acc += inv_h2 * ey * x[static_cast<size_t>(m + n)];
        if (k > 1) acc += inv_h2 * wz * x[static_cast<size_t>(m - static_cast<long long>(n) * n)];
        if (k < n) acc += inv_h2 * ez * x[static_cast<size_t>(m + static_cast<long long>(n) * n)];
        double d = inv_h2 * (wx + ex + wy + ey + wz + ez);
        if (shift) d += (*shift)[static_cast<size_t>(m)];
        x[static_cast<size_t>(m)] = acc / d;
    };
    if (forward) {
        for (long long jk = 0; jk < nn; ++jk) {
            const int j = static_cast<int>(jk % n) + 1;
            const int k = static_cast<int>(jk / n) + 1;
            for (int i = 1; i <= n; ++i) update(i, j, k);
        }
    } else {
        for (long long jk = nn - 1; jk >= 0; --jk) {
            const int j = static_cast<int>(jk % n) + 1;
            const int k = static_cast<int>(jk / n) + 1;
            for (int i = n; i >= 1; --i) update(i, j, k);
        }
    }
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return parallel_sum(static_cast<long long>(a.size()),
                        [&](long long i) { return a[static_cast<size_t>(i)] * b[static_cast<size_t>(i)]; });
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

/// Geometric multigrid on the structured interior grid: full coarsening while
/// the interval count stays even, face coefficients combined in series
/// (harmonic average of the two fine faces along each coarse edge), full
/// weighting restriction and trilinear prolongation. Used as a symmetric
/// V-cycle preconditioner.
class MultigridHierarchy {
  public:
    MultigridHierarchy(const StencilOperator& fine, int smoother_sweeps, int coarse_sweeps)
        : smoother_sweeps_(smoother_sweeps), coarse_sweeps_(coarse_sweeps) {
        levels_.push_back(Level{fine, {}, {}, {}, {}});
        while (true) {
            const StencilOperator& op = levels_.back().op;
            const int n = op.grid.interior_per_axis;
            if ((n + 1) % 2 != 0 || (n + 1) / 2 - 1 < 3) break;
            levels_.push_back(Level{coarsen(op), {}, {}, {}, {}});
        }
        for (auto& lvl : levels_) {
            const size_t count = static_cast<size_t>(lvl.op.grid.interior_count());
            lvl.shift.assign(count, 0.0);
            lvl.r.assign(count, 0.0);
            lvl.e.assign(count, 0.0);
            lvl.scratch.assign(count, 0.0);
        }
    }

    int level_count() const { return static_cast<int>(levels_.size()); }

    /// Installs the diagonal shift of the current Jacobian; coarse levels
    /// sample the fine shift at coincident points.
    void set_shift(const std::vector<double>* fine_shift) {
        auto& top = levels_.front().shift;
        if (fine_shift) top = *fine_shift;
        else std::fill(top.begin(), top.end(), 0.0);
        for (size_t l = 1; l < levels_.size(); ++l) {
            const UniformGrid3& cg = levels_[l].op.grid;
            const UniformGrid3& fg = levels_[l - 1].op.grid;
            auto& cs = levels_[l].shift;
            const auto& fs = levels_[l - 1].shift;
            const int nc = cg.interior_per_axis;
            for (int k = 1; k <= nc; ++k)
                for (int j = 1; j <= nc; ++j)
                    for (int i = 1; i <= nc; ++i)
                        cs[static_cast<size_t>(cg.interior_index(i, j, k))] =
                            fs[static_cast<size_t>(fg.interior_index(2 * i, 2 * j, 2 * k))];
        }
    }

    /// z = V-cycle applied to r on the finest level.
    void apply(const std::vector<double>& r, std::vector<double>& z) {
        levels_[0].r = r;
        vcycle(0);
        z = levels_[0].e;
    }

  private:
    struct Level {
        StencilOperator op;
        std::vector<double> shift;
        std::vector<double> r, e, scratch;
    };

    static StencilOperator coarsen(const StencilOperator& fine) {
        const UniformGrid3& fg = fine.grid;
        const int nc = (fg.interior_per_axis + 1) / 2 - 1;
        StencilOperator op;
        op.grid = build_grid(fg.half_width, nc);
        op.inv_h2 = 1.0 / (op.grid.spacing * op.grid.spacing);
        const long long count = op.grid.node_count();
        op.face_x.assign(static_cast<size_t>(count), 0.0);
        op.face_y.assign(static_cast<size_t>(count), 0.0);
        op.face_z.assign(static_cast<size_t>(count), 0.0);
        const int pc = op.grid.points_per_axis();
        for (int k = 0; k < pc; ++k)
            for (int j = 0; j < pc; ++j)
                for (int i = 0; i < pc; ++i) {
                    const long long cn = op.grid.node_index(i, j, k);
                    const long long fn = fg.node_index(2 * i, 2 * j, 2 * k);
                    if (i + 1 < pc)
                        op.face_x[static_cast<size_t>(cn)] = harmonic_average(
                            fine.face_x[static_cast<size_t>(fn)],
                            fine.face_x[static_cast<size_t>(fn + 1)]);
                    if (j + 1 < pc)
                        op.face_y[static_cast<size_t>(cn)] = harmonic_average(
                            fine.face_y[static_cast<size_t>(fn)],
                            fine.face_y[static_cast<size_t>(fn + fg.points_per_axis())]);
                    if (k + 1 < pc)
                        op.face_z[static_cast<size_t>(cn)] = harmonic_average(
                            fine.face_z[static_cast<size_t>(fn)],
                            fine.face_z[static_cast<size_t>(
                                fn + static_cast<long long>(fg.points_per_axis()) *
                                         fg.points_per_axis())]);
                }
        return op;
    }

    void vcycle(size_t l) {
        Level& lvl = levels_[l];
        std::fill(lvl.e.begin(), lvl.e.end(), 0.0);
        if (l + 1 == levels_.size()) {
            for (int s = 0; s < coarse_sweeps_; ++s) {
                detail::gauss_seidel_sweep(lvl.op, &lvl.shift, lvl.r, lvl.e, true);
                detail::gauss_seidel_sweep(lvl.op, &lvl.shift, lvl.r, lvl.e, false);
            }
            return;
        }
        for (int s = 0; s < smoother_sweeps_; ++s)
            detail::gauss_seidel_sweep(lvl.op, &lvl.shift, lvl.r, lvl.e, true);
        lvl.op.apply(lvl.e, lvl.scratch, &lvl.shift);
        for (size_t m = 0; m < lvl.scratch.size(); ++m)
            lvl.scratch[m] = lvl.r[m] - lvl.scratch[m];
        restrict_residual(l);
        vcycle(l + 1);
        prolong_correct(l);
        for (int s = 0; s < smoother_sweeps_; ++s)
            detail::gauss_seidel_sweep(lvl.op, &lvl.shift, lvl.r, lvl.e, false);
    }

    /// Full-weighting restriction of levels_[l].scratch into levels_[l+1].r.
    void restrict_residual(size_t l) {
        const UniformGrid3& fg = levels_[l].op.grid;
        const UniformGrid3& cg = levels_[l + 1].op.grid;
        const auto& fr = levels_[l].scratch;
        auto& cr = levels_[l + 1].r;
        const int nf = fg.interior_per_axis;
        const int nc = cg.interior_per_axis;
        parallel_for(static_cast<long long>(nc) * nc * nc, [&](long long mc) {
            int ic, jc, kc;
            cg.interior_triple(mc, ic, jc, kc);
            const int fi = 2 * ic, fj = 2 * jc, fk = 2 * kc;
            double acc = 0.0;
            for (int dk = -1; dk <= 1; ++dk)
                for (int dj = -1; dj <= 1; ++dj)
                    for (int di = -1; di <= 1; ++di) {
                        const int i = fi + di, j = fj + dj, k = fk + dk;
                        if (i < 1 || i > nf || j < 1 || j > nf || k < 1 || k > nf) continue;
                        const int taps = std::abs(di) + std::abs(dj) + std::abs(dk);
                        const double w = 1.0 / (8 << taps);  // 1/8, 1/16, 1/32, 1/64
                        acc += w * fr[static_cast<size_t>(fg.interior_index(i, j, k))];
                    }
            cr[static_cast<size_t>(mc)] = acc;
        });
    }

    /// Trilinear prolongation of levels_[l+1].e added into levels_[l].e.
    void prolong_correct(size_t l) {
        const UniformGrid3& fg = levels_[l].op.grid;
        const UniformGrid3& cg = levels_[l + 1].op.grid;
        auto& fe = levels_[l].e;
        const auto& ce = levels_[l + 1].e;
        const int nf = fg.interior_per_axis;
        const int nc = cg.interior_per_axis;
        const auto cval = [&](int i, int j, int k) -> double {
            if (i < 1 || i > nc || j < 1 || j > nc || k < 1 || k > nc) return 0.0;
            return ce[static_cast<size_t>(cg.interior_index(i, j, k))];
        };
        parallel_for(static_cast<long long>(nf) * nf * nf, [&](long long mf) {
            int i, j, k;
            fg.interior_triple(mf, i, j, k);
            const int ic = i / 2, jc = j / 2, kc = k / 2;
            const bool oi = (i % 2) != 0, oj = (j % 2) != 0, ok = (k % 2) != 0;
            double v = 0.0;
            for (int dk = 0; dk <= (ok ? 1 : 0); ++dk)
                for (int dj = 0; dj <= (oj ? 1 : 0); ++dj)
                    for (int di = 0; di <= (oi ? 1 : 0); ++di)
                        v += cval(ic + di, jc + dj, kc + dk);
            const int denom = (oi ? 2 : 1) * (oj ? 2 : 1) * (ok ? 2 : 1);
            fe[static_cast<size_t>(mf)] += v / denom;
        });
    }

    int smoother_sweeps_;
    int coarse_sweeps_;
    std::vector<Level> levels_;
};

/// Preconditioned conjugate gradients on (A + diag(shift)) x = rhs. The
/// preconditioner is symmetric Gauss-Seidel (method cg) or one multigrid
/// V-cycle (method mgpcg). Throws NumericalError on budget exhaustion or if
/// the residual grows more than tenfold between iterations.
inline LinearStats solve_spd(const StencilOperator& A, const std::vector<double>* shift,
                             const std::vector<double>& rhs, std::vector<double>& x,
                             const LinearSolveConfig& cfg, MultigridHierarchy* mg = nullptr) {
    const size_t count = rhs.size();
    x.assign(count, 0.0);
    const double rhs_norm = detail::norm2(rhs);
    if (rhs_norm == 0.0) return {0, 0.0};

    if (cfg.method == LinearMethod::mgpcg && mg) mg->set_shift(shift);

    std::vector<double> r = rhs;  // x = 0
    std::vector<double> z(count), p(count), q(count);
    const auto precondition = [&](const std::vector<double>& rin, std::vector<double>& zout) {
        if (cfg.method == LinearMethod::mgpcg && mg) {
            mg->apply(rin, zout);
        } else {
            zout.assign(count, 0.0);
            detail::gauss_seidel_sweep(A, shift, rin, zout, true);
            detail::gauss_seidel_sweep(A, shift, rin, zout, false);
        }
    };

    precondition(r, z);
    p = z;
    double rho = detail::dot(r, z);
    double res_norm = rhs_norm;
    double prev_norm = rhs_norm;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        A.apply(p, q, shift);
        const double pq = detail::dot(p, q);
        if (!(pq > 0.0))
            throw NumericalError("solve_spd: operator is not positive definite (p^T A p = " +
                                 std::to_string(pq) + ")");
        const double alpha = rho / pq;
        parallel_for(static_cast<long long>(count), [&](long long i) {
            x[static_cast<size_t>(i)] += alpha * p[static_cast<size_t>(i)];
            r[static_cast<size_t>(i)] -= alpha * q[static_cast<size_t>(i)];
        });
        res_norm = detail::norm2(r);
        if (res_norm <= cfg.rel_tol * rhs_norm) return {it, res_norm / rhs_norm};
        if (res_norm > 10.0 * prev_norm)
            throw NumericalError("solve_spd: residual diverged at iteration " + std::to_string(it),
                                 res_norm / rhs_norm);
        prev_norm = std::min(prev_norm, res_norm);
        precondition(r, z);
        const double rho_next = detail::dot(r, z);
        const double beta = rho_next / rho;
        rho = rho_next;
        parallel_for(static_cast<long long>(count), [&](long long i) {
            p[static_cast<size_t>(i)] = z[static_cast<size_t>(i)] + beta * p[static_cast<size_t>(i)];
        });
    }
    throw NumericalError("solve_spd: no convergence within " +
                             std::to_string(cfg.max_iterations) + " iterations",
                         res_norm / rhs_norm);
}

}  // namespace stericpb

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stericpb/assembly.hpp"
#include "stericpb/pipeline.hpp"

using namespace stericpb;

namespace {

struct SmallProblem {
    UniformGrid3 grid;
    DielectricModel model;
    GridFunction singular;
    GridFunction dirichlet;
    BulkState bulk;
    PhysicalConstants constants;
    AssembledSystem system;
};

SmallProblem make_sphere_problem(int n_interior, double radius = 1.2) {
    SmallProblem p;
    p.grid = build_grid(2.0, n_interior);
    p.constants = PhysicalConstants{};
    p.bulk = make_bulk({IonSpecies{1, 21.0, molar_to_density(0.1)},
                        IonSpecies{-1, 47.0, molar_to_density(0.1)}},
                       20.8);
    std::vector<Atom> atoms{Atom{{0, 0, 0}, -1.0, radius}};
    const GridFunction phi = sphere_union_levelset(atoms, p.grid);
    p.model = build_dielectric(phi, 1.0, 78.0, 0.8);
    p.singular = singular_potential_field(p.grid, atoms, p.constants, 1.0);
    p.dirichlet = yukawa_dirichlet_field(p.grid, atoms, p.constants, p.bulk, 1.0, 78.0);
    p.system = assemble_system(p.grid, p.model, p.singular, p.dirichlet,
                               p.constants.source_scale());
    return p;
}

/// Brute-force dense assembly straight from the discretized equations,
/// with its own harmonic averaging; compares against the stencil path.
void dense_reference(const UniformGrid3& grid, const GridFunction& eps, double eps_m,
                     const GridFunction& uf, const GridFunction& dirichlet,
                     Eigen::MatrixXd& A_ref, Eigen::VectorXd& b_ref) {
    const auto ha = [](double a, double b) { return 2.0 * a * b / (a + b); };
    const long long n = grid.interior_count();
    const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    A_ref = Eigen::MatrixXd::Zero(n, n);
    b_ref = Eigen::VectorXd::Zero(n);
    const int N = grid.interior_per_axis;
    const int off[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    for (int k = 1; k <= N; ++k)
        for (int j = 1; j <= N; ++j)
            for (int i = 1; i <= N; ++i) {
                const long long m = grid.interior_index(i, j, k);
                for (const auto& d : off) {
                    const int ii = i + d[0], jj = j + d[1], kk = k + d[2];
                    const double face = ha(eps.at(i, j, k), eps.at(ii, jj, kk));
                    A_ref(m, m) += face * inv_h2;
                    if (grid.is_interior(ii, jj, kk))
                        A_ref(m, grid.interior_index(ii, jj, kk)) -= face * inv_h2;
                    else
                        b_ref(m) += face * inv_h2 * dirichlet.at(ii, jj, kk);
                    b_ref(m) += (face - eps_m) * inv_h2 * (uf.at(ii, jj, kk) - uf.at(i, j, k));
                }
            }
}

}  // namespace

TEST_CASE("stencil annihilates constants", "[assembly]") {
    const SmallProblem p = make_sphere_problem(5);
    GridFunction c(p.grid, GridFunction::Unit::potential, 3.7);
    std::vector<double> out;
    p.system.op.apply_full(c, out);
    const double scale = 78.0 / (p.grid.spacing * p.grid.spacing) * 3.7;
    for (double v : out) REQUIRE(std::abs(v) <= 1e-12 * scale);
}

TEST_CASE("unit-coefficient stencil reproduces the second difference of x^2", "[assembly]") {
    const UniformGrid3 grid = build_grid(2.0, 5);
    GridFunction phi(grid, GridFunction::Unit::none, 100.0);  // pure solvent
    const DielectricModel model = build_dielectric(phi, 1.0, 1.0, 0.5);  // eps == 1
    const StencilOperator op = build_stencil(grid, model);
    GridFunction f(grid, GridFunction::Unit::potential);
    for (int k = 0; k < grid.points_per_axis(); ++k)
        for (int j = 0; j < grid.points_per_axis(); ++j)
            for (int i = 0; i < grid.points_per_axis(); ++i)
                f.at(i, j, k) = grid.coord(i) * grid.coord(i);
    std::vector<double> out;
    op.apply_full(f, out);
    for (double v : out) REQUIRE(v == Catch::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("operator is symmetric", "[assembly]") {
    const SmallProblem p = make_sphere_problem(3);
    const Eigen::MatrixXd A = oracles::dense_operator(p.system.op);
    REQUIRE((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-13 * A.cwiseAbs().maxCoeff());
    // positive diagonal, nonpositive off-diagonal
    for (long long m = 0; m < A.rows(); ++m) {
        REQUIRE(A(m, m) > 0.0);
        for (long long j = 0; j < A.cols(); ++j)
            if (j != m) REQUIRE(A(m, j) <= 0.0);
    }
}

TEST_CASE("rhs vanishes without dielectric contrast, atoms and boundary data", "[assembly]") {
    const UniformGrid3 grid = build_grid(2.0, 4);
    GridFunction phi(grid, GridFunction::Unit::none, -100.0);  // all solute
    const DielectricModel model = build_dielectric(phi, 2.0, 2.0, 0.5);
    GridFunction zero_f(grid, GridFunction::Unit::potential, 0.0);
    GridFunction zero_d(grid, GridFunction::Unit::potential, 0.0);
    const AssembledSystem sys = assemble_system(grid, model, zero_f, zero_d, 1.0);
    for (double b : sys.rhs) REQUIRE(b == 0.0);

    // eps == eps_m makes the singular source vanish even with atoms present
    PhysicalConstants constants;
    std::vector<Atom> atoms{Atom{{0.3, -0.2, 0.1}, -1.0, 0.8}};
    const GridFunction uf = singular_potential_field(grid, atoms, constants, 2.0);
    const AssembledSystem sys2 = assemble_system(grid, model, uf, zero_d, 1.0);
    for (double b : sys2.rhs) REQUIRE(std::abs(b) <= 1e-9);
}

TEST_CASE("dense brute-force assembly matches the production system", "[assembly]") {
    const SmallProblem p = make_sphere_problem(5);
    Eigen::MatrixXd A_ref;
    Eigen::VectorXd b_ref;
    dense_reference(p.grid, p.model.eps, p.model.eps_solute, p.singular, p.dirichlet, A_ref,
                    b_ref);
    const Eigen::MatrixXd A = oracles::dense_operator(p.system.op);
    REQUIRE((A - A_ref).cwiseAbs().maxCoeff() <= 1e-11 * A_ref.cwiseAbs().maxCoeff());
    double worst = 0.0;
    for (long long m = 0; m < b_ref.size(); ++m)
        worst = std::max(worst, std::abs(b_ref(m) - p.system.rhs[static_cast<size_t>(m)]));
    REQUIRE(worst <= 1e-11 * (1.0 + b_ref.cwiseAbs().maxCoeff()));
}

TEST_CASE("residual is linear when the solvent mask vanishes", "[assembly]") {
    const UniformGrid3 grid = build_grid(2.0, 3);
    GridFunction phi(grid, GridFunction::Unit::none, -100.0);  // chi == 0
    const DielectricModel model = build_dielectric(phi, 2.0, 78.0, 0.5);
    GridFunction zero_f(grid, GridFunction::Unit::potential, 0.0);
    GridFunction dir(grid, GridFunction::Unit::potential, 0.0);
    for (int i = 0; i < grid.points_per_axis(); ++i)
        for (int j = 0; j < grid.points_per_axis(); ++j) dir.at(i, j, 0) = 1.5;
    const AssembledSystem sys = assemble_system(grid, model, zero_f, dir, 1.0);
    const BulkState bulk = make_bulk({IonSpecies{1, 21.0, molar_to_density(0.1)},
                                      IonSpecies{-1, 47.0, molar_to_density(0.1)}},
                                     20.8);
    StericDirectClosure closure(bulk);
    // one dense solve zeroes the residual
    const std::vector<double> x = oracles::dense_solve_small(sys.op, nullptr, sys.rhs);
    std::vector<double> f;
    residual(sys, closure, x, f);
    for (double v : f) REQUIRE(std::abs(v) <= 1e-10);
}

TEST_CASE("jacobian diagonal: zero outside solvent, nonpositive, matches differences",
          "[assembly]") {
    const SmallProblem p = make_sphere_problem(4);
    StericDirectClosure closure(p.bulk);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> psi(p.system.rhs.size());
    for (auto& v : psi) v = dist(rng);

    std::vector<double> gp;
    jacobian_diag(p.system, closure, psi, gp);
    for (size_t m = 0; m < gp.size(); ++m) {
        REQUIRE(gp[m] <= 0.0);
        if (p.system.solvent_mask[m] == 0.0) REQUIRE(gp[m] == 0.0);
    }

    // diagonal finite difference of the residual: dF_m/dpsi_m = A_mm - g'_m
    std::vector<double> f_plus, f_minus;
    const double step = 1e-6;
    std::uniform_int_distribution<long long> pick(0, static_cast<long long>(psi.size()) - 1);
    for (int trial = 0; trial < 10; ++trial) {
        const long long m = pick(rng);
        std::vector<double> pp = psi, pm = psi;
        pp[static_cast<size_t>(m)] += step;
        pm[static_cast<size_t>(m)] -= step;
        residual(p.system, closure, pp, f_plus);
        residual(p.system, closure, pm, f_minus);
        const double fd = (f_plus[static_cast<size_t>(m)] - f_minus[static_cast<size_t>(m)]) /
                          (2 * step);
        const double analytic = p.system.op.diagonal(m) - gp[static_cast<size_t>(m)];
        REQUIRE(fd == Catch::Approx(analytic).epsilon(1e-5));
    }
}

TEST_CASE("residual shift is exactly linear in the linear part", "[assembly]") {
    const SmallProblem p = make_sphere_problem(3);
    const BulkState& bulk = p.bulk;
    StericDirectClosure closure(bulk);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> psi(p.system.rhs.size()), delta(p.system.rhs.size());
    for (auto& v : psi) v = dist(rng);
    for (auto& v : delta) v = dist(rng);

    // [F(psi+delta) - F(psi)] restricted to chi == 0 points equals A delta
    std::vector<double> f0, f1, adelta, shifted(psi.size());
    for (size_t m = 0; m < psi.size(); ++m) shifted[m] = psi[m] + delta[m];
    residual(p.system, closure, psi, f0);
    residual(p.system, closure, shifted, f1);
    p.system.op.apply(delta, adelta);
    for (size_t m = 0; m < psi.size(); ++m)
        if (p.system.solvent_mask[m] == 0.0)
            REQUIRE(f1[m] - f0[m] == Catch::Approx(adelta[m]).margin(1e-9));
}

TEST_CASE("manufactured source anchors", "[assembly]") {
    const UniformGrid3 grid = build_grid(10.0, 9);  // contains the origin
    PhysicalConstants constants;
    const BulkState bulk = make_bulk({IonSpecies{1, 21.024576, molar_to_density(0.1)},
                                      IonSpecies{-1, 47.437928, molar_to_density(0.1)}},
                                     20.796875);
    StericDirectClosure closure(bulk);
    const MmsProblem mms =
        mms_source(grid, 1.0, 78.0, 1.5, 5.0, -5.0, constants, closure, 1000.0);
    CHECK(mms.exact.at(5, 5, 5) == Catch::Approx(1000.0).epsilon(1e-14));          // origin
    CHECK(mms.exact.at(10, 5, 5) == Catch::Approx(1000.0 / std::exp(1.0)).epsilon(1e-14));
    for (double v : mms.extra_source) REQUIRE(std::isfinite(v));
    mms.exact.check_finite("exact");
}

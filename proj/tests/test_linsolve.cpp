#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stericpb/linsolve.hpp"

using namespace stericpb;

namespace {

StencilOperator make_operator(int n_interior, double eps_lo, double eps_hi, double radius = 1.2) {
    const UniformGrid3 grid = build_grid(2.0, n_interior);
    std::vector<Atom> atoms{Atom{{0, 0, 0}, 0.0, radius}};
    const GridFunction phi = sphere_union_levelset(atoms, grid);
    const DielectricModel model = build_dielectric(phi, eps_lo, eps_hi, 0.8);
    return build_stencil(grid, model);
}

std::vector<double> random_vector(size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("zero rhs returns the zero vector in zero iterations", "[linsolve]") {
    const StencilOperator op = make_operator(4, 1.0, 78.0);
    std::vector<double> rhs(static_cast<size_t>(op.grid.interior_count()), 0.0), x;
    const LinearStats stats = solve_spd(op, nullptr, rhs, x, LinearSolveConfig{});
    CHECK(stats.iterations == 0);
    for (double v : x) REQUIRE(v == 0.0);
}

TEST_CASE("CG agrees with the dense direct oracle", "[linsolve]") {
    const StencilOperator op = make_operator(3, 1.0, 1.0);
    const auto rhs = random_vector(static_cast<size_t>(op.grid.interior_count()), 42);
    const auto ref = oracles::dense_solve_small(op, nullptr, rhs);
    std::vector<double> x;
    LinearSolveConfig cfg;
    cfg.rel_tol = 1e-12;
    solve_spd(op, nullptr, rhs, x, cfg);
    double scale = 0.0;
    for (double v : ref) scale = std::max(scale, std::abs(v));
    for (size_t m = 0; m < ref.size(); ++m) REQUIRE(std::abs(x[m] - ref[m]) <= 1e-10 * scale);

    // shifted system against the oracle as well
    auto shift = random_vector(rhs.size(), 7);
    for (auto& s : shift) s = std::abs(s) * 50.0;
    const auto ref2 = oracles::dense_solve_small(op, &shift, rhs);
    solve_spd(op, &shift, rhs, x, cfg);
    for (size_t m = 0; m < ref2.size(); ++m) REQUIRE(std::abs(x[m] - ref2[m]) <= 1e-10 * scale);
}

TEST_CASE("dominant diagonal shift converges in a few iterations", "[linsolve]") {
    const StencilOperator op = make_operator(6, 1.0, 78.0);
    const size_t n = static_cast<size_t>(op.grid.interior_count());
    std::vector<double> shift(n, 1e7);
    const auto rhs = random_vector(n, 3);
    std::vector<double> x;
    const LinearStats stats = solve_spd(op, &shift, rhs, x, LinearSolveConfig{});
    CHECK(stats.iterations <= 5);
}

TEST_CASE("CG and multigrid-preconditioned CG agree", "[linsolve]") {
    const StencilOperator op = make_operator(9, 1.0, 78.0);  // 10 intervals -> 2 levels
    const size_t n = static_cast<size_t>(op.grid.interior_count());
    const auto rhs = random_vector(n, 21);

    LinearSolveConfig cg_cfg;
    cg_cfg.method = LinearMethod::cg;
    cg_cfg.rel_tol = 1e-11;
    std::vector<double> x_cg;
    solve_spd(op, nullptr, rhs, x_cg, cg_cfg);

    MultigridHierarchy mg(op, 2, 40);
    CHECK(mg.level_count() >= 2);
    LinearSolveConfig mg_cfg;
    mg_cfg.method = LinearMethod::mgpcg;
    mg_cfg.rel_tol = 1e-11;
    std::vector<double> x_mg;
    const LinearStats stats = solve_spd(op, nullptr, rhs, x_mg, mg_cfg, &mg);

    double scale = 0.0, diff = 0.0;
    for (size_t m = 0; m < n; ++m) {
        scale = std::max(scale, std::abs(x_cg[m]));
        diff = std::max(diff, std::abs(x_cg[m] - x_mg[m]));
    }
    REQUIRE(diff <= 1e-9 * scale);
    REQUIRE(stats.iterations >= 1);
}

TEST_CASE("multigrid beats plain smoothing on larger grids", "[linsolve]") {
    const StencilOperator op = make_operator(19, 1.0, 78.0);  // 20 intervals -> 3 levels
    MultigridHierarchy mg(op, 2, 40);
    CHECK(mg.level_count() == 3);
    const size_t n = static_cast<size_t>(op.grid.interior_count());
    const auto rhs = random_vector(n, 4);
    LinearSolveConfig cfg;
    cfg.method = LinearMethod::mgpcg;
    std::vector<double> x;
    const LinearStats stats = solve_spd(op, nullptr, rhs, x, cfg, &mg);
    CHECK(stats.iterations <= 30);
}

TEST_CASE("iteration budget exhaustion is a numerical failure", "[linsolve]") {
    const StencilOperator op = make_operator(9, 1.0, 78.0);
    const auto rhs = random_vector(static_cast<size_t>(op.grid.interior_count()), 8);
    LinearSolveConfig cfg;
    cfg.max_iterations = 1;
    cfg.rel_tol = 1e-14;
    std::vector<double> x;
    CHECK_THROWS_AS(solve_spd(op, nullptr, rhs, x, cfg), NumericalError);
}

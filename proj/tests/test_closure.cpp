#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stericpb/closure.hpp"

using namespace stericpb;

namespace {
BulkState bikerman_bulk() {
    // single species with v1 = v0 and v1*c1_inf = 0.1 -> gamma_inf = 0.9
    return make_bulk({IonSpecies{1, 20.0, 0.1 / 20.0}}, 20.0);
}
BulkState binary_bulk() {
    return make_bulk({IonSpecies{1, 21.024576, molar_to_density(0.1)},
                      IonSpecies{-1, 47.437928, molar_to_density(0.1)}},
                     20.796875);
}
}  // namespace

TEST_CASE("f_gamma anchors", "[closure]") {
    const BulkState bulk = binary_bulk();
    CHECK(f_gamma(bulk.gamma_inf, 0.0, bulk) == Catch::Approx(0.0).margin(1e-14));
    CHECK(f_gamma(1.0, -3.0, bulk) > 0.0);
    CHECK(f_gamma(1.0, 5.0, bulk) > 0.0);

    const BulkState bik = bikerman_bulk();
    const double expected = 0.5 - 1.0 + 0.1 * (0.5 / 0.9) * std::exp(2.0);
    CHECK(f_gamma(0.5, -2.0, bik) == Catch::Approx(expected).epsilon(1e-14));
    CHECK(expected == Catch::Approx(-0.0895).margin(5e-4));

    CHECK_THROWS_AS(f_gamma(0.0, 0.0, bulk), std::invalid_argument);
    CHECK_THROWS_AS(f_gamma(-0.1, 0.0, bulk), std::invalid_argument);
}

TEST_CASE("f is strictly increasing in gamma", "[closure]") {
    const BulkState bulk = binary_bulk();
    for (double u : {-8.0, -1.0, 0.0, 2.5, 10.0}) {
        double prev = f_gamma(1e-6, u, bulk);
        for (double g = 0.05; g < 1.0; g += 0.05) {
            const double v = f_gamma(g, u, bulk);
            REQUIRE(v > prev);
            prev = v;
        }
        // derivative positive as the proof computes it
        REQUIRE(f_gamma_deriv(0.3, u, bulk) > 0.0);
    }
}

TEST_CASE("solve_gamma returns the bulk root with zero iterations at u=0", "[closure]") {
    const BulkState bulk = binary_bulk();
    const GammaResult r = solve_gamma_log(0.0, bulk, std::nullopt, 1e-14);
    CHECK(r.iterations == 0);
    CHECK(r.gamma == bulk.gamma_inf);
    CHECK(solve_gamma(0.0, bulk) == bulk.gamma_inf);
}

TEST_CASE("solve_gamma matches the Bikerman closed form", "[closure]") {
    const BulkState bik = bikerman_bulk();
    const double expected = 0.9 / (0.9 + 0.1 * std::exp(2.0));
    CHECK(solve_gamma(-2.0, bik) == Catch::Approx(expected).margin(1e-12));
    const double g = solve_gamma(-2.0, bik);
    // volume-fraction identity: v1 c1 = 1 - gamma
    const auto c = concentrations_from_gamma(g, -2.0, bik);
    CHECK(20.0 * c[0] == Catch::Approx(1.0 - expected).margin(1e-12));
    // cross-check against the bisection oracle
    CHECK(g == Catch::Approx(oracles::bisect_gamma(-2.0, bik).value).margin(1e-12));
}

TEST_CASE("solve_gamma agrees with bisection on mixtures", "[closure]") {
    const BulkState two = binary_bulk();
    CHECK(solve_gamma(3.0, two) ==
          Catch::Approx(oracles::bisect_gamma(3.0, two).value).margin(1e-12));

    std::mt19937 rng(2024);
    for (int trial = 0; trial < 3; ++trial) {
        const BulkState bulk = oracles::random_bulk(rng);
        for (double u = -40.0; u <= 40.0; u += 2.5) {
            const double mine = solve_gamma(u, bulk);
            const double ref = oracles::bisect_gamma(u, bulk).value;
            REQUIRE(mine == Catch::Approx(ref).margin(1e-12));
        }
    }
}

TEST_CASE("solve_gamma root is independent of the initial guess", "[closure]") {
    const BulkState bulk = binary_bulk();
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(1e-8, 1.0 - 1e-8);
    const double ref = solve_gamma(-4.0, bulk);
    for (int trial = 0; trial < 20; ++trial) {
        const double g = solve_gamma(-4.0, bulk, dist(rng));
        REQUIRE(std::abs(g - ref) <= 1e-13);
    }
    CHECK_THROWS_AS(solve_gamma(-4.0, bulk, 1.5), std::invalid_argument);
}

TEST_CASE("solve_gamma rejects unsolvable input", "[closure]") {
    const BulkState bulk = binary_bulk();
    CHECK_THROWS_AS(solve_gamma(std::numeric_limits<double>::quiet_NaN(), bulk), NumericalError);
    CHECK_THROWS_AS(solve_gamma(0.0, bulk, std::nullopt, -1.0), std::invalid_argument);
}

TEST_CASE("concentrations: bulk state, suppression and bounds", "[closure]") {
    const BulkState bulk = binary_bulk();
    const auto c0 = concentrations_from_gamma(bulk.gamma_inf, 0.0, bulk);
    CHECK(c0[0] == Catch::Approx(bulk.species[0].bulk_density).epsilon(1e-14));
    CHECK(c0[1] == Catch::Approx(bulk.species[1].bulk_density).epsilon(1e-14));

    // cation suppressed at strongly positive potential
    const double g50 = solve_gamma(50.0, bulk);
    const auto c50 = concentrations_from_gamma(g50, 50.0, bulk);
    CHECK(c50[0] < 1e-20);

    for (double u = -40.0; u <= 40.0; u += 1.0) {
        const GammaResult r = solve_gamma_log(u, bulk, std::nullopt, 1e-14);
        std::vector<double> c(2);
        concentrations_from_log_gamma(r.log_gamma, u, bulk, c.data());
        double occupied = 0.0;
        for (size_t l = 0; l < c.size(); ++l) {
            REQUIRE(c[l] > 0.0);
            REQUIRE(c[l] < 1.0 / bulk.species[l].volume);
            occupied += bulk.species[l].volume * c[l];
        }
        REQUIRE(occupied < 1.0);
    }
}

TEST_CASE("gamma_prime signs and finite-difference check", "[closure]") {
    // symmetric binary electrolyte with equal volumes: gamma'(0) = 0
    const BulkState sym = make_bulk({IonSpecies{1, 27.0, molar_to_density(0.1)},
                                     IonSpecies{-1, 27.0, molar_to_density(0.1)}},
                                    20.0);
    const auto c_sym = concentrations_from_gamma(sym.gamma_inf, 0.0, sym);
    CHECK(gamma_prime(sym.gamma_inf, c_sym, sym) == Catch::Approx(0.0).margin(1e-18));

    // single positive species: gamma' has the valence sign
    const BulkState pos = bikerman_bulk();
    const double g = solve_gamma(-1.0, pos);
    const auto c = concentrations_from_gamma(g, -1.0, pos);
    CHECK(gamma_prime(g, c, pos) > 0.0);

    // centered finite differences of the root
    const BulkState bulk = binary_bulk();
    for (double u : {-6.0, -2.0, 0.4, 3.0}) {
        const double gu = solve_gamma(u, bulk);
        const auto cu = concentrations_from_gamma(gu, u, bulk);
        const double analytic = gamma_prime(gu, cu, bulk);
        const double step = 1e-6;
        const double fd = (solve_gamma(u + step, bulk) - solve_gamma(u - step, bulk)) / (2 * step);
        REQUIRE(analytic == Catch::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("concentration_prime: classical limit, sign sum, finite differences", "[closure]") {
    // vanishing volumes recover the Boltzmann derivative -z c
    const BulkState tiny = make_bulk({IonSpecies{2, 1e-6, molar_to_density(0.1)},
                                      IonSpecies{-1, 1e-6, molar_to_density(0.2)}},
                                     1e-6);
    const double g = solve_gamma(0.7, tiny);
    const auto c = concentrations_from_gamma(g, 0.7, tiny);
    const auto dc = concentration_prime(g, gamma_prime(g, c, tiny), c, tiny);
    CHECK(dc[0] == Catch::Approx(-2.0 * c[0]).epsilon(1e-3));
    CHECK(dc[1] == Catch::Approx(1.0 * c[1]).epsilon(1e-3));

    // sum z_l dc_l/du <= 0 at randomized states
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u_dist(-30.0, 30.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const BulkState bulk = oracles::random_bulk(rng);
        const double u = u_dist(rng);
        const GammaResult r = solve_gamma_log(u, bulk, std::nullopt, 1e-14);
        std::vector<double> conc(static_cast<size_t>(bulk.count()));
        concentrations_from_log_gamma(r.log_gamma, u, bulk, conc.data());
        std::vector<double> d(conc.size());
        concentration_prime_from_slope(log_gamma_slope(r.gamma, conc.data(), bulk), conc.data(),
                                       bulk, d.data());
        // slack scales with the uncancelled magnitude sum(z^2 c): at deep
        // saturation the sum is an exact zero hidden under rounding noise
        double sum = 0.0, scale = 0.0;
        for (int l = 0; l < bulk.count(); ++l) {
            const auto& sp = bulk.species[static_cast<size_t>(l)];
            sum += sp.valence * d[static_cast<size_t>(l)];
            scale += double(sp.valence) * sp.valence * conc[static_cast<size_t>(l)];
        }
        REQUIRE(sum <= 1e-12 * scale + 1e-300);
    }

    // finite differences of the concentrations themselves
    const BulkState bulk = binary_bulk();
    for (double u : {-5.0, -0.3, 2.0}) {
        const double gu = solve_gamma(u, bulk);
        const auto cu = concentrations_from_gamma(gu, u, bulk);
        const auto du = concentration_prime(gu, gamma_prime(gu, cu, bulk), cu, bulk);
        const double step = 1e-6;
        const auto cp = concentrations_from_gamma(solve_gamma(u + step, bulk), u + step, bulk);
        const auto cm = concentrations_from_gamma(solve_gamma(u - step, bulk), u - step, bulk);
        for (size_t l = 0; l < cu.size(); ++l) {
            const double fd = (cp[l] - cm[l]) / (2 * step);
            REQUIRE(du[l] == Catch::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("classical closure values and saturation", "[closure]") {
    const BulkState bulk = make_bulk({IonSpecies{1, 21.0, molar_to_density(0.1)},
                                      IonSpecies{-1, 47.0, molar_to_density(0.1)}},
                                     20.8);
    ClassicalClosure closure(bulk);
    std::vector<double> c(2);
    closure.concentrations(0.0, c.data());
    CHECK(c[0] == Catch::Approx(bulk.species[0].bulk_density).epsilon(1e-14));

    closure.concentrations(-5.0, c.data());
    CHECK(density_to_molar(c[0]) == Catch::Approx(0.1 * std::exp(5.0)).epsilon(1e-12));

    // monotone decreasing in u for cations
    double prev = std::numeric_limits<double>::infinity();
    for (double u = -3.0; u <= 3.0; u += 0.25) {
        closure.concentrations(u, c.data());
        REQUIRE(c[0] < prev);
        prev = c[0];
    }

    CHECK(closure.saturation_count() == 0);
    double q, dq;
    closure.net_charge(1000.0, q, dq);
    CHECK(closure.saturation_count() > 0);

    // integral derivative equals the net charge
    for (double u : {-4.0, -0.5, 1.5}) {
        const double step = 1e-5;
        const double fd = (closure.charge_integral(u + step) - closure.charge_integral(u - step)) /
                          (2 * step);
        closure.net_charge(u, q, dq);
        REQUIRE(fd == Catch::Approx(q).epsilon(1e-8));
    }
}

TEST_CASE("steric direct closure matches the component pieces", "[closure]") {
    const BulkState bulk = binary_bulk();
    StericDirectClosure closure(bulk);
    for (double u : {-7.0, 0.0, 4.2}) {
        double q, dq;
        closure.net_charge(u, q, dq);
        const double g = solve_gamma(u, bulk);
        const auto c = concentrations_from_gamma(g, u, bulk);
        const auto dc = concentration_prime(g, gamma_prime(g, c, bulk), c, bulk);
        double q_ref = 0.0, dq_ref = 0.0;
        for (size_t l = 0; l < c.size(); ++l) {
            q_ref += bulk.species[l].valence * c[l];
            dq_ref += bulk.species[l].valence * dc[l];
        }
        REQUIRE(q == Catch::Approx(q_ref).margin(1e-18));
        REQUIRE(dq == Catch::Approx(dq_ref).margin(1e-18));
        REQUIRE(dq <= 0.0);
    }
}

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stericpb/solute.hpp"

using namespace stericpb;

TEST_CASE("PQR records parse from trailing fields", "[solute]") {
    std::istringstream in(
        "REMARK generated for tests\n"
        "ATOM 1 N ALA 1 0.0 0.0 0.0 -0.3000 1.8000\n"
        "HETATM 2 O HOH 2 1.0 -2.0 0.5 0.4170 1.4000\n"
        "TER\n"
        "END\n");
    const SoluteModel model = parse_pqr(in);
    REQUIRE(model.atoms.size() == 2);
    CHECK(model.atoms[0].position[0] == 0.0);
    CHECK(model.atoms[0].charge == Catch::Approx(-0.3));
    CHECK(model.atoms[0].radius == Catch::Approx(1.8));
    CHECK(model.atoms[1].position[1] == Catch::Approx(-2.0));
    CHECK(model.total_charge() == Catch::Approx(0.117));
}

TEST_CASE("malformed PQR fields carry the line number", "[solute]") {
    std::istringstream in(
        "ATOM 1 N ALA 1 0.0 0.0 0.0 -0.3 1.8\n"
        "ATOM 2 N ALA 1 0.0 0.0 X -0.3 1.8\n");
    try {
        parse_pqr(in);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }
}

TEST_CASE("empty atom list is a valid model", "[solute]") {
    std::istringstream in("REMARK no atoms here\n");
    const SoluteModel model = parse_pqr(in);
    CHECK(model.atoms.empty());
}

TEST_CASE("singular potential matches the coupling constant", "[solute]") {
    PhysicalConstants constants;  // 298.15 K

    // independent evaluation of beta e^2/(4 pi eps0) in Angstrom
    const double e = 1.602176634e-19, kb = 1.380649e-23, eps0 = 8.8541878128e-12;
    const double lambda_ref = e * e * 1e10 / (4.0 * std::numbers::pi * eps0 * kb * 298.15);
    CHECK(constants.coupling_length() == Catch::Approx(lambda_ref).epsilon(1e-14));
    CHECK(lambda_ref > 559.0);
    CHECK(lambda_ref < 562.0);

    std::vector<Atom> one{Atom{{0, 0, 0}, 1.0, 1.0}};
    CHECK(eval_psi_f(one, constants, 1.0, {lambda_ref, 0, 0}) == Catch::Approx(1.0).epsilon(1e-13));
    CHECK(eval_psi_f({}, constants, 1.0, {1, 2, 3}) == 0.0);

    std::vector<Atom> charged{Atom{{0, 0, 0}, -5.0, 1.0}};
    const double val = eval_psi_f(charged, constants, 1.0, {5.0, 0, 0});
    CHECK(val == Catch::Approx(-lambda_ref).epsilon(1e-13));
}

TEST_CASE("atom-coincident points are clamped, not infinite", "[solute]") {
    PhysicalConstants constants;
    std::vector<Atom> one{Atom{{0, 0, 0}, 1.0, 1.0}};
    const double v = eval_psi_f(one, constants, 2.0, {0, 0, 0});
    CHECK(std::isfinite(v));
    CHECK(v == Catch::Approx(constants.coupling_length() / (2.0 * 1e-6)).epsilon(1e-12));
}

TEST_CASE("Yukawa boundary values match a direct formula evaluation", "[solute]") {
    PhysicalConstants constants;
    const double lambda = constants.coupling_length();
    std::vector<IonSpecies> sp{{1, 21.0, molar_to_density(0.1)}, {-1, 47.0, molar_to_density(0.1)}};
    const BulkState bulk = make_bulk(sp, 20.8);
    std::vector<Atom> atoms{Atom{{0, 0, 0}, -5.0, 1.0}};

    const double zz = 1.0 * sp[0].bulk_density + 1.0 * sp[1].bulk_density;
    const double kappa_ref = std::sqrt(4.0 * std::numbers::pi * lambda * zz / 78.0);
    const double r = 10.0;
    const double expected = lambda * (-5.0) * std::exp(-kappa_ref * r) / (78.0 * r);

    const double got = eval_yukawa_boundary(atoms, constants, bulk, 78.0, {10.0, 0.0, 0.0});
    CHECK(got == Catch::Approx(expected).epsilon(1e-13));

    // zero ionic strength reduces to the plain Coulomb form with eps_w
    const BulkState empty = make_bulk({}, 20.8);
    const double coulomb = eval_yukawa_boundary(atoms, constants, empty, 78.0, {10.0, 0.0, 0.0});
    CHECK(coulomb == Catch::Approx(lambda * (-5.0) / (78.0 * r)).epsilon(1e-13));
    CHECK(eval_yukawa_boundary({}, constants, bulk, 78.0, {10.0, 0.0, 0.0}) == 0.0);

    // screened magnitude never exceeds the unscreened one
    CHECK(std::abs(got) <= std::abs(coulomb));
}

TEST_CASE("potentials are linear in the charges", "[solute]") {
    PhysicalConstants constants;
    std::vector<IonSpecies> sp{{1, 21.0, molar_to_density(0.2)}, {-1, 47.0, molar_to_density(0.2)}};
    const BulkState bulk = make_bulk(sp, 20.8);
    std::vector<Atom> atoms{Atom{{1, 0, 0}, 0.7, 1.0}, Atom{{-2, 1, 0}, -1.3, 1.5}};
    std::vector<Atom> doubled = atoms;
    for (auto& a : doubled) a.charge *= 2.0;
    const std::array<double, 3> x{4.0, 3.0, -2.0};
    CHECK(eval_psi_f(doubled, constants, 2.0, x) ==
          Catch::Approx(2.0 * eval_psi_f(atoms, constants, 2.0, x)).epsilon(1e-13));
    CHECK(eval_yukawa_boundary(doubled, constants, bulk, 78.0, x) ==
          Catch::Approx(2.0 * eval_yukawa_boundary(atoms, constants, bulk, 78.0, x)).epsilon(1e-13));
}

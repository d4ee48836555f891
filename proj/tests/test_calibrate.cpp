#include <catch2/catch_amalgamated.hpp>

#include "jointdet/calibrate.hpp"
#include "jointdet/families.hpp"
#include "support/fixtures.hpp"

using namespace jointdet;

TEST_CASE("atom builders reproduce the tabulated quantities") {
    const DiscreteProblem p = fixtures::two_point();

    const auto h0 = h0_error_atoms(p);
    REQUIRE(h0.size() == 2);
    CHECK_THAT(h0[0].statistic, Catch::Matchers::WithinRel(0.9, 1e-15));
    CHECK_THAT(h0[0].cost_declare0, Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(h0[0].cost_declare1, Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK_THAT(h0[1].statistic, Catch::Matchers::WithinRel(0.8, 1e-15));

    const auto h1 = h1_error_atoms(p);
    CHECK_THAT(h1[0].cost_declare0, Catch::Matchers::WithinAbs(0.55, 1e-15));
    CHECK_THAT(h1[0].cost_declare1, Catch::Matchers::WithinAbs(0.10, 1e-15));
    CHECK_THAT(h1[1].cost_declare0, Catch::Matchers::WithinAbs(0.45, 1e-15));
    CHECK_THAT(h1[1].cost_declare1, Catch::Matchers::WithinAbs(0.05, 1e-15));

    const auto c0 = classical_h0_error_atoms(p);
    CHECK_THAT(c0[0].statistic, Catch::Matchers::WithinRel(1.8, 1e-15));
    CHECK_THAT(c0[1].statistic, Catch::Matchers::WithinRel(1.6, 1e-15));
    CHECK_THAT(c0[0].cost_declare1, Catch::Matchers::WithinAbs(0.5, 1e-15));

    const auto c1 = classical_h1_error_atoms(p);
    CHECK_THAT(c1[0].statistic, Catch::Matchers::WithinRel(1.8, 1e-15));
    CHECK_THAT(c1[0].cost_declare1, Catch::Matchers::WithinAbs(0.10, 1e-14));
}

TEST_CASE("exact calibration hits representative targets on the two-point fixture") {
    const auto atoms = h0_error_atoms(fixtures::two_point());

    SECTION("target inside a step bracket randomizes on the atom") {
        const CalibrationResult r = solve_calibration(atoms, 0.7);
        CHECK(r.status == CalibrationStatus::exact);
        CHECK(r.lambda == 0.8);
        CHECK_THAT(r.gamma, Catch::Matchers::WithinAbs(0.4, 1e-12));
        CHECK_THAT(r.achieved_c0, Catch::Matchers::WithinAbs(0.7, 1e-15));
        CHECK(r.monotone_violations == 0);
    }

    SECTION("target on a step level uses a mid-interval threshold") {
        const CalibrationResult r = solve_calibration(atoms, 0.5);
        CHECK(r.status == CalibrationStatus::exact);
        CHECK(r.gamma == 0.0);
        CHECK(r.lambda > 0.8);
        CHECK(r.lambda < 0.9);
        CHECK(r.achieved_c0 == 0.5);
    }

    SECTION("extreme targets") {
        const CalibrationResult top = solve_calibration(atoms, 1.0);
        CHECK(top.status == CalibrationStatus::exact);
        CHECK(evaluate_c0(atoms, top.lambda, top.gamma) == 1.0);

        const CalibrationResult zero = solve_calibration(atoms, 0.0);
        CHECK(zero.status == CalibrationStatus::exact);
        CHECK(zero.lambda > 0.9);
        CHECK(evaluate_c0(atoms, zero.lambda, zero.gamma) == 0.0);
    }
}

TEST_CASE("every reachable target is achieved exactly") {
    const auto atoms = h0_error_atoms(fixtures::composite_null());
    for (double target : {0.31, 0.37, 0.45, 0.55, 0.61, 0.84, 1.0}) {
        const CalibrationResult r = solve_calibration(atoms, target);
        REQUIRE(r.status == CalibrationStatus::exact);
        CHECK_THAT(r.achieved_c0, Catch::Matchers::WithinAbs(target, 1e-15));
        CHECK_THAT(evaluate_c0(atoms, r.lambda, r.gamma),
                   Catch::Matchers::WithinAbs(target, 1e-15));
        CHECK(r.gamma >= 0.0);
        CHECK(r.gamma <= 1.0);
    }
}

TEST_CASE("targets below the floor report the floor") {
    const auto atoms = h0_error_atoms(fixtures::composite_null());
    const CalibrationResult r = solve_calibration(atoms, 0.2);
    CHECK(r.status == CalibrationStatus::unreachable_low);
    CHECK_THAT(r.achieved_c0, Catch::Matchers::WithinAbs(0.3, 1e-15));
}

TEST_CASE("targets above the ceiling report the ceiling") {
    const std::vector<CalibrationAtom> atoms{{1.0, 0.0, 0.4}};
    const CalibrationResult r = solve_calibration(atoms, 0.5);
    CHECK(r.status == CalibrationStatus::unreachable_high);
    CHECK(r.achieved_c0 == 0.4);
}

TEST_CASE("infinite-statistic atoms stay on the declare-1 side") {
    const std::vector<CalibrationAtom> atoms{{kInf, 0.1, 0.25}, {1.0, 0.0, 0.5}};
    const CalibrationResult r = solve_calibration(atoms, 0.25);
    CHECK(r.status == CalibrationStatus::exact);
    CHECK(r.lambda > 1.0);
    CHECK(evaluate_c0(atoms, r.lambda, r.gamma) == 0.25);
}

TEST_CASE("malformed atoms and targets are rejected") {
    CHECK_THROWS_AS(solve_calibration({{-0.5, 0.0, 1.0}}, 0.5), invalid_input);
    CHECK_THROWS_AS(solve_calibration({{std::nan(""), 0.0, 1.0}}, 0.5), invalid_input);
    CHECK_THROWS_AS(solve_calibration({{1.0, -0.1, 1.0}}, 0.5), invalid_input);
    CHECK_THROWS_AS(solve_calibration({{1.0, 0.0, 1.0}}, -0.1), invalid_input);
    CHECK_THROWS_AS(solve_calibration({{1.0, 0.0, 1.0}}, kInf), invalid_input);
}

TEST_CASE("atoms with cheaper declare-1 cost are counted as monotone violations") {
    // Levels run 0.5 -> 0.8 -> 0.5: the first atom's flip raises the cost.
    const std::vector<CalibrationAtom> atoms{{1.0, 0.5, 0.2}, {2.0, 0.0, 0.3}};
    const CalibrationResult r = solve_calibration(atoms, 0.65);
    CHECK(r.monotone_violations == 1);
    CHECK(r.status == CalibrationStatus::exact);
    CHECK_THAT(evaluate_c0(atoms, r.lambda, r.gamma),
               Catch::Matchers::WithinAbs(0.65, 1e-15));

    // Below every step level the solver reports the floor it can reach.
    const CalibrationResult low = solve_calibration(atoms, 0.35);
    CHECK(low.status == CalibrationStatus::unreachable_low);
    CHECK(low.achieved_c0 == 0.5);
}

TEST_CASE("cost curve over a threshold grid") {
    const auto atoms = h0_error_atoms(fixtures::two_point());
    const auto rows = cost_curve(atoms, {0.7, 0.8, 0.85, 0.9, 1.0});
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].c0_gamma0 == 1.0);
    CHECK(rows[0].c0_gamma1 == 1.0);
    CHECK(rows[1].c0_gamma0 == 0.5);
    CHECK(rows[1].c0_gamma1 == 1.0);
    CHECK(rows[2].c0_gamma0 == 0.5);  // between the atoms gamma cannot matter
    CHECK(rows[2].c0_gamma1 == 0.5);
    CHECK(rows[3].c0_gamma0 == 0.0);
    CHECK(rows[3].c0_gamma1 == 0.5);
    CHECK(rows[4].c0_gamma0 == 0.0);

    CHECK_THROWS_AS(cost_curve(atoms, {0.8, 0.8}), invalid_input);
    CHECK_THROWS_AS(cost_curve(atoms, {0.0, 0.5}), invalid_input);

    // The evaluator overload must match the atom overload on the same grid.
    const auto via_eval = cost_curve(
        [&](double lam, double g) { return evaluate_c0(atoms, lam, g); },
        {0.7, 0.8, 0.85, 0.9, 1.0});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(via_eval[i].c0_gamma0 == rows[i].c0_gamma0);
        CHECK(via_eval[i].c0_gamma1 == rows[i].c0_gamma1);
    }
    CHECK_THROWS_AS(
        cost_curve([](double, double) -> double { throw infeasible("nope"); }, {1.0}),
        numerical_domain);
}

TEST_CASE("calibrated thresholds transfer to the alternative-side atoms") {
    const DiscreteProblem p = fixtures::two_point();
    const CalibrationResult r = solve_calibration(h0_error_atoms(p), 0.7);
    const double c1 = evaluate_c0(h1_error_atoms(p), r.lambda, r.gamma);
    CHECK_THAT(c1, Catch::Matchers::WithinAbs(0.39, 1e-12));
    CHECK_THAT(c1, Catch::Matchers::WithinAbs(
                       error_probabilities(p, r.lambda, r.gamma).c1, 1e-12));
}

TEST_CASE("Monte Carlo calibration is reproducible and lands near the target") {
    Problem p;
    p.h0 = simple_gaussian_hypothesis(0.0, 1.0);
    p.h1 = gaussian_grid_hypothesis(0.0, 1.0, -8.0, 8.0, 201, 1.0);
    auto statistic = [p](const Vector& x) {
        return marginal_density(p.h1, x) / marginal_density(p.h0, x);
    };
    McCalibration mc{false_alarm_draw(p.h0, statistic), 200000, 3};

    const CalibrationResult r = solve_calibration(mc, 0.1);
    CHECK(r.status == CalibrationStatus::monte_carlo);
    CHECK(r.gamma >= 0.0);
    CHECK(r.gamma <= 1.0);
    CHECK(r.standard_error > 0.0);
    CHECK(std::fabs(r.achieved_c0 - 0.1) <= 3.0 * r.standard_error);

    const CalibrationResult again = solve_calibration(mc, 0.1);
    CHECK(again.lambda == r.lambda);
    CHECK(again.gamma == r.gamma);
    CHECK(again.achieved_c0 == r.achieved_c0);
    CHECK(again.standard_error == r.standard_error);

    CHECK_THROWS_AS(solve_calibration(McCalibration{nullptr, 100, 0}, 0.1), invalid_input);
    CHECK_THROWS_AS(solve_calibration(McCalibration{mc.draw, 0, 0}, 0.1), invalid_input);
}

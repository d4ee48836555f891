// Acceptance checks for the finite-sample joint detection/estimation library.
// Each numbered check prints exactly one PASS/FAIL line; the process exits
// nonzero if any check fails.  The CLI binary and the shipped configs are
// exercised through the paths baked in at compile time.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "jointdet/calibrate.hpp"
#include "jointdet/changepoint.hpp"
#include "jointdet/criteria.hpp"
#include "jointdet/discrete_optimal.hpp"
#include "jointdet/general_optimal.hpp"
#include "jointdet/model.hpp"
#include "jointdet/oracle.hpp"
#include "support/fixtures.hpp"

using namespace jointdet;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. The calibrated threshold rule matches an independent LP oracle.

bool criterion1(std::string& detail) {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(101);
    for (int inst = 0; inst < 25; ++inst) {
        const DiscreteProblem p = fixtures::random_instance(rng, 8, 3);
        const double lo = alpha_min(p) + 0.05;
        const auto atoms0 = h0_error_atoms(p);
        const auto atoms1 = h1_error_atoms(p);
        const CostTables tables = zero_one_tables(p);
        for (int j = 1; j <= 5; ++j) {
            const double alpha = lo + (0.95 - lo) * j / 6.0;
            const CalibrationResult cal = solve_calibration(atoms0, alpha);
            if (cal.status != CalibrationStatus::exact) {
                detail = "calibration not exact on instance " + std::to_string(inst);
                return false;
            }
            const double c1 = evaluate_c0(atoms1, cal.lambda, cal.gamma);
            const double ref = lp_optimal(tables, alpha).c1;
            if (std::fabs(c1 - ref) > 1e-9) {
                std::ostringstream ss;
                ss << "instance " << inst << " alpha " << alpha << ": calibrated c1 " << c1
                   << " vs lp " << ref;
                detail = ss.str();
                return false;
            }
        }
    }
    if (seconds_since(t0) >= 10.0) {
        detail = "took " + std::to_string(seconds_since(t0)) + " s, budget is 10 s";
        return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 2. Canonical two-point fixtures: threshold pair and cost floor.

bool criterion2(std::string& detail) {
    const auto t0 = clock_type::now();
    const DiscreteProblem a = fixtures::two_point();
    const CalibrationResult cal = solve_calibration(h0_error_atoms(a), 0.7);
    const double c1 = evaluate_c0(h1_error_atoms(a), cal.lambda, cal.gamma);
    std::ostringstream ss;
    if (std::fabs(cal.lambda - 0.8) > 1e-12 || std::fabs(cal.gamma - 0.4) > 1e-12) {
        ss << "expected (lambda, gamma) = (0.8, 0.4), got (" << cal.lambda << ", "
           << cal.gamma << ")";
        detail = ss.str();
        return false;
    }
    if (std::fabs(c1 - 0.39) > 1e-12) {
        ss << "expected c1 = 0.39, got " << c1;
        detail = ss.str();
        return false;
    }
    const double floor = alpha_min(fixtures::composite_null());
    if (std::fabs(floor - 0.3) > 1e-15) {
        ss << "expected composite-null alpha_min 0.3, got " << floor;
        detail = ss.str();
        return false;
    }
    if (seconds_since(t0) >= 1.0) {
        detail = "took " + std::to_string(seconds_since(t0)) + " s, budget is 1 s";
        return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 3. The general two-sided rule reproduces the tabulated threshold verdicts.

bool criterion3(std::string& detail) {
    std::mt19937_64 rng(202);
    for (int inst = 0; inst < 25; ++inst) {
        const DiscreteProblem p = fixtures::random_instance(rng, 8, 3);
        const Problem q = to_problem(p);
        for (double lambda : {0.3, 1.0, 2.7}) {
            for (std::size_t x = 0; x < p.size(); ++x) {
                const RandomizedVerdict tv = decide(p, x, lambda, 0.5);
                const GeneralVerdict gv =
                    optimal_decide(q, {static_cast<double>(x)}, lambda, 0.5);
                if (tv.decision != gv.decision) {
                    std::ostringstream ss;
                    ss << "instance " << inst << " point " << x << " lambda " << lambda
                       << ": " << to_string(tv.decision) << " vs " << to_string(gv.decision);
                    detail = ss.str();
                    return false;
                }
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// 4. A huge threshold drives the H0 cost to its pointwise floor.

bool criterion4(std::string& detail) {
    std::mt19937_64 rng(303);
    for (int inst = 0; inst < 10; ++inst) {
        const Problem q = to_problem(fixtures::random_instance(rng, 6, 3));
        const DetEstRule rule = rule_from_optimal(q, 1e8, 1.0);
        const double c0 = average_cost(q, rule, 0).value;
        const double floor = alpha_min_general(q).value;
        if (std::fabs(c0 - floor) > 1e-6) {
            std::ostringstream ss;
            ss << "instance " << inst << ": c0 " << c0 << " vs floor " << floor;
            detail = ss.str();
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// 5. Estimation-criterion identities: mmse reduction, window-shrink
//    convergence, and median optimality.

bool criterion5(std::string& detail) {
    // (a) the squared-error statistic reduces to mean-norm times density ratio.
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int inst = 0; inst < 10; ++inst) {
        Problem p;
        p.h0 = gaussian_grid_hypothesis(0.5 + unif(rng), 0.5 + 0.5 * unif(rng), -6.0, 8.0,
                                        161, 1.0);
        p.h1 = gaussian_grid_hypothesis(1.5 + 1.5 * unif(rng), 0.5 + 0.5 * unif(rng), -6.0,
                                        10.0, 161, 1.0);
        p.costs = mmse_costs();
        const Vector x{0.5 + 2.0 * unif(rng)};
        const CriterionPair pair = mmse_statistic(p, x);
        const double m0 = mmse_estimator(p.h0, x).at(0);
        const double m1 = mmse_estimator(p.h1, x).at(0);
        const double lhs = pair.a1 / pair.a0;
        const double rhs = (m1 * m1) / (m0 * m0) * marginal_density(p.h1, x) /
                           marginal_density(p.h0, x);
        if (std::fabs(lhs - rhs) > 1e-8) {
            std::ostringstream ss;
            ss << "mmse reduction off on instance " << inst << ": " << lhs << " vs " << rhs;
            detail = ss.str();
            return false;
        }
    }

    // (b) the exact-window statistic converges monotonically to the
    //     posterior-sup ratio as the window shrinks.
    const Problem g = fixtures::gaussian_grid();
    const Vector x1{1.0};
    const double sup = map_statistic(g, x1, make_map_config(0.1, 0, 1)).value;
    double prev = kInf;
    for (int k = 0; k <= 3; ++k) {
        const double delta = 0.1 / static_cast<double>(1 << k);
        // The window statistic is a mass; per unit width it estimates the sup.
        const double err =
            std::fabs(window_cost_statistic(g, x1, delta) / (2.0 * delta) - sup);
        if (!(err < prev)) {
            detail = "window errors not strictly decreasing at step " + std::to_string(k);
            return false;
        }
        prev = err;
    }
    if (!(prev < 4.5e-4)) {
        detail = "final window error " + std::to_string(prev) + " too large";
        return false;
    }

    // (c) the posterior median beats random probes on the absolute-error
    //     objective, on point priors where it is exactly optimal.
    std::mt19937_64 rng2(505);
    std::uniform_real_distribution<double> u5(-5.0, 5.0);
    const CostSpec ae = absolute_error_costs();
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t n = 2 + inst % 5;
        std::vector<Vector> nodes;
        std::vector<double> w;
        double total = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            nodes.push_back({u5(rng2) + 12.0 * static_cast<double>(l)});
            w.push_back(0.1 + std::fabs(u5(rng2)));
            total += w.back();
        }
        for (double& v : w) v /= total;
        HypothesisSpec h;
        h.family.density = [](const Vector& xx, const Vector& th) {
            return normal_pdf(xx[0], th[0], 6.0);
        };
        h.family.param_dim = 1;
        h.prior = Prior::point_masses(std::move(nodes), std::move(w));

        const Vector x{u5(rng2)};
        const double med = median_estimator(h, x);
        const double best = script_d(h, ae.c11, {med}, x);
        for (int i = 0; i < 64; ++i) {
            const double probe = 12.0 * u5(rng2);
            if (best > script_d(h, ae.c11, {probe}, x) + 1e-12) {
                std::ostringstream ss;
                ss << "median beaten by probe " << probe << " on instance " << inst;
                detail = ss.str();
                return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// 6. Estimator fixtures on the standard-normal conjugate grid at X = 1.

bool criterion6(std::string& detail) {
    const Problem g = fixtures::gaussian_grid();
    const Vector x{1.0};
    const double mmse = mmse_estimator(g.h1, x).at(0);
    const double med = median_estimator(g.h1, x);
    const double map = map_estimator(g.h1, x).value.at(0);
    std::ostringstream ss;
    if (std::fabs(mmse - 0.5) > 1e-6) {
        ss << "mmse " << mmse;
        detail = ss.str();
        return false;
    }
    if (std::fabs(med - 0.5) > 1e-4) {
        ss << "median " << med;
        detail = ss.str();
        return false;
    }
    if (std::fabs(map - 0.5) > 1e-4) {
        ss << "map " << map;
        detail = ss.str();
        return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 7. Changepoint statistics: window/cusum agreement, the five-sample window
//    fixture, and the tabulated three-sample encoding.

bool criterion7(std::string& detail) {
    std::mt19937_64 rng(606);
    std::normal_distribution<double> noise(0.3, 1.0);
    for (int series = 0; series < 100; ++series) {
        const std::size_t n = 4 + rng() % 12;
        const ChangepointModel m = gaussian_shift_changepoint(n, 0.0, 1.0, 1.0);
        Vector x(n);
        for (double& v : x) v = noise(rng);
        const CpStatistic w = windowed_statistic(m, x, 0, WindowWeighting::uniform);
        const CpStatistic c = cusum_statistic(m, x);
        if (w.value != c.value || w.tau_hat != c.tau_hat) {
            detail = "window m=0 differs from cusum on series " + std::to_string(series);
            return false;
        }
    }

    const ChangepointModel ratio = iid_changepoint(
        5, [](double) { return 0.0; }, [](double v) { return std::log(v); }, {});
    const CpStatistic win = windowed_statistic(ratio, {2.0, 2.0, 2.0, 2.0, 1.0}, 1,
                                               WindowWeighting::uniform);
    if (std::fabs(win.value - 28.0) > 1e-12 * 28.0 || win.tau_hat != 1) {
        std::ostringstream ss;
        ss << "five-sample window fixture gave (" << win.value << ", " << win.tau_hat
           << "), expected (28, 1)";
        detail = ss.str();
        return false;
    }

    const std::size_t n = 3;
    const double p0 = 0.4, p1 = 0.7;
    const ChangepointModel m = iid_changepoint(
        n, [p0](double v) { return std::log(v > 0.5 ? p0 : 1.0 - p0); },
        [p1](double v) { return std::log(v > 0.5 ? p1 : 1.0 - p1); }, {});
    DiscreteProblem dp;
    std::vector<Vector> series;
    for (int bits = 0; bits < 8; ++bits) {
        dp.alphabet.push_back(std::to_string(bits));
        series.push_back({static_cast<double>(bits & 1), static_cast<double>((bits >> 1) & 1),
                          static_cast<double>((bits >> 2) & 1)});
    }
    dp.f0.assign(1, std::vector<double>(8));
    dp.prior0 = {1.0};
    dp.f1.assign(n, std::vector<double>(8));
    for (std::size_t tau = 0; tau < n; ++tau) dp.prior1.push_back(m.conditional_weight(tau));
    for (int i = 0; i < 8; ++i) {
        dp.f0[0][i] = segment_likelihood(m, series[i], static_cast<long long>(n));
        for (std::size_t tau = 0; tau < n; ++tau)
            dp.f1[tau][i] = segment_likelihood(m, series[i], static_cast<long long>(tau));
    }
    dp.validate();
    for (int i = 0; i < 8; ++i) {
        const double b = bayes_cp_statistic(m, series[i]).value;
        const double s = glr_statistic(dp, static_cast<std::size_t>(i));
        if (std::fabs(s - b) > 1e-12 * std::max(s, b)) {
            detail = "encoded statistic mismatch on series " + std::to_string(i);
            return false;
        }
        for (double lambda : {0.2, 0.5, 1.1}) {
            const CpVerdict v = cp_decide(m, series[i], lambda, 0.5);
            const RandomizedVerdict d = decide(dp, static_cast<std::size_t>(i), lambda, 0.5);
            if (v.decision != d.decision) {
                detail = "encoded verdict mismatch on series " + std::to_string(i);
                return false;
            }
            if (v.decision == Decision::h1 && *v.tau_hat != d.est1.front()) {
                detail = "encoded change-time mismatch on series " + std::to_string(i);
                return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// 8. Calibration contract: exact on tabulated problems, Monte Carlo within
//    stated uncertainty, bit-identical under seed reuse.

bool criterion8(std::string& detail) {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(707);
    for (int inst = 0; inst < 10; ++inst) {
        const DiscreteProblem p = fixtures::random_instance(rng, 8, 3);
        const auto atoms = h0_error_atoms(p);
        const double lo = alpha_min(p);
        for (double frac : {0.2, 0.5, 0.8}) {
            const double target = lo + 0.02 + frac * (0.97 - lo);
            const CalibrationResult res = solve_calibration(atoms, target);
            if (res.status != CalibrationStatus::exact ||
                std::fabs(res.achieved_c0 - target) > 1e-12) {
                std::ostringstream ss;
                ss << "tabulated target " << target << " achieved " << res.achieved_c0;
                detail = ss.str();
                return false;
            }
        }
    }

    const Problem g = fixtures::gaussian_grid();
    auto statistic = [g](const Vector& x) {
        return marginal_density(g.h1, x) / marginal_density(g.h0, x);
    };
    const CalibrationDraw draw = false_alarm_draw(g.h0, statistic);
    int covered = 0;
    CalibrationResult first;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const CalibrationResult res =
            solve_calibration(McCalibration{draw, 1000000, seed}, 0.1);
        if (res.status != CalibrationStatus::monte_carlo || !(res.standard_error > 0.0)) {
            detail = "unexpected Monte Carlo status on seed " + std::to_string(seed);
            return false;
        }
        if (std::fabs(res.achieved_c0 - 0.1) <= 3.0 * res.standard_error) ++covered;
        if (seed == 0) first = res;
    }
    if (covered < 19) {
        detail = "only " + std::to_string(covered) + "/20 seeds within 3 standard errors";
        return false;
    }
    const CalibrationResult rerun = solve_calibration(McCalibration{draw, 1000000, 0}, 0.1);
    if (rerun.lambda != first.lambda || rerun.gamma != first.gamma ||
        rerun.achieved_c0 != first.achieved_c0 ||
        rerun.standard_error != first.standard_error) {
        detail = "seed reuse did not reproduce bit-identical results";
        return false;
    }
    if (seconds_since(t0) >= 120.0) {
        detail = "took " + std::to_string(seconds_since(t0)) + " s, budget is 120 s";
        return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 9. CLI contract: validate flags each broken config, run emits the canonical
//    frontier row.

int cli_exit(const std::string& args) {
    const std::string cmd = std::string(JOINTDET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool criterion9(std::string& detail) {
    const std::string cfg = JOINTDET_CONFIG_DIR;
    const std::vector<std::string> broken{"broken_empty", "broken_prior_sum",
                                          "broken_negative_entry", "broken_alpha",
                                          "broken_unknown_experiment"};
    for (const std::string& name : broken) {
        const int rc = cli_exit("validate --config " + cfg + "/broken/" + name + ".json");
        if (rc != 2) {
            detail = name + " exited " + std::to_string(rc) + ", expected 2";
            return false;
        }
    }
    if (cli_exit("validate --config " + cfg + "/two_point_frontier.json") != 0) {
        detail = "valid config did not validate cleanly";
        return false;
    }

    const fs::path out = fs::temp_directory_path() / "jointdet_acceptance";
    fs::remove_all(out);
    fs::create_directories(out);
    if (cli_exit("run --config " + cfg + "/two_point_frontier.json --output " +
                 out.string()) != 0) {
        detail = "frontier run failed";
        return false;
    }
    std::ifstream in(out / "frontier.csv");
    if (!in) {
        detail = "frontier.csv missing";
        return false;
    }
    std::string line;
    std::getline(in, line);  // header
    bool found = false;
    while (std::getline(in, line)) {
        std::istringstream cells(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() == 5 && row[0] == 0.7) {
            found = std::fabs(row[1] - 0.8) <= 1e-12 && std::fabs(row[2] - 0.4) <= 1e-12 &&
                    std::fabs(row[3] - 0.39) <= 1e-12;
            if (!found) {
                std::ostringstream ss;
                ss << "alpha=0.7 row gave lambda " << row[1] << ", gamma " << row[2]
                   << ", c1 " << row[3];
                detail = ss.str();
                return false;
            }
        }
    }
    if (!found) {
        detail = "no alpha=0.7 row in frontier.csv";
        return false;
    }

    // Exit-code ladder: unreachable constraint maps to 3.
    if (cli_exit("run --config " + cfg + "/composite_null_frontier.json --alpha 0.25") != 3) {
        detail = "unreachable alpha did not exit 3";
        return false;
    }
    return true;
}

struct Criterion {
    int number;
    const char* label;
    bool (*fn)(std::string&);
};

}  // namespace

int main() {
    const std::vector<Criterion> checks{
        {1, "calibrated rule matches the lp oracle on random instances", criterion1},
        {2, "canonical fixture thresholds and cost floor", criterion2},
        {3, "general rule reproduces tabulated verdicts", criterion3},
        {4, "huge-threshold cost reaches the pointwise floor", criterion4},
        {5, "estimation criterion identities", criterion5},
        {6, "gaussian-grid estimator fixtures", criterion6},
        {7, "changepoint statistics and tabulated encoding", criterion7},
        {8, "calibration exactness, coverage, and reproducibility", criterion8},
        {9, "cli validate and frontier run", criterion9},
    };
    int failures = 0;
    for (const Criterion& c : checks) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = e.what();
        }
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.number << " - " << c.label;
        if (!ok && !detail.empty()) std::cout << " (" << detail << ")";
        std::cout << std::endl;
        if (!ok) ++failures;
    }
    if (failures > 0) {
        std::cout << failures << " of " << checks.size() << " criteria failed" << std::endl;
        return 1;
    }
    std::cout << "all " << checks.size() << " criteria passed" << std::endl;
    return 0;
}

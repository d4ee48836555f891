#pragma once

// Threshold calibration: pick (lambda, gamma) so the constraint-side cost of a
// threshold rule equals a target level.
//
// The whole cost structure of a threshold family is captured per sample point by
// an atom: the statistic value plus the H0-cost contribution under each branch.
// c0(lambda, gamma) is then a step function of lambda, linear in gamma on each
// statistic atom, and calibration is an exact sweep over the sorted distinct
// values — no tolerance anywhere.  Monte Carlo problems reuse the same solve on
// the empirical atoms of one fixed sample stream (common random numbers), then
// re-score the returned rule on an independent validation stream.

#include <numeric>

#include "jointdet/common.hpp"
#include "jointdet/discrete_optimal.hpp"

namespace jointdet {

struct CalibrationAtom {
    double statistic = 0.0;   // threshold statistic at this sample point (may be +inf)
    double cost_declare0 = 0.0;  // H0-cost mass if the rule declares H0 here
    double cost_declare1 = 0.0;  // H0-cost mass if the rule declares H1 here
};

enum class CalibrationStatus { exact, monte_carlo, unreachable_low, unreachable_high };

inline const char* to_string(CalibrationStatus s) {
    switch (s) {
        case CalibrationStatus::exact: return "exact";
        case CalibrationStatus::monte_carlo: return "monte_carlo";
        case CalibrationStatus::unreachable_low: return "unreachable_low";
        case CalibrationStatus::unreachable_high: return "unreachable_high";
    }
    return "?";
}

struct CalibrationResult {
    double lambda = 0.0;
    double gamma = 0.0;
    double achieved_c0 = 0.0;     // exact value, or out-of-sample estimate for Monte Carlo
    double standard_error = 0.0;  // 0 for exact enumeration
    CalibrationStatus status = CalibrationStatus::exact;
    std::size_t iterations = 0;          // sweep steps inspected
    std::size_t monotone_violations = 0;  // atoms whose declare-1 cost is below declare-0
};

// c0 of the threshold rule (lambda, gamma) on a set of atoms.  Exact comparisons:
// the caller owns any tie semantics by producing exact statistic values.
inline double evaluate_c0(const std::vector<CalibrationAtom>& atoms, double lambda,
                          double gamma) {
    double c = 0.0;
    for (const auto& a : atoms) {
        if (a.statistic < lambda)
            c += a.cost_declare0;
        else if (a.statistic > lambda)
            c += a.cost_declare1;
        else
            c += (1.0 - gamma) * a.cost_declare0 + gamma * a.cost_declare1;
    }
    return c;
}

struct CostCurveRow {
    double lambda = 0.0;
    double c0_gamma0 = 0.0;
    double c0_gamma1 = 0.0;
};

namespace detail {
inline void check_lambda_grid(const std::vector<double>& lambdas) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0))
            throw invalid_input("cost_curve: lambda grid entries must be positive");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
            throw invalid_input("cost_curve: lambda grid must be strictly increasing");
    }
}
}  // namespace detail

inline std::vector<CostCurveRow> cost_curve(const std::vector<CalibrationAtom>& atoms,
                                            const std::vector<double>& lambdas) {
    detail::check_lambda_grid(lambdas);
    std::vector<CostCurveRow> rows;
    rows.reserve(lambdas.size());
    for (double lam : lambdas)
        rows.push_back({lam, evaluate_c0(atoms, lam, 0.0), evaluate_c0(atoms, lam, 1.0)});
    return rows;
}

// Same sweep through an arbitrary (lambda, gamma) -> cost evaluator.
inline std::vector<CostCurveRow> cost_curve(
    const std::function<double(double, double)>& evaluator,
    const std::vector<double>& lambdas) {
    detail::check_lambda_grid(lambdas);
    std::vector<CostCurveRow> rows;
    rows.reserve(lambdas.size());
    for (double lam : lambdas) {
        try {
            rows.push_back({lam, evaluator(lam, 0.0), evaluator(lam, 1.0)});
        } catch (const error& e) {
            throw numerical_domain("cost_curve: evaluator failed at lambda = " +
                                   std::to_string(lam) + ": " + e.what());
        }
    }
    return rows;
}

// Exact calibration on atoms.  Sweeps the sorted distinct statistic values; a
// target falling between two step levels is hit exactly by randomizing on the
// atom in between, a target equal to a step level by a mid-interval lambda with
// gamma = 0.  Targets outside the reachable range come back as unreachable_*
// with the nearest reachable level in achieved_c0.
inline CalibrationResult solve_calibration(std::vector<CalibrationAtom> atoms, double target) {
    if (!(target >= 0.0) || !std::isfinite(target))
        throw invalid_input("solve_calibration: target must be finite and >= 0");

    CalibrationResult res;
    // Fixed contribution of points that can never flip to the H0 branch.
    double base = 0.0;
    std::vector<CalibrationAtom> finite;
    for (const auto& a : atoms) {
        if (!(a.cost_declare0 >= 0.0) || !(a.cost_declare1 >= 0.0) ||
            !std::isfinite(a.cost_declare0) || !std::isfinite(a.cost_declare1) ||
            std::isnan(a.statistic) || a.statistic < 0.0)
            throw invalid_input("solve_calibration: malformed atom");
        if (a.cost_declare1 < a.cost_declare0) ++res.monotone_violations;
        if (a.statistic == kInf)
            base += a.cost_declare1;
        else
            finite.push_back(a);
    }
    std::sort(finite.begin(), finite.end(),
              [](const CalibrationAtom& a, const CalibrationAtom& b) {
                  return a.statistic < b.statistic;
              });

    // Step levels: F[0] = cost with every finite atom on the declare-1 side
    // (lambda below the smallest value), F[k] = cost once the k smallest distinct
    // values have flipped to declare-0.  Merge equal statistics as one step.
    std::vector<double> levels;   // F[0..K]
    std::vector<double> cuts;     // distinct statistic values s_1..s_K
    double f = base;
    for (const auto& a : finite) f += a.cost_declare1;
    levels.push_back(f);
    for (std::size_t i = 0; i < finite.size();) {
        std::size_t j = i;
        double d0 = 0.0, d1 = 0.0;
        while (j < finite.size() && finite[j].statistic == finite[i].statistic) {
            d0 += finite[j].cost_declare0;
            d1 += finite[j].cost_declare1;
            ++j;
        }
        cuts.push_back(finite[i].statistic);
        f = f - d1 + d0;
        levels.push_back(f);
        i = j;
    }
    const std::size_t k_max = cuts.size();

    const auto [lo_it, hi_it] = std::minmax_element(levels.begin(), levels.end());
    if (target < *lo_it) {
        res.status = CalibrationStatus::unreachable_low;
        res.achieved_c0 = *lo_it;
        return res;
    }
    if (target > *hi_it) {
        res.status = CalibrationStatus::unreachable_high;
        res.achieved_c0 = *hi_it;
        return res;
    }

    // Interval representative above the k-th cut (below the first for k = 0).
    auto interval_lambda = [&](std::size_t k) {
        if (k == 0) return cuts.front() / 2.0;
        if (k == k_max) return cuts.back() + 1.0;
        return 0.5 * (cuts[k - 1] + cuts[k]);
    };

    if (target == levels[0]) {
        res.iterations = 1;
        if (cuts.empty() || cuts.front() > 0.0) {
            res.lambda = cuts.empty() ? 1.0 : interval_lambda(0);
            res.gamma = 0.0;
        } else {
            // Smallest atom sits at zero; the all-declare-1 level needs the
            // randomized branch to send it to H1.
            res.lambda = 0.0;
            res.gamma = 1.0;
        }
        res.achieved_c0 = levels[0];
        return res;
    }
    for (std::size_t k = 1; k <= k_max; ++k) {
        res.iterations = k;
        if (target == levels[k]) {
            res.lambda = interval_lambda(k);
            res.gamma = 0.0;
            res.achieved_c0 = levels[k];
            return res;
        }
        const double lo = std::min(levels[k - 1], levels[k]);
        const double hi = std::max(levels[k - 1], levels[k]);
        if (target > lo && target < hi) {
            // Randomize on the k-th cut: c0 = F[k] + gamma * (F[k-1] - F[k]).
            res.lambda = cuts[k - 1];
            res.gamma = (target - levels[k]) / (levels[k - 1] - levels[k]);
            res.achieved_c0 = levels[k] + res.gamma * (levels[k - 1] - levels[k]);
            return res;
        }
    }
    // Reachable range is not an interval (monotonicity violated) and the target
    // fell in a gap; report the closest achieved level below.
    double best = *lo_it;
    for (double lv : levels)
        if (lv <= target && lv > best) best = lv;
    res.status = CalibrationStatus::unreachable_low;
    res.achieved_c0 = best;
    return res;
}

// One draw of a Monte Carlo calibration problem: the statistic at a sample drawn
// under H0, with the H0-cost of each branch at that sample.  For plain false
// alarm constraints, cost_declare0 = 0 and cost_declare1 = 1.
using CalibrationDraw = std::function<CalibrationAtom(std::mt19937_64&)>;

struct McCalibration {
    CalibrationDraw draw;
    std::size_t budget = 0;    // samples per stream
    std::uint64_t seed = 0;
};

inline CalibrationResult solve_calibration(const McCalibration& mc, double target) {
    if (!mc.draw || mc.budget == 0)
        throw invalid_input("solve_calibration: Monte Carlo input needs a draw and a budget");

    constexpr std::size_t kChunk = 1 << 16;
    auto sample_stream = [&](std::uint64_t stream) {
        std::vector<CalibrationAtom> atoms;
        atoms.reserve(mc.budget);
        const std::uint64_t stream_seed = derive_seed(mc.seed, stream);
        for (std::uint64_t chunk = 0; atoms.size() < mc.budget; ++chunk) {
            std::mt19937_64 rng(derive_seed(stream_seed, chunk));
            const std::size_t n = std::min(kChunk, mc.budget - atoms.size());
            for (std::size_t i = 0; i < n; ++i) atoms.push_back(mc.draw(rng));
        }
        return atoms;
    };

    // Calibration stream: one fixed sample set shared across all thresholds, so
    // the empirical c0(lambda) is a deterministic step function and the sweep
    // lands exactly on an empirical atom.  The exact solver sees per-draw costs
    // scaled to empirical masses.
    std::vector<CalibrationAtom> cal = sample_stream(0);
    const double inv_b = 1.0 / static_cast<double>(mc.budget);
    std::vector<CalibrationAtom> scaled = cal;
    for (auto& a : scaled) {
        a.cost_declare0 *= inv_b;
        a.cost_declare1 *= inv_b;
    }
    CalibrationResult res = solve_calibration(std::move(scaled), target);
    if (res.status != CalibrationStatus::exact) return res;  // unreachable empirically

    // Score the frozen rule out of sample; report that estimate and the combined
    // uncertainty of picking the threshold and of scoring it.
    auto rule_cost = [&](const CalibrationAtom& a) {
        if (a.statistic < res.lambda) return a.cost_declare0;
        if (a.statistic > res.lambda) return a.cost_declare1;
        return (1.0 - res.gamma) * a.cost_declare0 + res.gamma * a.cost_declare1;
    };
    auto mean_se = [&](const std::vector<CalibrationAtom>& atoms) {
        double s = 0.0, s2 = 0.0;
        for (const auto& a : atoms) {
            const double c = rule_cost(a);
            s += c;
            s2 += c * c;
        }
        const double n = static_cast<double>(atoms.size());
        const double mean = s / n;
        const double var = std::max(0.0, s2 / n - mean * mean);
        return std::pair{mean, std::sqrt(var / n)};
    };
    const auto [cal_mean, cal_se] = mean_se(cal);
    cal.clear();
    cal.shrink_to_fit();
    const auto [val_mean, val_se] = mean_se(sample_stream(1));
    (void)cal_mean;  // in-sample mean equals the target by construction

    res.status = CalibrationStatus::monte_carlo;
    res.achieved_c0 = val_mean;
    res.standard_error = std::sqrt(cal_se * cal_se + val_se * val_se);
    return res;
}

// ---------------------------------------------------------------------------
// Atom builders for tabulated problems under 0-1 costs.

// Weighted max-likelihood rule: declaring H0 at x still risks the estimation
// error f0(x) - max_l w_l f0_l(x); declaring H1 forfeits the whole H0 mass.
inline std::vector<CalibrationAtom> h0_error_atoms(const DiscreteProblem& p) {
    std::vector<CalibrationAtom> atoms;
    for (std::size_t x = 0; x < p.size(); ++x) {
        double f0x = 0.0;
        for (std::size_t l = 0; l < p.f0.size(); ++l) f0x += p.prior0[l] * p.f0[l][x];
        const double m0 = weighted_max_likelihood(p, 0, x).value;
        const double m1 = weighted_max_likelihood(p, 1, x).value;
        if (m0 == 0.0 && m1 == 0.0) continue;
        atoms.push_back({m0 > 0.0 ? m1 / m0 : kInf, f0x - m0, f0x});
    }
    return atoms;
}

// Classical (prior-free) rule: the statistic drops the priors and the estimator
// picks the unweighted maximum-likelihood subcase, splitting ties evenly.
inline std::vector<CalibrationAtom> classical_h0_error_atoms(const DiscreteProblem& p) {
    std::vector<CalibrationAtom> atoms;
    for (std::size_t x = 0; x < p.size(); ++x) {
        double f0x = 0.0, best = 0.0;
        for (std::size_t l = 0; l < p.f0.size(); ++l) {
            f0x += p.prior0[l] * p.f0[l][x];
            best = std::max(best, p.f0[l][x]);
        }
        double m1 = 0.0;
        for (const auto& row : p.f1) m1 = std::max(m1, row[x]);
        if (best == 0.0 && m1 == 0.0) continue;
        double correct = 0.0;
        std::size_t ties = 0;
        for (std::size_t l = 0; l < p.f0.size(); ++l)
            if (close_rel(p.f0[l][x], best, kTieTol)) ++ties;
        for (std::size_t l = 0; l < p.f0.size(); ++l)
            if (close_rel(p.f0[l][x], best, kTieTol))
                correct += p.prior0[l] * p.f0[l][x] / static_cast<double>(ties);
        atoms.push_back({best > 0.0 ? m1 / best : kInf, f0x - correct, f0x});
    }
    return atoms;
}

// Companion atoms measuring the H1-side cost of the same rules; evaluating them
// at a calibrated (lambda, gamma) gives the alternative-side error exactly.
inline std::vector<CalibrationAtom> h1_error_atoms(const DiscreteProblem& p) {
    std::vector<CalibrationAtom> atoms;
    for (std::size_t x = 0; x < p.size(); ++x) {
        double f1x = 0.0;
        for (std::size_t l = 0; l < p.f1.size(); ++l) f1x += p.prior1[l] * p.f1[l][x];
        const double m0 = weighted_max_likelihood(p, 0, x).value;
        const double m1 = weighted_max_likelihood(p, 1, x).value;
        if (m0 == 0.0 && m1 == 0.0) continue;
        atoms.push_back({m0 > 0.0 ? m1 / m0 : kInf, f1x, f1x - m1});
    }
    return atoms;
}

inline std::vector<CalibrationAtom> classical_h1_error_atoms(const DiscreteProblem& p) {
    std::vector<CalibrationAtom> atoms;
    for (std::size_t x = 0; x < p.size(); ++x) {
        double f1x = 0.0, best1 = 0.0, best0 = 0.0;
        for (std::size_t l = 0; l < p.f1.size(); ++l) {
            f1x += p.prior1[l] * p.f1[l][x];
            best1 = std::max(best1, p.f1[l][x]);
        }
        for (const auto& row : p.f0) best0 = std::max(best0, row[x]);
        if (best0 == 0.0 && best1 == 0.0) continue;
        double correct = 0.0;
        std::size_t ties = 0;
        for (std::size_t l = 0; l < p.f1.size(); ++l)
            if (close_rel(p.f1[l][x], best1, kTieTol)) ++ties;
        for (std::size_t l = 0; l < p.f1.size(); ++l)
            if (close_rel(p.f1[l][x], best1, kTieTol))
                correct += p.prior1[l] * p.f1[l][x] / static_cast<double>(ties);
        atoms.push_back({best0 > 0.0 ? best1 / best0 : kInf, f1x, f1x - correct});
    }
    return atoms;
}

// Monte Carlo draw for the plain false-alarm constraint under a simple null:
// declaring H1 costs 1, declaring H0 costs nothing, and the statistic is
// whatever threshold family the caller calibrates.
inline CalibrationDraw false_alarm_draw(const HypothesisSpec& h0,
                                        std::function<double(const Vector&)> statistic) {
    if (!h0.simple())
        throw precondition_violation("false_alarm_draw: composite null not supported");
    if (!h0.family.sampler) throw invalid_input("false_alarm_draw: null has no sampler");
    return [h0, statistic = std::move(statistic)](std::mt19937_64& rng) {
        const Vector x = h0.family.sampler(rng, h0.prior.nodes.front());
        return CalibrationAtom{statistic(x), 0.0, 1.0};
    };
}

}  // namespace jointdet

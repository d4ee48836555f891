#pragma once

// Finite-alphabet problems under 0-1 detection/estimation costs: the weighted
// max-likelihood statistic, its classical (prior-free) variant, the randomized
// threshold verdict with per-branch weighted-MAP estimate sets, exact error
// probabilities, and the floor alpha_min of the constraint-side error.

#include <string>
#include <string_view>

#include "jointdet/common.hpp"
#include "jointdet/families.hpp"
#include "jointdet/model.hpp"

namespace jointdet {

struct DiscreteProblem {
    std::vector<std::string> alphabet;            // labels for the M sample points
    std::vector<std::vector<double>> f0, f1;      // per-subcase rows, each of length M
    std::vector<double> prior0, prior1;           // subcase weights, positive, sum 1

    std::size_t size() const { return alphabet.size(); }

    std::size_t index_of(std::string_view label) const {
        for (std::size_t i = 0; i < alphabet.size(); ++i)
            if (alphabet[i] == label) return i;
        throw invalid_input("sample point '" + std::string(label) + "' not in alphabet");
    }

    void validate() const {
        const std::size_t m = alphabet.size();
        if (m == 0) throw invalid_input("discrete problem: empty alphabet");
        auto check_side = [m](const std::vector<std::vector<double>>& f,
                              const std::vector<double>& prior, const char* side) {
            if (f.empty() || f.size() != prior.size())
                throw invalid_input(std::string(side) + ": subcase/prior count mismatch");
            double ps = 0.0;
            for (double w : prior) {
                if (!(w > 0.0)) throw invalid_input(std::string(side) + ": prior weights must be positive");
                ps += w;
            }
            if (std::fabs(ps - 1.0) > 1e-12)
                throw invalid_input(std::string(side) + ": prior weights sum != 1");
            for (const auto& row : f) {
                if (row.size() != m) throw invalid_input(std::string(side) + ": row length != alphabet size");
                double rs = 0.0;
                for (double v : row) {
                    if (v < 0.0) throw invalid_input(std::string(side) + ": negative probability");
                    rs += v;
                }
                if (std::fabs(rs - 1.0) > 1e-12)
                    throw invalid_input(std::string(side) + ": row sums to " + std::to_string(rs));
            }
        };
        check_side(f0, prior0, "h0");
        check_side(f1, prior1, "h1");
    }
};

struct WeightedMax {
    double value = 0.0;
    std::vector<std::size_t> argmax;  // all subcases within relative tie tolerance
};

// max_l prior_l * f_l(x) over the subcases of one side, with the tie set.
inline WeightedMax weighted_max_likelihood(const DiscreteProblem& p, int side, std::size_t x) {
    if (side != 0 && side != 1) throw invalid_input("weighted_max_likelihood: side must be 0 or 1");
    if (x >= p.size()) throw invalid_input("weighted_max_likelihood: sample index out of range");
    const auto& f = side == 0 ? p.f0 : p.f1;
    const auto& prior = side == 0 ? p.prior0 : p.prior1;
    WeightedMax wm;
    for (std::size_t l = 0; l < f.size(); ++l)
        wm.value = std::max(wm.value, prior[l] * f[l][x]);
    for (std::size_t l = 0; l < f.size(); ++l)
        if (close_rel(prior[l] * f[l][x], wm.value, kTieTol)) wm.argmax.push_back(l);
    return wm;
}

// Weighted max-likelihood ratio statistic.  +inf when only the alternative side
// has mass at x; undefined when neither side does (the point has probability
// zero under every subcase).
inline double glr_statistic(const DiscreteProblem& p, std::size_t x) {
    const double num = weighted_max_likelihood(p, 1, x).value;
    const double den = weighted_max_likelihood(p, 0, x).value;
    if (den > 0.0) return num / den;
    if (num > 0.0) return kInf;
    throw undefined_statistic("statistic undefined at '" + p.alphabet[x] +
                              "': zero mass under both hypotheses");
}

// Classical variant: priors dropped from both maxima.
inline double classical_glr_statistic(const DiscreteProblem& p, std::size_t x) {
    double num = 0.0, den = 0.0;
    for (const auto& row : p.f1) num = std::max(num, row[x]);
    for (const auto& row : p.f0) den = std::max(den, row[x]);
    if (den > 0.0) return num / den;
    if (num > 0.0) return kInf;
    throw undefined_statistic("classical statistic undefined at '" + p.alphabet[x] + "'");
}

// Smallest reachable constraint-side error: even the best rule (always declare
// H0, weighted-MAP estimate) still mis-estimates with this probability.
inline double alpha_min(const DiscreteProblem& p) {
    double correct = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x)
        correct += weighted_max_likelihood(p, 0, x).value;
    return 1.0 - correct;
}

struct RandomizedVerdict {
    Decision decision = Decision::h0;
    double gamma = 0.0;                 // P(declare H1) on the randomize branch
    std::vector<std::size_t> est0, est1;  // weighted-MAP tie sets per branch
};

// Threshold rule: declare H1 above lambda, H0 below, randomize with probability
// gamma on a statistic tie.  The estimate sets are the weighted-MAP argmax sets;
// on the randomize branch both are reported.
inline RandomizedVerdict decide(const DiscreteProblem& p, std::size_t x, double lambda,
                                double gamma) {
    if (!(lambda >= 0.0)) throw invalid_input("decide: lambda must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw invalid_input("decide: gamma outside [0,1]");
    const double s = glr_statistic(p, x);
    RandomizedVerdict v;
    if (close_rel(s, lambda, kTieTol)) {
        v.decision = Decision::randomize;
        v.gamma = gamma;
        v.est0 = weighted_max_likelihood(p, 0, x).argmax;
        v.est1 = weighted_max_likelihood(p, 1, x).argmax;
    } else if (s > lambda) {
        v.decision = Decision::h1;
        v.est1 = weighted_max_likelihood(p, 1, x).argmax;
    } else {
        v.decision = Decision::h0;
        v.est0 = weighted_max_likelihood(p, 0, x).argmax;
    }
    return v;
}

struct ErrorPair {
    double c0 = 0.0;  // P(detection-or-estimation error | H0)
    double c1 = 0.0;  // P(detection-or-estimation error | H1)
};

// Exact error probabilities of the threshold rule.  A branch decision is fully
// correct only when it names the true hypothesis and the weighted-MAP estimate
// hits the true subcase, so the correct mass at x is the branch probability
// times max_l prior_l f_l(x).  Tie sets share one weighted likelihood value;
// any split of the estimate over them gives the same correct mass.
inline ErrorPair error_probabilities(const DiscreteProblem& p, double lambda, double gamma) {
    if (!(lambda >= 0.0)) throw invalid_input("error_probabilities: lambda must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw invalid_input("error_probabilities: gamma outside [0,1]");
    double correct0 = 0.0, correct1 = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        const double m0 = weighted_max_likelihood(p, 0, x).value;
        const double m1 = weighted_max_likelihood(p, 1, x).value;
        if (m0 == 0.0 && m1 == 0.0) continue;  // zero-probability point under both sides
        double p1;  // branch probability of declaring H1 at x
        const double s = m0 > 0.0 ? m1 / m0 : kInf;
        if (close_rel(s, lambda, kTieTol))
            p1 = gamma;
        else
            p1 = s > lambda ? 1.0 : 0.0;
        correct0 += (1.0 - p1) * m0;
        correct1 += p1 * m1;
    }
    return {1.0 - correct0, 1.0 - correct1};
}

// Lift a tabulated problem into the general model (0-1 costs by default), for
// cross-checks against the continuous-form machinery.
inline Problem to_problem(const DiscreteProblem& p, CostSpec costs = zero_one_costs()) {
    p.validate();
    Problem out;
    out.h0 = table_hypothesis(p.f0, p.prior0);
    out.h1 = table_hypothesis(p.f1, p.prior1);
    out.costs = std::move(costs);
    return out;
}

}  // namespace jointdet

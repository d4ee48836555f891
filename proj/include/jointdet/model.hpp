#pragma once

// Problem model: hypotheses as (density family, prior over the unknown parameter),
// cost structures over (estimate, truth) pairs, randomized two-step decision rules,
// and the basic evaluations everything else builds on:
//
//   marginal_density  f_j(x) = sum_l w_l f(x|theta_l)
//   script_d          D(u,x) = sum_l w_l C(u,theta_l) f(x|theta_l)
//   average_cost      expected cost of a rule under a chosen truth hypothesis,
//                     exact on discrete sample spaces, Monte Carlo otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <variant>

#include "jointdet/common.hpp"

namespace jointdet {

// ---------------------------------------------------------------------------
// Sample spaces.  Discrete spaces carry their alphabet explicitly so costs and
// error probabilities can be summed exactly; continuous spaces only record the
// dimension and rely on sampling.

struct DiscreteSpace {
    std::vector<Vector> points;
};

struct ContinuousSpace {
    std::size_t dim = 1;
};

using SampleSpace = std::variant<DiscreteSpace, ContinuousSpace>;

using DensityFn = std::function<double(const Vector& x, const Vector& theta)>;
using SampleFn = std::function<Vector(std::mt19937_64&, const Vector& theta)>;

struct DensityFamily {
    DensityFn density;        // linear scale; required
    DensityFn log_density;    // optional hook for log-domain work
    SampleFn sampler;         // optional; required for Monte Carlo evaluation
    SampleSpace space = ContinuousSpace{};
    std::size_t param_dim = 0;  // 0 marks a simple (fully known) family
};

// ---------------------------------------------------------------------------
// Priors.  Point masses are exact; quadrature priors are a node/weight
// discretization of a continuous prior.  In both cases the weights are positive
// and sum to one, so the marginal is a plain probability mixture over nodes.

struct Prior {
    enum class Kind { point_mass, quadrature };

    Kind kind = Kind::point_mass;
    std::vector<Vector> nodes;
    std::vector<double> weights;
    // Quadrature extras: per-node cell widths give the weights a density reading
    // (density ~ weight/cell); the density hook, when supplied, evaluates the
    // underlying continuous prior off-grid (used by mode search refinement).
    std::vector<double> cell_widths;
    std::function<double(const Vector&)> density;

    static Prior point_masses(std::vector<Vector> nodes, std::vector<double> weights) {
        Prior p;
        p.kind = Kind::point_mass;
        p.nodes = std::move(nodes);
        p.weights = std::move(weights);
        p.validate();
        return p;
    }

    static Prior quadrature(std::vector<Vector> nodes, std::vector<double> weights,
                            std::vector<double> cell_widths = {},
                            std::function<double(const Vector&)> density = nullptr) {
        Prior p;
        p.kind = Kind::quadrature;
        p.nodes = std::move(nodes);
        p.weights = std::move(weights);
        p.cell_widths = std::move(cell_widths);
        p.density = std::move(density);
        p.validate();
        return p;
    }

    // The trivial prior of a simple hypothesis: one empty parameter vector.
    static Prior simple() { return point_masses({Vector{}}, {1.0}); }

    void validate() const {
        if (nodes.empty() || nodes.size() != weights.size())
            throw invalid_input("prior: node/weight count mismatch or empty");
        double s = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw invalid_input("prior: weights must be positive");
            s += w;
        }
        if (std::fabs(s - 1.0) > 1e-12)
            throw invalid_input("prior: weights sum to " + std::to_string(s) + ", expected 1");
        const std::size_t d = nodes.front().size();
        for (const auto& n : nodes)
            if (n.size() != d) throw invalid_input("prior: inconsistent node dimensions");
        if (kind == Kind::point_mass) {
            for (std::size_t i = 0; i < nodes.size(); ++i)
                for (std::size_t j = i + 1; j < nodes.size(); ++j)
                    if (nodes[i] == nodes[j])
                        throw invalid_input("prior: duplicate point-mass node");
        }
        if (!cell_widths.empty() && cell_widths.size() != nodes.size())
            throw invalid_input("prior: cell_widths size mismatch");
    }
};

struct HypothesisSpec {
    DensityFamily family;
    Prior prior = Prior::simple();
    // Optional fast path: must return exactly the node sum marginal_density computes.
    std::function<double(const Vector&)> marginal_hook;

    bool simple() const { return family.param_dim == 0; }
};

inline double marginal_density(const HypothesisSpec& h, const Vector& x) {
    if (h.marginal_hook) return h.marginal_hook(x);
    double s = 0.0;
    for (std::size_t l = 0; l < h.prior.nodes.size(); ++l)
        s += h.prior.weights[l] * h.family.density(x, h.prior.nodes[l]);
    if (!std::isfinite(s) || s < 0.0)
        throw numerical_domain("marginal_density: non-finite or negative value");
    return s;
}

// ---------------------------------------------------------------------------
// Costs.  c_ji(u, theta): penalty for deciding hypothesis j and estimating u when
// the truth is hypothesis i with parameter theta.  The detection part is encoded
// by which of the four functions is consulted.

using CostFn = std::function<double(const Vector& u, const Vector& theta)>;

struct CostSpec {
    CostFn c00, c01, c10, c11;
};

inline CostSpec zero_one_costs() {
    auto match = [](const Vector& u, const Vector& th) { return u == th ? 0.0 : 1.0; };
    auto one = [](const Vector&, const Vector&) { return 1.0; };
    return {match, one, one, match};
}

namespace detail {
inline double sq_dist(const Vector& u, const Vector& th) {
    double s = 0.0;
    const std::size_t n = std::max(u.size(), th.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double a = i < u.size() ? u[i] : 0.0;
        const double b = i < th.size() ? th[i] : 0.0;
        s += (a - b) * (a - b);
    }
    return s;
}
inline double norm_sq(const Vector& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return s;
}
}  // namespace detail

// Squared-error estimation loss; the off-branch costs charge the full squared
// magnitude of the missed parameter (the "estimated it as zero" reading).
inline CostSpec squared_error_costs() {
    auto se = [](const Vector& u, const Vector& th) { return detail::sq_dist(u, th); };
    auto missed = [](const Vector&, const Vector& th) { return detail::norm_sq(th); };
    auto spurious = [](const Vector& u, const Vector&) { return detail::norm_sq(u); };
    return {se, missed, spurious, se};
}

inline CostSpec absolute_error_costs() {
    auto ae = [](const Vector& u, const Vector& th) {
        double s = 0.0;
        const std::size_t n = std::max(u.size(), th.size());
        for (std::size_t i = 0; i < n; ++i) {
            const double a = i < u.size() ? u[i] : 0.0;
            const double b = i < th.size() ? th[i] : 0.0;
            s += std::fabs(a - b);
        }
        return s;
    };
    auto missed = [ae](const Vector&, const Vector& th) { return ae(Vector{}, th); };
    auto spurious = [ae](const Vector& u, const Vector&) { return ae(u, Vector{}); };
    return {ae, missed, spurious, ae};
}

// Window cost: estimation counts as correct iff the estimate lands within
// euclidean distance delta of the truth; detection misses cost 1.
inline CostSpec window_costs(double delta) {
    if (!(delta > 0.0)) throw invalid_input("window_costs: delta must be positive");
    auto win = [delta](const Vector& u, const Vector& th) {
        return std::sqrt(detail::sq_dist(u, th)) <= delta ? 0.0 : 1.0;
    };
    auto one = [](const Vector&, const Vector&) { return 1.0; };
    return {win, one, one, win};
}

// D(u,x) = sum_l w_l * cost(u, theta_l) * f(x | theta_l): the per-sample posterior
// cost mass of hypothesis `h` under the given branch cost.
inline double script_d(const HypothesisSpec& h, const CostFn& cost, const Vector& u,
                       const Vector& x) {
    double s = 0.0;
    for (std::size_t l = 0; l < h.prior.nodes.size(); ++l) {
        const double f = h.family.density(x, h.prior.nodes[l]);
        s += h.prior.weights[l] * cost(u, h.prior.nodes[l]) * f;
    }
    if (!std::isfinite(s)) throw numerical_domain("script_d: non-finite value");
    return s;
}

// ---------------------------------------------------------------------------
// Rules.  delta1(x) is the probability of declaring the alternative; each branch
// carries a (possibly randomized) estimator returning weighted candidates.

struct WeightedEstimate {
    Vector value;
    double weight = 1.0;
};

using EstimatorFn = std::function<std::vector<WeightedEstimate>(const Vector& x)>;

struct DetEstRule {
    std::function<double(const Vector& x)> p_decide_h1;
    EstimatorFn estimate0, estimate1;
};

struct Problem {
    HypothesisSpec h0, h1;
    CostSpec costs;

    const DiscreteSpace* discrete_alphabet() const {
        const auto* d0 = std::get_if<DiscreteSpace>(&h0.family.space);
        const auto* d1 = std::get_if<DiscreteSpace>(&h1.family.space);
        if (d0 && d1) {
            if (d0->points != d1->points)
                throw invalid_input("problem: hypotheses disagree on the alphabet");
            return d0;
        }
        if (d0 || d1) throw invalid_input("problem: mixed discrete/continuous hypotheses");
        return nullptr;
    }
};

struct McOptions {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
};

struct CostEstimate {
    double value = 0.0;
    double standard_error = 0.0;  // zero for exact summation
};

namespace detail {

// Expected branch cost of a rule at one sample point, truth fixed at (i, theta).
inline double rule_cost_at(const Problem& p, const DetEstRule& rule, int truth,
                           const Vector& theta, const Vector& x) {
    const double d1 = rule.p_decide_h1(x);
    if (d1 < -1e-12 || d1 > 1.0 + 1e-12)
        throw invalid_input("rule: p_decide_h1 outside [0,1]");
    const CostFn& c0 = truth == 0 ? p.costs.c00 : p.costs.c01;
    const CostFn& c1 = truth == 0 ? p.costs.c10 : p.costs.c11;
    double cost = 0.0;
    if (d1 < 1.0) {
        double e = 0.0;
        for (const auto& we : rule.estimate0(x)) e += we.weight * c0(we.value, theta);
        cost += (1.0 - d1) * e;
    }
    if (d1 > 0.0) {
        double e = 0.0;
        for (const auto& we : rule.estimate1(x)) e += we.weight * c1(we.value, theta);
        cost += d1 * e;
    }
    return cost;
}

}  // namespace detail

// Average cost of `rule` when the truth is hypothesis `truth` (0 or 1).  Exact
// alphabet sum on discrete spaces; on continuous spaces a seeded Monte Carlo run
// over (theta, x) draws.  Chunked accumulation keeps the result independent of
// any future re-batching of the sample loop.
inline CostEstimate average_cost(const Problem& p, const DetEstRule& rule, int truth,
                                 const std::optional<McOptions>& mc = std::nullopt) {
    if (truth != 0 && truth != 1) throw invalid_input("average_cost: truth must be 0 or 1");
    const HypothesisSpec& h = truth == 0 ? p.h0 : p.h1;

    if (const DiscreteSpace* alpha = p.discrete_alphabet()) {
        double total = 0.0;
        for (const auto& x : alpha->points) {
            for (std::size_t l = 0; l < h.prior.nodes.size(); ++l) {
                const double mass = h.prior.weights[l] * h.family.density(x, h.prior.nodes[l]);
                if (mass == 0.0) continue;
                total += mass * detail::rule_cost_at(p, rule, truth, h.prior.nodes[l], x);
            }
        }
        if (!std::isfinite(total)) throw numerical_domain("average_cost: non-finite sum");
        return {total, 0.0};
    }

    if (!mc || mc->samples == 0)
        throw invalid_input("average_cost: continuous sample space needs Monte Carlo options");
    if (!h.family.sampler)
        throw invalid_input("average_cost: density family has no sampler");

    constexpr std::size_t kChunk = 1 << 16;
    std::discrete_distribution<std::size_t> pick(h.prior.weights.begin(), h.prior.weights.end());
    double sum = 0.0, sum_sq = 0.0;
    std::size_t done = 0;
    for (std::uint64_t chunk = 0; done < mc->samples; ++chunk) {
        std::mt19937_64 rng(derive_seed(mc->seed, chunk));
        const std::size_t n = std::min(kChunk, mc->samples - done);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t l = pick(rng);
            const Vector x = h.family.sampler(rng, h.prior.nodes[l]);
            const double c = detail::rule_cost_at(p, rule, truth, h.prior.nodes[l], x);
            sum += c;
            sum_sq += c * c;
        }
        done += n;
    }
    const double n = static_cast<double>(mc->samples);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    if (!std::isfinite(mean)) throw numerical_domain("average_cost: non-finite Monte Carlo mean");
    return {mean, std::sqrt(var / n)};
}

}  // namespace jointdet

#pragma once

// Optimal joint rule for general Bayes costs.  Declaring hypothesis j with
// estimate u costs, per sample point x,
//
//     side_j(u, x) = D(h1, c_j1, u, x) + lambda * D(h0, c_j0, u, x)
//
// where D averages the cost against a side's prior-weighted densities.  The
// optimal rule minimizes each side over u and declares the cheaper side,
// randomizing with probability gamma on ties.  When the cross costs c01 and c10
// do not depend on the estimate, the comparison collapses to a scalar statistic
// against lambda, which is what the calibration atoms below expose.

#include <functional>
#include <numeric>

#include "jointdet/calibrate.hpp"
#include "jointdet/common.hpp"
#include "jointdet/model.hpp"

namespace jointdet {

struct InnerSolution {
    double value = kInf;
    Vector minimizer;
};

namespace detail {

inline double golden_min(const std::function<double(double)>& f, double lo, double hi,
                         double tol) {
    static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    if (!std::isfinite(fc) || !std::isfinite(fd))
        throw numerical_domain("golden_min: objective not finite");
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
        if (!std::isfinite(fc) || !std::isfinite(fd))
            throw numerical_domain("golden_min: objective not finite");
    }
    return fc < fd ? c : d;
}

}  // namespace detail

// Minimize a function of the parameter over a prior's support.  Point-mass
// priors are searched exactly over their atoms; quadrature priors combine the
// best grid node with a local golden-section refinement (coordinate descent
// when the parameter has several components).
inline InnerSolution inner_minimize(const std::function<double(const Vector&)>& f,
                                    const Prior& prior) {
    if (prior.nodes.empty()) throw invalid_input("inner_minimize: empty prior support");
    InnerSolution best;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < prior.nodes.size(); ++i) {
        const double v = f(prior.nodes[i]);
        if (!std::isfinite(v))
            throw numerical_domain("inner_minimize: objective not finite at a support node");
        if (v < best.value) {
            best.value = v;
            best.minimizer = prior.nodes[i];
            best_i = i;
        }
    }
    if (prior.kind == Prior::Kind::point_mass || prior.nodes.size() < 2) return best;

    const std::size_t dim = prior.nodes.front().size();
    if (dim == 1) {
        // Bracket by the neighboring grid nodes and refine.
        const std::size_t lo_i = best_i == 0 ? 0 : best_i - 1;
        const std::size_t hi_i = std::min(best_i + 1, prior.nodes.size() - 1);
        const double lo = prior.nodes[lo_i][0];
        const double hi = prior.nodes[hi_i][0];
        if (hi > lo) {
            const double u = detail::golden_min(
                [&](double t) { return f(Vector{t}); }, lo, hi, 1e-10 * (1.0 + hi - lo));
            const double v = f(Vector{u});
            if (v < best.value) {
                best.value = v;
                best.minimizer = Vector{u};
            }
        }
        return best;
    }

    Vector lo(dim, kInf), hi(dim, -kInf);
    for (const Vector& n : prior.nodes)
        for (std::size_t d = 0; d < dim; ++d) {
            lo[d] = std::min(lo[d], n[d]);
            hi[d] = std::max(hi[d], n[d]);
        }
    Vector u = best.minimizer;
    for (int sweep = 0; sweep < 50; ++sweep) {
        const double before = best.value;
        for (std::size_t d = 0; d < dim; ++d) {
            if (hi[d] <= lo[d]) continue;
            const double ud = detail::golden_min(
                [&](double t) {
                    Vector probe = u;
                    probe[d] = t;
                    return f(probe);
                },
                lo[d], hi[d], 1e-10 * (1.0 + hi[d] - lo[d]));
            Vector probe = u;
            probe[d] = ud;
            const double v = f(probe);
            if (v < best.value) {
                best.value = v;
                best.minimizer = probe;
                u = probe;
            }
        }
        if (before - best.value < 1e-12 * (1.0 + std::fabs(best.value))) break;
    }
    return best;
}

// side_j as a function of the estimate, see the header comment.
inline double side_objective(const Problem& p, int side, double lambda, const Vector& u,
                             const Vector& x) {
    if (side == 0)
        return script_d(p.h1, p.costs.c01, u, x) + lambda * script_d(p.h0, p.costs.c00, u, x);
    return script_d(p.h1, p.costs.c11, u, x) + lambda * script_d(p.h0, p.costs.c10, u, x);
}

inline InnerSolution minimize_side(const Problem& p, int side, double lambda, const Vector& x) {
    const Prior& prior = side == 0 ? p.h0.prior : p.h1.prior;
    return inner_minimize(
        [&](const Vector& u) { return side_objective(p, side, lambda, u, x); }, prior);
}

struct GeneralVerdict {
    Decision decision = Decision::h0;
    double gamma = 0.0;
    Vector est0;  // best estimate if H0 is declared
    Vector est1;  // best estimate if H1 is declared
    double side0 = kInf;
    double side1 = kInf;
};

inline GeneralVerdict optimal_decide(const Problem& p, const Vector& x, double lambda,
                                     double gamma) {
    GeneralVerdict v;
    const InnerSolution s0 = minimize_side(p, 0, lambda, x);
    const InnerSolution s1 = minimize_side(p, 1, lambda, x);
    v.side0 = s0.value;
    v.side1 = s1.value;
    v.est0 = s0.minimizer;
    v.est1 = s1.minimizer;
    v.gamma = gamma;
    if (close_rel(s0.value, s1.value, kObjectiveTieTol))
        v.decision = Decision::randomize;
    else
        v.decision = s0.value > s1.value ? Decision::h1 : Decision::h0;
    return v;
}

inline DetEstRule rule_from_optimal(const Problem& p, double lambda, double gamma) {
    DetEstRule r;
    r.p_decide_h1 = [p, lambda, gamma](const Vector& x) {
        const GeneralVerdict v = optimal_decide(p, x, lambda, gamma);
        if (v.decision == Decision::randomize) return gamma;
        return v.decision == Decision::h1 ? 1.0 : 0.0;
    };
    r.estimate0 = [p, lambda](const Vector& x) {
        return std::vector<WeightedEstimate>{{minimize_side(p, 0, lambda, x).minimizer, 1.0}};
    };
    r.estimate1 = [p, lambda](const Vector& x) {
        return std::vector<WeightedEstimate>{{minimize_side(p, 1, lambda, x).minimizer, 1.0}};
    };
    return r;
}

// Smallest conditional cost any rule can spend under H0: pointwise, the cheaper
// of committing to either declaration with its best estimate.  Exact sum on a
// discrete alphabet; importance-sampled under the H0 marginal otherwise.
inline CostEstimate alpha_min_general(const Problem& p, const McOptions& mc = {}) {
    auto floor_at = [&](const Vector& x) {
        const double d0 =
            inner_minimize([&](const Vector& u) { return script_d(p.h0, p.costs.c00, u, x); },
                           p.h0.prior)
                .value;
        const double d1 =
            inner_minimize([&](const Vector& u) { return script_d(p.h0, p.costs.c10, u, x); },
                           p.h1.prior)
                .value;
        return std::min(d0, d1);
    };
    if (const DiscreteSpace* alpha = p.discrete_alphabet()) {
        double total = 0.0;
        for (const Vector& x : alpha->points) total += floor_at(x);
        return {total, 0.0};
    }
    if (!p.h0.family.sampler)
        throw invalid_input("alpha_min_general: continuous model without a sampler");
    if (mc.samples == 0)
        throw invalid_input("alpha_min_general: continuous model needs a sample budget");
    // E_{x~m0}[ floor(x) / m0(x) ] with x drawn from the H0 marginal.
    constexpr std::size_t kChunk = 1 << 16;
    std::discrete_distribution<std::size_t> pick(p.h0.prior.weights.begin(),
                                                 p.h0.prior.weights.end());
    double sum = 0.0, sum_sq = 0.0;
    std::size_t done = 0;
    for (std::uint64_t chunk = 0; done < mc.samples; ++chunk) {
        std::mt19937_64 rng(derive_seed(mc.seed, chunk));
        const std::size_t n = std::min(kChunk, mc.samples - done);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t l = pick(rng);
            const Vector x = p.h0.family.sampler(rng, p.h0.prior.nodes[l]);
            const double m0 = marginal_density(p.h0, x);
            if (m0 <= 0.0)
                throw numerical_domain("alpha_min_general: sampled point with zero density");
            const double w = floor_at(x) / m0;
            sum += w;
            sum_sq += w * w;
        }
        done += n;
    }
    const double n = static_cast<double>(mc.samples);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

namespace detail {

// Cross costs must ignore the estimate for the scalar reduction to exist.
inline void check_decoupled(const Problem& p) {
    auto check = [](const CostFn& c, const std::vector<Vector>& us,
                    const std::vector<Vector>& thetas, const char* name) {
        if (us.size() < 2) return;
        std::size_t probes = 0;
        for (const Vector& th : thetas) {
            const double ref = c(us.front(), th);
            for (std::size_t i = 1; i < us.size(); ++i)
                if (std::fabs(c(us[i], th) - ref) > 1e-12 * (1.0 + std::fabs(ref)))
                    throw precondition_violation(std::string(name) +
                                                 " depends on the estimate; the scalar "
                                                 "statistic is undefined for this cost");
            if (++probes == 8) break;
        }
    };
    check(p.costs.c01, p.h0.prior.nodes, p.h1.prior.nodes, "declare-0 cross cost");
    check(p.costs.c10, p.h1.prior.nodes, p.h0.prior.nodes, "declare-1 cross cost");
}

}  // namespace detail

// Scalar form of the comparison when the cross costs are estimate-free:
//
//     t(x) = (D01(x) - inf_u D11(u,x)) / (D10(x) - inf_u D00(u,x))
//
// compared against the same lambda as the full objective test.
inline double decoupled_test_statistic(const Problem& p, const Vector& x) {
    detail::check_decoupled(p);
    const double d01 = script_d(p.h1, p.costs.c01, p.h0.prior.nodes.front(), x);
    const double d10 = script_d(p.h0, p.costs.c10, p.h1.prior.nodes.front(), x);
    const double inf_d11 =
        inner_minimize([&](const Vector& u) { return script_d(p.h1, p.costs.c11, u, x); },
                       p.h1.prior)
            .value;
    const double inf_d00 =
        inner_minimize([&](const Vector& u) { return script_d(p.h0, p.costs.c00, u, x); },
                       p.h0.prior)
            .value;
    const double num = d01 - inf_d11;
    const double den = d10 - inf_d00;
    if (den <= 0.0) {
        if (num > 0.0) return kInf;  // declaring H1 is free under H0: always take it
        throw undefined_statistic("decoupled_test_statistic: both sides degenerate");
    }
    return num / den;
}

// Same statistic specialized to a simple null, normalized by the null density.
inline double simple_null_statistic(const Problem& p, const Vector& x) {
    if (!p.h0.simple())
        throw precondition_violation("simple_null_statistic: composite null");
    detail::check_decoupled(p);
    const double f0 = marginal_density(p.h0, x);
    const double d01 = script_d(p.h1, p.costs.c01, Vector{}, x);
    const double inf_d11 =
        inner_minimize([&](const Vector& u) { return script_d(p.h1, p.costs.c11, u, x); },
                       p.h1.prior)
            .value;
    const double num = d01 - inf_d11;
    if (f0 <= 0.0) {
        if (num > 0.0) return kInf;
        throw undefined_statistic("simple_null_statistic: zero density and zero numerator");
    }
    return num / f0;
}

// Calibration atoms for the scalar rule on a discrete alphabet: per point, the
// H0-truth cost of each declaration with its best estimate, keyed by t(x).
inline std::vector<CalibrationAtom> decoupled_h0_cost_atoms(const Problem& p) {
    const DiscreteSpace* alpha = p.discrete_alphabet();
    if (!alpha) throw invalid_input("decoupled_h0_cost_atoms: discrete sample space required");
    std::vector<CalibrationAtom> atoms;
    atoms.reserve(alpha->points.size());
    for (const Vector& x : alpha->points) {
        CalibrationAtom a;
        a.statistic = decoupled_test_statistic(p, x);
        a.cost_declare0 =
            inner_minimize([&](const Vector& u) { return script_d(p.h0, p.costs.c00, u, x); },
                           p.h0.prior)
                .value;
        a.cost_declare1 = script_d(p.h0, p.costs.c10, p.h1.prior.nodes.front(), x);
        atoms.push_back(a);
    }
    return atoms;
}

}  // namespace jointdet

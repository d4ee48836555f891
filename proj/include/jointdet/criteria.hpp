#pragma once

// Named criterion families built on the general optimal rule:
//
//   MAP     mode of the posterior mass; the limit of a shrinking-window cost.
//           The window radius enters the decision only through a threshold
//           factor (ball volumes); an exact-window evaluation path exists to
//           validate that limit numerically.
//   MMSE    posterior mean under squared-error estimation loss.
//   median  posterior median under absolute-error estimation loss (scalars).
//
// Each family has an estimator, a scalar test statistic in ratio form, and the
// cost functions that reproduce it through the full objective comparison.

#include <functional>
#include <numbers>

#include "jointdet/common.hpp"
#include "jointdet/general_optimal.hpp"
#include "jointdet/model.hpp"

namespace jointdet {

// ---------------------------------------------------------------------------
// MAP

struct MapConfig {
    double delta = 0.0;  // window radius
    double v0 = 1.0;     // ball volume in the H0 parameter dimension (1 if simple)
    double v1 = 1.0;     // ball volume in the H1 parameter dimension
};

// Volume of a euclidean ball; dimension 0 (a simple hypothesis) counts as 1 so
// it drops out of threshold factors.
inline double ball_volume(std::size_t dim, double radius) {
    if (dim == 0) return 1.0;
    const double d = static_cast<double>(dim);
    return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) *
           std::pow(radius, d);
}

inline MapConfig make_map_config(double delta, std::size_t dim0, std::size_t dim1) {
    if (!(delta > 0.0)) throw invalid_input("make_map_config: delta must be positive");
    return {delta, ball_volume(dim0, delta), ball_volume(dim1, delta)};
}

// True when the window is too coarse relative to the prior's support for the
// small-window reading of the statistic to be trustworthy.
inline bool map_window_too_wide(const Prior& prior, double delta) {
    if (prior.kind != Prior::Kind::quadrature || prior.nodes.front().empty()) return false;
    double lo = kInf, hi = -kInf;
    for (const Vector& n : prior.nodes) {
        lo = std::min(lo, n[0]);
        hi = std::max(hi, n[0]);
    }
    return delta > 0.01 * (hi - lo);
}

struct MapEstimate {
    Vector value;
    std::vector<std::size_t> ties;  // support indices within tie tolerance of the max
    double objective = 0.0;         // sup of the posterior objective
};

namespace detail {

// Height of the posterior objective at support node l: mass for point priors,
// reconstructed density (weight / cell width) for quadrature priors.
inline double posterior_height(const HypothesisSpec& h, const Vector& x, std::size_t l) {
    double w = h.prior.weights[l];
    if (h.prior.kind == Prior::Kind::quadrature && !h.prior.cell_widths.empty())
        w /= h.prior.cell_widths[l];
    return w * h.family.density(x, h.prior.nodes[l]);
}

}  // namespace detail

// Maximizer of the prior-times-likelihood objective.  Point priors reduce to the
// weighted-likelihood argmax; quadrature priors take the best grid node and,
// when the prior carries its continuous density, refine between the neighbours.
inline MapEstimate map_estimator(const HypothesisSpec& h, const Vector& x) {
    if (h.prior.nodes.empty()) throw invalid_input("map_estimator: empty prior support");
    MapEstimate best;
    best.objective = -kInf;
    std::size_t best_i = 0;
    for (std::size_t l = 0; l < h.prior.nodes.size(); ++l) {
        const double v = detail::posterior_height(h, x, l);
        if (!std::isfinite(v)) throw numerical_domain("map_estimator: non-finite objective");
        if (v > best.objective) {
            best.objective = v;
            best_i = l;
        }
    }
    for (std::size_t l = 0; l < h.prior.nodes.size(); ++l)
        if (close_rel(detail::posterior_height(h, x, l), best.objective, kTieTol))
            best.ties.push_back(l);
    best.value = h.prior.nodes[best_i];

    if (h.prior.kind == Prior::Kind::quadrature && h.prior.density &&
        h.prior.nodes.front().size() == 1 && h.prior.nodes.size() >= 2) {
        const std::size_t lo_i = best_i == 0 ? 0 : best_i - 1;
        const std::size_t hi_i = std::min(best_i + 1, h.prior.nodes.size() - 1);
        const double lo = h.prior.nodes[lo_i][0];
        const double hi = h.prior.nodes[hi_i][0];
        if (hi > lo) {
            auto neg = [&](double t) {
                const Vector u{t};
                return -(h.prior.density(u) * h.family.density(x, u));
            };
            const double u = detail::golden_min(neg, lo, hi, 1e-10 * (1.0 + hi - lo));
            const double v = -neg(u);
            if (v > best.objective) {
                best.objective = v;
                best.value = Vector{u};
            }
        }
    }
    return best;
}

struct MapStatistic {
    double value = 0.0;             // ratio of posterior suprema
    double threshold_factor = 1.0;  // multiply the raw threshold by this
};

// Ratio of the posterior suprema, with the window-volume threshold factor that
// turns a raw threshold lambda into the one this statistic is compared against.
// For a simple null the denominator is the null density itself.
inline MapStatistic map_statistic(const Problem& p, const Vector& x, const MapConfig& cfg) {
    const double num = map_estimator(p.h1, x).objective;
    double den;
    MapStatistic s;
    if (p.h0.simple()) {
        den = marginal_density(p.h0, x);
        s.threshold_factor = 1.0 / cfg.v1;
    } else {
        den = map_estimator(p.h0, x).objective;
        s.threshold_factor = cfg.v0 / cfg.v1;
    }
    if (den <= 0.0) {
        if (num > 0.0) {
            s.value = kInf;
            return s;
        }
        throw undefined_statistic("map_statistic: both posterior suprema vanish");
    }
    s.value = num / den;
    return s;
}

// ---------------------------------------------------------------------------
// Exact window mass.  Integrates the piecewise-linear reconstruction of the
// node-level posterior density over [center-delta, center+delta]; summing raw
// node masses instead would break down once the window is narrower than the
// grid spacing.

class WindowMass {
public:
    WindowMass(const HypothesisSpec& h, const Vector& x) {
        const Prior& prior = h.prior;
        if (prior.kind != Prior::Kind::quadrature || prior.cell_widths.empty())
            throw invalid_input("window mass: quadrature prior with cell widths required");
        if (prior.nodes.front().size() != 1)
            throw invalid_input("window mass: scalar parameter required");
        const std::size_t n = prior.nodes.size();
        if (n < 2) throw invalid_input("window mass: at least two nodes required");
        theta_.resize(n);
        height_.resize(n);
        for (std::size_t l = 0; l < n; ++l) {
            theta_[l] = prior.nodes[l][0];
            if (l > 0 && !(theta_[l] > theta_[l - 1]))
                throw invalid_input("window mass: nodes must be strictly increasing");
            height_[l] = detail::posterior_height(h, x, l);
        }
        cum_.assign(n, 0.0);
        for (std::size_t l = 1; l < n; ++l)
            cum_[l] = cum_[l - 1] +
                      0.5 * (theta_[l] - theta_[l - 1]) * (height_[l] + height_[l - 1]);
    }

    // Mass of the reconstruction in [center - delta, center + delta].
    double mass(double center, double delta) const {
        if (!(delta > 0.0)) throw invalid_input("window mass: delta must be positive");
        return antiderivative(center + delta) - antiderivative(center - delta);
    }

    struct Sup {
        double value = 0.0;
        double center = 0.0;
    };

    // Maximize the window mass over the center: best node center, then a local
    // golden-section refinement between its neighbours.
    Sup sup(double delta) const {
        Sup best;
        std::size_t best_i = 0;
        best.value = -kInf;
        for (std::size_t i = 0; i < theta_.size(); ++i) {
            const double v = mass(theta_[i], delta);
            if (v > best.value) {
                best.value = v;
                best.center = theta_[i];
                best_i = i;
            }
        }
        const double lo = theta_[best_i == 0 ? 0 : best_i - 1];
        const double hi = theta_[std::min(best_i + 1, theta_.size() - 1)];
        if (hi > lo) {
            const double c = detail::golden_min([&](double t) { return -mass(t, delta); }, lo,
                                                hi, 1e-10 * (1.0 + hi - lo));
            const double v = mass(c, delta);
            if (v > best.value) {
                best.value = v;
                best.center = c;
            }
        }
        return best;
    }

private:
    // Integral of the reconstruction from the left end of the grid to t, linear
    // interpolation inside cells, zero mass outside the grid.
    double antiderivative(double t) const {
        if (t <= theta_.front()) return 0.0;
        if (t >= theta_.back()) return cum_.back();
        const std::size_t i =
            static_cast<std::size_t>(std::upper_bound(theta_.begin(), theta_.end(), t) -
                                     theta_.begin()) -
            1;
        const double span = theta_[i + 1] - theta_[i];
        const double s = t - theta_[i];
        const double gt = height_[i] + (height_[i + 1] - height_[i]) * (s / span);
        return cum_[i] + 0.5 * s * (height_[i] + gt);
    }

    std::vector<double> theta_, height_, cum_;
};

// Statistic of the exact window-cost objective for a simple null: the largest
// posterior mass any radius-delta window can capture, over the null density.
// Divided by the window width 2*delta it approaches map_statistic as delta -> 0.
inline double window_cost_statistic(const Problem& p, const Vector& x, double delta) {
    if (!p.h0.simple())
        throw precondition_violation("window_cost_statistic: composite null not supported");
    const double f0 = marginal_density(p.h0, x);
    const double num = WindowMass(p.h1, x).sup(delta).value;
    if (f0 <= 0.0) {
        if (num > 0.0) return kInf;
        throw undefined_statistic("window_cost_statistic: zero mass on both sides");
    }
    return num / f0;
}

// ---------------------------------------------------------------------------
// MMSE

// Posterior mean of the parameter.
inline Vector mmse_estimator(const HypothesisSpec& h, const Vector& x) {
    if (h.prior.nodes.empty()) throw invalid_input("mmse_estimator: empty prior support");
    const std::size_t dim = h.prior.nodes.front().size();
    Vector num(dim, 0.0);
    double den = 0.0;
    for (std::size_t l = 0; l < h.prior.nodes.size(); ++l) {
        const double mass = h.prior.weights[l] * h.family.density(x, h.prior.nodes[l]);
        den += mass;
        for (std::size_t d = 0; d < dim; ++d) num[d] += mass * h.prior.nodes[l][d];
    }
    if (!(den > 0.0))
        throw undefined_statistic("mmse_estimator: zero posterior mass at this sample");
    for (double& v : num) v /= den;
    return num;
}

// The two sides of a criterion test in ratio form: decide H1 iff a1 > lambda*a0.
struct CriterionPair {
    double a1 = 0.0;
    double a0 = 0.0;
};

// Costs that reproduce the MMSE test through the full objective comparison:
// squared-error estimation on the declared side, fixed detection penalties
// (quadratic in the missed parameter) across.  Against a parameter-free side
// the cross penalty is the unit detection error.
inline CostSpec mmse_costs() {
    auto se = [](const Vector& u, const Vector& th) { return detail::sq_dist(u, th); };
    auto cross = [](const Vector&, const Vector& th) {
        return th.empty() ? 1.0 : detail::norm_sq(th);
    };
    return {se, cross, cross, se};
}

namespace detail {

inline void probe_cost_matches(const CostFn& have, const CostFn& want,
                               const std::vector<Vector>& us, const std::vector<Vector>& ths,
                               const char* what) {
    std::size_t probes = 0;
    for (const Vector& u : us)
        for (const Vector& th : ths) {
            const double a = have(u, th);
            const double b = want(u, th);
            if (std::fabs(a - b) > 1e-12 * (1.0 + std::fabs(b)))
                throw precondition_violation(std::string("criterion statistic requires ") +
                                             what);
            if (++probes == 8) return;
        }
}

// One criterion side: a_j = ||posterior mean||^2 * marginal + the cross-cost
// excess over the squared parameter magnitude, all against side j's posterior.
inline double mmse_side(const HypothesisSpec& h, const CostFn& cross, const Vector& u_probe,
                        const Vector& x) {
    double m = 0.0, bracket = 0.0;
    Vector num(h.prior.nodes.front().size(), 0.0);
    for (std::size_t l = 0; l < h.prior.nodes.size(); ++l) {
        const Vector& th = h.prior.nodes[l];
        const double mass = h.prior.weights[l] * h.family.density(x, th);
        m += mass;
        for (std::size_t d = 0; d < th.size(); ++d) num[d] += mass * th[d];
        bracket += mass * (cross(u_probe, th) - norm_sq(th));
    }
    const double mean_sq_mass = m > 0.0 ? norm_sq(num) / m : 0.0;
    return mean_sq_mass + bracket;
}

}  // namespace detail

// MMSE test statistic pair: a1/a0 against lambda reproduces the full objective
// comparison under mmse-style costs (squared-error matched branches, cross
// penalties independent of the estimate).
inline CriterionPair mmse_statistic(const Problem& p, const Vector& x) {
    auto se = [](const Vector& u, const Vector& th) { return detail::sq_dist(u, th); };
    detail::probe_cost_matches(p.costs.c11, se, p.h1.prior.nodes, p.h1.prior.nodes,
                               "squared-error cost on the declare-1 branch");
    detail::probe_cost_matches(p.costs.c00, se, p.h0.prior.nodes, p.h0.prior.nodes,
                               "squared-error cost on the declare-0 branch");
    detail::check_decoupled(p);
    CriterionPair out;
    out.a1 = detail::mmse_side(p.h1, p.costs.c01, p.h0.prior.nodes.front(), x);
    out.a0 = detail::mmse_side(p.h0, p.costs.c10, p.h1.prior.nodes.front(), x);
    return out;
}

// Closed-form value the mmse_statistic ratio collapses to when both cross costs
// equal the squared parameter magnitude; used to validate the simplification.
inline double mmse_simplified_ratio(const Problem& p, const Vector& x) {
    if (p.h0.simple()) throw precondition_violation("mmse_simplified_ratio: composite null required");
    const Vector t1 = mmse_estimator(p.h1, x);
    const Vector t0 = mmse_estimator(p.h0, x);
    const double denom = detail::norm_sq(t0) * marginal_density(p.h0, x);
    if (!(denom > 0.0))
        throw undefined_statistic("mmse_simplified_ratio: vanishing null-side value");
    return detail::norm_sq(t1) * marginal_density(p.h1, x) / denom;
}

// ---------------------------------------------------------------------------
// Median

// Costs that reproduce the median test: absolute-error estimation on the
// declared side, fixed detection penalties (absolute parameter magnitude, or
// the unit detection error against a parameter-free side).
inline CostSpec median_costs() {
    auto ae = [](const Vector& u, const Vector& th) {
        return std::fabs((u.empty() ? 0.0 : u[0]) - (th.empty() ? 0.0 : th[0]));
    };
    auto cross = [ae](const Vector&, const Vector& th) {
        return th.empty() ? 1.0 : ae(Vector{}, th);
    };
    return {ae, cross, cross, ae};
}

// Posterior median of a scalar parameter.  Point priors: smallest node where the
// cumulative posterior mass reaches one half.  Quadrature priors: linear
// interpolation of the half-mass node readings (each node's own mass counted
// half below it), which removes the half-cell bias of the raw running sum.
inline double median_estimator(const HypothesisSpec& h, const Vector& x) {
    if (h.prior.nodes.empty() || h.prior.nodes.front().size() != 1)
        throw invalid_input("median_estimator: scalar parameter required");
    const std::size_t n = h.prior.nodes.size();
    std::vector<std::pair<double, double>> mass(n);  // (theta, posterior mass)
    double total = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        mass[l] = {h.prior.nodes[l][0],
                   h.prior.weights[l] * h.family.density(x, h.prior.nodes[l])};
        total += mass[l].second;
    }
    if (!(total > 0.0))
        throw undefined_statistic("median_estimator: zero posterior mass at this sample");

    if (h.prior.kind == Prior::Kind::point_mass) {
        std::sort(mass.begin(), mass.end());
        double cum = 0.0;
        for (const auto& [theta, m] : mass) {
            cum += m;
            if (cum >= 0.5 * total) return theta;
        }
        return mass.back().first;
    }

    for (std::size_t l = 1; l < n; ++l)
        if (!(mass[l].first > mass[l - 1].first))
            throw invalid_input("median_estimator: quadrature nodes must be increasing");
    const double target = 0.5 * total;
    double cum = 0.0, prev_level = 0.0, prev_theta = mass.front().first;
    for (std::size_t l = 0; l < n; ++l) {
        cum += mass[l].second;
        const double level = cum - 0.5 * mass[l].second;  // half-mass reading at the node
        if (level >= target) {
            if (l == 0 || level == prev_level) return mass[l].first;
            const double w = (target - prev_level) / (level - prev_level);
            return prev_theta + w * (mass[l].first - prev_theta);
        }
        prev_level = level;
        prev_theta = mass[l].first;
    }
    return mass.back().first;
}

namespace detail {

// One median criterion side via the sign form:
//   a_j = sum_l mass_l * (cross(theta_l) + theta_l * sgn(median - theta_l)).
inline double median_side(const HypothesisSpec& h, const CostFn& cross, const Vector& u_probe,
                          const Vector& x) {
    if (h.simple()) {
        // No parameter to estimate: only the cross penalty remains.
        return cross(u_probe, Vector{}) * marginal_density(h, x);
    }
    const double med = median_estimator(h, x);
    double a = 0.0;
    for (std::size_t l = 0; l < h.prior.nodes.size(); ++l) {
        const Vector& th = h.prior.nodes[l];
        const double mass = h.prior.weights[l] * h.family.density(x, th);
        const double d = med - th[0];
        const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        a += mass * (cross(u_probe, th) + th[0] * sgn);
    }
    return a;
}

}  // namespace detail

// Median test statistic pair: decide H1 iff a1 > lambda * a0, equivalent to the
// full objective comparison under median-style costs.
inline CriterionPair median_statistic(const Problem& p, const Vector& x) {
    auto ae = [](const Vector& u, const Vector& th) {
        return std::fabs((u.empty() ? 0.0 : u[0]) - (th.empty() ? 0.0 : th[0]));
    };
    if (!p.h1.simple() && p.h1.prior.nodes.front().size() != 1)
        throw invalid_input("median_statistic: scalar parameter required");
    if (!p.h0.simple() && p.h0.prior.nodes.front().size() != 1)
        throw invalid_input("median_statistic: scalar parameter required");
    detail::probe_cost_matches(p.costs.c11, ae, p.h1.prior.nodes, p.h1.prior.nodes,
                               "absolute-error cost on the declare-1 branch");
    detail::probe_cost_matches(p.costs.c00, ae, p.h0.prior.nodes, p.h0.prior.nodes,
                               "absolute-error cost on the declare-0 branch");
    detail::check_decoupled(p);
    CriterionPair out;
    out.a1 = detail::median_side(p.h1, p.costs.c01, p.h0.prior.nodes.front(), x);
    out.a0 = detail::median_side(p.h0, p.costs.c10, p.h1.prior.nodes.front(), x);
    return out;
}

// Oriented partial posterior moment on the support grid:
//   sum over nodes strictly between 0 and `limit` of theta_l * mass_l,
// half-weighted at an exact endpoint hit, negated when limit < 0.  Twice this
// value equals the sign-form side when the cross cost is |theta| — the identity
// is pure cancellation, so it holds to rounding on any support.
inline double median_partial_moment(const HypothesisSpec& h, const Vector& x, double limit) {
    if (h.prior.nodes.empty() || h.prior.nodes.front().size() != 1)
        throw invalid_input("median_partial_moment: scalar parameter required");
    const double lo = std::min(0.0, limit);
    const double hi = std::max(0.0, limit);
    double s = 0.0;
    for (std::size_t l = 0; l < h.prior.nodes.size(); ++l) {
        const double th = h.prior.nodes[l][0];
        const double mass = h.prior.weights[l] * h.family.density(x, h.prior.nodes[l]);
        double w = 0.0;
        if (th > lo && th < hi)
            w = 1.0;
        else if (th == limit && th != 0.0)
            w = 0.5;
        s += w * th * mass;
    }
    return limit < 0.0 ? -s : s;
}

}  // namespace jointdet

#pragma once

// Ready-made density families and hypothesis builders: 1-d Gaussian mean-shift
// families with grid priors (the workhorse continuous case) and discrete table
// families used to lift tabulated problems into the general machinery.

#include <cmath>
#include <numbers>

#include "jointdet/model.hpp"

namespace jointdet {

inline double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::numbers::sqrt2 * std::sqrt(std::numbers::pi));
}

inline double normal_log_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Fully known N(mean, sd^2) observation model.
inline HypothesisSpec simple_gaussian_hypothesis(double mean, double sd) {
    HypothesisSpec h;
    h.family.density = [mean, sd](const Vector& x, const Vector&) {
        return normal_pdf(x.at(0), mean, sd);
    };
    h.family.log_density = [mean, sd](const Vector& x, const Vector&) {
        return normal_log_pdf(x.at(0), mean, sd);
    };
    h.family.sampler = [mean, sd](std::mt19937_64& rng, const Vector&) {
        std::normal_distribution<double> n(mean, sd);
        return Vector{n(rng)};
    };
    h.family.space = ContinuousSpace{1};
    h.family.param_dim = 0;
    h.prior = Prior::simple();
    return h;
}

// X | theta ~ N(theta, noise_sd^2) with theta ~ N(prior_mean, prior_sd^2)
// discretized on an even grid of `n_nodes` points spanning [lo, hi].  Node
// weights are the prior density values renormalized to sum one; cell widths and
// the exact prior density ride along so mode search can refine off-grid.
//
// The marginal hook computes the same node sum as marginal_density but via the
// identity exp(-(x-th_l)^2/2s^2) = exp(-x^2/2s^2) * exp(x*th_l/s^2) * exp(-th_l^2/2s^2)
// where the middle factor follows a geometric recurrence along the grid.  Two
// exp() calls per evaluation instead of one per node; the summation order is the
// node order, so it tracks the generic path to within a few hundred ulps.
inline HypothesisSpec gaussian_grid_hypothesis(double prior_mean, double prior_sd,
                                               double lo, double hi, std::size_t n_nodes,
                                               double noise_sd = 1.0) {
    if (n_nodes < 2 || !(hi > lo)) throw invalid_input("gaussian_grid_hypothesis: bad grid");
    const double h = (hi - lo) / static_cast<double>(n_nodes - 1);

    std::vector<Vector> nodes(n_nodes);
    std::vector<double> w(n_nodes), cells(n_nodes, h);
    double wsum = 0.0;
    for (std::size_t l = 0; l < n_nodes; ++l) {
        const double th = lo + h * static_cast<double>(l);
        nodes[l] = {th};
        w[l] = normal_pdf(th, prior_mean, prior_sd);
        wsum += w[l];
    }
    if (!(wsum > 0.0)) throw invalid_input("gaussian_grid_hypothesis: prior mass underflow");
    for (double& v : w) v /= wsum;

    HypothesisSpec spec;
    spec.family.density = [noise_sd](const Vector& x, const Vector& th) {
        return normal_pdf(x.at(0), th.at(0), noise_sd);
    };
    spec.family.log_density = [noise_sd](const Vector& x, const Vector& th) {
        return normal_log_pdf(x.at(0), th.at(0), noise_sd);
    };
    spec.family.sampler = [noise_sd](std::mt19937_64& rng, const Vector& th) {
        std::normal_distribution<double> n(th.at(0), noise_sd);
        return Vector{n(rng)};
    };
    spec.family.space = ContinuousSpace{1};
    spec.family.param_dim = 1;
    spec.prior = Prior::quadrature(nodes, w, cells, [prior_mean, prior_sd](const Vector& u) {
        return normal_pdf(u.at(0), prior_mean, prior_sd);
    });

    // Precompute a_l = w_l * exp(-th_l^2 / 2s^2) / (s * sqrt(2*pi)).
    const double s2 = noise_sd * noise_sd;
    const double norm = 1.0 / (noise_sd * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> a(n_nodes);
    for (std::size_t l = 0; l < n_nodes; ++l) {
        const double th = lo + h * static_cast<double>(l);
        a[l] = w[l] * std::exp(-0.5 * th * th / s2) * norm;
    }
    spec.marginal_hook = [a = std::move(a), lo, h, s2](const Vector& xv) {
        const double x = xv.at(0);
        // t_l = exp((x*th_l - x^2/2)/s^2) <= exp(th_l^2/2s^2): bounded by the grid,
        // never overflows; far-out x underflows to zero like the true marginal.
        double t = std::exp((x * lo - 0.5 * x * x) / s2);
        const double r = std::exp(x * h / s2);
        double sum = 0.0;
        for (double al : a) {
            sum += al * t;
            t *= r;
        }
        return sum;
    };
    return spec;
}

// Discrete tabulated family: alphabet point m is the vector {m}, subcase l the
// parameter vector {l}, density(x, theta) = rows[l][m].
inline HypothesisSpec table_hypothesis(const std::vector<std::vector<double>>& rows,
                                       const std::vector<double>& weights) {
    if (rows.empty() || rows.front().empty()) throw invalid_input("table_hypothesis: empty table");
    const std::size_t m = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != m) throw invalid_input("table_hypothesis: ragged table");

    DiscreteSpace space;
    for (std::size_t i = 0; i < m; ++i) space.points.push_back({static_cast<double>(i)});

    HypothesisSpec spec;
    spec.family.space = space;
    if (rows.size() == 1) {
        // Single subcase: a simple hypothesis, no estimation target.
        spec.family.param_dim = 0;
        spec.family.density = [row = rows.front()](const Vector& x, const Vector&) {
            return row.at(static_cast<std::size_t>(x.at(0)));
        };
        spec.prior = Prior::simple();
        return spec;
    }
    spec.family.param_dim = 1;
    spec.family.density = [rows](const Vector& x, const Vector& th) {
        return rows.at(static_cast<std::size_t>(th.at(0))).at(static_cast<std::size_t>(x.at(0)));
    };
    std::vector<Vector> nodes;
    for (std::size_t l = 0; l < rows.size(); ++l) nodes.push_back({static_cast<double>(l)});
    spec.prior = Prior::point_masses(nodes, weights);
    return spec;
}

}  // namespace jointdet

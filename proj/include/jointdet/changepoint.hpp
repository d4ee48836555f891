#pragma once

// Retrospective changepoint detection on a fixed window of n samples.  The
// change time tau is the count of leading samples still in the nominal regime:
// tau = 0 means every sample follows the alternative, tau = n means none do.
// A prior over tau with end atoms for "changed before the window" and "no
// change inside the window" turns detection into a two-hypothesis problem, and
// the optimal statistic is a prior-weighted maximum of tail likelihood ratios.
// Dropping the prior weights gives the classical CUSUM maximum; tolerating an
// estimation error of up to m positions yields a windowed sum variant.

#include <functional>
#include <numbers>
#include <optional>

#include "jointdet/common.hpp"

namespace jointdet {

struct ChangepointModel {
    std::size_t n = 0;  // number of samples in the window

    // Log conditional densities of sample k (0-based) given the preceding
    // entries of the series; memoryless models just ignore the prefix.
    using LogConditional = std::function<double(std::size_t k, const Vector& series)>;
    LogConditional log_nominal;
    LogConditional log_alt;
    bool iid = true;

    // prior[j] = P(tau = j) for 0 < j < n, with end atoms prior[0] = P(tau <= 0)
    // and prior[n] = P(tau >= n).
    Vector prior;

    void validate() const {
        if (n == 0) throw invalid_input("changepoint model: need at least one sample");
        if (!log_nominal || !log_alt)
            throw invalid_input("changepoint model: both log densities are required");
        if (prior.size() != n + 1)
            throw invalid_input("changepoint model: prior must have n+1 entries, got " +
                                std::to_string(prior.size()));
        double s = 0.0;
        for (double w : prior) {
            if (!(w >= 0.0)) throw invalid_input("changepoint model: negative prior weight");
            s += w;
        }
        if (std::fabs(s - 1.0) > 1e-12)
            throw invalid_input("changepoint model: prior sums to " + std::to_string(s));
        if (!(prior[n] < 1.0))
            throw invalid_input("changepoint model: no-change atom must leave mass for a change");
    }

    // P(tau = j | a change happens inside the window), defined for j < n.
    double conditional_weight(std::size_t j) const { return prior[j] / (1.0 - prior[n]); }
};

inline Vector uniform_change_prior(std::size_t n) {
    if (n == 0) throw invalid_input("uniform_change_prior: n must be positive");
    return Vector(n + 1, 1.0 / static_cast<double>(n + 1));
}

inline ChangepointModel iid_changepoint(std::size_t n,
                                        std::function<double(double)> log_nominal,
                                        std::function<double(double)> log_alt,
                                        Vector prior = {}) {
    ChangepointModel m;
    m.n = n;
    m.iid = true;
    m.log_nominal = [f = std::move(log_nominal)](std::size_t k, const Vector& x) {
        return f(x.at(k));
    };
    m.log_alt = [f = std::move(log_alt)](std::size_t k, const Vector& x) {
        return f(x.at(k));
    };
    m.prior = prior.empty() ? uniform_change_prior(n) : std::move(prior);
    m.validate();
    return m;
}

// Unit-variance Gaussian mean shift, the standard demo model.
inline ChangepointModel gaussian_shift_changepoint(std::size_t n, double nominal_mean,
                                                   double alt_mean, double sd = 1.0,
                                                   Vector prior = {}) {
    if (!(sd > 0.0)) throw invalid_input("gaussian_shift_changepoint: sd must be positive");
    auto log_normal = [sd](double mean) {
        return [mean, sd](double x) {
            const double z = (x - mean) / sd;
            return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
        };
    };
    return iid_changepoint(n, log_normal(nominal_mean), log_normal(alt_mean),
                           std::move(prior));
}

namespace detail {

inline void check_series(const ChangepointModel& m, const Vector& x) {
    m.validate();
    if (x.size() != m.n)
        throw invalid_input("changepoint: series has " + std::to_string(x.size()) +
                            " samples, model expects " + std::to_string(m.n));
}

}  // namespace detail

// Log density of the series when the first tau samples are nominal and the rest
// follow the alternative.  tau outside [0, n] is collapsed onto the end atoms.
inline double log_segment_likelihood(const ChangepointModel& m, const Vector& x,
                                     long long tau) {
    detail::check_series(m, x);
    const std::size_t t = static_cast<std::size_t>(
        std::clamp<long long>(tau, 0, static_cast<long long>(m.n)));
    double s = 0.0;
    for (std::size_t k = 0; k < m.n; ++k) s += k < t ? m.log_nominal(k, x) : m.log_alt(k, x);
    if (std::isnan(s)) throw numerical_domain("segment likelihood: indeterminate log density");
    return s;
}

inline double segment_likelihood(const ChangepointModel& m, const Vector& x, long long tau) {
    return std::exp(log_segment_likelihood(m, x, tau));
}

// t[k] = log of the alternative/nominal density ratio of the tail starting at
// sample k, for k = 0..n-1, accumulated as a suffix sum of per-sample log
// ratios so large windows neither overflow nor underflow.
inline Vector tail_log_ratios(const ChangepointModel& m, const Vector& x) {
    detail::check_series(m, x);
    Vector t(m.n, 0.0);
    double acc = 0.0;
    for (std::size_t back = 0; back < m.n; ++back) {
        const std::size_t k = m.n - 1 - back;
        const double la = m.log_alt(k, x);
        const double ln = m.log_nominal(k, x);
        const double step = la - ln;
        if (std::isnan(step))
            throw undefined_statistic("tail ratio: sample " + std::to_string(k) +
                                      " has zero density under both regimes");
        acc += step;
        t[k] = acc;
    }
    return t;
}

inline double likelihood_ratio_tail(const ChangepointModel& m, const Vector& x,
                                    std::size_t k) {
    const Vector t = tail_log_ratios(m, x);
    if (k >= t.size())
        throw invalid_input("likelihood_ratio_tail: index " + std::to_string(k) +
                            " outside [0, n)");
    return std::exp(t[k]);
}

struct CpStatistic {
    double value = 0.0;
    std::size_t tau_hat = 0;             // smallest maximizing index
    std::vector<std::size_t> ties;       // all indices within tie tolerance
};

namespace detail {

inline CpStatistic max_over_indices(const std::vector<double>& vals, std::size_t first) {
    CpStatistic s;
    s.value = -kInf;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (!std::isfinite(vals[i]) && vals[i] != kInf)
            throw numerical_domain("changepoint statistic: non-finite candidate");
        if (vals[i] > s.value) {
            s.value = vals[i];
            s.tau_hat = first + i;
        }
    }
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (close_rel(vals[i], s.value, kTieTol)) s.ties.push_back(first + i);
    return s;
}

}  // namespace detail

// Prior-weighted maximum of tail ratios: the optimal detector under the change
// prior, with the maximizing index as the change-time estimate.
inline CpStatistic bayes_cp_statistic(const ChangepointModel& m, const Vector& x) {
    const Vector t = tail_log_ratios(m, x);
    std::vector<double> vals(m.n);
    for (std::size_t k = 0; k < m.n; ++k)
        vals[k] = m.conditional_weight(k) * std::exp(t[k]);
    return detail::max_over_indices(vals, 0);
}

// Unweighted maximum of tail ratios.
inline CpStatistic cusum_statistic(const ChangepointModel& m, const Vector& x) {
    const Vector t = tail_log_ratios(m, x);
    std::vector<double> vals(m.n);
    for (std::size_t k = 0; k < m.n; ++k) vals[k] = std::exp(t[k]);
    return detail::max_over_indices(vals, 0);
}

enum class WindowWeighting { uniform, bayes };

// Sum of tail ratios over a +-m window around each admissible center, maximized
// over centers.  Arises from tolerating change-time estimates off by up to m;
// m = 0 with uniform weighting reduces to the plain CUSUM maximum exactly.
inline CpStatistic windowed_statistic(const ChangepointModel& m, const Vector& x,
                                      std::size_t half_width,
                                      WindowWeighting weighting = WindowWeighting::uniform) {
    const Vector t = tail_log_ratios(m, x);
    if (2 * half_width >= m.n)
        throw invalid_input("windowed_statistic: half-width " + std::to_string(half_width) +
                            " needs 2*m < n, but n = " + std::to_string(m.n));
    std::vector<double> r(m.n);
    for (std::size_t k = 0; k < m.n; ++k) {
        const double w = weighting == WindowWeighting::bayes ? m.conditional_weight(k) : 1.0;
        r[k] = w * std::exp(t[k]);
    }
    std::vector<double> vals;
    vals.reserve(m.n - 2 * half_width);
    for (std::size_t c = half_width; c + half_width < m.n; ++c) {
        double s = 0.0;
        for (std::size_t k = c - half_width; k <= c + half_width; ++k) s += r[k];
        vals.push_back(s);
    }
    return detail::max_over_indices(vals, half_width);
}

struct CpVerdict {
    Decision decision = Decision::h0;
    double gamma = 0.0;
    std::optional<std::size_t> tau_hat;  // present unless the verdict is no-change
    double statistic = 0.0;
    std::vector<std::size_t> ties;
};

// Threshold rule on the selected changepoint statistic, randomizing on a tie.
inline CpVerdict cp_decide(const ChangepointModel& m, const Vector& x, double lambda,
                           double gamma, std::size_t half_width = 0,
                           WindowWeighting weighting = WindowWeighting::bayes) {
    if (!(lambda > 0.0)) throw invalid_input("cp_decide: lambda must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw invalid_input("cp_decide: gamma outside [0,1]");
    CpStatistic s;
    if (half_width > 0)
        s = windowed_statistic(m, x, half_width, weighting);
    else if (weighting == WindowWeighting::bayes)
        s = bayes_cp_statistic(m, x);
    else
        s = cusum_statistic(m, x);
    CpVerdict v;
    v.statistic = s.value;
    v.ties = s.ties;
    if (close_rel(s.value, lambda, kTieTol)) {
        v.decision = Decision::randomize;
        v.gamma = gamma;
        v.tau_hat = s.tau_hat;
    } else if (s.value > lambda) {
        v.decision = Decision::h1;
        v.tau_hat = s.tau_hat;
    }
    return v;
}

}  // namespace jointdet

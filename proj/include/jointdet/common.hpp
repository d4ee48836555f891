#pragma once

// Shared basics: the parameter/sample vector type, the error taxonomy, and a few
// numeric helpers used across the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace jointdet {

using Vector = std::vector<double>;

// Relative tolerance used when deciding whether two weighted likelihoods (or two
// discrete statistics) tie.  Chosen tight enough that genuine ties survive exact
// rational inputs and loose enough to absorb one rounding step.
inline constexpr double kTieTol = 1e-12;

// Equality-branch tolerance for the continuous-objective comparisons, where each
// side is an inner minimization and carries more accumulated rounding.
inline constexpr double kObjectiveTieTol = 1e-10;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Outcome of a threshold comparison: committed to one hypothesis, or sitting on
// the randomization boundary (declare H1 with the rule's gamma).
enum class Decision { h0, h1, randomize };

inline const char* to_string(Decision d) {
    switch (d) {
        case Decision::h0: return "declare_h0";
        case Decision::h1: return "declare_h1";
        case Decision::randomize: return "randomize";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Error taxonomy.  Every documented failure mode maps to one of these; the CLI
// translates them into exit codes.

class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed caller input: bad tables, unknown alphabet point, missing sampler, ...
class invalid_input : public error {
public:
    using error::error;
};

// A likelihood-ratio style statistic whose numerator and denominator both vanish.
class undefined_statistic : public error {
public:
    using error::error;
};

// Non-finite value met where the math requires a finite one (overflow, nan probe).
class numerical_domain : public error {
public:
    using error::error;
};

// A documented precondition was probed and found violated (e.g. a cost handed to
// the decoupled fast path that actually depends on the estimate).
class precondition_violation : public error {
public:
    using error::error;
};

// Constraint level not reachable by any rule (alpha below alpha_min and friends).
class infeasible : public error {
public:
    using error::error;
};

// Guard against enumerations that would not finish (deterministic frontier).
class instance_too_large : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

// ---------------------------------------------------------------------------
// Small numeric helpers.

// a ~= b under relative tolerance `rel` (anchored at the larger magnitude, with an
// absolute floor so exact zeros compare equal to rounding dust).
inline bool close_rel(double a, double b, double rel) {
    if (a == b) return true;  // covers matching infinities
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) <= rel * scale;
}

inline double log_sum_exp(const std::vector<double>& v) {
    double m = -kInf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;  // empty or all -inf
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// SplitMix64: cheap, well-scrambled mapping from (seed, index) to a sub-stream
// seed.  Used to derive deterministic per-chunk RNG seeds so Monte Carlo results
// do not depend on how work is batched.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ (0x5851f42d4c957f2dULL * (stream + 1)));
}

}  // namespace jointdet

#pragma once

// Config-driven experiment runner behind the command-line tool.  A single JSON
// config names a problem (tabulated, Gaussian mean shift, or changepoint), a
// cost family, and one experiment:
//
//   calibrate      solve for (lambda, gamma) at the target constraint level
//   decide         calibrate, then evaluate the verdict at a given sample
//   frontier       sweep constraint levels; optimal vs classical trade-off
//   changepoint    calibrate a change detector and run it on a series
//   criteria-demo  estimator/statistic summary at a given sample
//
// Outputs: calibration.csv / frontier.csv plus a human-readable report.txt, all
// written atomically (temp file + rename).  Numeric CSV fields carry 17
// significant digits, so repeated runs with the same config and seed produce
// byte-identical CSVs.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "jointdet/calibrate.hpp"
#include "jointdet/changepoint.hpp"
#include "jointdet/criteria.hpp"
#include "jointdet/discrete_optimal.hpp"
#include "jointdet/families.hpp"
#include "jointdet/general_optimal.hpp"
#include "jointdet/model.hpp"

namespace jointdet::experiment {

using json = nlohmann::json;

struct Diagnostic {
    std::string path;     // config key path, e.g. "problem.h0.weights"
    std::string message;
};

struct Options {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<double> alpha;
    std::optional<std::string> output;
};

struct RunReport {
    std::vector<std::string> lines;   // report body, also written to report.txt
    std::vector<std::string> files;   // paths written
    double wall_ms = 0.0;
};

// ---------------------------------------------------------------------------
// Loading and validation

inline json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    try {
        return json::parse(in, nullptr, true, true);  // comments allowed
    } catch (const json::parse_error& e) {
        throw invalid_input(std::string("config parse error: ") + e.what());
    }
}

namespace detail {

inline bool is_uint(const json& j) {
    return j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0);
}

inline void check_weights(const json& w, const std::string& path,
                          std::vector<Diagnostic>& out) {
    if (!w.is_array() || w.empty()) {
        out.push_back({path, "must be a non-empty array of positive numbers"});
        return;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!w[i].is_number() || !(w[i].get<double>() > 0.0)) {
            out.push_back({path + "[" + std::to_string(i) + "]", "must be a positive number"});
            return;
        }
        s += w[i].get<double>();
    }
    if (std::fabs(s - 1.0) > 1e-9)
        out.push_back({path, "weights sum to " + std::to_string(s) + ", expected 1"});
}

inline void check_table(const json& side, const std::string& path, std::size_t alphabet,
                        std::vector<Diagnostic>& out) {
    if (!side.is_object() || !side.contains("rows") || !side.contains("weights")) {
        out.push_back({path, "must be an object with 'rows' and 'weights'"});
        return;
    }
    const json& rows = side["rows"];
    if (!rows.is_array() || rows.empty()) {
        out.push_back({path + ".rows", "must be a non-empty array of rows"});
        return;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const json& row = rows[r];
        const std::string rp = path + ".rows[" + std::to_string(r) + "]";
        if (!row.is_array() || row.size() != alphabet) {
            out.push_back({rp, "row length must equal the alphabet size"});
            continue;
        }
        double s = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!row[c].is_number() || row[c].get<double>() < 0.0) {
                out.push_back({rp + "[" + std::to_string(c) + "]",
                               "probabilities must be numbers >= 0"});
                s = -1.0;
                break;
            }
            s += row[c].get<double>();
        }
        if (s >= 0.0 && std::fabs(s - 1.0) > 1e-9)
            out.push_back({rp, "row sums to " + std::to_string(s) + ", expected 1"});
    }
    if (side["weights"].is_array() && !side["weights"].empty() &&
        side["weights"].size() != rows.size())
        out.push_back({path + ".weights", "must have one weight per row"});
    check_weights(side["weights"], path + ".weights", out);
}

inline void check_positive(const json& parent, const std::string& key,
                           const std::string& base, std::vector<Diagnostic>& out) {
    if (!parent.contains(key) || !parent[key].is_number() ||
        !(parent[key].get<double>() > 0.0))
        out.push_back({base + "." + key, "must be a positive number"});
}

inline bool contains_label(const json& alphabet, const std::string& label) {
    for (const auto& a : alphabet)
        if (a.is_string() && a.get<std::string>() == label) return true;
    return false;
}

}  // namespace detail

// Full schema and invariant check; an empty result means the config is runnable.
inline std::vector<Diagnostic> validate_config(const json& cfg) {
    std::vector<Diagnostic> out;
    if (!cfg.is_object() || cfg.empty()) {
        out.push_back({"", "config must be a non-empty JSON object"});
        return out;
    }

    static const std::vector<std::string> experiments{"calibrate", "decide", "frontier",
                                                      "changepoint", "criteria-demo"};
    std::string exp;
    if (!cfg.contains("experiment") || !cfg["experiment"].is_string()) {
        out.push_back({"experiment", "required: one of calibrate, decide, frontier, "
                                     "changepoint, criteria-demo"});
    } else {
        exp = cfg["experiment"].get<std::string>();
        if (std::find(experiments.begin(), experiments.end(), exp) == experiments.end())
            out.push_back({"experiment", "unknown experiment '" + exp + "'"});
    }

    const bool needs_alpha =
        exp == "calibrate" || exp == "decide" || exp == "frontier" || exp == "changepoint";
    if (cfg.contains("alpha")) {
        if (!cfg["alpha"].is_number() || !(cfg["alpha"].get<double>() > 0.0) ||
            !(cfg["alpha"].get<double>() < 1.0))
            out.push_back({"alpha", "must be a number strictly between 0 and 1"});
    } else if (needs_alpha) {
        out.push_back({"alpha", "required for the '" + exp + "' experiment"});
    }
    if (cfg.contains("seed") && !detail::is_uint(cfg["seed"]))
        out.push_back({"seed", "must be a non-negative integer"});
    if (cfg.contains("samples") &&
        (!detail::is_uint(cfg["samples"]) || cfg["samples"].get<std::uint64_t>() == 0))
        out.push_back({"samples", "must be a positive integer"});
    if (cfg.contains("output") && !cfg["output"].is_string())
        out.push_back({"output", "must be a directory path string"});

    std::string cost_type = "zero_one";
    if (cfg.contains("costs")) {
        const json& c = cfg["costs"];
        if (!c.is_object() || !c.contains("type") || !c["type"].is_string()) {
            out.push_back({"costs", "must be an object with a 'type' string"});
        } else {
            cost_type = c["type"].get<std::string>();
            static const std::vector<std::string> kinds{"zero_one", "squared_error",
                                                        "absolute_error", "map_window"};
            if (std::find(kinds.begin(), kinds.end(), cost_type) == kinds.end())
                out.push_back({"costs.type", "unknown cost family '" + cost_type + "'"});
            if (cost_type == "map_window") detail::check_positive(c, "delta", "costs", out);
        }
    }

    if (!cfg.contains("problem") || !cfg["problem"].is_object() ||
        !cfg["problem"].contains("type") || !cfg["problem"]["type"].is_string()) {
        out.push_back({"problem", "required: an object with a 'type' string"});
        return out;
    }
    const json& prob = cfg["problem"];
    const std::string type = prob["type"].get<std::string>();

    if (type == "discrete_table") {
        if (!prob.contains("alphabet") || !prob["alphabet"].is_array() ||
            prob["alphabet"].empty()) {
            out.push_back({"problem.alphabet", "must be a non-empty array of labels"});
        } else {
            const std::size_t m = prob["alphabet"].size();
            for (const char* side : {"h0", "h1"}) {
                if (!prob.contains(side))
                    out.push_back({std::string("problem.") + side,
                                   "required: {rows, weights} for this hypothesis"});
                else
                    detail::check_table(prob[side], std::string("problem.") + side, m, out);
            }
            if (cfg.contains("x")) {
                if (!cfg["x"].is_string())
                    out.push_back({"x", "must be an alphabet label for tabulated problems"});
                else if (!detail::contains_label(prob["alphabet"], cfg["x"].get<std::string>()))
                    out.push_back({"x", "label '" + cfg["x"].get<std::string>() +
                                            "' is not in the alphabet"});
            }
        }
        if (cost_type != "zero_one")
            out.push_back({"costs.type", "tabulated problems support zero_one costs only"});
        if (exp == "changepoint" || exp == "criteria-demo")
            out.push_back({"problem.type",
                           "'" + exp + "' does not apply to discrete_table problems"});
    } else if (type == "gaussian_mean") {
        detail::check_positive(prob, "noise_sd", "problem", out);
        detail::check_positive(prob, "prior_sd", "problem", out);
        if (!prob.contains("prior_mean") || !prob["prior_mean"].is_number())
            out.push_back({"problem.prior_mean", "must be a number"});
        if (prob.contains("h0_mean") && !prob["h0_mean"].is_number())
            out.push_back({"problem.h0_mean", "must be a number"});
        const bool lo_ok = prob.contains("grid_lo") && prob["grid_lo"].is_number();
        const bool hi_ok = prob.contains("grid_hi") && prob["grid_hi"].is_number();
        if (!lo_ok) out.push_back({"problem.grid_lo", "must be a number"});
        if (!hi_ok) out.push_back({"problem.grid_hi", "must be a number"});
        if (lo_ok && hi_ok &&
            !(prob["grid_lo"].get<double>() < prob["grid_hi"].get<double>()))
            out.push_back({"problem.grid_lo", "grid_lo must be below grid_hi"});
        if (!prob.contains("grid_nodes") || !detail::is_uint(prob["grid_nodes"]) ||
            prob["grid_nodes"].get<std::uint64_t>() < 2)
            out.push_back({"problem.grid_nodes", "must be an integer >= 2"});
        if (cfg.contains("x") && !cfg["x"].is_number())
            out.push_back({"x", "must be a number for gaussian_mean problems"});
        if (exp == "frontier" || exp == "changepoint")
            out.push_back({"problem.type",
                           "'" + exp + "' does not apply to gaussian_mean problems"});
    } else if (type == "changepoint_iid") {
        if (!prob.contains("n_samples") || !detail::is_uint(prob["n_samples"]) ||
            prob["n_samples"].get<std::uint64_t>() == 0)
            out.push_back({"problem.n_samples", "must be a positive integer"});
        for (const char* key : {"nominal_mean", "alt_mean"})
            if (!prob.contains(key) || !prob[key].is_number())
                out.push_back({std::string("problem.") + key, "must be a number"});
        detail::check_positive(prob, "noise_sd", "problem", out);
        if (prob.contains("prior")) {
            if (prob["prior"].is_string()) {
                if (prob["prior"].get<std::string>() != "uniform")
                    out.push_back({"problem.prior", "string form must be \"uniform\""});
            } else if (prob["prior"].is_array()) {
                if (prob.contains("n_samples") && detail::is_uint(prob["n_samples"]) &&
                    prob["prior"].size() != prob["n_samples"].get<std::size_t>() + 1)
                    out.push_back({"problem.prior",
                                   "must have n_samples + 1 entries (no-change atom last)"});
                double s = 0.0;
                bool numeric = true;
                for (const auto& v : prob["prior"]) {
                    if (!v.is_number() || v.get<double>() < 0.0) numeric = false;
                    else s += v.get<double>();
                }
                if (!numeric)
                    out.push_back({"problem.prior", "entries must be numbers >= 0"});
                else if (std::fabs(s - 1.0) > 1e-9)
                    out.push_back({"problem.prior",
                                   "sums to " + std::to_string(s) + ", expected 1"});
            } else {
                out.push_back({"problem.prior", "must be \"uniform\" or a weight array"});
            }
        }
        if (prob.contains("window")) {
            if (!detail::is_uint(prob["window"]))
                out.push_back({"problem.window", "must be a non-negative integer"});
            else if (prob.contains("n_samples") && detail::is_uint(prob["n_samples"]) &&
                     prob["window"].get<std::uint64_t>() > 0 &&
                     2 * prob["window"].get<std::uint64_t>() >=
                         prob["n_samples"].get<std::uint64_t>())
                out.push_back({"problem.window", "needs 2*window < n_samples"});
        }
        if (prob.contains("weighting")) {
            const json& w = prob["weighting"];
            if (!w.is_string() || (w.get<std::string>() != "uniform" &&
                                   w.get<std::string>() != "bayes"))
                out.push_back({"problem.weighting", "must be \"uniform\" or \"bayes\""});
        }
        if (cfg.contains("series")) {
            if (!cfg["series"].is_array())
                out.push_back({"series", "must be an array of sample values"});
            else if (prob.contains("n_samples") && detail::is_uint(prob["n_samples"]) &&
                     cfg["series"].size() != prob["n_samples"].get<std::size_t>())
                out.push_back({"series", "must have exactly n_samples entries"});
        }
        if (cfg.contains("series_csv") && !cfg["series_csv"].is_string())
            out.push_back({"series_csv", "must be a file path string"});
        if (exp == "decide" || exp == "frontier" || exp == "criteria-demo")
            out.push_back({"problem.type",
                           "'" + exp + "' does not apply to changepoint problems; "
                           "use the 'changepoint' experiment"});
    } else {
        out.push_back({"problem.type", "unknown problem type '" + type + "'"});
    }

    if ((exp == "decide" || exp == "criteria-demo") && type != "changepoint_iid" &&
        !cfg.contains("x"))
        out.push_back({"x", "required for the '" + exp + "' experiment"});
    return out;
}

// ---------------------------------------------------------------------------
// Output helpers

namespace detail {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_atomic(const std::filesystem::path& target, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw io_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw io_error("cannot rename " + tmp.string() + " to " + target.string());
}

inline std::string csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
    return out.str();
}

inline std::string join_indices(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s.empty() ? "-" : s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config -> library objects

namespace detail {

inline DiscreteProblem build_discrete(const json& prob) {
    DiscreteProblem p;
    for (const auto& a : prob["alphabet"]) p.alphabet.push_back(a.get<std::string>());
    p.f0 = prob["h0"]["rows"].get<std::vector<std::vector<double>>>();
    p.prior0 = prob["h0"]["weights"].get<std::vector<double>>();
    p.f1 = prob["h1"]["rows"].get<std::vector<std::vector<double>>>();
    p.prior1 = prob["h1"]["weights"].get<std::vector<double>>();
    p.validate();
    return p;
}

inline CostSpec build_costs(const json& costs_cfg) {
    const std::string type =
        costs_cfg.is_object() ? costs_cfg.value("type", "zero_one") : std::string("zero_one");
    if (type == "zero_one") return zero_one_costs();
    if (type == "squared_error") return mmse_costs();
    if (type == "absolute_error") return median_costs();
    if (type == "map_window") return window_costs(costs_cfg["delta"].get<double>());
    throw invalid_input("unknown cost family '" + type + "'");
}

inline Problem build_gaussian(const json& prob, const json& costs_cfg) {
    Problem p;
    const double noise = prob["noise_sd"].get<double>();
    p.h0 = simple_gaussian_hypothesis(prob.value("h0_mean", 0.0), noise);
    p.h1 = gaussian_grid_hypothesis(prob["prior_mean"].get<double>(),
                                    prob["prior_sd"].get<double>(),
                                    prob["grid_lo"].get<double>(),
                                    prob["grid_hi"].get<double>(),
                                    prob["grid_nodes"].get<std::size_t>(), noise);
    p.costs = build_costs(costs_cfg);
    return p;
}

inline ChangepointModel build_changepoint(const json& prob) {
    const std::size_t n = prob["n_samples"].get<std::size_t>();
    Vector prior;
    if (prob.contains("prior") && prob["prior"].is_array())
        prior = prob["prior"].get<Vector>();
    return gaussian_shift_changepoint(n, prob["nominal_mean"].get<double>(),
                                      prob["alt_mean"].get<double>(),
                                      prob["noise_sd"].get<double>(), std::move(prior));
}

// The scalar threshold statistic matching the configured cost family, for
// continuous problems with a simple null.
inline std::function<double(const Vector&)> null_ratio_statistic(const Problem& p,
                                                                 const json& costs_cfg) {
    const std::string type =
        costs_cfg.is_object() ? costs_cfg.value("type", "zero_one") : std::string("zero_one");
    if (type == "zero_one")
        return [p](const Vector& x) {
            const double den = marginal_density(p.h0, x);
            const double num = marginal_density(p.h1, x);
            if (den > 0.0) return num / den;
            if (num > 0.0) return kInf;
            throw undefined_statistic("statistic undefined: zero mass on both sides");
        };
    if (type == "squared_error")
        return [p](const Vector& x) {
            const CriterionPair a = mmse_statistic(p, x);
            return a.a0 > 0.0 ? a.a1 / a.a0 : (a.a1 > 0.0 ? kInf : 0.0);
        };
    if (type == "absolute_error")
        return [p](const Vector& x) {
            const CriterionPair a = median_statistic(p, x);
            return a.a0 > 0.0 ? a.a1 / a.a0 : (a.a1 > 0.0 ? kInf : 0.0);
        };
    if (type == "map_window") {
        const double delta = costs_cfg["delta"].get<double>();
        return [p, delta](const Vector& x) { return window_cost_statistic(p, x, delta); };
    }
    throw invalid_input("unknown cost family '" + type + "'");
}

// Cost-matched point estimate under the alternative, for report output.
inline double point_estimate(const Problem& p, const Vector& x, const json& costs_cfg) {
    const std::string type =
        costs_cfg.is_object() ? costs_cfg.value("type", "zero_one") : std::string("zero_one");
    if (type == "squared_error") return mmse_estimator(p.h1, x).at(0);
    if (type == "absolute_error") return median_estimator(p.h1, x);
    return map_estimator(p.h1, x).value.at(0);  // zero_one and map_window
}

}  // namespace detail

// 20-level constraint grid for frontier sweeps: 1/40 plus k/20 for k = 1..19,
// clipped to the reachable open interval, with the configured target included.
inline std::vector<double> frontier_alpha_grid(double alpha_min, double target) {
    std::vector<double> g{1.0 / 40.0};
    for (int k = 1; k <= 19; ++k) g.push_back(static_cast<double>(k) / 20.0);
    g.erase(std::remove_if(g.begin(), g.end(),
                           [&](double a) { return a <= alpha_min || a >= 1.0; }),
            g.end());
    if (target > alpha_min && target < 1.0 &&
        std::find(g.begin(), g.end(), target) == g.end())
        g.push_back(target);
    std::sort(g.begin(), g.end());
    return g;
}

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

struct Ctx {
    json cfg;
    std::string experiment;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::size_t samples = 1000000;
    std::filesystem::path out_dir = ".";
    json costs;

    std::string cost_name() const {
        return costs.is_object() ? costs.value("type", "zero_one") : "zero_one";
    }
};

inline Ctx make_ctx(const json& cfg, const Options& opt) {
    Ctx ctx;
    ctx.cfg = cfg;
    ctx.experiment = cfg["experiment"].get<std::string>();
    ctx.alpha = opt.alpha ? *opt.alpha : cfg.value("alpha", 0.0);
    ctx.seed = opt.seed ? *opt.seed : cfg.value("seed", std::uint64_t{0});
    ctx.samples = opt.samples ? *opt.samples : cfg.value("samples", std::size_t{1000000});
    ctx.out_dir = opt.output ? *opt.output : cfg.value("output", std::string("."));
    if (cfg.contains("costs")) ctx.costs = cfg["costs"];
    const bool needs_alpha = ctx.experiment == "calibrate" || ctx.experiment == "decide" ||
                             ctx.experiment == "frontier" || ctx.experiment == "changepoint";
    if (needs_alpha && !(ctx.alpha > 0.0 && ctx.alpha < 1.0))
        throw invalid_input("alpha must lie strictly between 0 and 1");
    return ctx;
}

inline void write_calibration_csv(const Ctx& ctx, const CalibrationResult& res,
                                  RunReport& rep) {
    const auto path = ctx.out_dir / "calibration.csv";
    write_atomic(path,
                 csv({"target_alpha", "lambda", "gamma", "achieved_c0", "standard_error",
                      "status", "monotone_violations"},
                     {{fmt(ctx.alpha), fmt(res.lambda), fmt(res.gamma), fmt(res.achieved_c0),
                       fmt(res.standard_error), to_string(res.status),
                       std::to_string(res.monotone_violations)}}));
    rep.files.push_back(path.string());
}

inline void require_reachable(const CalibrationResult& res, double alpha) {
    if (res.status == CalibrationStatus::unreachable_low)
        throw infeasible("target alpha " + fmt(alpha) +
                         " is below the smallest reachable constraint level " +
                         fmt(res.achieved_c0));
    if (res.status == CalibrationStatus::unreachable_high)
        throw infeasible("target alpha " + fmt(alpha) +
                         " is above the largest reachable constraint level " +
                         fmt(res.achieved_c0));
}

inline std::function<double(const Vector&)> cp_statistic_fn(const ChangepointModel& m,
                                                            std::size_t half_width,
                                                            WindowWeighting weighting) {
    return [m, half_width, weighting](const Vector& x) {
        if (half_width > 0) return windowed_statistic(m, x, half_width, weighting).value;
        if (weighting == WindowWeighting::bayes) return bayes_cp_statistic(m, x).value;
        return cusum_statistic(m, x).value;
    };
}

// Calibration for whichever problem the config names; tabulated problems solve
// exactly, continuous ones go through seeded Monte Carlo under the null.
inline CalibrationResult calibrate_any(const Ctx& ctx) {
    const json& prob = ctx.cfg["problem"];
    const std::string type = prob["type"].get<std::string>();
    if (type == "discrete_table")
        return solve_calibration(h0_error_atoms(build_discrete(prob)), ctx.alpha);
    if (type == "gaussian_mean") {
        const Problem p = build_gaussian(prob, ctx.costs);
        McCalibration mc{false_alarm_draw(p.h0, null_ratio_statistic(p, ctx.costs)),
                         ctx.samples, ctx.seed};
        return solve_calibration(mc, ctx.alpha);
    }
    if (type == "changepoint_iid") {
        const ChangepointModel m = build_changepoint(prob);
        const std::size_t half_width = prob.value("window", std::size_t{0});
        const WindowWeighting weighting =
            prob.value("weighting", std::string("bayes")) == "uniform"
                ? WindowWeighting::uniform
                : WindowWeighting::bayes;
        auto statistic = cp_statistic_fn(m, half_width, weighting);
        const double nominal_mean = prob["nominal_mean"].get<double>();
        const double sd = prob["noise_sd"].get<double>();
        const std::size_t n = m.n;
        auto draw = [statistic, nominal_mean, sd, n](std::mt19937_64& rng) {
            std::normal_distribution<double> d(nominal_mean, sd);
            Vector x(n);
            for (double& v : x) v = d(rng);
            return CalibrationAtom{statistic(x), 0.0, 1.0};
        };
        return solve_calibration(McCalibration{draw, ctx.samples, ctx.seed}, ctx.alpha);
    }
    throw invalid_input("unknown problem type '" + type + "'");
}

inline void describe_calibration(const Ctx& ctx, const CalibrationResult& res,
                                 RunReport& rep) {
    rep.lines.push_back("target_alpha: " + fmt(ctx.alpha));
    rep.lines.push_back("lambda: " + fmt(res.lambda));
    rep.lines.push_back("gamma: " + fmt(res.gamma));
    rep.lines.push_back("achieved_c0: " + fmt(res.achieved_c0));
    rep.lines.push_back("standard_error: " + fmt(res.standard_error));
    rep.lines.push_back(std::string("status: ") + to_string(res.status));
    rep.lines.push_back("monotone_violations: " + std::to_string(res.monotone_violations));
}

inline void run_calibrate(const Ctx& ctx, RunReport& rep) {
    const CalibrationResult res = calibrate_any(ctx);
    require_reachable(res, ctx.alpha);
    describe_calibration(ctx, res, rep);
    write_calibration_csv(ctx, res, rep);
}

inline void run_decide(const Ctx& ctx, RunReport& rep) {
    const CalibrationResult res = calibrate_any(ctx);
    require_reachable(res, ctx.alpha);
    describe_calibration(ctx, res, rep);

    const json& prob = ctx.cfg["problem"];
    const std::string type = prob["type"].get<std::string>();
    if (type == "discrete_table") {
        const DiscreteProblem dp = build_discrete(prob);
        const std::string label = ctx.cfg["x"].get<std::string>();
        const std::size_t ix = dp.index_of(label);
        const RandomizedVerdict v = decide(dp, ix, res.lambda, res.gamma);
        rep.lines.push_back("x: " + label);
        rep.lines.push_back("statistic: " + fmt(glr_statistic(dp, ix)));
        rep.lines.push_back(std::string("decision: ") + to_string(v.decision));
        rep.lines.push_back("estimate_if_h0: " + join_indices(v.est0));
        rep.lines.push_back("estimate_if_h1: " + join_indices(v.est1));
    } else {
        const Problem p = build_gaussian(prob, ctx.costs);
        const Vector x{ctx.cfg["x"].get<double>()};
        const double s = null_ratio_statistic(p, ctx.costs)(x);
        Decision d = Decision::h0;
        if (close_rel(s, res.lambda, kTieTol)) d = Decision::randomize;
        else if (s > res.lambda) d = Decision::h1;
        rep.lines.push_back("x: " + fmt(x[0]));
        rep.lines.push_back("statistic: " + fmt(s));
        rep.lines.push_back(std::string("decision: ") + to_string(d));
        rep.lines.push_back("estimate_if_h1: " + fmt(point_estimate(p, x, ctx.costs)));
    }
    write_calibration_csv(ctx, res, rep);
}

inline void run_frontier(const Ctx& ctx, RunReport& rep) {
    const DiscreteProblem dp = build_discrete(ctx.cfg["problem"]);
    const double floor = alpha_min(dp);
    if (!(ctx.alpha > floor))
        throw infeasible("target alpha " + fmt(ctx.alpha) +
                         " is not above the smallest reachable constraint level " + fmt(floor));

    const std::vector<CalibrationAtom> atoms0 = h0_error_atoms(dp);
    const std::vector<CalibrationAtom> atoms1 = h1_error_atoms(dp);
    const std::vector<CalibrationAtom> cl_atoms0 = classical_h0_error_atoms(dp);
    const std::vector<CalibrationAtom> cl_atoms1 = classical_h1_error_atoms(dp);

    std::vector<std::vector<std::string>> rows;
    CalibrationResult at_target;
    for (double a : frontier_alpha_grid(floor, ctx.alpha)) {
        const CalibrationResult res = solve_calibration(atoms0, a);
        require_reachable(res, a);
        const double c1 = evaluate_c0(atoms1, res.lambda, res.gamma);
        const CalibrationResult cl = solve_calibration(cl_atoms0, a);
        const double c1_cl = cl.status == CalibrationStatus::exact
                                 ? evaluate_c0(cl_atoms1, cl.lambda, cl.gamma)
                                 : std::numeric_limits<double>::quiet_NaN();
        rows.push_back({fmt(a), fmt(res.lambda), fmt(res.gamma), fmt(c1), fmt(c1_cl)});
        if (a == ctx.alpha) at_target = res;
    }

    const auto path = ctx.out_dir / "frontier.csv";
    write_atomic(path,
                 csv({"alpha", "lambda", "gamma", "c1_optimal", "c1_classical_glr"}, rows));
    rep.files.push_back(path.string());

    describe_calibration(ctx, at_target, rep);
    rep.lines.push_back("alpha_min: " + fmt(floor));
    rep.lines.push_back("frontier_rows: " + std::to_string(rows.size()));
    rep.lines.push_back("c1_at_target: " +
                        fmt(evaluate_c0(atoms1, at_target.lambda, at_target.gamma)));
    write_calibration_csv(ctx, at_target, rep);
}

inline Vector changepoint_series(const Ctx& ctx, const ChangepointModel& m) {
    if (ctx.cfg.contains("series")) return ctx.cfg["series"].get<Vector>();
    if (ctx.cfg.contains("series_csv")) {
        const std::string path = ctx.cfg["series_csv"].get<std::string>();
        std::ifstream in(path);
        if (!in) throw io_error("cannot open series file: " + path);
        Vector x;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                x.push_back(std::stod(line));
            } catch (const std::exception&) {
                throw invalid_input("series file " + path + ": non-numeric line '" + line +
                                    "'");
            }
        }
        if (x.size() != m.n)
            throw invalid_input("series file " + path + " has " + std::to_string(x.size()) +
                                " samples, expected " + std::to_string(m.n));
        return x;
    }
    // No series given: generate a fully nominal one from a dedicated substream,
    // so the run doubles as a false-alarm self-check.
    const json& prob = ctx.cfg["problem"];
    std::mt19937_64 rng(derive_seed(ctx.seed, 2));
    std::normal_distribution<double> d(prob["nominal_mean"].get<double>(),
                                       prob["noise_sd"].get<double>());
    Vector x(m.n);
    for (double& v : x) v = d(rng);
    return x;
}

inline void run_changepoint(const Ctx& ctx, RunReport& rep) {
    const CalibrationResult res = calibrate_any(ctx);
    require_reachable(res, ctx.alpha);
    describe_calibration(ctx, res, rep);

    const json& prob = ctx.cfg["problem"];
    const ChangepointModel m = build_changepoint(prob);
    const std::size_t half_width = prob.value("window", std::size_t{0});
    const WindowWeighting weighting =
        prob.value("weighting", std::string("bayes")) == "uniform" ? WindowWeighting::uniform
                                                                   : WindowWeighting::bayes;
    const Vector x = changepoint_series(ctx, m);
    const CpVerdict v = cp_decide(m, x, res.lambda, res.gamma, half_width, weighting);
    rep.lines.push_back("series_length: " + std::to_string(x.size()));
    rep.lines.push_back("statistic: " + fmt(v.statistic));
    rep.lines.push_back(std::string("decision: ") + to_string(v.decision));
    rep.lines.push_back("tau_hat: " +
                        (v.tau_hat ? std::to_string(*v.tau_hat) : std::string("-")));
    rep.lines.push_back("tau_ties: " + join_indices(v.ties));
    write_calibration_csv(ctx, res, rep);
}

inline void run_criteria_demo(const Ctx& ctx, RunReport& rep) {
    const Problem p = build_gaussian(ctx.cfg["problem"], ctx.costs);
    const Vector x{ctx.cfg["x"].get<double>()};
    rep.lines.push_back("x: " + fmt(x[0]));
    rep.lines.push_back("marginal_h0: " + fmt(marginal_density(p.h0, x)));
    rep.lines.push_back("marginal_h1: " + fmt(marginal_density(p.h1, x)));

    const Vector mmse = mmse_estimator(p.h1, x);
    rep.lines.push_back("mmse_estimate: " + fmt(mmse.at(0)));
    rep.lines.push_back("median_estimate: " + fmt(median_estimator(p.h1, x)));
    const MapEstimate map = map_estimator(p.h1, x);
    rep.lines.push_back("map_estimate: " + fmt(map.value.at(0)));
    rep.lines.push_back("map_objective: " + fmt(map.objective));

    const double delta =
        ctx.cost_name() == "map_window" ? ctx.costs["delta"].get<double>() : 0.1;
    const MapConfig mc = make_map_config(delta, p.h0.simple() ? 0 : 1, 1);
    const MapStatistic ms = map_statistic(p, x, mc);
    rep.lines.push_back("map_delta: " + fmt(delta));
    rep.lines.push_back("map_statistic: " + fmt(ms.value));
    rep.lines.push_back("map_threshold_factor: " + fmt(ms.threshold_factor));
    if (map_window_too_wide(p.h1.prior, delta))
        rep.lines.push_back("map_window_note: window is wide relative to the prior support");

    Problem q = p;
    q.costs = mmse_costs();
    const CriterionPair mm = mmse_statistic(q, x);
    rep.lines.push_back("mmse_pair_a1: " + fmt(mm.a1));
    rep.lines.push_back("mmse_pair_a0: " + fmt(mm.a0));
    q.costs = median_costs();
    const CriterionPair med = median_statistic(q, x);
    rep.lines.push_back("median_pair_a1: " + fmt(med.a1));
    rep.lines.push_back("median_pair_a0: " + fmt(med.a0));
    if (ctx.cost_name() == "map_window")
        rep.lines.push_back("window_statistic: " + fmt(window_cost_statistic(p, x, delta)));
}

}  // namespace detail

// Validate, run the named experiment, and write report.txt plus any CSVs into
// the output directory.  Throws the library error types; the CLI maps them to
// exit codes.
inline RunReport run_config(const json& cfg, const Options& opt) {
    const std::vector<Diagnostic> issues = validate_config(cfg);
    if (!issues.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& d : issues)
            msg += "\n  " + (d.path.empty() ? std::string("<root>") : d.path) + ": " +
                   d.message;
        throw invalid_input(msg);
    }

    const auto t0 = std::chrono::steady_clock::now();
    detail::Ctx ctx = detail::make_ctx(cfg, opt);
    RunReport rep;
    rep.lines.push_back("experiment: " + ctx.experiment);
    rep.lines.push_back("problem: " + cfg["problem"]["type"].get<std::string>());
    rep.lines.push_back("costs: " + ctx.cost_name());
    rep.lines.push_back("seed: " + std::to_string(ctx.seed));
    rep.lines.push_back("samples: " + std::to_string(ctx.samples));

    if (ctx.experiment == "calibrate") detail::run_calibrate(ctx, rep);
    else if (ctx.experiment == "decide") detail::run_decide(ctx, rep);
    else if (ctx.experiment == "frontier") detail::run_frontier(ctx, rep);
    else if (ctx.experiment == "changepoint") detail::run_changepoint(ctx, rep);
    else if (ctx.experiment == "criteria-demo") detail::run_criteria_demo(ctx, rep);
    else throw invalid_input("unknown experiment '" + ctx.experiment + "'");

    rep.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();

    std::string body;
    for (const auto& line : rep.lines) body += line + "\n";
    body += "wall_ms: " + detail::fmt(rep.wall_ms) + "\n";
    const auto report_path = ctx.out_dir / "report.txt";
    detail::write_atomic(report_path, body);
    rep.files.push_back(report_path.string());
    return rep;
}

}  // namespace jointdet::experiment

#pragma once

// Independent optimality reference.  A randomized detection/estimation rule on a
// finite alphabet is, per sample point, a sub-probability split over the options
// "declare j and estimate subcase l"; minimizing the H1 error under an H0 error
// budget is then a small linear program.  Two deliberately separate solvers:
//
//   lp_optimal          scalarization sweep: enumerate the finitely many
//                       multipliers where the per-point option ranking changes,
//                       mix the two extreme pointwise minimizers at the critical
//                       multiplier to meet the budget exactly;
//   lp_optimal_simplex  a plain two-phase dense tableau simplex (Bland's rule).
//
// The tables are rebuilt here from raw problem data on purpose — this header
// certifies the statistic-based modules and shares no evaluation code with them.
// deterministic_frontier enumerates every non-randomized rule for hull checks.

#include <cstdint>
#include <utility>

#include "jointdet/common.hpp"
#include "jointdet/discrete_optimal.hpp"

namespace jointdet {

// Per sample point x and option k: cost contribution under each hypothesis.
// Options are "declare H0, estimate subcase l" for each H0 subcase followed by
// "declare H1, estimate subcase l" for each H1 subcase.
struct CostTables {
    std::vector<std::vector<double>> h0;  // [x][k]
    std::vector<std::vector<double>> h1;  // [x][k]

    std::size_t points() const { return h0.size(); }
};

inline CostTables zero_one_tables(const DiscreteProblem& p) {
    p.validate();
    CostTables t;
    const std::size_t m = p.size();
    t.h0.resize(m);
    t.h1.resize(m);
    for (std::size_t x = 0; x < m; ++x) {
        double f0x = 0.0, f1x = 0.0;
        for (std::size_t l = 0; l < p.f0.size(); ++l) f0x += p.prior0[l] * p.f0[l][x];
        for (std::size_t l = 0; l < p.f1.size(); ++l) f1x += p.prior1[l] * p.f1[l][x];
        for (std::size_t l = 0; l < p.f0.size(); ++l) {
            t.h0[x].push_back(f0x - p.prior0[l] * p.f0[l][x]);  // declare 0, estimate l
            t.h1[x].push_back(f1x);                             // miss under H1
        }
        for (std::size_t l = 0; l < p.f1.size(); ++l) {
            t.h0[x].push_back(f0x);                             // false alarm under H0
            t.h1[x].push_back(f1x - p.prior1[l] * p.f1[l][x]);  // declare 1, estimate l
        }
    }
    return t;
}

// General Bayes costs on a discrete-alphabet problem.  Estimates range over the
// prior support of the declared side (an empty vector for a simple side).
inline CostTables bayes_tables(const Problem& p) {
    const DiscreteSpace* alpha = p.discrete_alphabet();
    if (!alpha) throw invalid_input("bayes_tables: discrete sample space required");
    CostTables t;
    t.h0.resize(alpha->points.size());
    t.h1.resize(alpha->points.size());
    auto d_cost = [&](const HypothesisSpec& h, const CostFn& c, const Vector& u,
                      const Vector& x) {
        double s = 0.0;
        for (std::size_t l = 0; l < h.prior.nodes.size(); ++l)
            s += h.prior.weights[l] * c(u, h.prior.nodes[l]) * h.family.density(x, h.prior.nodes[l]);
        return s;
    };
    for (std::size_t xi = 0; xi < alpha->points.size(); ++xi) {
        const Vector& x = alpha->points[xi];
        for (const Vector& u : p.h0.prior.nodes) {
            t.h0[xi].push_back(d_cost(p.h0, p.costs.c00, u, x));
            t.h1[xi].push_back(d_cost(p.h1, p.costs.c01, u, x));
        }
        for (const Vector& u : p.h1.prior.nodes) {
            t.h0[xi].push_back(d_cost(p.h0, p.costs.c10, u, x));
            t.h1[xi].push_back(d_cost(p.h1, p.costs.c11, u, x));
        }
    }
    return t;
}

struct LpSolution {
    double c1 = 0.0;        // optimal H1 cost
    double c0 = 0.0;        // H0 cost actually spent
    double lambda = 0.0;    // critical multiplier
    bool binding = true;    // whether the budget constraint is active
    // Randomized rule realizing (c0, c1): per sample point, a probability split
    // over the options in table order.  Each inner vector sums to 1.
    std::vector<std::vector<double>> rule_weights;
};

namespace detail {

struct SweepPoint {
    double c0_lo = 0.0, c1_lo = 0.0;  // minimizers tie-broken toward small H0 cost
    double c0_hi = 0.0, c1_hi = 0.0;  // ... and toward large H0 cost
    std::vector<std::size_t> klo, khi;  // the chosen option per point
};

inline SweepPoint sweep_at(const CostTables& t, double lam) {
    SweepPoint s;
    s.klo.resize(t.points());
    s.khi.resize(t.points());
    for (std::size_t x = 0; x < t.points(); ++x) {
        const auto& a = t.h0[x];
        const auto& b = t.h1[x];
        double best = kInf;
        for (std::size_t k = 0; k < a.size(); ++k) best = std::min(best, b[k] + lam * a[k]);
        double alo = kInf, blo = 0.0, ahi = -kInf, bhi = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (!close_rel(b[k] + lam * a[k], best, kTieTol)) continue;
            if (a[k] < alo) alo = a[k], blo = b[k], s.klo[x] = k;
            if (a[k] > ahi) ahi = a[k], bhi = b[k], s.khi[x] = k;
        }
        s.c0_lo += alo;
        s.c1_lo += blo;
        s.c0_hi += ahi;
        s.c1_hi += bhi;
    }
    return s;
}

inline std::vector<std::vector<double>> mixed_rule(const CostTables& t, const SweepPoint& s,
                                                   double mix_lo) {
    std::vector<std::vector<double>> w(t.points());
    for (std::size_t x = 0; x < t.points(); ++x) {
        w[x].assign(t.h0[x].size(), 0.0);
        w[x][s.khi[x]] += 1.0 - mix_lo;
        w[x][s.klo[x]] += mix_lo;
    }
    return w;
}

}  // namespace detail

inline LpSolution lp_optimal(const CostTables& t, double alpha) {
    if (t.points() == 0 || t.h1.size() != t.h0.size())
        throw invalid_input("lp_optimal: empty or inconsistent tables");
    double c0_floor = 0.0;
    for (const auto& row : t.h0) {
        double m = kInf;
        for (double v : row) m = std::min(m, v);
        c0_floor += m;
    }
    if (alpha < c0_floor)
        throw infeasible("lp_optimal: budget " + std::to_string(alpha) +
                         " below the reachable floor " + std::to_string(c0_floor));

    // Candidate multipliers: every value where two options of one point swap
    // order in b + lambda * a.
    std::vector<double> cand{0.0};
    for (std::size_t x = 0; x < t.points(); ++x) {
        const auto& a = t.h0[x];
        const auto& b = t.h1[x];
        for (std::size_t u = 0; u < a.size(); ++u)
            for (std::size_t v = u + 1; v < a.size(); ++v) {
                const double da = a[u] - a[v];
                if (da == 0.0) continue;
                const double lam = (b[v] - b[u]) / da;
                if (lam > 0.0 && std::isfinite(lam)) cand.push_back(lam);
            }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    for (double lam : cand) {
        const auto s = detail::sweep_at(t, lam);
        if (s.c0_lo > alpha) continue;  // still over budget even at this weight
        if (s.c0_hi <= alpha) {
            // Budget slack on the whole tie set; the large-c0 pick has the
            // smaller H1 cost (options tie in b + lam*a).
            return {s.c1_hi, s.c0_hi, lam, false, detail::mixed_rule(t, s, 0.0)};
        }
        double mix = (alpha - s.c0_hi) / (s.c0_lo - s.c0_hi);
        mix = std::clamp(mix, 0.0, 1.0);
        return {mix * s.c1_lo + (1.0 - mix) * s.c1_hi,
                mix * s.c0_lo + (1.0 - mix) * s.c0_hi, lam, true,
                detail::mixed_rule(t, s, mix)};
    }
    // alpha >= floor guarantees the last candidate accepts.
    throw numerical_domain("lp_optimal: sweep failed to bracket the budget");
}

// ---------------------------------------------------------------------------
// Reference simplex.  Dense two-phase tableau with Bland's rule; sizes here are
// tiny (rows = points + 1), so clarity wins over sparsity.

namespace detail {

class Tableau {
public:
    // rows: constraints; last column RHS; objective kept in `obj` (reduced form).
    std::vector<std::vector<double>> rows;
    std::vector<double> obj;
    double obj_rhs = 0.0;
    std::vector<std::size_t> basis;  // basic variable of each row

    static constexpr double kEps = 1e-11;

    void pivot(std::size_t r, std::size_t c) {
        const double piv = rows[r][c];
        for (double& v : rows[r]) v /= piv;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == r || std::fabs(rows[i][c]) < 1e-300) continue;
            const double f = rows[i][c];
            for (std::size_t j = 0; j < rows[i].size(); ++j) rows[i][j] -= f * rows[r][j];
        }
        const double f = obj[c];
        if (std::fabs(f) > 0.0) {
            for (std::size_t j = 0; j < obj.size(); ++j) obj[j] -= f * rows[r][j];
            obj_rhs -= f * rows[r].back();
        }
        basis[r] = c;
    }

    // Bland: entering = lowest-index improving column, leaving = lowest-index
    // among the minimum-ratio rows.  Terminates without cycling.
    bool iterate() {
        const std::size_t n = obj.size() - 1;
        std::size_t enter = n;
        for (std::size_t j = 0; j < n; ++j)
            if (obj[j] < -kEps) {
                enter = j;
                break;
            }
        if (enter == n) return false;  // optimal
        std::size_t leave = rows.size();
        double best = kInf;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i][enter] <= kEps) continue;
            const double ratio = rows[i].back() / rows[i][enter];
            if (ratio < best - kEps || (ratio < best + kEps && (leave == rows.size() ||
                                                               basis[i] < basis[leave]))) {
                best = ratio;
                leave = i;
            }
        }
        if (leave == rows.size())
            throw numerical_domain("simplex: unbounded direction met");
        pivot(leave, enter);
        return true;
    }

    void run() {
        while (iterate()) {
        }
    }
};

}  // namespace detail

inline LpSolution lp_optimal_simplex(const CostTables& t, double alpha) {
    const std::size_t m = t.points();
    if (m == 0) throw invalid_input("lp_optimal_simplex: empty tables");
    std::vector<std::size_t> offset(m);
    std::size_t nvar = 0;
    for (std::size_t x = 0; x < m; ++x) {
        offset[x] = nvar;
        nvar += t.h0[x].size();
    }
    const std::size_t slack = nvar;          // budget row slack
    const std::size_t art0 = nvar + 1;       // artificials for the simplex rows
    const std::size_t total = art0 + m;

    detail::Tableau tab;
    tab.rows.assign(m + 1, std::vector<double>(total + 1, 0.0));
    tab.basis.assign(m + 1, 0);
    for (std::size_t x = 0; x < m; ++x) {
        for (std::size_t k = 0; k < t.h0[x].size(); ++k) tab.rows[x][offset[x] + k] = 1.0;
        tab.rows[x][art0 + x] = 1.0;
        tab.rows[x].back() = 1.0;
        tab.basis[x] = art0 + x;
    }
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t k = 0; k < t.h0[x].size(); ++k)
            tab.rows[m][offset[x] + k] = t.h0[x][k];
    tab.rows[m][slack] = 1.0;
    tab.rows[m].back() = alpha;
    tab.basis[m] = slack;

    // Phase 1: minimize the artificial sum.
    tab.obj.assign(total + 1, 0.0);
    for (std::size_t x = 0; x < m; ++x) tab.obj[art0 + x] = 1.0;
    for (std::size_t x = 0; x < m; ++x) {  // reduce against the artificial basis
        for (std::size_t j = 0; j <= total; ++j) tab.obj[j] -= tab.rows[x][j];
        tab.obj_rhs -= tab.rows[x].back();
    }
    tab.run();
    if (tab.obj_rhs < -1e-8)
        throw infeasible("lp_optimal_simplex: budget below the reachable floor");

    // Phase 2: real objective, artificial columns frozen out.
    tab.obj.assign(total + 1, 0.0);
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t k = 0; k < t.h0[x].size(); ++k)
            tab.obj[offset[x] + k] = t.h1[x][k];
    tab.obj_rhs = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
        const std::size_t b = tab.basis[i];
        if (tab.obj[b] == 0.0) continue;
        const double f = tab.obj[b];
        for (std::size_t j = 0; j <= total; ++j) tab.obj[j] -= f * tab.rows[i][j];
        tab.obj_rhs -= f * tab.rows[i].back();
    }
    for (std::size_t x = 0; x < m; ++x) tab.obj[art0 + x] = kInf;  // never re-enter
    tab.run();

    LpSolution sol;
    sol.c1 = -tab.obj_rhs;
    sol.rule_weights.resize(m);
    for (std::size_t x = 0; x < m; ++x) sol.rule_weights[x].assign(t.h0[x].size(), 0.0);
    double slack_val = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
        const std::size_t b = tab.basis[i];
        if (b == slack) slack_val = tab.rows[i].back();
        if (b >= art0 && tab.rows[i].back() > 1e-9)
            throw numerical_domain("lp_optimal_simplex: artificial stuck in basis");
        if (b < nvar) {
            const auto it = std::upper_bound(offset.begin(), offset.end(), b) - 1;
            const std::size_t x = static_cast<std::size_t>(it - offset.begin());
            sol.rule_weights[x][b - offset[x]] = tab.rows[i].back();
        }
    }
    sol.c0 = alpha - slack_val;
    sol.binding = slack_val <= 1e-9;
    sol.lambda = 0.0;  // not recovered on this path
    return sol;
}

// ---------------------------------------------------------------------------
// Deterministic rules: one option fixed per point.  Exhaustive enumeration with
// a size guard, plus the lower-left hull of the resulting cloud (the achievable
// boundary once randomization is allowed).

struct FrontierPoint {
    double c0 = 0.0;
    double c1 = 0.0;
};

inline std::vector<FrontierPoint> deterministic_frontier(const CostTables& t,
                                                         std::size_t guard = 1000000) {
    const std::size_t m = t.points();
    double count = 1.0;
    for (std::size_t x = 0; x < m; ++x) count *= static_cast<double>(t.h0[x].size());
    if (count > static_cast<double>(guard))
        throw instance_too_large("deterministic_frontier: " + std::to_string(count) +
                                 " rules exceed the guard of " + std::to_string(guard));

    std::vector<FrontierPoint> pts;
    pts.reserve(static_cast<std::size_t>(count));
    std::vector<std::size_t> pick(m, 0);
    for (;;) {
        FrontierPoint fp;
        for (std::size_t x = 0; x < m; ++x) {
            fp.c0 += t.h0[x][pick[x]];
            fp.c1 += t.h1[x][pick[x]];
        }
        pts.push_back(fp);
        std::size_t x = 0;
        while (x < m && ++pick[x] == t.h0[x].size()) pick[x++] = 0;
        if (x == m) break;
    }
    return pts;
}

// Lower-left convex hull, from the smallest-c0 point to the smallest-c1 point.
inline std::vector<FrontierPoint> frontier_lower_hull(std::vector<FrontierPoint> pts) {
    if (pts.empty()) return pts;
    std::sort(pts.begin(), pts.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
        return a.c0 != b.c0 ? a.c0 < b.c0 : a.c1 < b.c1;
    });
    std::vector<FrontierPoint> hull;
    for (const auto& p : pts) {
        if (!hull.empty() && p.c0 == hull.back().c0) continue;  // keep the lowest c1 only
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            // drop b if it lies above segment a-p
            if ((b.c0 - a.c0) * (p.c1 - a.c1) - (b.c1 - a.c1) * (p.c0 - a.c0) <= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(p);
    }
    // Past the c1 minimum the boundary turns upward; trim it.
    std::size_t best = 0;
    for (std::size_t i = 1; i < hull.size(); ++i)
        if (hull[i].c1 < hull[best].c1) best = i;
    hull.resize(best + 1);
    return hull;
}

// c1 of the hull at a given budget (linear interpolation between vertices).
inline double hull_c1_at(const std::vector<FrontierPoint>& hull, double c0) {
    if (hull.empty()) throw invalid_input("hull_c1_at: empty hull");
    if (c0 <= hull.front().c0) return hull.front().c1;
    if (c0 >= hull.back().c0) return hull.back().c1;
    for (std::size_t i = 1; i < hull.size(); ++i) {
        if (c0 <= hull[i].c0) {
            const auto& a = hull[i - 1];
            const auto& b = hull[i];
            const double w = (c0 - a.c0) / (b.c0 - a.c0);
            return a.c1 + w * (b.c1 - a.c1);
        }
    }
    return hull.back().c1;
}

}  // namespace jointdet

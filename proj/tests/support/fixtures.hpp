#pragma once

// Shared fixture problems.
//
//   two_point:       binary alphabet, simple null (1/2, 1/2), two alternative
//                    subcases (.9,.1) and (.2,.8) with equal weights
//   composite_null:  same alternative, null made composite by adding a second
//                    subcase (.9,.1) with equal weights
//   gaussian_grid:   X | theta ~ N(theta, 1); null theta = 0, alternative
//                    theta ~ N(0,1) discretized on 201 nodes over [-8, 8]

#include "jointdet/discrete_optimal.hpp"
#include "jointdet/families.hpp"
#include "jointdet/model.hpp"

namespace fixtures {

inline jointdet::DiscreteProblem two_point() {
    jointdet::DiscreteProblem p;
    p.alphabet = {"a", "b"};
    p.f0 = {{0.5, 0.5}};
    p.prior0 = {1.0};
    p.f1 = {{0.9, 0.1}, {0.2, 0.8}};
    p.prior1 = {0.5, 0.5};
    return p;
}

inline jointdet::DiscreteProblem composite_null() {
    jointdet::DiscreteProblem p = two_point();
    p.f0 = {{0.5, 0.5}, {0.9, 0.1}};
    p.prior0 = {0.5, 0.5};
    return p;
}

inline jointdet::Problem gaussian_grid(jointdet::CostSpec costs = jointdet::zero_one_costs()) {
    jointdet::Problem p;
    p.h0 = jointdet::simple_gaussian_hypothesis(0.0, 1.0);
    p.h1 = jointdet::gaussian_grid_hypothesis(0.0, 1.0, -8.0, 8.0, 201, 1.0);
    p.costs = std::move(costs);
    return p;
}

// Random tabulated instance with strictly positive entries: alphabet size in
// [2, max_alphabet], subcase counts in [1, max_subcases] per side.
inline jointdet::DiscreteProblem random_instance(std::mt19937_64& rng,
                                                 std::size_t max_alphabet = 8,
                                                 std::size_t max_subcases = 3) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    const std::size_t m = 2 + rng() % (max_alphabet - 1);
    jointdet::DiscreteProblem p;
    for (std::size_t x = 0; x < m; ++x) p.alphabet.push_back("x" + std::to_string(x));
    auto fill_side = [&](std::vector<std::vector<double>>& f, std::vector<double>& prior) {
        const std::size_t subcases = 1 + rng() % max_subcases;
        f.assign(subcases, std::vector<double>(m));
        prior.assign(subcases, 0.0);
        double ps = 0.0;
        for (std::size_t l = 0; l < subcases; ++l) {
            double rs = 0.0;
            for (std::size_t x = 0; x < m; ++x) rs += f[l][x] = unif(rng);
            for (std::size_t x = 0; x < m; ++x) f[l][x] /= rs;
            ps += prior[l] = unif(rng);
        }
        for (double& w : prior) w /= ps;
    };
    fill_side(p.f0, p.prior0);
    fill_side(p.f1, p.prior1);
    p.validate();
    return p;
}

}  // namespace fixtures

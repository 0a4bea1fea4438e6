#pragma once

// Test-only oracles: exhaustive path enumeration for the constrained DTW,
// finite-difference helpers, and small random-input generators. Independent
// of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "taseg/dtw.hpp"

namespace oracles {

// Enumerates every monotone boundary placement (t_1 < ... < t_{L-1} chosen
// from 1..T-1) and returns the minimum total cost, accumulating each path's
// cells in time order so the fold matches the DP exactly.
inline double enumerate_min_cost(const taseg::dtw::CostMatrix& costs,
                                 std::vector<std::size_t>* best_boundaries = nullptr) {
    const std::size_t L = costs.rows, T = costs.cols;
    std::vector<std::size_t> cut(L + 1, 0);
    cut[L] = T;
    double best = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> inner(L - 1);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t next) {
        if (pos == L - 1) {
            for (std::size_t i = 0; i < L - 1; ++i) cut[i + 1] = inner[i];
            double total = 0.0;
            for (std::size_t l = 1; l <= L; ++l)
                for (std::size_t t = cut[l - 1] + 1; t <= cut[l]; ++t)
                    total = costs.at(l - 1, t - 1) + total;
            if (total < best) {
                best = total;
                if (best_boundaries) *best_boundaries = cut;
            }
            return;
        }
        // Leave room for the remaining labels: each must cover >= 1 point.
        for (std::size_t t = next; t + (L - 2 - pos) <= T - 1; ++t) {
            inner[pos] = t;
            rec(pos + 1, t + 1);
        }
    };
    if (L == 1) {
        double total = 0.0;
        for (std::size_t t = 1; t <= T; ++t) total = costs.at(0, t - 1) + total;
        if (best_boundaries) *best_boundaries = cut;
        return total;
    }
    rec(0, 1);
    return best;
}

// Soft version of the same enumeration: -gamma log sum exp(-cost/gamma).
inline double enumerate_soft_cost(const taseg::dtw::CostMatrix& costs, double gamma) {
    const std::size_t L = costs.rows, T = costs.cols;
    std::vector<double> path_costs;
    std::vector<std::size_t> cut(L + 1, 0);
    cut[L] = T;
    std::vector<std::size_t> inner(L - 1);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t next) {
        if (pos == L - 1) {
            for (std::size_t i = 0; i < L - 1; ++i) cut[i + 1] = inner[i];
            double total = 0.0;
            for (std::size_t l = 1; l <= L; ++l)
                for (std::size_t t = cut[l - 1] + 1; t <= cut[l]; ++t)
                    total += costs.at(l - 1, t - 1);
            path_costs.push_back(total);
            return;
        }
        for (std::size_t t = next; t + (L - 2 - pos) <= T - 1; ++t) {
            inner[pos] = t;
            rec(pos + 1, t + 1);
        }
    };
    if (L == 1) {
        double total = 0.0;
        for (std::size_t t = 1; t <= T; ++t) total += costs.at(0, t - 1);
        path_costs.push_back(total);
    } else {
        rec(0, 1);
    }
    const double lo = *std::min_element(path_costs.begin(), path_costs.end());
    double acc = 0.0;
    for (double c : path_costs) acc += std::exp(-(c - lo) / gamma);
    return lo - gamma * std::log(acc);
}

inline taseg::dtw::CostMatrix random_costs(std::size_t L, std::size_t T, std::mt19937_64& rng,
                                           double lo = 0.05, double hi = 3.0) {
    taseg::dtw::CostMatrix costs(L, T);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : costs.values) v = dist(rng);
    return costs;
}

inline double rel_err(double a, double b, double floor_abs) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_abs});
}

// Central finite difference of a scalar function via a mutable value slot.
inline double central_diff(double& slot, const std::function<double()>& f, double step) {
    const double saved = slot;
    slot = saved + step;
    const double up = f();
    slot = saved - step;
    const double down = f();
    slot = saved;
    return (up - down) / (2.0 * step);
}

} // namespace oracles

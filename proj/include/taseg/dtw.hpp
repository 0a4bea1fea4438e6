#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "taseg/pseudolabel.hpp"

// Constrained (soft-)DTW over an L x T cost matrix. Warping paths run from
// the (1,1) cell to the (L,T) cell using only -> and diagonal moves, so
// every time point is aligned with exactly one label.

namespace taseg::dtw {

// Large finite stand-in for +inf on unreachable/border cells. Arithmetic on
// true infinities produces NaN in the backward recursion.
constexpr double kInfCost = 1e30;
constexpr double kInfThreshold = 0.5e30;

// L x T alignment costs, row-major.
struct CostMatrix {
    std::size_t rows = 0; // L
    std::size_t cols = 0; // T
    std::vector<double> values;

    CostMatrix() = default;
    CostMatrix(std::size_t l, std::size_t t) : rows(l), cols(t), values(l * t, 0.0) {}

    double& at(std::size_t l, std::size_t t) { return values[l * cols + t]; }
    double at(std::size_t l, std::size_t t) const { return values[l * cols + t]; }
};

// Boundaries t_0 = 0 < t_1 < ... < t_L = T; label l covers time points
// t_{l-1}+1 .. t_l (1-based).
struct AlignmentPath {
    std::vector<std::size_t> boundaries;

    std::size_t label_count() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
    bool valid(std::size_t length) const;
};

// Forward values R and soft alignment E on an (L+2) x (T+2) grid; row/col 0
// and L+1/T+1 are borders.
struct Workspace {
    std::size_t rows = 0; // L
    std::size_t cols = 0; // T
    double gamma = 0.0;
    std::vector<double> r;
    std::vector<double> e;

    double& r_at(std::size_t l, std::size_t t) { return r[l * (cols + 2) + t]; }
    double r_at(std::size_t l, std::size_t t) const { return r[l * (cols + 2) + t]; }
    double& e_at(std::size_t l, std::size_t t) { return e[l * (cols + 2) + t]; }
    double e_at(std::size_t l, std::size_t t) const { return e[l * (cols + 2) + t]; }

    void dump_r_csv(std::ostream& out) const;
    void dump_e_csv(std::ostream& out) const;
};

// costs[l][t] = -(z_l log s_t + (1 - z_l) log(1 - s_t)) on clamped scores.
CostMatrix build_cost_matrix(const pseudolabel::SequentialLabel& label,
                             std::span<const double> local_scores);

// gamma = 0: exact minimum. gamma > 0: -gamma log sum exp(-a_i/gamma),
// evaluated by shifted log-sum-exp; operands at the kInfCost sentinel are
// skipped.
double soft_min(std::span<const double> values, double gamma);

// Returns R_{L,T} and the filled forward workspace. O(LT).
std::pair<double, Workspace> sdtw_forward(const CostMatrix& costs, double gamma);

// Gradient of the soft-DTW value with respect to the cost matrix (the
// interior of E). Requires gamma > 0; every entry lies in [0,1] and each
// column sums to 1.
CostMatrix sdtw_backward(const CostMatrix& costs, Workspace& ws);

// Hard minimum-cost path with backtracking. Ties prefer the diagonal move
// (earliest transition to the next label).
AlignmentPath decode_path(const CostMatrix& costs);

// Total cost of a path: sum of costs[l][t] over the cells it covers,
// accumulated in time order.
double path_cost(const CostMatrix& costs, const AlignmentPath& path);

// Chains a cost-matrix gradient through the cost definition onto the local
// scores: d(value)/d(s_t) = sum_l grad[l][t] * (s_t - z_l) / (s_t (1 - s_t)).
std::vector<double> chain_cost_grad_to_scores(const pseudolabel::SequentialLabel& label,
                                              std::span<const double> local_scores,
                                              const CostMatrix& cost_grad);

} // namespace taseg::dtw

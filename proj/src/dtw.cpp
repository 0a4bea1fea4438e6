#include "taseg/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "taseg/errors.hpp"

namespace taseg::dtw {

namespace {

inline bool is_inf_cell(double v) { return v >= kInfThreshold; }
inline bool is_neg_inf_cell(double v) { return v <= -kInfThreshold; }

// Two-operand soft-min with sentinel skipping; exponents are <= 0 after the
// shift, so exp never overflows.
inline double soft_min2(double a, double b, double gamma) {
    if (gamma == 0.0) return std::min(a, b);
    const bool skip_a = is_inf_cell(a);
    const bool skip_b = is_inf_cell(b);
    if (skip_a && skip_b) return kInfCost;
    if (skip_a) return b;
    if (skip_b) return a;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    return lo - gamma * std::log1p(std::exp(-(hi - lo) / gamma));
}

} // namespace

bool AlignmentPath::valid(std::size_t length) const {
    if (boundaries.size() < 2) return false;
    if (boundaries.front() != 0 || boundaries.back() != length) return false;
    for (std::size_t i = 1; i < boundaries.size(); ++i)
        if (boundaries[i] <= boundaries[i - 1]) return false;
    return true;
}

CostMatrix build_cost_matrix(const pseudolabel::SequentialLabel& label,
                             std::span<const double> local_scores) {
    const std::size_t L = label.size();
    const std::size_t T = local_scores.size();
    if (L < 1) throw ConfigError("build_cost_matrix: empty label");
    if (L > T) throw ConfigError("build_cost_matrix: label longer than score sequence");

    // Only two distinct rows exist: z = 1 costs -log s_t, z = 0 costs -log(1-s_t).
    std::vector<double> row_one(T), row_zero(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double s = local_scores[t];
        if (!(s > 0.0 && s < 1.0))
            throw NumericError("build_cost_matrix: score outside (0,1); clamp first");
        row_one[t] = -std::log(s);
        row_zero[t] = -std::log1p(-s);
    }
    CostMatrix costs(L, T);
    for (std::size_t l = 0; l < L; ++l) {
        const double* src = label.bits[l] ? row_one.data() : row_zero.data();
        std::copy(src, src + T, costs.values.begin() + static_cast<std::ptrdiff_t>(l * T));
    }
    return costs;
}

double soft_min(std::span<const double> values, double gamma) {
    if (values.empty()) throw ConfigError("soft_min: empty operand list");
    if (gamma == 0.0) return *std::min_element(values.begin(), values.end());
    double lo = kInfCost;
    for (double v : values)
        if (!is_inf_cell(v)) lo = std::min(lo, v);
    if (is_inf_cell(lo)) return kInfCost;
    double acc = 0.0;
    for (double v : values)
        if (!is_inf_cell(v)) acc += std::exp(-(v - lo) / gamma);
    return lo - gamma * std::log(acc);
}

std::pair<double, Workspace> sdtw_forward(const CostMatrix& costs, double gamma) {
    const std::size_t L = costs.rows, T = costs.cols;
    if (L > T) throw ConfigError("sdtw_forward: no feasible path (L > T)");
    if (gamma < 0.0) throw ConfigError("sdtw_forward: gamma must be >= 0");

    Workspace ws;
    ws.rows = L;
    ws.cols = T;
    ws.gamma = gamma;
    ws.r.assign((L + 2) * (T + 2), kInfCost);
    ws.r_at(0, 0) = 0.0;

    for (std::size_t l = 1; l <= L; ++l) {
        const double* cost_row = costs.values.data() + (l - 1) * T;
        for (std::size_t t = 1; t <= T; ++t) {
            if (t < l) continue; // unreachable, keep the sentinel exact
            const double sm = soft_min2(ws.r_at(l - 1, t - 1), ws.r_at(l, t - 1), gamma);
            ws.r_at(l, t) = is_inf_cell(sm) ? kInfCost : cost_row[t - 1] + sm;
        }
    }
    return {ws.r_at(L, T), std::move(ws)};
}

CostMatrix sdtw_backward(const CostMatrix& costs, Workspace& ws) {
    const std::size_t L = costs.rows, T = costs.cols;
    if (ws.rows != L || ws.cols != T)
        throw ConfigError("sdtw_backward: workspace shape mismatch");
    if (!(ws.gamma > 0.0))
        throw ConfigError("sdtw_backward: gamma must be > 0 (use decode_path for the hard case)");
    const double gamma = ws.gamma;

    // Border bookkeeping: R on the bottom/right borders acts as -inf except
    // the corner, which repeats R_{L,T} so that E_{L,T} starts at 1.
    for (std::size_t l = 0; l <= L; ++l) ws.r_at(l, T + 1) = -kInfCost;
    for (std::size_t t = 0; t <= T; ++t) ws.r_at(L + 1, t) = -kInfCost;
    ws.r_at(L + 1, T + 1) = ws.r_at(L, T);

    ws.e.assign((L + 2) * (T + 2), 0.0);
    ws.e_at(L + 1, T + 1) = 1.0;

    auto delta = [&](std::size_t l, std::size_t t) -> double {
        if (l < 1 || l > L || t < 1 || t > T) return 0.0;
        return costs.at(l - 1, t - 1);
    };

    for (std::size_t l = L; l >= 1; --l) {
        for (std::size_t t = T; t >= 1; --t) {
            const double here = ws.r_at(l, t);
            if (is_inf_cell(here)) { ws.e_at(l, t) = 0.0; continue; }

            double acc = 0.0;
            const double r_right = ws.r_at(l, t + 1);
            if (!is_inf_cell(r_right) && !is_neg_inf_cell(r_right))
                acc += std::exp((r_right - here - delta(l, t + 1)) / gamma) * ws.e_at(l, t + 1);
            const double r_diag = ws.r_at(l + 1, t + 1);
            if (!is_inf_cell(r_diag) && !is_neg_inf_cell(r_diag))
                acc += std::exp((r_diag - here - delta(l + 1, t + 1)) / gamma) * ws.e_at(l + 1, t + 1);
            ws.e_at(l, t) = acc;
        }
    }

    CostMatrix grad(L, T);
    for (std::size_t l = 1; l <= L; ++l)
        for (std::size_t t = 1; t <= T; ++t) grad.at(l - 1, t - 1) = ws.e_at(l, t);
    return grad;
}

AlignmentPath decode_path(const CostMatrix& costs) {
    const std::size_t L = costs.rows, T = costs.cols;
    if (L > T) throw ConfigError("decode_path: no feasible path (L > T)");

    std::vector<double> value((L + 1) * (T + 1), kInfCost);
    std::vector<std::uint8_t> from_diag((L + 1) * (T + 1), 0);
    auto vat = [&](std::size_t l, std::size_t t) -> double& { return value[l * (T + 1) + t]; };
    vat(0, 0) = 0.0;

    for (std::size_t l = 1; l <= L; ++l) {
        for (std::size_t t = l; t <= T; ++t) {
            const double diag = vat(l - 1, t - 1);
            const double horiz = vat(l, t - 1);
            // Prefer the diagonal move: transition to the next label as
            // early as possible, so during backtracking a tie keeps the
            // horizontal predecessor.
            if (horiz <= diag) {
                vat(l, t) = costs.at(l - 1, t - 1) + horiz;
            } else {
                vat(l, t) = costs.at(l - 1, t - 1) + diag;
                from_diag[l * (T + 1) + t] = 1;
            }
        }
    }

    AlignmentPath path;
    path.boundaries.assign(L + 1, 0);
    path.boundaries[L] = T;
    std::size_t l = L, t = T;
    while (l >= 1) {
        if (from_diag[l * (T + 1) + t]) {
            path.boundaries[l - 1] = t - 1;
            --l;
        }
        --t;
    }
    return path;
}

double path_cost(const CostMatrix& costs, const AlignmentPath& path) {
    double total = 0.0;
    for (std::size_t l = 1; l <= path.label_count(); ++l)
        for (std::size_t t = path.boundaries[l - 1] + 1; t <= path.boundaries[l]; ++t)
            total += costs.at(l - 1, t - 1);
    return total;
}

std::vector<double> chain_cost_grad_to_scores(const pseudolabel::SequentialLabel& label,
                                              std::span<const double> local_scores,
                                              const CostMatrix& cost_grad) {
    const std::size_t L = cost_grad.rows, T = cost_grad.cols;
    if (label.size() != L || local_scores.size() != T)
        throw ConfigError("chain_cost_grad_to_scores: shape mismatch");
    std::vector<double> out(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double s = local_scores[t];
        const double denom = s * (1.0 - s);
        double acc = 0.0;
        for (std::size_t l = 0; l < L; ++l)
            acc += cost_grad.at(l, t) * (s - static_cast<double>(label.bits[l]));
        out[t] = acc / denom;
    }
    return out;
}

void Workspace::dump_r_csv(std::ostream& out) const {
    for (std::size_t l = 0; l < rows + 2; ++l) {
        for (std::size_t t = 0; t < cols + 2; ++t) {
            if (t) out << ',';
            out << r_at(l, t);
        }
        out << '\n';
    }
}

void Workspace::dump_e_csv(std::ostream& out) const {
    for (std::size_t l = 0; l < rows + 2; ++l) {
        for (std::size_t t = 0; t < cols + 2; ++t) {
            if (t) out << ',';
            out << e_at(l, t);
        }
        out << '\n';
    }
}

} // namespace taseg::dtw

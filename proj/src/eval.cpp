#include "taseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "taseg/errors.hpp"

namespace taseg::eval {

namespace {

MetricReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    MetricReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.tn = tn;
    // 0/0 -> 0 convention, flagged as degenerate.
    if (tp + fp == 0) { r.precision = 0.0; r.degenerate = true; }
    else r.precision = double(tp) / double(tp + fp);
    if (tp + fn == 0) { r.recall = 0.0; r.degenerate = true; }
    else r.recall = double(tp) / double(tp + fn);
    if (r.precision + r.recall == 0.0) { r.f1 = 0.0; if (tp == 0) r.degenerate = true; }
    else r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    if (tp + fp + fn == 0) { r.iou = 0.0; r.degenerate = true; }
    else r.iou = double(tp) / double(tp + fp + fn);
    return r;
}

} // namespace

MetricReport point_metrics(std::span<const std::uint8_t> pred,
                           std::span<const std::uint8_t> truth) {
    if (pred.size() != truth.size())
        throw DataError("point_metrics: length mismatch (" + std::to_string(pred.size()) +
                        " vs " + std::to_string(truth.size()) + ")");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0, g = truth[i] != 0;
        if (p && g) ++tp;
        else if (p && !g) ++fp;
        else if (!p && g) ++fn;
        else ++tn;
    }
    return from_counts(tp, fp, fn, tn);
}

std::pair<MetricReport, double> best_threshold_metrics(std::span<const double> scores,
                                                       std::span<const std::uint8_t> truth) {
    if (scores.size() != truth.size())
        throw DataError("best_threshold_metrics: length mismatch");
    if (scores.empty()) throw DataError("best_threshold_metrics: empty input");

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::size_t total_pos = 0;
    for (auto v : truth) total_pos += v != 0;

    // Walking the scores in descending order, a cut after position i means
    // "predict positive iff score >= threshold" for any threshold between
    // scores[order[i]] and the next distinct score.
    const double lo_sentinel = scores[order[n - 1]] - 1.0;
    const double hi_sentinel = scores[order[0]] + 1.0;

    if (total_pos == 0) // every threshold ties at F1 = 0: predict all-normal
        return {from_counts(0, 0, 0, n), hi_sentinel};

    double best_f1 = -1.0, best_threshold = hi_sentinel;
    std::size_t best_tp = 0, best_fp = 0;

    auto consider = [&](double threshold, std::size_t tp, std::size_t fp) {
        const std::size_t fn = total_pos - tp;
        const double f1 = from_counts(tp, fp, fn, 0).f1;
        if (f1 > best_f1 || (f1 == best_f1 && threshold < best_threshold)) {
            best_f1 = f1;
            best_threshold = threshold;
            best_tp = tp;
            best_fp = fp;
        }
    };

    consider(hi_sentinel, 0, 0); // predict all-normal
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = order[i];
        if (truth[idx] != 0) ++tp; else ++fp;
        const bool last_of_tie = i + 1 == n || scores[order[i + 1]] != scores[idx];
        if (!last_of_tie) continue;
        const double threshold =
            i + 1 == n ? lo_sentinel : 0.5 * (scores[idx] + scores[order[i + 1]]);
        consider(threshold, tp, fp);
    }

    MetricReport report =
        from_counts(best_tp, best_fp, total_pos - best_tp, n - total_pos - best_fp);
    return {report, best_threshold};
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
    if (scores.size() != truth.size()) throw DataError("auroc: length mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (auto v : truth) (v != 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("auroc: both classes must be present");

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mann-Whitney with average ranks over ties.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * double(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (truth[order[k]] != 0) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    return (rank_sum_pos - 0.5 * double(n_pos) * double(n_pos + 1)) /
           (double(n_pos) * double(n_neg));
}

MetricReport instance_metrics(std::span<const double> global_scores,
                              std::span<const std::uint8_t> labels, double threshold) {
    if (global_scores.size() != labels.size())
        throw DataError("instance_metrics: length mismatch");
    std::vector<std::uint8_t> pred(global_scores.size());
    for (std::size_t i = 0; i < global_scores.size(); ++i)
        pred[i] = global_scores[i] >= threshold ? 1 : 0;
    return point_metrics(pred, labels);
}

std::string MetricReport::to_json() const {
    nlohmann::json doc;
    doc["tp"] = tp;
    doc["fp"] = fp;
    doc["fn"] = fn;
    doc["tn"] = tn;
    doc["precision"] = precision;
    doc["recall"] = recall;
    doc["f1"] = f1;
    doc["iou"] = iou;
    doc["degenerate"] = degenerate;
    return doc.dump(2);
}

std::string MetricReport::table() const {
    std::ostringstream out;
    out << "  counts     tp=" << tp << " fp=" << fp << " fn=" << fn << " tn=" << tn << '\n';
    out << "  precision  " << precision << '\n';
    out << "  recall     " << recall << '\n';
    out << "  f1         " << f1 << '\n';
    out << "  iou        " << iou;
    if (degenerate) out << "\n  (degenerate: a 0/0 convention applied)";
    return out.str();
}

} // namespace taseg::eval

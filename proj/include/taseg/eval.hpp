#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

// Point-level evaluation: precision/recall/F1/IoU, threshold-sweep
// F1-best/IoU-best, and rank-based AUROC. No point-adjust anywhere.

namespace taseg::eval {

struct MetricReport {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0, iou = 0.0;
    bool degenerate = false; // a 0/0 convention fired somewhere

    std::string to_json() const;
    std::string table() const;
};

MetricReport point_metrics(std::span<const std::uint8_t> pred,
                           std::span<const std::uint8_t> truth);

// Sweeps candidate thresholds (midpoints of consecutive unique scores plus
// below-min/above-max sentinels); returns the report maximizing F1 and the
// threshold that achieves it (smallest on ties).
std::pair<MetricReport, double> best_threshold_metrics(std::span<const double> scores,
                                                       std::span<const std::uint8_t> truth);

// Mann-Whitney AUROC; ties contribute 0.5. Throws DataError when truth is
// single-class.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> truth);

MetricReport instance_metrics(std::span<const double> global_scores,
                              std::span<const std::uint8_t> labels, double threshold);

} // namespace taseg::eval

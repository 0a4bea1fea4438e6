#include "taseg/inference.hpp"

#include <algorithm>

#include "taseg/dtw.hpp"
#include "taseg/errors.hpp"
#include "taseg/pseudolabel.hpp"

namespace taseg::inference {

bool Segmentation::tiles(std::size_t length) const {
    if (segments.empty()) return length == 0;
    if (segments.front().start != 1 || segments.back().end != length) return false;
    for (std::size_t i = 1; i < segments.size(); ++i)
        if (segments[i].start != segments[i - 1].end + 1) return false;
    for (const auto& seg : segments)
        if (seg.end < seg.start) return false;
    return true;
}

namespace {

Segmentation single_segment(std::size_t length, int label) {
    Segmentation seg;
    seg.segments.push_back({1, length, label});
    return seg;
}

// Merge adjacent same-label segments: consecutive identical pseudo-label
// bits are an artifact of L, not distinct events.
Segmentation merged(const std::vector<Segment>& raw) {
    Segmentation out;
    for (const auto& seg : raw) {
        if (!out.segments.empty() && out.segments.back().label == seg.label)
            out.segments.back().end = seg.end;
        else
            out.segments.push_back(seg);
    }
    return out;
}

} // namespace

InstanceResult segment_instance(const model::ScorerModel& m,
                                const series::TemporalInstance& instance,
                                const SegmentationParams& params) {
    const std::size_t T = instance.length;
    if (params.label_length > T)
        throw ConfigError("segment_instance: label length exceeds instance length");

    auto fwd = model::forward(m, instance);

    InstanceResult res;
    res.local_scores = fwd.scores.local;
    res.global_score = fwd.scores.global;
    res.point_predictions.assign(T, 0);

    const bool predicted_anomalous = fwd.scores.global >= params.tau_star;
    if (!predicted_anomalous) {
        res.segmentation = single_segment(T, 0);
        return res;
    }

    const auto map = pseudolabel::normalize_activation(model::activation_raw(m, fwd.tape));
    const auto bits = pseudolabel::phi(map, params.label_length, params.tau);
    if (bits.all_zero()) {
        res.segmentation = single_segment(T, 0);
        return res;
    }

    const auto costs = dtw::build_cost_matrix(bits, fwd.scores.local);
    const auto path = dtw::decode_path(costs);

    std::vector<Segment> raw;
    for (std::size_t l = 1; l <= path.label_count(); ++l) {
        Segment seg;
        seg.start = path.boundaries[l - 1] + 1;
        seg.end = path.boundaries[l];
        seg.label = bits.bits[l - 1];
        raw.push_back(seg);
        if (seg.label != 0)
            std::fill(res.point_predictions.begin() + (seg.start - 1),
                      res.point_predictions.begin() + seg.end, 1);
    }
    res.segmentation = merged(raw);
    return res;
}

std::vector<DatasetItemResult> segment_dataset(const model::ScorerModel& m,
                                               const series::Dataset& dataset,
                                               const SegmentationParams& params) {
    std::vector<DatasetItemResult> out;
    out.reserve(dataset.size());
    for (const auto& entry : dataset.entries) {
        DatasetItemResult item;
        item.id = entry.instance.id;
        try {
            const series::TemporalInstance inst =
                dataset.normalization ? series::normalized(entry.instance, *dataset.normalization)
                                      : entry.instance;
            item.result = segment_instance(m, inst, params);
        } catch (const std::exception& ex) {
            item.error = ex.what();
        }
        out.push_back(std::move(item));
    }
    return out;
}

} // namespace taseg::inference

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

// Sequential pseudo-label synthesis: min-max normalization of the raw
// activation map, segment-wise thresholding, and masking by the
// instance-level label.

namespace taseg::pseudolabel {

// Per-point activation in [0, 1] after min-max normalization.
struct ActivationMap {
    std::vector<double> values;
};

// Length-L binary event-order label used as a rough segmentation mask.
struct SequentialLabel {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    bool all_zero() const;
};

// m_t = (raw_t - min) / (max - min); a constant input maps to all zeros.
ActivationMap normalize_activation(std::span<const double> raw);

// Partitions the time axis into L intervals of length ceil(T/L) (the last
// may be shorter) and sets bit l iff the interval's max activation >= tau.
SequentialLabel phi(const ActivationMap& map, std::size_t label_length, double tau);

// pos = y * bits, neg = (1 - y) * bits.
std::pair<SequentialLabel, SequentialLabel> masked_labels(const SequentialLabel& bits, int y);

} // namespace taseg::pseudolabel

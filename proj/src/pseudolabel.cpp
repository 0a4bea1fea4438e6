#include "taseg/pseudolabel.hpp"

#include <algorithm>
#include <cmath>

#include "taseg/errors.hpp"

namespace taseg::pseudolabel {

bool SequentialLabel::all_zero() const {
    return std::all_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b == 0; });
}

ActivationMap normalize_activation(std::span<const double> raw) {
    ActivationMap map;
    map.values.assign(raw.size(), 0.0);
    if (raw.empty()) return map;
    for (double v : raw)
        if (!std::isfinite(v)) throw NumericError("normalize_activation: non-finite input");

    const auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx == mn) return map; // featureless map -> all-normal pseudo-label
    const double inv = 1.0 / (mx - mn);
    for (std::size_t t = 0; t < raw.size(); ++t) map.values[t] = (raw[t] - mn) * inv;
    return map;
}

SequentialLabel phi(const ActivationMap& map, std::size_t label_length, double tau) {
    const std::size_t length = map.values.size();
    if (label_length < 1 || label_length > length)
        throw ConfigError("phi: label length must satisfy 1 <= L <= T");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("phi: tau must lie in (0, 1)");

    const std::size_t interval = (length + label_length - 1) / label_length; // ceil(T/L)
    SequentialLabel out;
    out.bits.assign(label_length, 0);
    for (std::size_t l = 0; l < label_length; ++l) {
        const std::size_t begin = l * interval;
        const std::size_t end = std::min(begin + interval, length);
        double peak = -1.0; // empty trailing interval stays 0
        for (std::size_t t = begin; t < end; ++t) peak = std::max(peak, map.values[t]);
        out.bits[l] = peak >= tau ? 1 : 0;
    }
    return out;
}

std::pair<SequentialLabel, SequentialLabel> masked_labels(const SequentialLabel& bits, int y) {
    SequentialLabel pos, neg;
    pos.bits.assign(bits.size(), 0);
    neg.bits.assign(bits.size(), 0);
    if (y != 0)
        pos.bits = bits.bits;
    else
        neg.bits = bits.bits;
    return {pos, neg};
}

} // namespace taseg::pseudolabel

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kpart/basis.hpp"
#include "kpart/errors.hpp"

namespace kpart {

/// Half-open index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
    bool operator==(const IndexRange&) const = default;
};

/// K equal contiguous blocks in year order plus the trailing remainder.
/// Remainder observations never host a candidate knot but stay in every fit.
struct PartitionScheme {
    std::vector<IndexRange> blocks;
    IndexRange remainder;
    std::size_t block_size = 0;
};

inline PartitionScheme partition_indices(std::size_t n, std::size_t k_parts) {
    if (k_parts < 1 || k_parts > n)
        throw contract_error("partition_indices: need 1 <= K <= n, got K=" +
                             std::to_string(k_parts) + ", n=" + std::to_string(n));
    PartitionScheme scheme;
    scheme.block_size = n / k_parts;
    scheme.blocks.reserve(k_parts);
    for (std::size_t k = 0; k < k_parts; ++k)
        scheme.blocks.push_back({k * scheme.block_size, (k + 1) * scheme.block_size});
    scheme.remainder = {k_parts * scheme.block_size, n};
    return scheme;
}

inline double partition_mean(std::span<const double> y, IndexRange range) {
    if (range.end > y.size() || range.begin >= range.end)
        throw contract_error("partition_mean: range out of bounds");
    double s = 0.0;
    for (std::size_t i = range.begin; i < range.end; ++i) s += y[i];
    return s / static_cast<double>(range.size());
}

/// Relative band within which two deviations count as tied. Block means are
/// exact midpoints for two-element blocks, so ties are structural there;
/// without the band, one ulp of rounding after y -> y + c would override the
/// smallest-index rule.
inline constexpr double knot_tie_band = 1e-9;

/// The min/max selector: per block, nominate the observation with the largest
/// absolute deviation from the block mean (ties go to the earliest index) and
/// emit its predictor value as a candidate knot.
inline KnotSet select_knots(std::span<const double> x, std::span<const double> y,
                            std::size_t k_parts) {
    if (x.size() != y.size())
        throw contract_error("select_knots: x and y lengths differ");
    const PartitionScheme scheme = partition_indices(y.size(), k_parts);

    std::vector<Knot> candidates;
    candidates.reserve(k_parts);
    for (std::size_t k = 0; k < scheme.blocks.size(); ++k) {
        const IndexRange block = scheme.blocks[k];
        const double mean = partition_mean(y, block);
        std::size_t arg = block.begin;
        double best = -1.0;
        for (std::size_t i = block.begin; i < block.end; ++i) {
            const double dev = std::fabs(y[i] - mean);
            if (dev > best * (1.0 + knot_tie_band)) {
                best = dev;
                arg = i;
            }
        }
        candidates.push_back({x[arg], k, arg});
    }

    const double x_max = *std::max_element(x.begin(), x.end());
    return make_knot_set(std::move(candidates), x_max);
}

}  // namespace kpart

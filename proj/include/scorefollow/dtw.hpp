#pragma once

// Unconstrained offline DTW between two piano rolls, used as the evaluation
// ground truth. Column cost is the Hamming distance between binary pitch
// columns; the full O(n*m) table is solved and the path recovered from packed
// per-cell step choices (diagonal preferred, then performance, then score).

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "scorefollow/piano_roll.hpp"
#include "scorefollow/util.hpp"

namespace scorefollow {

struct WarpingPath {
    // (performance_frame, score_frame), monotone from (0,0) to (n-1, m-1)
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

inline std::uint32_t column_hamming(const PianoRoll& a, std::size_t i, const PianoRoll& b,
                                    std::size_t j) {
    const std::uint64_t* ca = a.column(i);
    const std::uint64_t* cb = b.column(j);
    return static_cast<std::uint32_t>(std::popcount(ca[0] ^ cb[0]) + std::popcount(ca[1] ^ cb[1]));
}

inline WarpingPath dtw_align(const PianoRoll& performance, const PianoRoll& score,
                             std::uint64_t* total_cost = nullptr) {
    std::size_t n = performance.frames(), m = score.frames();
    if (n == 0 || m == 0) throw DataError("dtw_align: empty roll");

    // steps[cell]: 0 = diagonal, 1 = from (i-1, j), 2 = from (i, j-1)
    std::vector<std::uint8_t> steps((n * m + 3) / 4, 0);
    auto put_step = [&](std::size_t i, std::size_t j, std::uint8_t s) {
        std::size_t cell = i * m + j;
        steps[cell >> 2] |= static_cast<std::uint8_t>(s << ((cell & 3) * 2));
    };
    auto get_step = [&](std::size_t i, std::size_t j) {
        std::size_t cell = i * m + j;
        return static_cast<std::uint8_t>(steps[cell >> 2] >> ((cell & 3) * 2) & 3);
    };

    std::vector<std::uint64_t> prev(m), cur(m);
    for (std::size_t j = 0; j < m; ++j) {
        prev[j] = (j ? prev[j - 1] : 0) + column_hamming(performance, 0, score, j);
        if (j) put_step(0, j, 2);
    }
    for (std::size_t i = 1; i < n; ++i) {
        cur[0] = prev[0] + column_hamming(performance, i, score, 0);
        put_step(i, 0, 1);
        for (std::size_t j = 1; j < m; ++j) {
            std::uint64_t diag = prev[j - 1], up = prev[j], left = cur[j - 1];
            std::uint64_t best = diag;
            std::uint8_t step = 0;
            if (up < best) {
                best = up;
                step = 1;
            }
            if (left < best) {
                best = left;
                step = 2;
            }
            cur[j] = best + column_hamming(performance, i, score, j);
            put_step(i, j, step);
        }
        std::swap(prev, cur);
    }
    if (total_cost) *total_cost = prev[m - 1];

    WarpingPath path;
    std::size_t i = n - 1, j = m - 1;
    path.pairs.emplace_back(i, j);
    while (i != 0 || j != 0) {
        switch (get_step(i, j)) {
            case 0: --i; --j; break;
            case 1: --i; break;
            default: --j; break;
        }
        path.pairs.emplace_back(i, j);
    }
    std::reverse(path.pairs.begin(), path.pairs.end());
    return path;
}

// Score frame paired with a performance frame; plateaus take the lower
// median of the paired score frames.
inline std::size_t ground_truth_position(const WarpingPath& path, std::size_t perf_frame) {
    auto lo = std::lower_bound(path.pairs.begin(), path.pairs.end(), perf_frame,
                               [](const auto& p, std::size_t f) { return p.first < f; });
    auto hi = std::upper_bound(path.pairs.begin(), path.pairs.end(), perf_frame,
                               [](std::size_t f, const auto& p) { return f < p.first; });
    if (lo == hi) throw DataError("ground_truth_position: frame outside path");
    auto count = static_cast<std::size_t>(hi - lo);
    return (lo + static_cast<std::ptrdiff_t>((count - 1) / 2))->second;
}

}  // namespace scorefollow

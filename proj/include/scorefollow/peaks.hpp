#pragma once

// Signal helpers for the heuristic layer: centered moving average, peak
// detection with topographic prominence, and least-squares extrapolation.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "scorefollow/util.hpp"

namespace scorefollow {

// Centered moving average; edge positions average over the available span.
inline std::vector<double> smooth(std::span<const double> v, std::size_t window = 5) {
    if (window % 2 == 0) throw ConfigError("smooth: window must be odd");
    std::vector<double> out(v.size());
    std::size_t half = window / 2;
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t lo = i >= half ? i - half : 0;
        std::size_t hi = std::min(v.size(), i + half + 1);
        double sum = 0;
        for (std::size_t j = lo; j < hi; ++j) sum += v[j];
        out[i] = sum / static_cast<double>(hi - lo);
    }
    return out;
}

struct Peak {
    std::size_t index = 0;
    double prominence = 0;
};

// Interior local maxima; flat tops report their left-most sample. Prominence
// is the peak height minus the higher of the two lowest valleys reached while
// walking outward until a strictly higher value or the boundary.
inline std::vector<Peak> find_peaks(std::span<const double> v, double prominence_min) {
    std::vector<Peak> peaks;
    std::size_t n = v.size();
    std::size_t i = 1;
    while (n >= 3 && i + 1 < n) {
        if (v[i] <= v[i - 1]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;  // flat top
        if (j + 1 < n && v[j + 1] < v[i]) {
            double height = v[i];
            double left_min = height, right_min = height;
            for (std::size_t t = i; t-- > 0;) {
                if (v[t] > height) break;
                left_min = std::min(left_min, v[t]);
            }
            for (std::size_t t = j + 1; t < n; ++t) {
                if (v[t] > height) break;
                right_min = std::min(right_min, v[t]);
            }
            double prom = height - std::max(left_min, right_min);
            if (prom >= prominence_min) peaks.push_back({i, prom});
        }
        i = j + 1;
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        return a.prominence > b.prominence;
    });
    return peaks;
}

struct LineFit {
    double slope = 0;
    double intercept = 0;

    double at(double x) const { return intercept + slope * x; }
};

// Ordinary least squares of y against x.
inline LineFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("ols_fit: need at least two points");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    LineFit fit;
    if (denom != 0.0) {
        fit.slope = (n * sxy - sx * sy) / denom;
        fit.intercept = (sy - fit.slope * sx) / n;
    } else {
        fit.slope = 0.0;
        fit.intercept = sy / n;
    }
    return fit;
}

}  // namespace scorefollow

#pragma once

// Fringe-envelope extraction and visibility statistics on binned counts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <span>
#include <vector>

#include "mzi/errors.hpp"

namespace mzi {

struct Envelope {
    std::vector<double> upper;
    std::vector<double> lower;
};

namespace detail {

// Centered sliding extreme over [i - half, i + half], truncated at the edges.
template <class Better>
std::vector<double> sliding_extreme(std::span<const double> x, std::size_t half, Better better) {
    const std::size_t n = x.size();
    std::vector<double> out(n);
    std::deque<std::size_t> q;
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t hi = std::min(n - 1, i + half);
        for (; next <= hi; ++next) {
            while (!q.empty() && !better(x[q.back()], x[next])) q.pop_back();
            q.push_back(next);
        }
        const std::size_t lo = i >= half ? i - half : 0;
        while (q.front() < lo) q.pop_front();
        out[i] = x[q.front()];
    }
    return out;
}

} // namespace detail

// `window_s` is the full window width; it spans round(window_s / bin_s) bins
// (forced odd so the window is centred).
inline Envelope compute_envelope(std::span<const double> series, double window_s, double bin_s) {
    if (!(bin_s > 0.0)) {
        throw InvalidArgument("compute_envelope: bin must be > 0");
    }
    const auto bins = static_cast<long long>(std::llround(window_s / bin_s));
    if (!(window_s > 0.0) || bins < 3) {
        throw InvalidArgument("compute_envelope: window must span at least 3 bins");
    }
    const auto half = static_cast<std::size_t>(bins / 2);
    return {detail::sliding_extreme(series, half, [](double a, double b) { return a > b; }),
            detail::sliding_extreme(series, half, [](double a, double b) { return a < b; })};
}

struct VisibilitySeries {
    std::vector<double> values;
    std::vector<bool> valid;

    std::vector<double> valid_values() const {
        std::vector<double> v;
        v.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (valid[i]) v.push_back(values[i]);
        }
        return v;
    }
};

// V = |(u - l)/(u + l)|; points with u + l <= 0 are marked invalid.
inline VisibilitySeries visibility_series(std::span<const double> upper, std::span<const double> lower) {
    if (upper.size() != lower.size()) {
        throw InvalidArgument("visibility_series: upper and lower envelopes differ in length");
    }
    VisibilitySeries v;
    v.values.resize(upper.size(), 0.0);
    v.valid.resize(upper.size(), false);
    for (std::size_t i = 0; i < upper.size(); ++i) {
        const double sum = upper[i] + lower[i];
        if (sum > 0.0 && std::isfinite(sum)) {
            v.values[i] = std::min(1.0, std::abs((upper[i] - lower[i]) / sum));
            v.valid[i] = true;
        }
    }
    return v;
}

struct Histogram {
    std::vector<double> edges;  // size = bins + 1, covering [0, 1]
    std::vector<std::size_t> counts;

    std::size_t total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }
};

// Bins of width `bin_width` over [0, 1]; the last bin is closed on the right.
inline Histogram histogram(std::span<const double> values, double bin_width) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
        throw InvalidArgument("histogram: bin width must be > 0");
    }
    const auto nbins = static_cast<std::size_t>(std::max(1.0, std::ceil(1.0 / bin_width - 1e-9)));
    Histogram h;
    h.edges.resize(nbins + 1);
    for (std::size_t k = 0; k <= nbins; ++k) {
        h.edges[k] = std::min(1.0, static_cast<double>(k) * bin_width);
    }
    h.counts.assign(nbins, 0);
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) continue;
        // Small tolerance keeps values sitting on an edge (0.5 with width 0.1) in the upper bin.
        auto k = static_cast<std::size_t>(std::floor(v / bin_width + 1e-9));
        h.counts[std::min(k, nbins - 1)] += 1;
    }
    return h;
}

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation
};

inline SummaryStats summarize(std::span<const double> v) {
    SummaryStats s;
    s.n = v.size();
    if (s.n == 0) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double acc = 0.0;
        for (double x : v) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(s.n - 1));
    }
    return s;
}

struct VisibilityStats {
    Envelope envelope;
    VisibilitySeries visibility;
    Histogram hist;
    SummaryStats summary;
};

inline VisibilityStats analyze_counts(std::span<const double> net, double bin_s, double window_s, double hist_bin) {
    VisibilityStats s;
    s.envelope = compute_envelope(net, window_s, bin_s);
    s.visibility = visibility_series(s.envelope.upper, s.envelope.lower);
    const auto valid = s.visibility.valid_values();
    s.hist = histogram(valid, hist_bin);
    s.summary = summarize(valid);
    return s;
}

} // namespace mzi

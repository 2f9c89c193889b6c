#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gridguard/errors.hpp"

namespace gridguard {

struct Histogram {
    std::vector<double> bin_edges;       // strictly increasing, >= 3 edges
    std::vector<std::uint64_t> counts;   // size = bin_edges.size() - 1

    std::size_t bins() const { return counts.size(); }

    void validate() const {
        if (bin_edges.size() < 3) throw Error(ErrorCode::ConfigError, "histogram needs at least 2 bins");
        for (std::size_t i = 1; i < bin_edges.size(); ++i)
            if (!(bin_edges[i] > bin_edges[i - 1]))
                throw Error(ErrorCode::ConfigError, "histogram edges must be strictly increasing");
        if (counts.size() != bin_edges.size() - 1)
            throw Error(ErrorCode::ConfigError, "histogram counts/edges size mismatch");
    }
};

// Uniform bin edges over [lo, hi].
inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
    if (!(hi > lo) || bins < 2) throw Error(ErrorCode::ConfigError, "invalid histogram span");
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    return edges;
}

// Bin a sample set over fixed edges. Out-of-range samples are clamped into
// the first/last bin so a drifted distribution still lands somewhere visible
// instead of silently vanishing.
inline Histogram histogram_from_samples(const std::vector<double>& samples,
                                        const std::vector<double>& edges) {
    Histogram h;
    h.bin_edges = edges;
    h.counts.assign(edges.size() - 1, 0);
    h.validate();
    for (double x : samples) {
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        std::ptrdiff_t idx = (it - edges.begin()) - 1;
        idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(h.counts.size()) - 1);
        ++h.counts[static_cast<std::size_t>(idx)];
    }
    return h;
}

// Kullback-Leibler divergence D(p || q) in nats over epsilon-smoothed,
// normalized counts: p_hat_i = (p_i + eps) / sum_j (p_j + eps). Smoothing
// keeps empty bins from producing infinities; the cost is that the result
// grows (finitely) as eps shrinks when q has a zero bin where p is massed.
inline double kl_divergence(const Histogram& p, const Histogram& q, double epsilon = 1e-9) {
    p.validate();
    q.validate();
    if (p.bin_edges != q.bin_edges)
        throw Error(ErrorCode::BinMismatch, "histograms use different bin edges");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::EpsilonInvalid, "epsilon must be > 0");

    const std::size_t n = p.bins();
    double psum = 0.0, qsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        psum += static_cast<double>(p.counts[i]) + epsilon;
        qsum += static_cast<double>(q.counts[i]) + epsilon;
    }
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ph = (static_cast<double>(p.counts[i]) + epsilon) / psum;
        double qh = (static_cast<double>(q.counts[i]) + epsilon) / qsum;
        d += ph * std::log(ph / qh);
    }
    // Clamp the tiny negative values floating-point rounding can produce for
    // near-identical inputs; KL is mathematically >= 0.
    return d < 0.0 && d > -1e-12 ? 0.0 : d;
}

}  // namespace gridguard

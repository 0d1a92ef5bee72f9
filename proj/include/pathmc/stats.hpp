#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "pathmc/errors.hpp"

namespace pathmc {

inline double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

inline double normal_pdf(double x) noexcept {
    return 0.39894228040143267793994605993438 * std::exp(-0.5 * x * x);
}

// Standard error of a Bernoulli frequency estimate count/n (sample-variance
// convention, n-1 in the denominator).
inline double bernoulli_stderr(uint64_t count, uint64_t n) {
    if (n < 2) throw InputError("bernoulli_stderr: need n >= 2");
    const double p = static_cast<double>(count) / static_cast<double>(n);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n - 1));
}

// Kolmogorov-Smirnov distance between a sample and a reference CDF.
// Sorts a copy of the sample; fine for the ~1e6 draws used in verification.
inline double ks_distance(std::vector<double> sample,
                          const std::function<double(double)>& cdf) {
    if (sample.empty()) throw InputError("ks_distance: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(f - lo), std::abs(f - hi)));
    }
    return d;
}

// Equal-width histogram normalized to a probability vector.  Out-of-range
// samples are clamped into the edge bins so mass is conserved.
inline std::vector<double> normalized_histogram(const std::vector<double>& sample,
                                                double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo)) throw InputError("normalized_histogram: bad bins/range");
    if (sample.empty()) throw InputError("normalized_histogram: empty sample");
    std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
    const double scale = bins / (hi - lo);
    for (double x : sample) {
        int b = static_cast<int>((x - lo) * scale);
        b = std::clamp(b, 0, bins - 1);
        h[static_cast<std::size_t>(b)] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(sample.size());
    return h;
}

// Total-variation distance between two probability vectors of equal length.
inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size() || p.empty())
        throw InputError("tv_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

// Batch-means standard error for an autocorrelated series (MCMC output).
// Splits the series into n_batches contiguous batches and uses the empirical
// spread of batch means.
inline double batch_means_stderr(const std::vector<double>& series, int n_batches = 32) {
    if (n_batches < 2) throw InputError("batch_means_stderr: need >= 2 batches");
    const std::size_t n = series.size();
    if (n < static_cast<std::size_t>(2 * n_batches))
        throw InputError("batch_means_stderr: series shorter than 2x batch count");
    const std::size_t len = n / static_cast<std::size_t>(n_batches);
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(n_batches));
    for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        const std::size_t off = static_cast<std::size_t>(b) * len;
        for (std::size_t i = 0; i < len; ++i) s += series[off + i];
        means.push_back(s / static_cast<double>(len));
    }
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= n_batches;
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    var /= (n_batches - 1);
    return std::sqrt(var / n_batches);
}

}  // namespace pathmc

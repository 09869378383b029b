// Feature-level forensic analyses over normalized defocus maps: binary
// discrepancy masks, threshold sweeps, local variance, the two-sample
// Kolmogorov-Smirnov test, and the per-image feature descriptor.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blurmap/image.hpp"

namespace blurmap::analysis {

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> on;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), on(GrayImage::checked_size(w, h), 0) {}
    size_t count() const {
        size_t c = 0;
        for (auto v : on) c += v;
        return c;
    }
};

/// mask(x) = 1 iff |a(x) - b(x)| >= threshold. Inputs are normalized maps;
/// the threshold is inclusive.
inline BinaryMask discrepancy_mask(const GrayImage& a, const GrayImage& b,
                                   double threshold = 0.1) {
    if (!a.same_shape(b))
        throw std::invalid_argument("discrepancy_mask: map dimensions differ");
    BinaryMask mask(a.width, a.height);
    for (size_t i = 0; i < mask.on.size(); ++i)
        mask.on[i] = std::abs(static_cast<double>(a.data[i]) - b.data[i]) >= threshold;
    return mask;
}

/// Activated-pixel count per threshold for one map pair. Counts are
/// non-increasing as the threshold grows.
inline std::vector<std::pair<double, std::size_t>> threshold_sweep(
    const GrayImage& a, const GrayImage& b, std::span<const double> thresholds) {
    if (!a.same_shape(b))
        throw std::invalid_argument("threshold_sweep: map dimensions differ");
    for (double t : thresholds)
        if (!(t > 0.0)) throw std::invalid_argument("threshold_sweep: thresholds must be positive");
    std::vector<std::pair<double, std::size_t>> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        std::size_t c = 0;
        for (size_t i = 0; i < a.pixels(); ++i)
            c += std::abs(static_cast<double>(a.data[i]) - b.data[i]) >= t;
        out.emplace_back(t, c);
    }
    return out;
}

/// Windowed variance of a normalized map, E[x^2] - (E[x])^2 over the
/// (window)^2 neighborhood with replicate padding, clamped at 0.
inline GrayImage local_variance(const GrayImage& map, int window = 7) {
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("local_variance: window must be odd and >= 3");
    const int r = window / 2;
    std::vector<double> mean = blurmap::detail::to_double(map);
    std::vector<double> sq(mean.size());
    for (size_t i = 0; i < sq.size(); ++i) sq[i] = mean[i] * mean[i];
    std::vector<double> scratch;
    blurmap::detail::box_mean_inplace(mean, map.width, map.height, r, scratch);
    blurmap::detail::box_mean_inplace(sq, map.width, map.height, r, scratch);
    GrayImage out(map.width, map.height);
    for (size_t i = 0; i < out.pixels(); ++i)
        out.data[i] = static_cast<float>(std::max(sq[i] - mean[i] * mean[i], 0.0));
    return out;
}

struct KsResult {
    double d_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

namespace detail {

/// Asymptotic Kolmogorov distribution tail with the small-sample lambda
/// correction; series truncated at 100 terms, clamped to [0,1].
inline double kolmogorov_p(double d, double n1, double n2) {
    const double ne = n1 * n2 / (n1 + n2);
    const double sq = std::sqrt(ne);
    const double lambda = (sq + 0.12 + 0.11 / sq) * d;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace detail

/// Two-sample KS test: D = sup |ECDF_x - ECDF_y| over the pooled sample.
inline KsResult ks_two_sample(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty())
        throw std::invalid_argument("ks_two_sample: samples must be non-empty");
    std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());

    KsResult res;
    res.n1 = xs.size();
    res.n2 = ys.size();
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xs.size() && j < ys.size()) {
        const double v = std::min(xs[i], ys[j]);
        while (i < xs.size() && xs[i] <= v) ++i;
        while (j < ys.size() && ys[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / xs.size() -
                                 static_cast<double>(j) / ys.size()));
    }
    res.d_statistic = d;
    res.p_value = detail::kolmogorov_p(d, static_cast<double>(res.n1),
                                       static_cast<double>(res.n2));
    return res;
}

/// 24-number per-image descriptor: defocus mean/std/min/max, local-variance
/// mean/std/min/max, and a 16-bin normalized defocus histogram.
struct FeatureVector {
    static constexpr int kHistBins = 16;

    double defocus_mean = 0, defocus_std = 0, defocus_min = 0, defocus_max = 0;
    double var_mean = 0, var_std = 0, var_min = 0, var_max = 0;
    std::array<double, kHistBins> hist{};

    std::array<double, 24> to_array() const {
        std::array<double, 24> a{};
        a[0] = defocus_mean;
        a[1] = defocus_std;
        a[2] = defocus_min;
        a[3] = defocus_max;
        a[4] = var_mean;
        a[5] = var_std;
        a[6] = var_min;
        a[7] = var_max;
        for (int i = 0; i < kHistBins; ++i) a[static_cast<size_t>(8 + i)] = hist[static_cast<size_t>(i)];
        return a;
    }

    static std::vector<std::string> names() {
        std::vector<std::string> n = {"defocus_mean", "defocus_std", "defocus_min",
                                      "defocus_max",  "var_mean",    "var_std",
                                      "var_min",      "var_max"};
        for (int i = 0; i < kHistBins; ++i) n.push_back("hist_" + std::to_string(i));
        return n;
    }
};

namespace detail {

struct Stats {
    double mean, stddev, min, max;
};

inline Stats plane_stats(const GrayImage& img) {
    double sum = 0.0, sum2 = 0.0;
    float lo = img.data[0], hi = img.data[0];
    for (float v : img.data) {
        sum += v;
        sum2 += static_cast<double>(v) * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double n = static_cast<double>(img.pixels());
    const double mean = sum / n;
    return {mean, std::sqrt(std::max(sum2 / n - mean * mean, 0.0)), lo, hi};
}

}  // namespace detail

/// Descriptor over a normalized defocus map and its local-variance map.
inline FeatureVector extract_features(const GrayImage& normalized_map,
                                      const GrayImage& variance_map) {
    if (!normalized_map.same_shape(variance_map))
        throw std::invalid_argument("extract_features: map dimensions differ");
    FeatureVector f;
    auto ds = detail::plane_stats(normalized_map);
    f.defocus_mean = ds.mean;
    f.defocus_std = ds.stddev;
    f.defocus_min = ds.min;
    f.defocus_max = ds.max;
    auto vs = detail::plane_stats(variance_map);
    f.var_mean = vs.mean;
    f.var_std = vs.stddev;
    f.var_min = vs.min;
    f.var_max = vs.max;
    for (float v : normalized_map.data) {
        int bin = std::clamp(static_cast<int>(v * FeatureVector::kHistBins), 0,
                             FeatureVector::kHistBins - 1);
        f.hist[static_cast<size_t>(bin)] += 1.0;
    }
    for (double& h : f.hist) h /= static_cast<double>(normalized_map.pixels());
    return f;
}

}  // namespace blurmap::analysis

// Defocus-saliency alignment: weighted histograms of D_fake keyed on
// equally spaced bins over [0,1], the min-overlap Alignment score, and the
// epsilon-smoothed KL divergence. Saliency maps are supplied externally;
// negatives are clipped before histogramming.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "blurmap/image.hpp"

namespace blurmap::align {

/// Pointwise max(s, 0).
inline GrayImage clip_negatives(const GrayImage& s) {
    GrayImage out = s;
    for (float& v : out.data) v = std::max(v, 0.0f);
    return out;
}

/// Pointwise |a - b| of two normalized maps.
inline GrayImage diff_map(const GrayImage& d_fake, const GrayImage& d_real) {
    if (!d_fake.same_shape(d_real))
        throw std::invalid_argument("diff_map: map dimensions differ");
    GrayImage out(d_fake.width, d_fake.height);
    for (size_t i = 0; i < out.pixels(); ++i)
        out.data[i] = std::abs(d_fake.data[i] - d_real.data[i]);
    return out;
}

/// Weighted histogram over N equal bins of [0,1]; bin_i = [(i-1)/N, i/N)
/// with the last bin closed at 1. An all-zero mass normalizes to uniform
/// and sets the degenerate flag.
struct WeightedHistogram {
    int n_bins = 0;
    std::vector<double> mass;
    std::vector<double> normalized;
    double total_mass = 0.0;
    bool degenerate = false;

    std::vector<double> edges() const {
        std::vector<double> e(static_cast<size_t>(n_bins) + 1);
        for (int i = 0; i <= n_bins; ++i)
            e[static_cast<size_t>(i)] = static_cast<double>(i) / n_bins;
        return e;
    }
};

namespace detail {

inline void normalize_histogram(WeightedHistogram& h) {
    h.total_mass = 0.0;
    for (double m : h.mass) h.total_mass += m;
    h.normalized.resize(h.mass.size());
    if (h.total_mass > 0.0) {
        for (size_t i = 0; i < h.mass.size(); ++i) h.normalized[i] = h.mass[i] / h.total_mass;
        h.degenerate = false;
    } else {
        const double u = 1.0 / static_cast<double>(h.mass.size());
        std::fill(h.normalized.begin(), h.normalized.end(), u);
        h.degenerate = true;
    }
}

}  // namespace detail

/// Each pixel contributes its weight to the bin holding its binning value.
/// Binning values are expected in [0,1]; tiny float excursions are clamped.
inline WeightedHistogram weighted_histogram(const GrayImage& binning_values,
                                            const GrayImage& weights, int n_bins) {
    if (n_bins < 2) throw std::invalid_argument("weighted_histogram: need at least 2 bins");
    if (binning_values.pixels() != weights.pixels())
        throw std::invalid_argument("weighted_histogram: pixel counts differ");
    WeightedHistogram h;
    h.n_bins = n_bins;
    h.mass.assign(static_cast<size_t>(n_bins), 0.0);
    for (size_t i = 0; i < binning_values.pixels(); ++i) {
        const double v = std::clamp(static_cast<double>(binning_values.data[i]), 0.0, 1.0);
        const int bin = std::min(static_cast<int>(v * n_bins), n_bins - 1);
        h.mass[static_cast<size_t>(bin)] += weights.data[i];
    }
    detail::normalize_histogram(h);
    return h;
}

/// Eq-style min overlap of two normalized histograms; 1 iff identical.
inline double alignment_score(const WeightedHistogram& h_shap,
                              const WeightedHistogram& h_diff) {
    if (h_shap.n_bins != h_diff.n_bins)
        throw std::invalid_argument("alignment_score: bin counts differ");
    double s = 0.0;
    for (size_t i = 0; i < h_shap.normalized.size(); ++i)
        s += std::min(h_shap.normalized[i], h_diff.normalized[i]);
    return s;
}

/// KL(h_shap || h_diff) with epsilon smoothing inside the log, natural log.
inline double kl_divergence(const WeightedHistogram& h_shap,
                            const WeightedHistogram& h_diff, double epsilon = 1e-10) {
    if (h_shap.n_bins != h_diff.n_bins)
        throw std::invalid_argument("kl_divergence: bin counts differ");
    if (!(epsilon > 0.0)) throw std::invalid_argument("kl_divergence: epsilon must be positive");
    double kl = 0.0;
    for (size_t i = 0; i < h_shap.normalized.size(); ++i) {
        const double p = h_shap.normalized[i], q = h_diff.normalized[i];
        kl += p * std::log((p + epsilon) / (q + epsilon));
    }
    return kl;
}

struct AlignmentReport {
    WeightedHistogram h_diff;
    WeightedHistogram h_shap;
    double alignment = 0.0;
    double kl = 0.0;
    int n_bins = 0;
    double epsilon = 0.0;
};

/// Full procedure for one pair: clip saliency, form the defocus difference,
/// bin both weightings on D_fake, then score.
inline AlignmentReport analyze_alignment(const GrayImage& d_real, const GrayImage& d_fake,
                                         const GrayImage& saliency, int n_bins = 20,
                                         double epsilon = 1e-10) {
    if (!d_real.same_shape(d_fake) || !d_real.same_shape(saliency))
        throw std::invalid_argument("analyze_alignment: map dimensions differ");
    AlignmentReport rep;
    rep.n_bins = n_bins;
    rep.epsilon = epsilon;
    GrayImage m_diff = diff_map(d_fake, d_real);
    GrayImage s_pos = clip_negatives(saliency);
    rep.h_diff = weighted_histogram(d_fake, m_diff, n_bins);
    rep.h_shap = weighted_histogram(d_fake, s_pos, n_bins);
    rep.alignment = alignment_score(rep.h_shap, rep.h_diff);
    rep.kl = kl_divergence(rep.h_shap, rep.h_diff, epsilon);
    return rep;
}

/// Pooled variant: masses accumulate over pairs before normalization.
class AlignmentAccumulator {
public:
    AlignmentAccumulator(int n_bins = 20, double epsilon = 1e-10)
        : n_bins_(n_bins), epsilon_(epsilon) {
        if (n_bins < 2) throw std::invalid_argument("alignment: need at least 2 bins");
        diff_mass_.assign(static_cast<size_t>(n_bins), 0.0);
        shap_mass_.assign(static_cast<size_t>(n_bins), 0.0);
    }

    void add(const GrayImage& d_real, const GrayImage& d_fake, const GrayImage& saliency) {
        GrayImage m_diff = diff_map(d_fake, d_real);
        GrayImage s_pos = clip_negatives(saliency);
        WeightedHistogram hd = weighted_histogram(d_fake, m_diff, n_bins_);
        WeightedHistogram hs = weighted_histogram(d_fake, s_pos, n_bins_);
        for (int i = 0; i < n_bins_; ++i) {
            diff_mass_[static_cast<size_t>(i)] += hd.mass[static_cast<size_t>(i)];
            shap_mass_[static_cast<size_t>(i)] += hs.mass[static_cast<size_t>(i)];
        }
        ++n_pairs_;
    }

    int pairs() const { return n_pairs_; }

    AlignmentReport report() const {
        AlignmentReport rep;
        rep.n_bins = n_bins_;
        rep.epsilon = epsilon_;
        rep.h_diff.n_bins = n_bins_;
        rep.h_diff.mass = diff_mass_;
        detail::normalize_histogram(rep.h_diff);
        rep.h_shap.n_bins = n_bins_;
        rep.h_shap.mass = shap_mass_;
        detail::normalize_histogram(rep.h_shap);
        rep.alignment = alignment_score(rep.h_shap, rep.h_diff);
        rep.kl = kl_divergence(rep.h_shap, rep.h_diff, epsilon_);
        return rep;
    }

private:
    int n_bins_;
    double epsilon_;
    std::vector<double> diff_mass_, shap_mass_;
    int n_pairs_ = 0;
};

}  // namespace blurmap::align

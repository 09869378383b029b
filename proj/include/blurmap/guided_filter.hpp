// Guided filter (He et al. style local linear regression on a guide image).
// The plain variant is deterministic and is what the estimation pipeline
// uses; the subsampled fast variant is an optional speed mode.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "blurmap/image.hpp"

namespace blurmap {

/// Precomputes guide-side box statistics so several inputs can be filtered
/// against the same guide without redoing the guide means.
class GuidedFilter {
public:
    GuidedFilter(const GrayImage& guide, int radius, double eps)
        : w_(guide.width), h_(guide.height), radius_(radius), eps_(eps),
          guide_(detail::to_double(guide)) {
        if (radius < 1) throw std::invalid_argument("guided_filter: radius must be >= 1");
        if (!(eps > 0.0)) throw std::invalid_argument("guided_filter: eps must be positive");
        mean_g_ = guide_;
        detail::box_mean_inplace(mean_g_, w_, h_, radius_, scratch_);
        var_g_.resize(guide_.size());
        for (size_t i = 0; i < guide_.size(); ++i) var_g_[i] = guide_[i] * guide_[i];
        detail::box_mean_inplace(var_g_, w_, h_, radius_, scratch_);
        for (size_t i = 0; i < guide_.size(); ++i)
            var_g_[i] -= mean_g_[i] * mean_g_[i];
    }

    /// q_i = a_i * G_i + b_i with the window coefficients evaluated at the
    /// pixel's own window, so a constant guide reduces exactly to the box
    /// mean of the input.
    GrayImage filter(const GrayImage& input) const {
        if (input.width != w_ || input.height != h_)
            throw std::invalid_argument("guided_filter: input and guide dimensions differ");
        const size_t n = input.pixels();
        // scratch planes persist per thread across images of the same size
        static thread_local std::vector<double> mean_i, corr, scratch;
        mean_i.assign(input.data.begin(), input.data.end());
        corr.resize(n);
        for (size_t i = 0; i < n; ++i) corr[i] = guide_[i] * mean_i[i];
        detail::box_mean_inplace(mean_i, w_, h_, radius_, scratch);
        detail::box_mean_inplace(corr, w_, h_, radius_, scratch);  // -> mean(G*I)

        // a = cov(G,I) / (var(G) + eps), b = mean(I) - a * mean(G)
        GrayImage out(w_, h_);
        for (size_t i = 0; i < n; ++i) {
            const double cov = corr[i] - mean_g_[i] * mean_i[i];
            const double a = cov / (var_g_[i] + eps_);
            const double b = mean_i[i] - a * mean_g_[i];
            out.data[i] = static_cast<float>(a * guide_[i] + b);
        }
        return out;
    }

private:
    int w_, h_, radius_;
    double eps_;
    std::vector<double> guide_, mean_g_, var_g_;
    mutable std::vector<double> scratch_;
};

/// One-shot guided filter. q = mean(a)*guide + mean(b).
inline GrayImage guided_filter(const GrayImage& input, const GrayImage& guide,
                               int radius, double eps) {
    if (!input.same_shape(guide))
        throw std::invalid_argument("guided_filter: input and guide dimensions differ");
    return GuidedFilter(guide, radius, eps).filter(input);
}

namespace detail {

inline GrayImage downsample_box(const GrayImage& img, int s) {
    int lw = (img.width + s - 1) / s, lh = (img.height + s - 1) / s;
    GrayImage out(lw, lh);
    for (int y = 0; y < lh; ++y) {
        for (int x = 0; x < lw; ++x) {
            double acc = 0.0;
            int cnt = 0;
            for (int j = y * s; j < std::min((y + 1) * s, img.height); ++j)
                for (int i = x * s; i < std::min((x + 1) * s, img.width); ++i) {
                    acc += img.at(i, j);
                    ++cnt;
                }
            out.at(x, y) = static_cast<float>(acc / cnt);
        }
    }
    return out;
}

inline GrayImage upsample_bilinear(const GrayImage& img, int w, int h) {
    GrayImage out(w, h);
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    for (int y = 0; y < h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height - 1);
        int y1 = std::min(y0 + 1, img.height - 1);
        double ty = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width - 1);
            int x1 = std::min(x0 + 1, img.width - 1);
            double tx = std::clamp(fx - x0, 0.0, 1.0);
            double v0 = img.at(x0, y0) * (1 - tx) + img.at(x1, y0) * tx;
            double v1 = img.at(x0, y1) * (1 - tx) + img.at(x1, y1) * tx;
            out.at(x, y) = static_cast<float>(v0 * (1 - ty) + v1 * ty);
        }
    }
    return out;
}

}  // namespace detail

/// Subsampled fast guided filter: the linear coefficients are computed at
/// 1/s resolution and upsampled. subsample == 1 falls back to the plain
/// variant.
inline GrayImage fast_guided_filter(const GrayImage& input, const GrayImage& guide,
                                    int radius, double eps, int subsample) {
    if (subsample <= 1) return guided_filter(input, guide, radius, eps);
    if (!input.same_shape(guide))
        throw std::invalid_argument("guided_filter: input and guide dimensions differ");
    GrayImage lg = detail::downsample_box(guide, subsample);
    GrayImage li = detail::downsample_box(input, subsample);
    int lr = std::max(1, radius / subsample);

    std::vector<double> g = detail::to_double(lg), i = detail::to_double(li);
    std::vector<double> gg(g.size()), gi(g.size()), scratch;
    for (size_t k = 0; k < g.size(); ++k) {
        gg[k] = g[k] * g[k];
        gi[k] = g[k] * i[k];
    }
    std::vector<double> mg = g, mi = i;
    detail::box_mean_inplace(mg, lg.width, lg.height, lr, scratch);
    detail::box_mean_inplace(mi, lg.width, lg.height, lr, scratch);
    detail::box_mean_inplace(gg, lg.width, lg.height, lr, scratch);
    detail::box_mean_inplace(gi, lg.width, lg.height, lr, scratch);
    GrayImage a(lg.width, lg.height), b(lg.width, lg.height);
    for (size_t k = 0; k < g.size(); ++k) {
        double var = gg[k] - mg[k] * mg[k];
        double cov = gi[k] - mg[k] * mi[k];
        double ak = cov / (var + eps);
        a.data[k] = static_cast<float>(ak);
        b.data[k] = static_cast<float>(mi[k] - ak * mg[k]);
    }
    GrayImage ua = detail::upsample_bilinear(a, input.width, input.height);
    GrayImage ub = detail::upsample_bilinear(b, input.width, input.height);
    GrayImage out(input.width, input.height);
    for (size_t k = 0; k < out.pixels(); ++k)
        out.data[k] = static_cast<float>(static_cast<double>(ua.data[k]) * guide.data[k] + ub.data[k]);
    return out;
}

}  // namespace blurmap

// Edge-based defocus blur map estimation: Canny-style edge map, per-edge
// blur from the two-scale gradient-magnitude ratio, and dense propagation
// by guided filtering or a matting-Laplacian solve. The four pipeline
// stages are individually timed.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blurmap/guided_filter.hpp"
#include "blurmap/image.hpp"
#include "blurmap/matting.hpp"

namespace blurmap::defocus {

enum class Propagation { GuidedFilter, MattingLaplacian };
enum class NormalizeMode { SigmaMax, MinMax };

struct DefocusParams {
    double sigma1 = 1.5;        // finer reblur scale, px
    double sigma2 = 2.0;        // coarser reblur scale, px
    double epsilon = 1e-6;      // stability constant in the ratio inversion
    double sigma_max = 5.0;     // clamp ceiling, px; also the normalization denominator
    double canny_low = 0.05;    // hysteresis thresholds, fraction of max gradient
    double canny_high = 0.15;
    Propagation propagation = Propagation::GuidedFilter;
    int gf_radius = 15;
    double gf_eps = 1e-3;
    int gf_subsample = 1;       // >1 enables the subsampled fast guided filter
    double matting_lambda = 1e-3;
    double matting_reg = 1e-7;
    double cg_tol = 1e-5;
    int cg_max_iter = 2000;
    NormalizeMode normalize = NormalizeMode::SigmaMax;

    void validate() const {
        if (!(sigma1 > 0.0) || !(sigma1 < sigma2))
            throw std::invalid_argument("defocus params: need 0 < sigma1 < sigma2");
        if (!(epsilon > 0.0)) throw std::invalid_argument("defocus params: epsilon must be positive");
        if (!(sigma_max > 0.0)) throw std::invalid_argument("defocus params: sigma_max must be positive");
        if (!(canny_low > 0.0) || !(canny_low < canny_high))
            throw std::invalid_argument("defocus params: need 0 < canny_low < canny_high");
    }
};

struct EdgeMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> on;

    EdgeMask() = default;
    EdgeMask(int w, int h) : width(w), height(h), on(GrayImage::checked_size(w, h), 0) {}

    bool at(int x, int y) const { return on[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y) { on[static_cast<size_t>(y) * width + x] = 1; }
    size_t count() const {
        size_t c = 0;
        for (auto v : on) c += v;
        return c;
    }
};

/// Blur values on edge pixels only; non-edge pixels carry exactly 0.
struct SparseBlurEstimate {
    EdgeMask mask;
    GrayImage sigma_at_edges;
    int degenerate_ratio_pixels = 0;  // ratio within epsilon of 1, clamped to sigma_max
};

/// Dense per-pixel blur map. `sigma` is in pixels, `normalized` in [0,1].
struct DefocusMap {
    GrayImage sigma;
    GrayImage normalized;
    double sigma_max = 0.0;

    int width() const { return sigma.width; }
    int height() const { return sigma.height; }
};

struct StageTiming {
    std::string stage;   // machine id: rgb_to_gray | edge_map | sparse_blur_map | propagation
    std::string label;   // display name: RGB to Gray | Edge Map | Sparse Blur Map | Closed-Form Matting
    double ms = 0.0;
    double peak_mb = 0.0;  // best-effort scratch estimate
};

struct EstimateDiagnostics {
    int degenerate_ratio_pixels = 0;
    bool empty_edge_mask = false;
    int cg_iterations = 0;
    double cg_residual = 0.0;
};

/// Inverts the two-scale gradient-magnitude ratio into a blur sigma:
/// sigma^2 = max((R^2 s1^2 - s2^2) / (1 - R^2 + eps), 0).
/// The negative branch (R outside (1, s2/s1)) maps to 0.
inline double invert_gradient_ratio(double ratio, double sigma1, double sigma2,
                                    double epsilon) {
    const double r2 = ratio * ratio;
    const double num = r2 * sigma1 * sigma1 - sigma2 * sigma2;
    const double den = 1.0 - r2 + epsilon;
    const double s2 = num / den;
    if (!(s2 > 0.0)) return 0.0;  // also covers NaN from 0/0
    return std::sqrt(s2);
}

/// Canny-style edge map: Gaussian-derivative gradient at scale 1.0,
/// non-maximum suppression against magnitudes interpolated along the true
/// gradient direction, hysteresis with thresholds relative to the max
/// gradient magnitude. An all-constant image yields an empty mask.
inline EdgeMask detect_edges(const GrayImage& img, const DefocusParams& params) {
    params.validate();
    const int w = img.width, h = img.height;
    EdgeMask mask(w, h);

    auto [gx, gy] = gradient_xy(img, 1.0);
    GrayImage mag(w, h);
    float max_mag = 0.0f;
    for (size_t i = 0; i < mag.pixels(); ++i) {
        mag.data[i] = std::hypot(gx.data[i], gy.data[i]);
        max_mag = std::max(max_mag, mag.data[i]);
    }
    if (!(max_mag > 1e-12f)) return mask;

    const float low = static_cast<float>(params.canny_low) * max_mag;
    const float high = static_cast<float>(params.canny_high) * max_mag;

    auto interp_mag = [&](double fx, double fy) {
        fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
        const double tx = fx - x0, ty = fy - y0;
        const double v0 = mag.at(x0, y0) * (1 - tx) + mag.at(x1, y0) * tx;
        const double v1 = mag.at(x0, y1) * (1 - tx) + mag.at(x1, y1) * tx;
        return v0 * (1 - ty) + v1 * ty;
    };

    std::vector<std::uint8_t> survivor(mag.pixels(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float m = mag.at(x, y);
            if (m < low) continue;
            // canonicalize the direction so the mask is invariant under
            // intensity inversion; keyed on the dominant component, since
            // the minor one is noise-signed on axis-aligned edges
            double ux = gx.at(x, y), uy = gy.at(x, y);
            const bool flip = std::abs(ux) >= std::abs(uy)
                                  ? (ux < 0.0 || (ux == 0.0 && uy < 0.0))
                                  : (uy < 0.0);
            if (flip) {
                ux = -ux;
                uy = -uy;
            }
            ux /= m;
            uy /= m;
            if (m >= interp_mag(x + ux, y + uy) && m > interp_mag(x - ux, y - uy))
                survivor[static_cast<size_t>(y) * w + x] = 1;
        }
    }

    // hysteresis: grow from strong survivors through weak ones, 8-connected
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (survivor[static_cast<size_t>(y) * w + x] && mag.at(x, y) >= high) {
                mask.set(x, y);
                stack.emplace_back(x, y);
            }
    while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = cx + dx, ny = cy + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const size_t i = static_cast<size_t>(ny) * w + nx;
                if (survivor[i] && !mask.on[i]) {
                    mask.on[i] = 1;
                    stack.emplace_back(nx, ny);
                }
            }
    }
    return mask;
}

namespace detail {

/// Gradient magnitude |grad(img * G(sigma))| at edge pixels only, in
/// row-major edge order. Rows are processed in bands: the vertical smooth
/// and derivative aggregates are computed once per needed column and shared
/// by every edge pixel in the row, so the cost is bounded by the full-image
/// convolution and far below it on sparse masks.
inline std::vector<double> gradient_at_edges(const GrayImage& img, const EdgeMask& edges,
                                             double sigma) {
    const int w = img.width, h = img.height;
    const Kernel1D smooth = gaussian_kernel(sigma);
    const Kernel1D deriv = gaussian_deriv_kernel(sigma);
    const int r = smooth.radius;

    std::vector<double> out;
    out.reserve(edges.count());
    std::vector<double> col_smooth(static_cast<size_t>(w)), col_deriv(static_cast<size_t>(w));
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* erow = &edges.on[static_cast<size_t>(y) * w];
        int minx = w, maxx = -1;
        for (int x = 0; x < w; ++x)
            if (erow[x]) {
                if (minx == w) minx = x;
                maxx = x;
            }
        if (maxx < 0) continue;
        const int lo = std::max(0, minx - r), hi = std::min(w - 1, maxx + r);

        std::fill(col_smooth.begin() + lo, col_smooth.begin() + hi + 1, 0.0);
        std::fill(col_deriv.begin() + lo, col_deriv.begin() + hi + 1, 0.0);
        for (int j = -r; j <= r; ++j) {
            const float* row = &img.data[static_cast<size_t>(std::clamp(y - j, 0, h - 1)) * w];
            const double ts = smooth.tap(j), td = deriv.tap(j);
            for (int u = lo; u <= hi; ++u) {
                col_smooth[static_cast<size_t>(u)] += ts * row[u];
                col_deriv[static_cast<size_t>(u)] += td * row[u];
            }
        }
        for (int x = minx; x <= maxx; ++x) {
            if (!erow[x]) continue;
            double gx = 0.0, gy = 0.0;
            for (int i = -r; i <= r; ++i) {
                const int u = std::clamp(x - i, 0, w - 1);
                gx += deriv.tap(i) * col_smooth[static_cast<size_t>(u)];
                gy += smooth.tap(i) * col_deriv[static_cast<size_t>(u)];
            }
            out.push_back(std::hypot(gx, gy));
        }
    }
    return out;
}

}  // namespace detail

/// Per-edge-pixel blur from the gradient ratio R = |grad at sigma1| /
/// (|grad at sigma2| + eps). Responses are evaluated at edge pixels only;
/// a sparse map never needs the full-image convolutions.
inline SparseBlurEstimate sparse_blur(const GrayImage& img, const EdgeMask& edges,
                                      const DefocusParams& params) {
    params.validate();
    if (edges.width != img.width || edges.height != img.height)
        throw std::invalid_argument("sparse_blur: edge mask dimensions differ from image");

    SparseBlurEstimate out;
    out.mask = edges;
    out.sigma_at_edges = GrayImage(img.width, img.height, 0.0f);

    const std::vector<double> m1 = detail::gradient_at_edges(img, edges, params.sigma1);
    const std::vector<double> m2 = detail::gradient_at_edges(img, edges, params.sigma2);

    size_t k = 0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!edges.at(x, y)) continue;
            const double ratio = m1[k] / (m2[k] + params.epsilon);
            ++k;
            double sigma;
            if (std::abs(ratio - 1.0) <= params.epsilon) {
                // flat region leaked into the edge mask; the ratio carries no
                // usable blur information
                sigma = params.sigma_max;
                ++out.degenerate_ratio_pixels;
            } else {
                sigma = std::min(invert_gradient_ratio(ratio, params.sigma1, params.sigma2,
                                                       params.epsilon),
                                 params.sigma_max);
            }
            out.sigma_at_edges.at(x, y) = static_cast<float>(sigma);
        }
    }
    return out;
}

namespace detail {

inline GrayImage normalize_map(const GrayImage& sigma, double sigma_max,
                               NormalizeMode mode) {
    GrayImage out(sigma.width, sigma.height);
    if (mode == NormalizeMode::SigmaMax) {
        const float inv = static_cast<float>(1.0 / sigma_max);
        for (size_t i = 0; i < out.pixels(); ++i)
            out.data[i] = std::clamp(sigma.data[i] * inv, 0.0f, 1.0f);
    } else {
        float lo = sigma.data[0], hi = sigma.data[0];
        for (float v : sigma.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const float range = hi - lo;
        for (size_t i = 0; i < out.pixels(); ++i)
            out.data[i] = range > 0.0f ? (sigma.data[i] - lo) / range : 0.0f;
    }
    return out;
}

}  // namespace detail

/// Fills non-edge pixels from the sparse estimate. Guided-filter mode uses
/// the normalize trick q = GF(values) / GF(mask); matting mode solves
/// (L + lambda Diag(mask)) d = lambda Diag(mask) values by CG.
inline DefocusMap propagate(const SparseBlurEstimate& sparse, const GrayImage& guide,
                            const DefocusParams& params,
                            EstimateDiagnostics* diag = nullptr) {
    params.validate();
    if (sparse.mask.width != guide.width || sparse.mask.height != guide.height)
        throw std::invalid_argument("propagate: sparse estimate and guide dimensions differ");

    const int w = guide.width, h = guide.height;
    DefocusMap map;
    map.sigma_max = params.sigma_max;

    if (sparse.mask.count() == 0) {
        map.sigma = GrayImage(w, h, 0.0f);
        map.normalized = detail::normalize_map(map.sigma, params.sigma_max, params.normalize);
        if (diag) diag->empty_edge_mask = true;
        return map;
    }

    GrayImage dense(w, h);
    if (params.propagation == Propagation::GuidedFilter) {
        GrayImage mask01(w, h);
        for (size_t i = 0; i < mask01.pixels(); ++i)
            mask01.data[i] = sparse.mask.on[i] ? 1.0f : 0.0f;
        GrayImage num, den;
        if (params.gf_subsample > 1) {
            num = fast_guided_filter(sparse.sigma_at_edges, guide, params.gf_radius,
                                     params.gf_eps, params.gf_subsample);
            den = fast_guided_filter(mask01, guide, params.gf_radius, params.gf_eps,
                                     params.gf_subsample);
        } else {
            GuidedFilter gf(guide, params.gf_radius, params.gf_eps);
            num = gf.filter(sparse.sigma_at_edges);
            den = gf.filter(mask01);
        }
        for (size_t i = 0; i < dense.pixels(); ++i) {
            const float d = den.data[i];
            dense.data[i] = d > 1e-8f ? num.data[i] / d : 0.0f;
        }
    } else {
        SparseMatrix lap = matting_laplacian(guide, params.matting_reg);
        std::vector<double> dvec(static_cast<size_t>(w) * h, 0.0);
        std::vector<double> rhs(dvec.size(), 0.0);
        for (size_t i = 0; i < dvec.size(); ++i) {
            if (sparse.mask.on[i]) {
                dvec[i] = params.matting_lambda;
                rhs[i] = params.matting_lambda * sparse.sigma_at_edges.data[i];
            }
        }
        CgResult cg = solve_cg(lap, dvec, rhs, params.cg_tol, params.cg_max_iter);
        if (diag) {
            diag->cg_iterations = cg.iterations;
            diag->cg_residual = cg.residual;
        }
        for (size_t i = 0; i < dense.pixels(); ++i)
            dense.data[i] = static_cast<float>(cg.x[i]);
    }

    for (float& v : dense.data)
        v = std::clamp(v, 0.0f, static_cast<float>(params.sigma_max));
    map.sigma = std::move(dense);
    map.normalized = detail::normalize_map(map.sigma, params.sigma_max, params.normalize);
    return map;
}

struct DefocusResult {
    DefocusMap map;
    std::vector<StageTiming> timings;
    EstimateDiagnostics diagnostics;
};

/// Full pipeline: gray -> edges -> sparse blur -> propagation, with
/// per-stage wall times and scratch-memory estimates.
inline DefocusResult estimate_defocus(const RgbImage& img, const DefocusParams& params) {
    params.validate();
    using clock = std::chrono::steady_clock;
    DefocusResult res;
    const double px_mb = static_cast<double>(img.pixels()) / (1024.0 * 1024.0);

    auto timed = [&](const char* stage, const char* label, double scratch_bytes_per_px,
                     auto&& fn) {
        auto t0 = clock::now();
        fn();
        auto t1 = clock::now();
        res.timings.push_back(
            {stage, label, std::chrono::duration<double, std::milli>(t1 - t0).count(),
             scratch_bytes_per_px * px_mb});
    };

    GrayImage gray;
    EdgeMask edges;
    SparseBlurEstimate sparse;
    // scratch estimates count the per-stage working planes, bytes per pixel
    timed("rgb_to_gray", "RGB to Gray", 4.0, [&] { gray = rgb_to_gray(img); });
    timed("edge_map", "Edge Map", 26.0, [&] { edges = detect_edges(gray, params); });
    timed("sparse_blur_map", "Sparse Blur Map", 8.0,
          [&] { sparse = sparse_blur(gray, edges, params); });
    const double prop_scratch =
        params.propagation == Propagation::GuidedFilter ? 72.0 : 350.0;
    timed("propagation", "Closed-Form Matting", prop_scratch,
          [&] { res.map = propagate(sparse, gray, params, &res.diagnostics); });
    res.diagnostics.degenerate_ratio_pixels = sparse.degenerate_ratio_pixels;
    return res;
}

}  // namespace blurmap::defocus

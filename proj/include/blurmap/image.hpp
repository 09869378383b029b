// Pixel buffers, color conversion, Gaussian kernels, separable convolution
// and gradient operators. Everything here is pure and single-threaded;
// callers parallelize across images.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace blurmap {

/// Row-major single-channel raster. Values are unitless, nominally [0,1]
/// for pixel intensities; gradient and variance planes reuse the same
/// carrier with whatever range the operation produces.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(checked_size(w, h), fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    size_t pixels() const { return data.size(); }

    bool same_shape(const GrayImage& o) const {
        return width == o.width && height == o.height;
    }

    static size_t checked_size(int w, int h) {
        if (w < 1 || h < 1)
            throw std::invalid_argument("image dimensions must be >= 1");
        return static_cast<size_t>(w) * static_cast<size_t>(h);
    }
};

/// Row-major interleaved RGB raster, values in [0,1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    RgbImage() = default;
    RgbImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(GrayImage::checked_size(w, h) * 3, fill) {}

    float& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }

    size_t pixels() const { return static_cast<size_t>(width) * height; }
};

/// Odd-length 1-D kernel, taps indexed -radius..radius.
/// Smoothing kernels sum to 1, derivative kernels sum to 0.
struct Kernel1D {
    int radius = 0;
    std::vector<double> taps;

    double tap(int i) const { return taps[static_cast<size_t>(i + radius)]; }
    int size() const { return 2 * radius + 1; }
};

/// BT.601 luma. Dimensions preserved.
inline GrayImage rgb_to_gray(const RgbImage& img) {
    GrayImage out(img.width, img.height);
    const float* src = img.data.data();
    for (size_t i = 0; i < out.pixels(); ++i, src += 3)
        out.data[i] = 0.299f * src[0] + 0.587f * src[1] + 0.114f * src[2];
    return out;
}

/// Normalized Gaussian smoothing kernel. radius = ceil(truncate * sigma).
inline Kernel1D gaussian_kernel(double sigma, double truncate = 4.0) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    if (!(truncate > 0.0))
        throw std::invalid_argument("gaussian_kernel: truncate must be positive");
    Kernel1D k;
    k.radius = static_cast<int>(std::ceil(truncate * sigma));
    k.taps.resize(static_cast<size_t>(2 * k.radius + 1));
    double sum = 0.0;
    for (int i = -k.radius; i <= k.radius; ++i) {
        double t = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k.taps[static_cast<size_t>(i + k.radius)] = t;
        sum += t;
    }
    for (double& t : k.taps) t /= sum;
    return k;
}

/// Derivative-of-Gaussian kernel: g'(i) = -i/sigma^2 * g(i), with g the
/// normalized smoothing taps. Zero-sum enforced by subtracting the mean tap.
inline Kernel1D gaussian_deriv_kernel(double sigma, double truncate = 4.0) {
    Kernel1D g = gaussian_kernel(sigma, truncate);
    Kernel1D k;
    k.radius = g.radius;
    k.taps.resize(g.taps.size());
    double sum = 0.0;
    for (int i = -k.radius; i <= k.radius; ++i) {
        double t = -static_cast<double>(i) / (sigma * sigma) * g.tap(i);
        k.taps[static_cast<size_t>(i + k.radius)] = t;
        sum += t;
    }
    double mean = sum / static_cast<double>(k.taps.size());
    for (double& t : k.taps) t -= mean;
    return k;
}

/// Separable convolution with replicate (clamp-to-edge) padding.
/// out(x,y) = sum_{i,j} kx[i] * ky[j] * img(clamp(x-i), clamp(y-j)).
inline GrayImage convolve_separable(const GrayImage& img, const Kernel1D& kx,
                                    const Kernel1D& ky) {
    const int w = img.width, h = img.height;
    std::vector<double> tmp(img.pixels());
    for (int y = 0; y < h; ++y) {
        const float* row = &img.data[static_cast<size_t>(y) * w];
        double* trow = &tmp[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -kx.radius; i <= kx.radius; ++i) {
                int xi = std::clamp(x - i, 0, w - 1);
                acc += kx.tap(i) * row[xi];
            }
            trow[x] = acc;
        }
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -ky.radius; j <= ky.radius; ++j) {
                int yj = std::clamp(y - j, 0, h - 1);
                acc += ky.tap(j) * tmp[static_cast<size_t>(yj) * w + x];
            }
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

/// Signed Gaussian-derivative responses d/dx and d/dy of img smoothed at
/// the given scale (smoothing along one axis, derivative along the other).
inline std::pair<GrayImage, GrayImage> gradient_xy(const GrayImage& img, double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("gradient_xy: sigma must be positive");
    Kernel1D smooth = gaussian_kernel(sigma);
    Kernel1D deriv = gaussian_deriv_kernel(sigma);
    GrayImage gx = convolve_separable(img, deriv, smooth);
    GrayImage gy = convolve_separable(img, smooth, deriv);
    return {std::move(gx), std::move(gy)};
}

/// Gradient magnitude sqrt(gx^2 + gy^2) at the given Gaussian scale.
inline GrayImage gradient_magnitude(const GrayImage& img, double sigma) {
    auto [gx, gy] = gradient_xy(img, sigma);
    GrayImage out(img.width, img.height);
    for (size_t i = 0; i < out.pixels(); ++i)
        out.data[i] = std::hypot(gx.data[i], gy.data[i]);
    return out;
}

namespace detail {

/// Moving box sum over (2r+1) samples per axis with replicate padding,
/// divided by the full window area. Works on double planes. Both passes
/// walk memory sequentially; the column pass keeps one running sum per
/// column and slides a whole row at a time.
inline void box_mean_inplace(std::vector<double>& plane, int w, int h, int r,
                             std::vector<double>& scratch) {
    scratch.resize(plane.size());
    const int n = 2 * r + 1;
    for (int y = 0; y < h; ++y) {
        const double* src = &plane[static_cast<size_t>(y) * w];
        double* dst = &scratch[static_cast<size_t>(y) * w];
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += src[std::clamp(i, 0, w - 1)];
        dst[0] = s;
        for (int x = 1; x < w; ++x) {
            s += src[x + r < w ? x + r : w - 1] - src[x - r - 1 > 0 ? x - r - 1 : 0];
            dst[x] = s;
        }
    }
    const double inv_area = 1.0 / (static_cast<double>(n) * n);
    auto row_at = [&](int y) -> const double* {
        return &scratch[static_cast<size_t>(std::clamp(y, 0, h - 1)) * w];
    };
    std::vector<double> colsum(static_cast<size_t>(w), 0.0);
    for (int j = -r; j <= r; ++j) {
        const double* row = row_at(j);
        for (int x = 0; x < w; ++x) colsum[static_cast<size_t>(x)] += row[x];
    }
    for (int x = 0; x < w; ++x) plane[static_cast<size_t>(x)] = colsum[static_cast<size_t>(x)] * inv_area;
    for (int y = 1; y < h; ++y) {
        const double* add = row_at(y + r);
        const double* sub = row_at(y - r - 1);
        double* out = &plane[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            colsum[static_cast<size_t>(x)] += add[x] - sub[x];
            out[x] = colsum[static_cast<size_t>(x)] * inv_area;
        }
    }
}

inline std::vector<double> to_double(const GrayImage& img) {
    return std::vector<double>(img.data.begin(), img.data.end());
}

}  // namespace detail

/// Mean over the (2r+1)^2 window with replicate padding.
inline GrayImage box_mean(const GrayImage& img, int radius) {
    if (radius < 1) throw std::invalid_argument("box_mean: radius must be >= 1");
    std::vector<double> plane = detail::to_double(img);
    std::vector<double> scratch;
    detail::box_mean_inplace(plane, img.width, img.height, radius, scratch);
    GrayImage out(img.width, img.height);
    for (size_t i = 0; i < plane.size(); ++i) out.data[i] = static_cast<float>(plane[i]);
    return out;
}

}  // namespace blurmap

// Thin-lens depth-of-field renderer and the procedural corpus generator
// built on it. Corpora pair "real-style" items (depth-dependent blur) with
// "fake-style" items (all-in-focus, or uniform blur that ignores depth),
// with exact per-pixel ground-truth blur alongside every image.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "blurmap/fmap.hpp"
#include "blurmap/image.hpp"
#include "blurmap/png_io.hpp"

namespace blurmap::synth {

struct CameraParams {
    double focal_length_mm = 50.0;
    double f_number = 2.8;
    double focus_distance_mm = 2000.0;
    double pixel_pitch_mm = 0.01;
    double coc_to_sigma = 0.25;  // Gaussian sigma per CoC diameter, in pixels

    void validate() const {
        if (!(focal_length_mm > 0.0)) throw std::invalid_argument("camera: focal length must be positive");
        if (!(f_number > 0.0)) throw std::invalid_argument("camera: f-number must be positive");
        if (!(focus_distance_mm > focal_length_mm))
            throw std::invalid_argument("camera: focus distance must exceed focal length");
        if (!(pixel_pitch_mm > 0.0)) throw std::invalid_argument("camera: pixel pitch must be positive");
    }
};

/// Per-pixel scene distance in mm.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<float> mm;

    DepthMap() = default;
    DepthMap(int w, int h, float fill) : width(w), height(h), mm(GrayImage::checked_size(w, h), fill) {}
    float& at(int x, int y) { return mm[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return mm[static_cast<size_t>(y) * width + x]; }
};

/// Thin-lens circle of confusion mapped to a Gaussian blur sigma in pixels.
inline double coc_sigma(double depth_mm, const CameraParams& cam) {
    cam.validate();
    if (!(depth_mm > 0.0)) throw std::invalid_argument("coc_sigma: depth must be positive");
    const double aperture = cam.focal_length_mm / cam.f_number;
    const double coc_mm = aperture * cam.focal_length_mm *
                          std::abs(depth_mm - cam.focus_distance_mm) /
                          (depth_mm * (cam.focus_distance_mm - cam.focal_length_mm));
    return coc_mm / cam.pixel_pitch_mm * cam.coc_to_sigma;
}

struct RenderResult {
    GrayImage image;
    GrayImage gt_sigma;  // exact per-pixel blur, pre-quantization
};

/// Layered DoF render: the sigma field is quantized into `layers` levels,
/// each level is blurred with its interval-midpoint sigma, and pixels take
/// the value of their own level (hard compositing). Ground truth is the
/// exact sigma field.
inline RenderResult render_dof(const GrayImage& sharp, const DepthMap& depth,
                               const CameraParams& cam, int layers) {
    cam.validate();
    if (depth.width != sharp.width || depth.height != sharp.height)
        throw std::invalid_argument("render_dof: depth and image dimensions differ");
    if (layers < 1) throw std::invalid_argument("render_dof: layers must be >= 1");

    RenderResult out;
    out.gt_sigma = GrayImage(sharp.width, sharp.height);
    float lo = std::numeric_limits<float>::max(), hi = 0.0f;
    for (size_t i = 0; i < out.gt_sigma.pixels(); ++i) {
        const float s = static_cast<float>(coc_sigma(depth.mm[i], cam));
        out.gt_sigma.data[i] = s;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }

    const float range = hi - lo;
    std::vector<int> level(out.gt_sigma.pixels(), 0);
    std::vector<double> level_sigma;
    if (range <= 1e-12f) {
        level_sigma.assign(1, lo);
    } else {
        level_sigma.resize(static_cast<size_t>(layers));
        for (int k = 0; k < layers; ++k)
            level_sigma[static_cast<size_t>(k)] = lo + (k + 0.5) * range / layers;
        for (size_t i = 0; i < level.size(); ++i) {
            int k = static_cast<int>((out.gt_sigma.data[i] - lo) / range * layers);
            level[i] = std::clamp(k, 0, layers - 1);
        }
    }

    out.image = GrayImage(sharp.width, sharp.height);
    for (size_t k = 0; k < level_sigma.size(); ++k) {
        GrayImage blurred;
        if (level_sigma[k] > 1e-6) {
            Kernel1D g = gaussian_kernel(level_sigma[k]);
            blurred = convolve_separable(sharp, g, g);
        } else {
            blurred = sharp;
        }
        for (size_t i = 0; i < out.image.pixels(); ++i)
            if (level[i] == static_cast<int>(k)) out.image.data[i] = blurred.data[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// procedural scenes

namespace detail {

struct Scene {
    GrayImage sharp;
    DepthMap depth;
};

/// Textured background plus 1..3 textured rectangles at distinct depth
/// planes. Textures are checkerboards, stripes or smooth gradients so the
/// edge-based estimator has contours to work with.
inline Scene make_scene(int width, int height, std::mt19937_64& rng,
                        const CameraParams& cam) {
    Scene sc;
    sc.sharp = GrayImage(width, height);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    // Textures are built from step edges: the gradient-ratio estimator
    // reads blur off edge profiles, so pure sinusoids (whose two-scale
    // ratio is independent of the blur) are useless here. Smooth gradients
    // are kept for rectangle interiors only, as near-edgeless filler.
    auto texture_value = [&](int kind, double phase, double cell, double contrast,
                             double base, int x, int y) -> double {
        switch (kind) {
            case 0: {  // checkerboard
                int cx = static_cast<int>((x + phase * cell) / cell);
                int cy = static_cast<int>((y + phase * cell * 0.7) / cell);
                return base + ((cx + cy) % 2 ? contrast : -contrast);
            }
            case 1: {  // square-wave diagonal stripes
                const double s = std::sin(2.0 * 3.14159265358979323846 *
                                          (x * 0.6 + y * 0.4) / (2.0 * cell) + phase * 6.28);
                return base + (s >= 0.0 ? contrast : -contrast);
            }
            default:  // smooth gradient
                return base + contrast * ((static_cast<double>(x) / width) - 0.5) * 2.0 +
                       0.15 * contrast * std::sin(y * 0.9 / cell + phase * 6.28);
        }
    };

    // background plane behind the focus distance, far enough for visible
    // defocus but inside the estimator's working blur range. Cells stay
    // wide relative to 4*sigma2 so neighboring edges do not bleed into
    // each other's gradient windows.
    // cell spacing stays within the guided-filter fill radius so cell
    // interiors always see an edge, and clear of 4*sigma2 so edges stay
    // isolated in the gradient windows
    const double bg_depth = cam.focus_distance_mm * (1.20 + 0.25 * uni(rng));
    const int bg_kind = uni(rng) < 0.5 ? 0 : 1;  // edge-bearing textures only
    const double bg_phase = uni(rng);
    const double bg_cell = 20.0 + 8.0 * uni(rng);
    const double bg_contrast = 0.22 + 0.18 * uni(rng);
    const double bg_base = 0.38 + 0.24 * uni(rng);
    sc.depth = DepthMap(width, height, static_cast<float>(bg_depth));
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            sc.sharp.at(x, y) = static_cast<float>(
                std::clamp(texture_value(bg_kind, bg_phase, bg_cell, bg_contrast, bg_base, x, y),
                           0.0, 1.0));

    // 1..3 foreground rectangles; the first sits near the focal plane
    const int n_rects = 1 + static_cast<int>(uni(rng) * 3.0) % 3;
    for (int r = 0; r < n_rects; ++r) {
        const int rw = width / 5 + static_cast<int>(uni(rng) * width / 3);
        const int rh = height / 5 + static_cast<int>(uni(rng) * height / 3);
        const int rx = static_cast<int>(uni(rng) * (width - rw));
        const int ry = static_cast<int>(uni(rng) * (height - rh));
        double depth_mm;
        if (r == 0) {
            depth_mm = cam.focus_distance_mm * (0.95 + 0.10 * uni(rng));
        } else {
            depth_mm = cam.focus_distance_mm * (0.82 + 0.73 * uni(rng));
        }
        const int kind = static_cast<int>(uni(rng) * 3.0) % 3;
        const double phase = uni(rng);
        const double cell = 14.0 + 10.0 * uni(rng);
        const double contrast = 0.2 + 0.25 * uni(rng);
        const double base = 0.3 + 0.4 * uni(rng);
        for (int y = ry; y < ry + rh && y < height; ++y)
            for (int x = rx; x < rx + rw && x < width; ++x) {
                sc.sharp.at(x, y) = static_cast<float>(
                    std::clamp(texture_value(kind, phase, cell, contrast, base, x, y), 0.0, 1.0));
                sc.depth.at(x, y) = static_cast<float>(depth_mm);
            }
    }
    return sc;
}

}  // namespace detail

struct CorpusItem {
    std::string id;
    std::string label;       // "real" | "fake"
    std::string image_path;  // relative to the corpus directory
    std::string gt_path;
};

struct CorpusSpec {
    int n_real = 100;
    int n_fake = 100;
    int width = 128;
    int height = 128;
    int layers = 8;
    std::uint64_t seed = 0;
    CameraParams cam;
};

/// Writes <id>.png and <id>_gt.fmap per item under out_dir and returns the
/// manifest rows. Item-level RNGs are seeded seed+index so generation stays
/// reproducible regardless of evaluation order.
inline std::vector<CorpusItem> make_corpus(const CorpusSpec& spec, const std::string& out_dir) {
    if (spec.n_real < 1 || spec.n_fake < 1)
        throw std::invalid_argument("make_corpus: need at least one item per label");
    spec.cam.validate();
    std::filesystem::create_directories(out_dir);

    std::vector<CorpusItem> items;
    items.reserve(static_cast<size_t>(spec.n_real + spec.n_fake));

    auto emit = [&](const std::string& id, const std::string& label, const GrayImage& img,
                    const GrayImage& gt) {
        CorpusItem item;
        item.id = id;
        item.label = label;
        item.image_path = id + ".png";
        item.gt_path = id + "_gt.fmap";
        // write through a temp name so partially written items never appear
        const std::string png = out_dir + "/" + item.image_path;
        const std::string fmp = out_dir + "/" + item.gt_path;
        write_png_gray(png + ".tmp", img);
        std::filesystem::rename(png + ".tmp", png);
        write_fmap(fmp + ".tmp", gt);
        std::filesystem::rename(fmp + ".tmp", fmp);
        items.push_back(std::move(item));
    };

    char buf[32];
    for (int i = 0; i < spec.n_real; ++i) {
        std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(i));
        auto sc = detail::make_scene(spec.width, spec.height, rng, spec.cam);
        auto rendered = render_dof(sc.sharp, sc.depth, spec.cam, spec.layers);
        std::snprintf(buf, sizeof buf, "real_%04d", i);
        emit(buf, "real", rendered.image, rendered.gt_sigma);
    }
    for (int i = 0; i < spec.n_fake; ++i) {
        std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(spec.n_real + i));
        auto sc = detail::make_scene(spec.width, spec.height, rng, spec.cam);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::snprintf(buf, sizeof buf, "fake_%04d", i);
        if (uni(rng) < 0.5) {
            // all-in-focus: the scene as rendered without any optics
            GrayImage gt(spec.width, spec.height, 0.0f);
            emit(buf, "fake", sc.sharp, gt);
        } else {
            // depth-inconsistent uniform blur
            const double sigma_u = 0.8 + 1.7 * uni(rng);
            Kernel1D g = gaussian_kernel(sigma_u);
            GrayImage blurred = convolve_separable(sc.sharp, g, g);
            GrayImage gt(spec.width, spec.height, static_cast<float>(sigma_u));
            emit(buf, "fake", blurred, gt);
        }
    }
    return items;
}

}  // namespace blurmap::synth

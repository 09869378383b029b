#include <catch2/catch.hpp>

#include <cstring>
#include <random>

#include "blurmap/defocus.hpp"
#include "blurmap/synthcam.hpp"
#include "oracles.hpp"

using namespace blurmap;
using namespace blurmap::defocus;

TEST_CASE("gradient ratio inversion recovers sigma from the analytic ratio") {
    // pure-math property: with the stability constant off, Eq-style
    // inversion of the analytic ratio is exact to machine precision
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> s1d(0.3, 3.0), dd(0.3, 2.0), sd(0.01, 5.0);
    for (int i = 0; i < 1000; ++i) {
        const double sigma1 = s1d(rng);
        const double sigma2 = sigma1 + dd(rng);
        const double sigma = sd(rng);
        const double r = oracle::analytic_ratio(sigma, sigma1, sigma2);
        const double rec = invert_gradient_ratio(r, sigma1, sigma2, 0.0);
        REQUIRE(std::abs(rec - sigma) / sigma < 1e-9);
    }
}

TEST_CASE("gradient ratio inversion worked cases") {
    SECTION("R = sigma2/sigma1 means an in-focus edge") {
        REQUIRE(invert_gradient_ratio(4.0 / 3.0, 1.5, 2.0, 1e-6) == 0.0);
    }
    SECTION("sigma_true = 1.0 closed form") {
        const double r = oracle::analytic_ratio(1.0, 1.5, 2.0);
        REQUIRE(r == Approx(1.2403).margin(1e-4));
        REQUIRE(invert_gradient_ratio(r, 1.5, 2.0, 0.0) == Approx(1.0).margin(1e-12));
    }
    SECTION("sigma_true = 2.0 closed form") {
        const double r = oracle::analytic_ratio(2.0, 1.5, 2.0);
        REQUIRE(r == Approx(1.1314).margin(1e-4));
        REQUIRE(invert_gradient_ratio(r, 1.5, 2.0, 0.0) == Approx(2.0).margin(1e-12));
    }
    SECTION("R below 1 maps to zero, not NaN") {
        REQUIRE(invert_gradient_ratio(0.9, 1.5, 2.0, 1e-6) == 0.0);
    }
}

TEST_CASE("inverted sigma is strictly decreasing in R on the valid branch") {
    const double sigma1 = 1.5, sigma2 = 2.0;
    const double lo = 1.0 + 1e-3, hi = sigma2 / sigma1 - 1e-3;
    double prev = invert_gradient_ratio(lo, sigma1, sigma2, 1e-6);
    for (int k = 1; k <= 2000; ++k) {
        const double r = lo + (hi - lo) * k / 2000.0;
        const double s = invert_gradient_ratio(r, sigma1, sigma2, 1e-6);
        REQUIRE(s < prev);
        prev = s;
    }
}

TEST_CASE("detect_edges") {
    DefocusParams params;

    SECTION("constant image yields an empty mask") {
        GrayImage img(24, 24, 0.5f);
        EdgeMask mask = detect_edges(img, params);
        REQUIRE(mask.count() == 0);
    }
    SECTION("vertical step edge becomes a one-pixel line") {
        const int w = 32, h = 20, c = 16;
        GrayImage img(w, h, 0.1f);
        for (int y = 0; y < h; ++y)
            for (int x = c; x < w; ++x) img.at(x, y) = 0.9f;
        EdgeMask mask = detect_edges(img, params);
        // every row crossed by the edge has exactly one marked pixel
        size_t rows_with_one = 0;
        for (int y = 0; y < h; ++y) {
            int in_row = 0;
            for (int x = 0; x < w; ++x) in_row += mask.at(x, y);
            if (in_row == 1) ++rows_with_one;
            REQUIRE(in_row <= 1);
        }
        REQUIRE(rows_with_one >= static_cast<size_t>(h - 2));
        REQUIRE(mask.count() <= static_cast<size_t>(h));
    }
    SECTION("mask is invariant under intensity inversion") {
        std::mt19937 rng(77);
        GrayImage img = box_mean(oracle::random_image(24, 24, rng), 1);
        GrayImage inv = img;
        for (float& v : inv.data) v = 1.0f - v;
        EdgeMask a = detect_edges(img, params);
        EdgeMask b = detect_edges(inv, params);
        REQUIRE(a.on == b.on);
    }
    SECTION("parameter validation") {
        DefocusParams bad;
        bad.canny_low = 0.2;
        bad.canny_high = 0.1;
        GrayImage img(4, 4, 0.0f);
        REQUIRE_THROWS_AS(detect_edges(img, bad), std::invalid_argument);
    }
}

TEST_CASE("sparse_blur on analytically pre-blurred step edges") {
    DefocusParams params;
    const int w = 65, h = 21;
    for (double sigma_true : {1.0, 2.0, 3.0}) {
        GrayImage img = oracle::blurred_step(w, h, 32.0, sigma_true);
        EdgeMask edges = detect_edges(img, params);
        REQUIRE(edges.count() > 0);
        SparseBlurEstimate sparse = sparse_blur(img, edges, params);
        std::vector<double> at_edges;
        for (size_t i = 0; i < edges.on.size(); ++i)
            if (edges.on[i]) at_edges.push_back(sparse.sigma_at_edges.data[i]);
        std::sort(at_edges.begin(), at_edges.end());
        const double median = at_edges[at_edges.size() / 2];
        REQUIRE(median == Approx(sigma_true).epsilon(0.10));
    }
}

TEST_CASE("sparse_blur flags degenerate ratios on a pure ramp") {
    // a unit-slope ramp has the same gradient response at every scale, so
    // the ratio pins to 1 and carries no blur information
    DefocusParams params;
    params.epsilon = 0.01;
    const int w = 48, h = 12;
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<float>(x);
    EdgeMask mask(w, h);
    for (int y = 4; y < 8; ++y)
        for (int x = 20; x < 28; ++x) mask.set(x, y);
    SparseBlurEstimate sparse = sparse_blur(img, mask, params);
    REQUIRE(sparse.degenerate_ratio_pixels == 32);
    for (int y = 4; y < 8; ++y)
        for (int x = 20; x < 28; ++x)
            REQUIRE(sparse.sigma_at_edges.at(x, y) == Approx(params.sigma_max));
}

TEST_CASE("sparse_blur leaves non-edge pixels at exactly zero") {
    DefocusParams params;
    GrayImage img = oracle::blurred_step(33, 9, 16.0, 1.5);
    EdgeMask edges = detect_edges(img, params);
    SparseBlurEstimate sparse = sparse_blur(img, edges, params);
    for (size_t i = 0; i < edges.on.size(); ++i)
        if (!edges.on[i]) REQUIRE(sparse.sigma_at_edges.data[i] == 0.0f);
}

TEST_CASE("propagate, guided mode") {
    DefocusParams params;

    SECTION("all-edge constant input propagates to itself") {
        const float v = 2.5f;
        std::mt19937 rng(3);
        GrayImage guide = box_mean(oracle::random_image(20, 16, rng), 2);
        SparseBlurEstimate sparse;
        sparse.mask = EdgeMask(20, 16);
        std::fill(sparse.mask.on.begin(), sparse.mask.on.end(), std::uint8_t{1});
        sparse.sigma_at_edges = GrayImage(20, 16, v);
        DefocusMap map = propagate(sparse, guide, params);
        for (float s : map.sigma.data) REQUIRE(s == Approx(v).margin(1e-5));
    }
    SECTION("two-region scene orders interiors correctly") {
        const int n = 32;
        GrayImage guide(n, n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) guide.at(x, y) = x < n / 2 ? 0.2f : 0.8f;
        SparseBlurEstimate sparse;
        sparse.mask = EdgeMask(n, n);
        sparse.sigma_at_edges = GrayImage(n, n, 0.0f);
        for (int y = 0; y < n; ++y) {
            sparse.mask.set(8, y);
            sparse.sigma_at_edges.at(8, y) = 1.0f;
            sparse.mask.set(24, y);
            sparse.sigma_at_edges.at(24, y) = 3.0f;
        }
        DefocusMap map = propagate(sparse, guide, params);
        double left = 0.0, right = 0.0;
        for (int y = 0; y < n; ++y) {
            left += map.sigma.at(4, y);
            right += map.sigma.at(28, y);
        }
        left /= n;
        right /= n;
        REQUIRE(left < 2.0);
        REQUIRE(right > 2.0);
        for (float s : map.sigma.data) {
            REQUIRE(s >= 0.0f);
            REQUIRE(s <= 3.0f + 1e-4f);
        }
    }
    SECTION("empty mask yields a zero map and a warning diagnostic") {
        GrayImage guide(10, 10, 0.5f);
        SparseBlurEstimate sparse;
        sparse.mask = EdgeMask(10, 10);
        sparse.sigma_at_edges = GrayImage(10, 10, 0.0f);
        EstimateDiagnostics diag;
        DefocusMap map = propagate(sparse, guide, params, &diag);
        REQUIRE(diag.empty_edge_mask);
        for (float s : map.sigma.data) REQUIRE(s == 0.0f);
    }
}

TEST_CASE("propagate, matting mode matches a dense direct solve on 8x8") {
    DefocusParams params;
    params.propagation = Propagation::MattingLaplacian;
    const int n = 8;
    std::mt19937 rng(41);
    GrayImage guide = box_mean(oracle::random_image(n, n, rng), 1);

    SparseBlurEstimate sparse;
    sparse.mask = EdgeMask(n, n);
    sparse.sigma_at_edges = GrayImage(n, n, 0.0f);
    const std::pair<int, int> seeds[] = {{1, 1}, {6, 2}, {3, 5}, {6, 6}, {2, 6}};
    const float vals[] = {0.5f, 2.8f, 1.4f, 3.5f, 0.9f};
    for (int k = 0; k < 5; ++k) {
        sparse.mask.set(seeds[k].first, seeds[k].second);
        sparse.sigma_at_edges.at(seeds[k].first, seeds[k].second) = vals[k];
    }

    EstimateDiagnostics diag;
    DefocusMap map = propagate(sparse, guide, params, &diag);
    REQUIRE(diag.cg_iterations > 0);

    // dense oracle: expand the CSR Laplacian, add lambda*Diag(mask), solve
    SparseMatrix lap = matting_laplacian(guide, params.matting_reg);
    std::vector<std::vector<double>> dense(static_cast<size_t>(n * n),
                                           std::vector<double>(static_cast<size_t>(n * n), 0.0));
    for (int i = 0; i < lap.n; ++i)
        for (int k = lap.row_ptr[i]; k < lap.row_ptr[i + 1]; ++k)
            dense[static_cast<size_t>(i)][static_cast<size_t>(lap.col[k])] = lap.val[k];
    std::vector<double> rhs(static_cast<size_t>(n * n), 0.0);
    for (size_t i = 0; i < rhs.size(); ++i)
        if (sparse.mask.on[i]) {
            dense[i][i] += params.matting_lambda;
            rhs[i] = params.matting_lambda * sparse.sigma_at_edges.data[i];
        }
    std::vector<double> ref = oracle::solve_dense(dense, rhs);

    for (size_t i = 0; i < ref.size(); ++i)
        REQUIRE(map.sigma.data[i] == Approx(std::clamp(ref[i], 0.0, params.sigma_max))
                                         .margin(1e-4));
}

TEST_CASE("CG reports non-convergence with the residual") {
    DefocusParams params;
    params.propagation = Propagation::MattingLaplacian;
    params.cg_max_iter = 1;
    params.cg_tol = 1e-14;
    std::mt19937 rng(5);
    GrayImage guide = box_mean(oracle::random_image(12, 12, rng), 1);
    SparseBlurEstimate sparse;
    sparse.mask = EdgeMask(12, 12);
    sparse.sigma_at_edges = GrayImage(12, 12, 0.0f);
    sparse.mask.set(3, 3);
    sparse.sigma_at_edges.at(3, 3) = 2.0f;
    sparse.mask.set(9, 9);
    sparse.sigma_at_edges.at(9, 9) = 1.0f;
    try {
        propagate(sparse, guide, params);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        REQUIRE(e.residual > 0.0);
        REQUIRE(e.iters <= 1);
    }
}

TEST_CASE("estimate_defocus pipeline") {
    DefocusParams params;
    std::mt19937 rng(99);
    GrayImage base = box_mean(oracle::random_image(48, 40, rng), 2);
    RgbImage img(48, 40);
    for (size_t i = 0; i < base.pixels(); ++i)
        img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = base.data[i];

    SECTION("stage names match the four pipeline stages") {
        auto res = estimate_defocus(img, params);
        REQUIRE(res.timings.size() == 4);
        REQUIRE(res.timings[0].stage == "rgb_to_gray");
        REQUIRE(res.timings[1].stage == "edge_map");
        REQUIRE(res.timings[2].stage == "sparse_blur_map");
        REQUIRE(res.timings[3].stage == "propagation");
        REQUIRE(res.timings[0].label == "RGB to Gray");
        REQUIRE(res.timings[1].label == "Edge Map");
        REQUIRE(res.timings[2].label == "Sparse Blur Map");
        REQUIRE(res.timings[3].label == "Closed-Form Matting");
        for (const auto& t : res.timings) REQUIRE(t.ms >= 0.0);
    }
    SECTION("deterministic: identical runs give bit-identical maps") {
        auto a = estimate_defocus(img, params);
        auto b = estimate_defocus(img, params);
        REQUIRE(std::memcmp(a.map.sigma.data.data(), b.map.sigma.data.data(),
                            a.map.sigma.pixels() * sizeof(float)) == 0);
        REQUIRE(std::memcmp(a.map.normalized.data.data(), b.map.normalized.data.data(),
                            a.map.normalized.pixels() * sizeof(float)) == 0);
    }
    SECTION("normalized stays in [0,1] over random images") {
        for (int trial = 0; trial < 8; ++trial) {
            GrayImage noise = oracle::random_image(20 + trial, 17 + trial, rng);
            RgbImage rgb(noise.width, noise.height);
            for (size_t i = 0; i < noise.pixels(); ++i)
                rgb.data[3 * i] = rgb.data[3 * i + 1] = rgb.data[3 * i + 2] = noise.data[i];
            auto res = estimate_defocus(rgb, params);
            for (float v : res.map.normalized.data) {
                REQUIRE(std::isfinite(v));
                REQUIRE(v >= 0.0f);
                REQUIRE(v <= 1.0f);
            }
        }
    }
    SECTION("all-sharp synthetic scene estimates low defocus everywhere") {
        std::mt19937_64 srng(12);
        synth::CameraParams cam;
        auto scene = synth::detail::make_scene(96, 96, srng, cam);
        RgbImage rgb(96, 96);
        for (size_t i = 0; i < scene.sharp.pixels(); ++i)
            rgb.data[3 * i] = rgb.data[3 * i + 1] = rgb.data[3 * i + 2] = scene.sharp.data[i];
        auto res = estimate_defocus(rgb, params);
        double mean = 0.0;
        for (float v : res.map.normalized.data) mean += v;
        mean /= static_cast<double>(res.map.normalized.pixels());
        REQUIRE(mean < 0.15);
    }
    SECTION("background blurred at sigma 3 scores above the sharp foreground") {
        synth::CameraParams cam;
        // depth where the thin-lens blur is ~3 px: solve 11.446*(d-F)/d = 3
        const double bg_depth = 2711.0;
        REQUIRE(synth::coc_sigma(bg_depth, cam) == Approx(3.0).margin(0.01));
        GrayImage sharp(96, 96);
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x)
                sharp.at(x, y) = ((x / 12) + (y / 12)) % 2 ? 0.75f : 0.25f;
        synth::DepthMap depth(96, 96, static_cast<float>(bg_depth));
        for (int y = 30; y < 66; ++y)
            for (int x = 30; x < 66; ++x) depth.at(x, y) = 2000.0f;  // focal plane
        auto rendered = synth::render_dof(sharp, depth, cam, 8);
        RgbImage rgb(96, 96);
        for (size_t i = 0; i < rendered.image.pixels(); ++i)
            rgb.data[3 * i] = rgb.data[3 * i + 1] = rgb.data[3 * i + 2] =
                rendered.image.data[i];
        auto res = estimate_defocus(rgb, params);
        double fg = 0.0, bg = 0.0;
        size_t fg_n = 0, bg_n = 0;
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x) {
                const bool inside = x >= 34 && x < 62 && y >= 34 && y < 62;
                const bool outside = x < 26 || x >= 70 || y < 26 || y >= 70;
                if (inside) {
                    fg += res.map.normalized.at(x, y);
                    ++fg_n;
                } else if (outside) {
                    bg += res.map.normalized.at(x, y);
                    ++bg_n;
                }
            }
        REQUIRE(bg / static_cast<double>(bg_n) > fg / static_cast<double>(fg_n));
    }
    SECTION("min-max normalization spans [0,1] when the map varies") {
        DefocusParams mm = params;
        mm.normalize = NormalizeMode::MinMax;
        auto res = estimate_defocus(img, mm);
        float lo = 1.0f, hi = 0.0f;
        for (float v : res.map.normalized.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        REQUIRE(lo == 0.0f);
        REQUIRE(hi == 1.0f);
    }
}

#include <catch2/catch.hpp>

#include <random>

#include "blurmap/analysis.hpp"
#include "oracles.hpp"

using namespace blurmap;
using namespace blurmap::analysis;

TEST_CASE("discrepancy_mask") {
    SECTION("identical maps give an all-zero mask") {
        GrayImage a(6, 5, 0.4f);
        BinaryMask mask = discrepancy_mask(a, a, 0.1);
        REQUIRE(mask.count() == 0);
    }
    SECTION("threshold is inclusive: a difference of exactly 0.1 activates") {
        GrayImage a(4, 4, 0.2f), b(4, 4, 0.2f);
        b.at(2, 1) = 0.3f;
        BinaryMask mask = discrepancy_mask(a, b, 0.1);
        REQUIRE(mask.count() == 1);
        REQUIRE(mask.on[static_cast<size_t>(1) * 4 + 2] == 1);
    }
    SECTION("uniform exceedance activates everything") {
        GrayImage a(5, 3, 0.1f), b(5, 3, 0.3f);
        BinaryMask mask = discrepancy_mask(a, b, 0.1);
        REQUIRE(mask.count() == 15);
    }
    SECTION("symmetric in its arguments") {
        std::mt19937 rng(9);
        GrayImage a = oracle::random_image(7, 7, rng);
        GrayImage b = oracle::random_image(7, 7, rng);
        REQUIRE(discrepancy_mask(a, b).on == discrepancy_mask(b, a).on);
    }
    SECTION("shape mismatch rejected") {
        GrayImage a(4, 4, 0.0f), b(4, 5, 0.0f);
        REQUIRE_THROWS_AS(discrepancy_mask(a, b), std::invalid_argument);
    }
}

TEST_CASE("threshold_sweep") {
    SECTION("4x4 maps with known differences against hand enumeration") {
        GrayImage a(4, 4, 0.5f), b(4, 4, 0.5f);
        // 5 pixels differing by 0.05, 3 pixels by 0.15
        for (int i = 0; i < 5; ++i) b.data[static_cast<size_t>(i)] = 0.55f;
        for (int i = 5; i < 8; ++i) b.data[static_cast<size_t>(i)] = 0.65f;
        const double thresholds[] = {0.1, 0.04};
        auto sweep = threshold_sweep(a, b, thresholds);
        REQUIRE(sweep[0].second == 3);  // only the 0.15 group
        REQUIRE(sweep[1].second == 8);  // both groups
    }
    SECTION("identical maps count zero everywhere") {
        GrayImage a(6, 6, 0.2f);
        const double thresholds[] = {0.1, 0.01, 0.0001};
        for (auto& [t, c] : threshold_sweep(a, a, thresholds)) REQUIRE(c == 0);
    }
    SECTION("counts are non-increasing in the threshold (fuzzed)") {
        std::mt19937 rng(21);
        const double thresholds[] = {0.0001, 0.001, 0.01, 0.05, 0.1, 0.2};
        for (int trial = 0; trial < 20; ++trial) {
            GrayImage a = oracle::random_image(9, 9, rng);
            GrayImage b = oracle::random_image(9, 9, rng);
            auto sweep = threshold_sweep(a, b, thresholds);
            for (size_t i = 1; i < sweep.size(); ++i)
                REQUIRE(sweep[i].second <= sweep[i - 1].second);
        }
    }
    SECTION("non-positive thresholds rejected") {
        GrayImage a(3, 3, 0.0f);
        const double thresholds[] = {0.1, 0.0};
        REQUIRE_THROWS_AS(threshold_sweep(a, a, thresholds), std::invalid_argument);
    }
}

TEST_CASE("local_variance") {
    SECTION("constant map has zero variance") {
        GrayImage map(9, 9, 0.7f);
        GrayImage var = local_variance(map, 5);
        for (float v : var.data) REQUIRE(v == Approx(0.0f).margin(1e-12));
    }
    SECTION("matches the naive window oracle on random maps") {
        std::mt19937 rng(33);
        for (int trial = 0; trial < 10; ++trial) {
            GrayImage map = oracle::random_image(6, 6, rng);
            GrayImage ours = local_variance(map, 3);
            GrayImage ref = oracle::window_variance_naive(map, 3);
            for (size_t i = 0; i < ours.pixels(); ++i)
                REQUIRE(ours.data[i] == Approx(ref.data[i]).margin(1e-7));
        }
    }
    SECTION("shift invariance: variance of map + c equals variance of map") {
        std::mt19937 rng(35);
        GrayImage map = oracle::random_image(8, 8, rng, 0.0f, 0.5f);
        GrayImage shifted = map;
        for (float& v : shifted.data) v += 0.3f;
        GrayImage v1 = local_variance(map, 5);
        GrayImage v2 = local_variance(shifted, 5);
        for (size_t i = 0; i < v1.pixels(); ++i)
            REQUIRE(v1.data[i] == Approx(v2.data[i]).margin(1e-6));
    }
    SECTION("never negative, zero on piecewise-constant interiors") {
        GrayImage map(12, 12, 0.2f);
        for (int y = 0; y < 12; ++y)
            for (int x = 6; x < 12; ++x) map.at(x, y) = 0.8f;
        GrayImage var = local_variance(map, 3);
        for (float v : var.data) REQUIRE(v >= 0.0f);
        REQUIRE(var.at(2, 6) == Approx(0.0f).margin(1e-12));
        REQUIRE(var.at(9, 6) == Approx(0.0f).margin(1e-12));
        REQUIRE(var.at(6, 6) > 0.0f);
    }
    SECTION("even or tiny windows rejected") {
        GrayImage map(5, 5, 0.0f);
        REQUIRE_THROWS_AS(local_variance(map, 4), std::invalid_argument);
        REQUIRE_THROWS_AS(local_variance(map, 1), std::invalid_argument);
    }
}

TEST_CASE("ks_two_sample") {
    SECTION("identical samples: D = 0, p = 1") {
        std::vector<double> x = {0.3, 0.7, 0.1, 0.5};
        auto res = ks_two_sample(x, x);
        REQUIRE(res.d_statistic == 0.0);
        REQUIRE(res.p_value == 1.0);
    }
    SECTION("disjoint supports: D = 1") {
        std::vector<double> x = {0.0, 0.0, 0.0}, y = {1.0, 1.0, 1.0};
        auto res = ks_two_sample(x, y);
        REQUIRE(res.d_statistic == 1.0);
        REQUIRE(res.p_value < 0.2);
    }
    SECTION("hand ECDF case: D = 0.25") {
        std::vector<double> x = {1, 2, 3, 4}, y = {2, 3, 4, 5};
        auto res = ks_two_sample(x, y);
        REQUIRE(res.d_statistic == Approx(0.25).margin(1e-12));
        REQUIRE(res.n1 == 4);
        REQUIRE(res.n2 == 4);
    }
    SECTION("D matches the naive ECDF oracle on random samples") {
        std::mt19937 rng(47);
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        std::uniform_int_distribution<int> len(1, 40);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> x(static_cast<size_t>(len(rng)));
            std::vector<double> y(static_cast<size_t>(len(rng)));
            for (auto& v : x) v = dist(rng);
            for (auto& v : y) v = std::round(dist(rng) * 8.0) / 8.0;  // force ties sometimes
            auto res = ks_two_sample(x, y);
            REQUIRE(res.d_statistic == Approx(oracle::ks_d_naive(x, y)).margin(1e-12));
        }
    }
    SECTION("symmetry and invariance under increasing transforms") {
        std::mt19937 rng(53);
        std::uniform_real_distribution<double> dist(0.0, 2.0);
        std::vector<double> x(15), y(11);
        for (auto& v : x) v = dist(rng);
        for (auto& v : y) v = dist(rng);
        auto a = ks_two_sample(x, y);
        auto b = ks_two_sample(y, x);
        REQUIRE(a.d_statistic == Approx(b.d_statistic).margin(1e-15));
        std::vector<double> xe = x, ye = y;
        for (auto& v : xe) v = std::exp(v);
        for (auto& v : ye) v = std::exp(v);
        auto c = ks_two_sample(xe, ye);
        REQUIRE(c.d_statistic == Approx(a.d_statistic).margin(1e-15));
    }
    SECTION("asymptotic p agrees with exact permutation p for small n") {
        // the permutation p of a discrete statistic is defined up to its tie
        // atom, so agreement is measured against [P(D*>D), P(D*>=D)]
        std::mt19937 rng(61);
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        std::uniform_int_distribution<int> len(3, 8);
        for (int trial = 0; trial < 8; ++trial) {
            std::vector<double> x(static_cast<size_t>(len(rng)));
            std::vector<double> y(static_cast<size_t>(len(rng)));
            for (auto& v : x) v = dist(rng);
            for (auto& v : y) v = dist(rng);
            auto res = ks_two_sample(x, y);
            auto exact = oracle::ks_permutation_interval(x, y);
            REQUIRE(exact.distance_to(res.p_value) <= 0.08);
        }
    }
    SECTION("empty samples rejected") {
        std::vector<double> x = {1.0}, empty;
        REQUIRE_THROWS_AS(ks_two_sample(x, empty), std::invalid_argument);
    }
}

TEST_CASE("extract_features") {
    SECTION("constant map") {
        GrayImage map(8, 8, 0.5f);
        GrayImage var = local_variance(map, 3);
        FeatureVector f = extract_features(map, var);
        REQUIRE(f.defocus_mean == Approx(0.5).margin(1e-7));
        REQUIRE(f.defocus_std == Approx(0.0).margin(1e-7));
        REQUIRE(f.defocus_min == Approx(0.5).margin(1e-7));
        REQUIRE(f.defocus_max == Approx(0.5).margin(1e-7));
        // 0.5 * 16 = bin 8
        REQUIRE(f.hist[8] == Approx(1.0).margin(1e-12));
        double hsum = 0.0;
        for (double h : f.hist) hsum += h;
        REQUIRE(hsum == Approx(1.0).margin(1e-6));
    }
    SECTION("mirror invariance") {
        std::mt19937 rng(71);
        GrayImage map = oracle::random_image(10, 6, rng);
        GrayImage mirror(10, 6);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 10; ++x) mirror.at(9 - x, y) = map.at(x, y);
        GrayImage va = local_variance(map, 3);
        GrayImage vb = local_variance(mirror, 3);
        auto fa = extract_features(map, va).to_array();
        auto fb = extract_features(mirror, vb).to_array();
        for (size_t i = 0; i < fa.size(); ++i)
            REQUIRE(fa[i] == Approx(fb[i]).margin(1e-9));
    }
    SECTION("4x4 known map against hand computation") {
        // values k/16 for k = 0..15: mean = 7.5/16 = 0.46875
        GrayImage map(4, 4);
        for (size_t k = 0; k < 16; ++k) map.data[k] = static_cast<float>(k) / 16.0f;
        GrayImage var(4, 4, 0.0f);  // pretend variance plane, all zeros
        FeatureVector f = extract_features(map, var);
        REQUIRE(f.defocus_mean == Approx(7.5 / 16.0).margin(1e-7));
        // population variance of {0..15}/16 = (16^2-1)/12 / 256 = 255/3072
        REQUIRE(f.defocus_std == Approx(std::sqrt(255.0 / 3072.0)).margin(1e-7));
        REQUIRE(f.defocus_min == 0.0);
        REQUIRE(f.defocus_max == Approx(15.0 / 16.0).margin(1e-7));
        REQUIRE(f.var_mean == 0.0);
        REQUIRE(f.var_max == 0.0);
        // each value k/16 lands in bin k: uniform histogram
        for (double h : f.hist) REQUIRE(h == Approx(1.0 / 16.0).margin(1e-12));
        REQUIRE(f.to_array().size() == 24);
        REQUIRE(FeatureVector::names().size() == 24);
    }
}

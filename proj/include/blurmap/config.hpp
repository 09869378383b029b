// RunConfig: every pipeline knob in one serializable struct. Precedence is
// CLI flag > config file > default; apply_json only touches keys that are
// present, so partial config files compose.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "blurmap/alignment.hpp"
#include "blurmap/analysis.hpp"
#include "blurmap/classify.hpp"
#include "blurmap/defocus.hpp"
#include "blurmap/synthcam.hpp"

namespace blurmap {

struct RunConfig {
    // input pre-resize (0 = off)
    int resize_width = 0;
    int resize_height = 0;
    std::string resize_filter = "bilinear";  // or "nearest"

    // defocus estimation
    double sigma1 = 1.5;
    double sigma2 = 2.0;
    double epsilon = 1e-6;
    double sigma_max = 5.0;
    double canny_low = 0.05;
    double canny_high = 0.15;
    std::string propagation = "guided-filter";  // or "matting-laplacian"
    int gf_radius = 15;
    double gf_eps = 1e-3;
    int gf_subsample = 1;
    double matting_lambda = 1e-3;
    double cg_tol = 1e-5;
    int cg_max_iter = 2000;
    std::string normalize = "sigma-max";  // or "min-max"

    // analysis
    double mask_threshold = 0.1;
    int var_window = 7;
    std::vector<double> sweep_thresholds = {0.1, 0.05, 0.01, 0.001, 0.0001};

    // alignment
    int align_bins = 20;
    double align_epsilon = 1e-10;
    bool pooled = false;
    bool png_signed = false;

    // classifier
    double lr = 0.5;
    int epochs = 2000;
    double l2 = 1e-4;
    double threshold = 0.5;
    double ci_level = 0.95;

    // synthetic corpus
    int n_real = 100;
    int n_fake = 100;
    int synth_width = 128;
    int synth_height = 128;
    int dof_layers = 8;
    double focal_mm = 50.0;
    double f_number = 2.8;
    double focus_mm = 2000.0;
    double pixel_pitch_mm = 0.01;
    double coc_to_sigma = 0.25;

    // global
    std::uint64_t seed = 0;
    int jobs = 1;
    int warmup = 5;
    int reps = 30;

    defocus::DefocusParams defocus_params() const {
        defocus::DefocusParams p;
        p.sigma1 = sigma1;
        p.sigma2 = sigma2;
        p.epsilon = epsilon;
        p.sigma_max = sigma_max;
        p.canny_low = canny_low;
        p.canny_high = canny_high;
        if (propagation == "guided-filter")
            p.propagation = defocus::Propagation::GuidedFilter;
        else if (propagation == "matting-laplacian")
            p.propagation = defocus::Propagation::MattingLaplacian;
        else
            throw std::invalid_argument("unknown propagation mode: " + propagation);
        p.gf_radius = gf_radius;
        p.gf_eps = gf_eps;
        p.gf_subsample = gf_subsample;
        p.matting_lambda = matting_lambda;
        p.cg_tol = cg_tol;
        p.cg_max_iter = cg_max_iter;
        if (normalize == "sigma-max")
            p.normalize = defocus::NormalizeMode::SigmaMax;
        else if (normalize == "min-max")
            p.normalize = defocus::NormalizeMode::MinMax;
        else
            throw std::invalid_argument("unknown normalize mode: " + normalize);
        return p;
    }

    synth::CameraParams camera_params() const {
        synth::CameraParams cam;
        cam.focal_length_mm = focal_mm;
        cam.f_number = f_number;
        cam.focus_distance_mm = focus_mm;
        cam.pixel_pitch_mm = pixel_pitch_mm;
        cam.coc_to_sigma = coc_to_sigma;
        return cam;
    }

    classify::TrainOptions train_options() const {
        classify::TrainOptions t;
        t.lr = lr;
        t.epochs = epochs;
        t.l2 = l2;
        return t;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"resize_width", resize_width},
            {"resize_height", resize_height},
            {"resize_filter", resize_filter},
            {"sigma1", sigma1},
            {"sigma2", sigma2},
            {"epsilon", epsilon},
            {"sigma_max", sigma_max},
            {"canny_low", canny_low},
            {"canny_high", canny_high},
            {"propagation", propagation},
            {"gf_radius", gf_radius},
            {"gf_eps", gf_eps},
            {"gf_subsample", gf_subsample},
            {"matting_lambda", matting_lambda},
            {"cg_tol", cg_tol},
            {"cg_max_iter", cg_max_iter},
            {"normalize", normalize},
            {"mask_threshold", mask_threshold},
            {"var_window", var_window},
            {"sweep_thresholds", sweep_thresholds},
            {"align_bins", align_bins},
            {"align_epsilon", align_epsilon},
            {"pooled", pooled},
            {"png_signed", png_signed},
            {"lr", lr},
            {"epochs", epochs},
            {"l2", l2},
            {"threshold", threshold},
            {"ci_level", ci_level},
            {"n_real", n_real},
            {"n_fake", n_fake},
            {"synth_width", synth_width},
            {"synth_height", synth_height},
            {"dof_layers", dof_layers},
            {"focal_mm", focal_mm},
            {"f_number", f_number},
            {"focus_mm", focus_mm},
            {"pixel_pitch_mm", pixel_pitch_mm},
            {"coc_to_sigma", coc_to_sigma},
            {"seed", seed},
            {"jobs", jobs},
            {"warmup", warmup},
            {"reps", reps},
        };
    }

    /// Applies only the keys present in j; unknown keys are an error.
    void apply_json(const nlohmann::json& j) {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        static const std::vector<std::string> known = {
            "resize_width", "resize_height", "resize_filter",
            "sigma1", "sigma2", "epsilon", "sigma_max", "canny_low", "canny_high",
            "propagation", "gf_radius", "gf_eps", "gf_subsample", "matting_lambda",
            "cg_tol", "cg_max_iter", "normalize", "mask_threshold", "var_window",
            "sweep_thresholds", "align_bins", "align_epsilon", "pooled", "png_signed",
            "lr", "epochs", "l2", "threshold", "ci_level", "n_real", "n_fake",
            "synth_width", "synth_height", "dof_layers", "focal_mm", "f_number",
            "focus_mm", "pixel_pitch_mm", "coc_to_sigma", "seed", "jobs", "warmup",
            "reps"};
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (std::find(known.begin(), known.end(), it.key()) == known.end())
                throw std::invalid_argument("unknown config key: " + it.key());
        }
        get("resize_width", resize_width);
        get("resize_height", resize_height);
        get("resize_filter", resize_filter);
        get("sigma1", sigma1);
        get("sigma2", sigma2);
        get("epsilon", epsilon);
        get("sigma_max", sigma_max);
        get("canny_low", canny_low);
        get("canny_high", canny_high);
        get("propagation", propagation);
        get("gf_radius", gf_radius);
        get("gf_eps", gf_eps);
        get("gf_subsample", gf_subsample);
        get("matting_lambda", matting_lambda);
        get("cg_tol", cg_tol);
        get("cg_max_iter", cg_max_iter);
        get("normalize", normalize);
        get("mask_threshold", mask_threshold);
        get("var_window", var_window);
        get("sweep_thresholds", sweep_thresholds);
        get("align_bins", align_bins);
        get("align_epsilon", align_epsilon);
        get("pooled", pooled);
        get("png_signed", png_signed);
        get("lr", lr);
        get("epochs", epochs);
        get("l2", l2);
        get("threshold", threshold);
        get("ci_level", ci_level);
        get("n_real", n_real);
        get("n_fake", n_fake);
        get("synth_width", synth_width);
        get("synth_height", synth_height);
        get("dof_layers", dof_layers);
        get("focal_mm", focal_mm);
        get("f_number", f_number);
        get("focus_mm", focus_mm);
        get("pixel_pitch_mm", pixel_pitch_mm);
        get("coc_to_sigma", coc_to_sigma);
        get("seed", seed);
        get("jobs", jobs);
        get("warmup", warmup);
        get("reps", reps);
    }
};

// JSON views of the library report types.

inline nlohmann::json to_json(const defocus::StageTiming& t) {
    return {{"stage", t.stage}, {"label", t.label}, {"ms", t.ms}, {"peak_mb", t.peak_mb}};
}

inline nlohmann::json to_json(const align::WeightedHistogram& h) {
    return {{"n_bins", h.n_bins},
            {"mass", h.mass},
            {"normalized", h.normalized},
            {"total_mass", h.total_mass},
            {"degenerate", h.degenerate}};
}

inline nlohmann::json to_json(const align::AlignmentReport& r) {
    return {{"alignment", r.alignment},
            {"kl", r.kl},
            {"n_bins", r.n_bins},
            {"epsilon", r.epsilon},
            {"h_diff", to_json(r.h_diff)},
            {"h_shap", to_json(r.h_shap)}};
}

inline nlohmann::json to_json(const classify::LogisticModel& m) {
    return {{"weights", m.weights},
            {"bias", m.bias},
            {"feature_mean", m.feature_mean},
            {"feature_std", m.feature_std},
            {"dropped", m.dropped},
            {"feature_schema", m.feature_schema}};
}

inline classify::LogisticModel logistic_model_from_json(const nlohmann::json& j) {
    classify::LogisticModel m;
    j.at("weights").get_to(m.weights);
    j.at("bias").get_to(m.bias);
    j.at("feature_mean").get_to(m.feature_mean);
    j.at("feature_std").get_to(m.feature_std);
    j.at("dropped").get_to(m.dropped);
    j.at("feature_schema").get_to(m.feature_schema);
    return m;
}

inline nlohmann::json to_json(const classify::EvalReport& r) {
    return {{"accuracy", r.accuracy},
            {"recall", r.recall},
            {"auc", r.auc},
            {"auc_ci_95", {r.auc_ci_lo, r.auc_ci_hi}},
            {"threshold", r.threshold},
            {"n", r.n},
            {"n_real", r.n_real},
            {"n_fake", r.n_fake}};
}

inline nlohmann::json to_json(const analysis::KsResult& k) {
    return {{"d_statistic", k.d_statistic},
            {"p_value", k.p_value},
            {"n1", k.n1},
            {"n2", k.n2}};
}

}  // namespace blurmap

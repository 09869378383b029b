// blurmap CLI: estimate | synth | analyze | align | train | eval | bench
//
// Config precedence is CLI flag > --config file > built-in default. Flags
// parse into a shadow config; after the config file is applied, only flags
// the user actually passed are copied over it.
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blurmap/config.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace {

using blurmap::RunConfig;

class ConfigBinder {
public:
    template <class T>
    void option(CLI::App* cmd, const std::string& flag, T RunConfig::*field,
                const std::string& desc) {
        auto* opt = cmd->add_option(flag, shadow_.*field, desc);
        copies_.push_back({opt, [field](RunConfig& dst, const RunConfig& src) {
                               dst.*field = src.*field;
                           }});
    }

    void flag(CLI::App* cmd, const std::string& name, bool RunConfig::*field,
              const std::string& desc) {
        auto* opt = cmd->add_flag(name, shadow_.*field, desc);
        copies_.push_back({opt, [field](RunConfig& dst, const RunConfig& src) {
                               dst.*field = src.*field;
                           }});
    }

    /// Copies every flag the user passed onto the effective config.
    void overlay(RunConfig& effective) const {
        for (const auto& c : copies_)
            if (c.opt->count() > 0) c.copy(effective, shadow_);
    }

private:
    struct Copy {
        CLI::Option* opt;
        std::function<void(RunConfig&, const RunConfig&)> copy;
    };
    RunConfig shadow_;
    std::vector<Copy> copies_;
};

void add_common(CLI::App* cmd, ConfigBinder& bind, std::string* config_path,
                std::string* out_dir) {
    cmd->add_option("--config", *config_path, "JSON config file");
    cmd->add_option("--out-dir", *out_dir, "output directory");
    bind.option(cmd, "--seed", &RunConfig::seed, "random seed");
    bind.option(cmd, "--jobs", &RunConfig::jobs, "parallel image-level jobs");
}

void add_defocus_knobs(CLI::App* cmd, ConfigBinder& bind) {
    bind.option(cmd, "--resize-width", &RunConfig::resize_width,
                "pre-resize width (0 = keep)");
    bind.option(cmd, "--resize-height", &RunConfig::resize_height,
                "pre-resize height (0 = keep)");
    bind.option(cmd, "--resize-filter", &RunConfig::resize_filter, "nearest | bilinear");
    bind.option(cmd, "--sigma1", &RunConfig::sigma1, "finer reblur scale (px)");
    bind.option(cmd, "--sigma2", &RunConfig::sigma2, "coarser reblur scale (px)");
    bind.option(cmd, "--epsilon", &RunConfig::epsilon, "ratio stability constant");
    bind.option(cmd, "--sigma-max", &RunConfig::sigma_max, "blur clamp ceiling (px)");
    bind.option(cmd, "--canny-low", &RunConfig::canny_low, "low hysteresis fraction");
    bind.option(cmd, "--canny-high", &RunConfig::canny_high, "high hysteresis fraction");
    bind.option(cmd, "--propagation", &RunConfig::propagation,
                "guided-filter | matting-laplacian");
    bind.option(cmd, "--gf-radius", &RunConfig::gf_radius, "guided filter radius");
    bind.option(cmd, "--gf-eps", &RunConfig::gf_eps, "guided filter regularizer");
    bind.option(cmd, "--gf-subsample", &RunConfig::gf_subsample,
                "subsample factor for the fast guided filter (1 = plain)");
    bind.option(cmd, "--matting-lambda", &RunConfig::matting_lambda,
                "matting data-fidelity weight");
    bind.option(cmd, "--cg-tol", &RunConfig::cg_tol, "CG relative tolerance");
    bind.option(cmd, "--cg-max-iter", &RunConfig::cg_max_iter, "CG iteration cap");
    bind.option(cmd, "--normalize", &RunConfig::normalize, "sigma-max | min-max");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"defocus blur map estimation and forensic analysis toolkit"};
    app.require_subcommand(1);

    ConfigBinder bind;
    std::string config_path;

    bmtool::EstimateArgs estimate_args;
    auto* estimate = app.add_subcommand("estimate", "estimate defocus maps for images");
    estimate->add_option("inputs", estimate_args.inputs, "PNG files or directories");
    add_common(estimate, bind, &config_path, &estimate_args.out_dir);
    add_defocus_knobs(estimate, bind);
    bind.option(estimate, "--warmup", &RunConfig::warmup,
                "items discarded before timing aggregation");

    bmtool::SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic DoF corpus");
    add_common(synth, bind, &config_path, &synth_args.out_dir);
    bind.option(synth, "--n-real", &RunConfig::n_real, "real-style item count");
    bind.option(synth, "--n-fake", &RunConfig::n_fake, "fake-style item count");
    bind.option(synth, "--width", &RunConfig::synth_width, "image width");
    bind.option(synth, "--height", &RunConfig::synth_height, "image height");
    bind.option(synth, "--layers", &RunConfig::dof_layers, "DoF quantization layers");
    bind.option(synth, "--focal", &RunConfig::focal_mm, "focal length (mm)");
    bind.option(synth, "--f-number", &RunConfig::f_number, "aperture f-number");
    bind.option(synth, "--focus", &RunConfig::focus_mm, "focus distance (mm)");
    bind.option(synth, "--pixel-pitch", &RunConfig::pixel_pitch_mm, "pixel pitch (mm)");
    bind.option(synth, "--coc-to-sigma", &RunConfig::coc_to_sigma,
                "Gaussian sigma per CoC diameter");

    bmtool::AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "masks, variance maps, KS test, features");
    analyze->add_option("--manifest", analyze_args.manifest, "corpus manifest (JSONL)");
    analyze->add_option("--pair-a", analyze_args.pair_a, "first map of a pair");
    analyze->add_option("--pair-b", analyze_args.pair_b, "second map of a pair");
    analyze->add_option("--pairs-file", analyze_args.pairs_file,
                        "file with one 'a b' map pair per line");
    add_common(analyze, bind, &config_path, &analyze_args.out_dir);
    add_defocus_knobs(analyze, bind);
    bind.option(analyze, "--mask-threshold", &RunConfig::mask_threshold,
                "discrepancy mask threshold");
    bind.option(analyze, "--var-window", &RunConfig::var_window, "local variance window");
    bind.option(analyze, "--sweep", &RunConfig::sweep_thresholds, "sweep thresholds");

    bmtool::AlignArgs align_args;
    auto* align = app.add_subcommand("align", "defocus-saliency alignment report");
    align->add_option("--real", align_args.real, "real defocus map (.fmap/.png)");
    align->add_option("--fake", align_args.fake, "fake defocus map (.fmap/.png)");
    align->add_option("--saliency", align_args.saliency, "saliency map (.fmap/.png)");
    align->add_option("--triples", align_args.triples,
                      "JSONL file of {real,fake,saliency} rows");
    add_common(align, bind, &config_path, &align_args.out_dir);
    bind.option(align, "--bins", &RunConfig::align_bins, "histogram bins");
    bind.option(align, "--align-epsilon", &RunConfig::align_epsilon, "KL stability constant");
    bind.flag(align, "--pooled", &RunConfig::pooled, "pool masses over all pairs");
    bind.flag(align, "--png-signed", &RunConfig::png_signed,
              "treat PNG saliency as signed (value - 0.5)");

    bmtool::TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train the logistic baseline on features");
    train->add_option("--features", train_args.features, "features CSV")->required();
    add_common(train, bind, &config_path, &train_args.out_dir);
    bind.option(train, "--lr", &RunConfig::lr, "learning rate");
    bind.option(train, "--epochs", &RunConfig::epochs, "training epochs");
    bind.option(train, "--l2", &RunConfig::l2, "L2 regularization");
    bind.option(train, "--threshold", &RunConfig::threshold, "decision threshold");
    bind.option(train, "--ci-level", &RunConfig::ci_level, "CI confidence level");

    bmtool::EvalArgs eval_args;
    auto* evalc = app.add_subcommand("eval", "evaluate a saved model on features");
    evalc->add_option("--model", eval_args.model, "model JSON")->required();
    evalc->add_option("--features", eval_args.features, "features CSV")->required();
    evalc->add_option("--split", eval_args.split, "all | train | val | test");
    add_common(evalc, bind, &config_path, &eval_args.out_dir);
    bind.option(evalc, "--threshold", &RunConfig::threshold, "decision threshold");
    bind.option(evalc, "--ci-level", &RunConfig::ci_level, "CI confidence level");

    bmtool::BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "per-stage timing table");
    bench->add_option("inputs", bench_args.inputs, "PNG files or directories");
    add_common(bench, bind, &config_path, &bench_args.out_dir);
    add_defocus_knobs(bench, bind);
    bind.option(bench, "--warmup", &RunConfig::warmup, "warm-up items to discard");
    bind.option(bench, "--reps", &RunConfig::reps, "measured items after warm-up");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : bmtool::kExitUsage;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "cannot open config: " << config_path << "\n";
                return bmtool::kExitUsage;
            }
            cfg.apply_json(nlohmann::json::parse(in));
        }
        bind.overlay(cfg);

        if (app.got_subcommand(estimate)) return bmtool::cmd_estimate(cfg, estimate_args);
        if (app.got_subcommand(synth)) return bmtool::cmd_synth(cfg, synth_args);
        if (app.got_subcommand(analyze)) return bmtool::cmd_analyze(cfg, analyze_args);
        if (app.got_subcommand(align)) return bmtool::cmd_align(cfg, align_args);
        if (app.got_subcommand(train)) return bmtool::cmd_train(cfg, train_args);
        if (app.got_subcommand(evalc)) return bmtool::cmd_eval(cfg, eval_args);
        if (app.got_subcommand(bench)) return bmtool::cmd_bench(cfg, bench_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bmtool::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bmtool::kExitPartial;
    }
    return bmtool::kExitUsage;
}

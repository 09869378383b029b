#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "blurmap/analysis.hpp"
#include "blurmap/defocus.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace bmtool {

namespace {

struct ManifestItem {
    std::string id, label, image, gt_blur;
};

std::vector<ManifestItem> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    std::vector<ManifestItem> items;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ManifestItem item;
        j.at("id").get_to(item.id);
        j.at("label").get_to(item.label);
        j.at("image").get_to(item.image);
        j.at("gt_blur").get_to(item.gt_blur);
        items.push_back(std::move(item));
    }
    return items;
}

blurmap::GrayImage scale_preview(const blurmap::GrayImage& plane) {
    float hi = 0.0f;
    for (float v : plane.data) hi = std::max(hi, v);
    blurmap::GrayImage out(plane.width, plane.height);
    if (hi > 0.0f)
        for (size_t i = 0; i < out.pixels(); ++i) out.data[i] = plane.data[i] / hi;
    return out;
}

int analyze_corpus(const blurmap::RunConfig& cfg, const AnalyzeArgs& args) {
    auto items = read_manifest(args.manifest);
    if (items.empty()) {
        std::cerr << "no inputs\n";
        return kExitUsage;
    }
    const std::string base = std::filesystem::path(args.manifest).parent_path().string();
    std::filesystem::create_directories(args.out_dir);
    const auto params = cfg.defocus_params();

    struct Result {
        bool ok = false;
        std::string error;
        blurmap::analysis::FeatureVector features;
    };
    std::vector<Result> results(items.size());

    parallel_for(items.size(), cfg.jobs, [&](size_t i) {
        try {
            const std::string img_path =
                base.empty() ? items[i].image : base + "/" + items[i].image;
            blurmap::RgbImage img = load_input(img_path, cfg);
            auto est = blurmap::defocus::estimate_defocus(img, params);
            blurmap::GrayImage var =
                blurmap::analysis::local_variance(est.map.normalized, cfg.var_window);
            write_fmap_atomic(args.out_dir + "/" + items[i].id + "_var.fmap", var);
            write_png_gray_atomic(args.out_dir + "/" + items[i].id + "_var_preview.png",
                                  scale_preview(var));
            results[i].features = blurmap::analysis::extract_features(est.map.normalized, var);
            results[i].ok = true;
        } catch (const std::exception& e) {
            results[i].error = e.what();
        }
    });

    std::vector<FeatureRow> rows;
    std::vector<double> real_var_means, fake_var_means;
    json errors = json::array();
    for (size_t i = 0; i < items.size(); ++i) {
        if (!results[i].ok) {
            errors.push_back({{"file", items[i].image}, {"error", results[i].error}});
            continue;
        }
        FeatureRow row;
        row.id = items[i].id;
        row.label = items[i].label;
        row.features = results[i].features.to_array();
        rows.push_back(std::move(row));
        (items[i].label == "real" ? real_var_means : fake_var_means)
            .push_back(results[i].features.var_mean);
    }
    if (rows.empty()) {
        std::cerr << "all items failed\n";
        return kExitPartial;
    }
    write_features_csv(args.out_dir + "/features.csv", rows);

    if (!real_var_means.empty() && !fake_var_means.empty()) {
        auto ks = blurmap::analysis::ks_two_sample(real_var_means, fake_var_means);
        json report = envelope(cfg);
        report.update(blurmap::to_json(ks));
        report["groups"] = {"real", "fake"};
        report["statistic_of"] = "mean local variance per image";
        write_json_atomic(args.out_dir + "/ks.json", report);
    }

    std::cout << "analyzed " << rows.size() << "/" << items.size() << " items -> "
              << args.out_dir << "\n";
    return errors.empty() ? kExitOk : kExitPartial;
}

int analyze_pairs(const blurmap::RunConfig& cfg, const AnalyzeArgs& args) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::string> offenders;
    if (!args.pair_a.empty() || !args.pair_b.empty()) {
        if (args.pair_a.empty() || args.pair_b.empty()) {
            std::cerr << "unpaired input: " << (args.pair_a.empty() ? "--pair-b" : "--pair-a")
                      << " given without its partner\n";
            return kExitUsage;
        }
        pairs.emplace_back(args.pair_a, args.pair_b);
    }
    if (!args.pairs_file.empty()) {
        std::ifstream in(args.pairs_file);
        if (!in) {
            std::cerr << "cannot open pairs file: " << args.pairs_file << "\n";
            return kExitUsage;
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string a, b, extra;
            ss >> a >> b;
            if (b.empty() || (ss >> extra && !extra.empty())) {
                offenders.push_back(line);
                continue;
            }
            pairs.emplace_back(a, b);
        }
    }
    if (!offenders.empty()) {
        std::cerr << "unpaired inputs:\n";
        for (const auto& o : offenders) std::cerr << "  " << o << "\n";
        return kExitUsage;
    }
    if (pairs.empty()) {
        std::cerr << "no inputs\n";
        return kExitUsage;
    }
    std::filesystem::create_directories(args.out_dir);

    json pair_reports = json::array();
    std::vector<double> mean_counts(cfg.sweep_thresholds.size(), 0.0);
    char buf[32];
    for (size_t i = 0; i < pairs.size(); ++i) {
        blurmap::GrayImage a = clamp01(read_map_auto(pairs[i].first));
        blurmap::GrayImage b = clamp01(read_map_auto(pairs[i].second));
        auto mask = blurmap::analysis::discrepancy_mask(a, b, cfg.mask_threshold);
        std::snprintf(buf, sizeof buf, "mask_%04zu.png", i);
        blurmap::GrayImage mask_img(mask.width, mask.height);
        for (size_t k = 0; k < mask_img.pixels(); ++k)
            mask_img.data[k] = mask.on[k] ? 1.0f : 0.0f;
        write_png_gray_atomic(args.out_dir + "/" + buf, mask_img);

        auto sweep = blurmap::analysis::threshold_sweep(a, b, cfg.sweep_thresholds);
        json counts = json::array();
        for (size_t t = 0; t < sweep.size(); ++t) {
            counts.push_back({{"threshold", sweep[t].first}, {"count", sweep[t].second}});
            mean_counts[t] += static_cast<double>(sweep[t].second);
        }
        pair_reports.push_back({{"a", pairs[i].first},
                                {"b", pairs[i].second},
                                {"mask", buf},
                                {"activated", mask.count()},
                                {"counts", counts}});
    }
    json sweep_mean = json::array();
    for (size_t t = 0; t < cfg.sweep_thresholds.size(); ++t)
        sweep_mean.push_back({{"threshold", cfg.sweep_thresholds[t]},
                              {"mean_activated", mean_counts[t] / static_cast<double>(pairs.size())}});

    json report = envelope(cfg);
    report["pairs"] = pair_reports;
    report["sweep"] = sweep_mean;
    write_json_atomic(args.out_dir + "/sweep.json", report);

    std::cout << "analyzed " << pairs.size() << " pair(s) -> " << args.out_dir << "\n";
    return kExitOk;
}

}  // namespace

int cmd_analyze(const blurmap::RunConfig& cfg, const AnalyzeArgs& args) {
    if (!args.manifest.empty()) return analyze_corpus(cfg, args);
    return analyze_pairs(cfg, args);
}

}  // namespace bmtool

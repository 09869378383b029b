#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "blurmap/defocus.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace bmtool {

namespace {

/// Mean per-stage timings over items, discarding the first `warmup`
/// successful items when enough are available.
json aggregate_timings(const std::vector<std::vector<blurmap::defocus::StageTiming>>& all,
                       int warmup, int* discarded) {
    size_t skip = 0;
    if (warmup > 0 && all.size() > static_cast<size_t>(warmup))
        skip = static_cast<size_t>(warmup);
    *discarded = static_cast<int>(skip);

    // stage id -> (label, ms sum, mb max-mean?, count); keep insertion order
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::string, std::pair<double, double>>> agg;
    size_t used = 0;
    for (size_t i = skip; i < all.size(); ++i) {
        ++used;
        for (const auto& t : all[i]) {
            auto it = agg.find(t.stage);
            if (it == agg.end()) {
                order.push_back(t.stage);
                agg[t.stage] = {t.label, {t.ms, t.peak_mb}};
            } else {
                it->second.second.first += t.ms;
                it->second.second.second += t.peak_mb;
            }
        }
    }
    json stages = json::array();
    for (const auto& id : order) {
        const auto& [label, sums] = agg[id];
        stages.push_back({{"stage", id},
                          {"label", label},
                          {"ms", sums.first / static_cast<double>(used)},
                          {"peak_mb", sums.second / static_cast<double>(used)}});
    }
    return stages;
}

}  // namespace

int cmd_estimate(const blurmap::RunConfig& cfg, const EstimateArgs& args) {
    auto files = gather_images(args.inputs);
    if (files.empty()) {
        std::cerr << "no inputs\n";
        return kExitUsage;
    }
    std::filesystem::create_directories(args.out_dir);
    auto stems = unique_stems(files);
    const auto params = cfg.defocus_params();

    struct Item {
        bool ok = false;
        std::string error;
        std::vector<blurmap::defocus::StageTiming> timings;
        blurmap::defocus::EstimateDiagnostics diag;
    };
    std::vector<Item> items(files.size());

    parallel_for(files.size(), cfg.jobs, [&](size_t i) {
        try {
            blurmap::RgbImage img = load_input(files[i], cfg);
            auto res = blurmap::defocus::estimate_defocus(img, params);
            write_fmap_atomic(args.out_dir + "/" + stems[i] + ".fmap", res.map.normalized);
            write_png_gray_atomic(args.out_dir + "/" + stems[i] + "_preview.png",
                                  res.map.normalized);
            items[i].ok = true;
            items[i].timings = std::move(res.timings);
            items[i].diag = res.diagnostics;
        } catch (const std::exception& e) {
            items[i].error = e.what();
        }
    });

    std::vector<std::vector<blurmap::defocus::StageTiming>> ok_timings;
    json errors = json::array();
    long degenerate_pixels = 0;
    size_t empty_masks = 0;
    for (size_t i = 0; i < items.size(); ++i) {
        if (items[i].ok) {
            ok_timings.push_back(items[i].timings);
            degenerate_pixels += items[i].diag.degenerate_ratio_pixels;
            empty_masks += items[i].diag.empty_edge_mask;
        } else {
            errors.push_back({{"file", files[i]}, {"error", items[i].error}});
        }
    }

    json report = envelope(cfg);
    report["items"] = files.size();
    report["failed"] = errors.size();
    report["errors"] = errors;
    report["degenerate_ratio_pixels"] = degenerate_pixels;
    report["items_with_empty_edge_mask"] = empty_masks;
    if (!ok_timings.empty()) {
        int discarded = 0;
        report["stages"] = aggregate_timings(ok_timings, cfg.warmup, &discarded);
        report["warmup_discarded"] = discarded;
    } else {
        report["stages"] = json::array();
        report["warmup_discarded"] = 0;
    }
    write_json_atomic(args.out_dir + "/timings.json", report);

    std::cout << "estimated " << ok_timings.size() << "/" << files.size()
              << " images -> " << args.out_dir << "\n";
    return errors.empty() ? kExitOk : kExitPartial;
}

}  // namespace bmtool

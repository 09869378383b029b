#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "blurmap/defocus.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace bmtool {

int cmd_bench(const blurmap::RunConfig& cfg, const BenchArgs& args) {
    auto files = gather_images(args.inputs);
    if (files.size() < static_cast<size_t>(cfg.warmup) + 1) {
        std::cerr << "bench needs at least warmup+1 (" << cfg.warmup + 1 << ") inputs, got "
                  << files.size() << "\n";
        return kExitUsage;
    }
    const auto params = cfg.defocus_params();
    const size_t n_measure =
        std::min(files.size() - static_cast<size_t>(cfg.warmup), static_cast<size_t>(cfg.reps));
    const size_t n_items = static_cast<size_t>(cfg.warmup) + n_measure;

    // timing runs are always single-threaded, whatever --jobs says
    using clock = std::chrono::steady_clock;
    std::vector<std::string> stage_ids, stage_labels;
    std::vector<double> ms_sum, mb_sum;
    double total_ms_sum = 0.0;

    for (size_t i = 0; i < n_items; ++i) {
        blurmap::RgbImage img = load_input(files[i], cfg);
        const auto t0 = clock::now();
        auto res = blurmap::defocus::estimate_defocus(img, params);
        const auto t1 = clock::now();
        if (i < static_cast<size_t>(cfg.warmup)) continue;
        if (stage_ids.empty()) {
            for (const auto& t : res.timings) {
                stage_ids.push_back(t.stage);
                stage_labels.push_back(t.label);
            }
            ms_sum.assign(stage_ids.size(), 0.0);
            mb_sum.assign(stage_ids.size(), 0.0);
        }
        for (size_t s = 0; s < res.timings.size(); ++s) {
            ms_sum[s] += res.timings[s].ms;
            mb_sum[s] += res.timings[s].peak_mb;
        }
        total_ms_sum += std::chrono::duration<double, std::milli>(t1 - t0).count();
    }

    const double inv = 1.0 / static_cast<double>(n_measure);
    json stages = json::array();
    for (size_t s = 0; s < stage_ids.size(); ++s)
        stages.push_back({{"stage", stage_ids[s]},
                          {"label", stage_labels[s]},
                          {"ms", ms_sum[s] * inv},
                          {"peak_mb", mb_sum[s] * inv}});

    std::filesystem::create_directories(args.out_dir);
    json report = envelope(cfg);
    report["stages"] = stages;
    report["total_ms"] = total_ms_sum * inv;
    report["items_measured"] = n_measure;
    report["warmup"] = cfg.warmup;
    report["reps"] = cfg.reps;
    write_json_atomic(args.out_dir + "/bench.json", report);

    std::printf("%-22s %16s %16s\n", "Stage", "Avg. Time (ms)", "Peak Mem. (MB)");
    for (size_t s = 0; s < stage_ids.size(); ++s)
        std::printf("%-22s %16.3f %16.1f\n", stage_labels[s].c_str(), ms_sum[s] * inv,
                    mb_sum[s] * inv);
    std::printf("%-22s %16.3f %16s\n", "Total", total_ms_sum * inv, "--");
    return kExitOk;
}

}  // namespace bmtool

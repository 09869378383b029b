#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "blurmap/alignment.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace bmtool {

namespace {

struct Triple {
    std::string real, fake, saliency;
};

json report_json(const blurmap::RunConfig& cfg, const blurmap::align::AlignmentReport& rep,
                 bool pooled, int n_pairs) {
    json j = envelope(cfg);
    j.update(blurmap::to_json(rep));
    j["pooled"] = pooled;
    j["n_pairs"] = n_pairs;
    return j;
}

}  // namespace

int cmd_align(const blurmap::RunConfig& cfg, const AlignArgs& args) {
    std::vector<Triple> triples;
    if (!args.triples.empty()) {
        std::ifstream in(args.triples);
        if (!in) {
            std::cerr << "cannot open triples file: " << args.triples << "\n";
            return kExitUsage;
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            Triple t;
            j.at("real").get_to(t.real);
            j.at("fake").get_to(t.fake);
            j.at("saliency").get_to(t.saliency);
            triples.push_back(std::move(t));
        }
    } else {
        if (args.real.empty() || args.fake.empty() || args.saliency.empty()) {
            std::cerr << "align needs --real, --fake and --saliency (or --triples)\n";
            return kExitUsage;
        }
        triples.push_back({args.real, args.fake, args.saliency});
    }
    if (triples.empty()) {
        std::cerr << "no inputs\n";
        return kExitUsage;
    }
    std::filesystem::create_directories(args.out_dir);

    auto load = [&](const Triple& t) {
        blurmap::GrayImage real = clamp01(read_map_auto(t.real));
        blurmap::GrayImage fake = clamp01(read_map_auto(t.fake));
        blurmap::GrayImage sal = read_map_auto(t.saliency, cfg.png_signed);
        return std::make_tuple(std::move(real), std::move(fake), std::move(sal));
    };

    if (cfg.pooled || triples.size() == 1) {
        blurmap::align::AlignmentAccumulator acc(cfg.align_bins, cfg.align_epsilon);
        for (const auto& t : triples) {
            auto [real, fake, sal] = load(t);
            acc.add(real, fake, sal);
        }
        json j = report_json(cfg, acc.report(), cfg.pooled, acc.pairs());
        write_json_atomic(args.out_dir + "/align.json", j);
        std::cout << "alignment over " << acc.pairs() << " pair(s) -> " << args.out_dir
                  << "/align.json\n";
    } else {
        char buf[32];
        for (size_t i = 0; i < triples.size(); ++i) {
            auto [real, fake, sal] = load(triples[i]);
            auto rep = blurmap::align::analyze_alignment(real, fake, sal, cfg.align_bins,
                                                         cfg.align_epsilon);
            std::snprintf(buf, sizeof buf, "align_%04zu.json", i);
            write_json_atomic(args.out_dir + "/" + buf, report_json(cfg, rep, false, 1));
        }
        std::cout << "alignment for " << triples.size() << " pairs -> " << args.out_dir
                  << "\n";
    }
    return kExitOk;
}

}  // namespace bmtool

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blurmap/classify.hpp"
#include "blurmap/config.hpp"

namespace bmtool {

struct EstimateArgs {
    std::vector<std::string> inputs;
    std::string out_dir = ".";
};

struct SynthArgs {
    std::string out_dir = ".";
};

struct AnalyzeArgs {
    std::string manifest;     // corpus mode
    std::string pair_a;       // single-pair mode
    std::string pair_b;
    std::string pairs_file;   // batch pair mode, "a b" per line
    std::string out_dir = ".";
};

struct AlignArgs {
    std::string real;
    std::string fake;
    std::string saliency;
    std::string triples;  // JSONL {"real","fake","saliency"} per line
    std::string out_dir = ".";
};

struct TrainArgs {
    std::string features;
    std::string out_dir = ".";
};

struct EvalArgs {
    std::string model;
    std::string features;
    std::string split = "all";  // all | train | val | test
    std::string out_dir = ".";
};

struct BenchArgs {
    std::vector<std::string> inputs;
    std::string out_dir = ".";
};

int cmd_estimate(const blurmap::RunConfig& cfg, const EstimateArgs& args);
int cmd_synth(const blurmap::RunConfig& cfg, const SynthArgs& args);
int cmd_analyze(const blurmap::RunConfig& cfg, const AnalyzeArgs& args);
int cmd_align(const blurmap::RunConfig& cfg, const AlignArgs& args);
int cmd_train(const blurmap::RunConfig& cfg, const TrainArgs& args);
int cmd_eval(const blurmap::RunConfig& cfg, const EvalArgs& args);
int cmd_bench(const blurmap::RunConfig& cfg, const BenchArgs& args);

// features CSV: header "id,label,<24 feature names>", one row per image
struct FeatureRow {
    std::string id;
    std::string label;  // "real" | "fake"
    std::array<double, 24> features{};
};

void write_features_csv(const std::string& path, const std::vector<FeatureRow>& rows);
std::vector<blurmap::classify::DataRow> read_features_csv(const std::string& path);

// deterministic 70/15/15 split by seeded index shuffle
struct Split {
    std::vector<size_t> train, val, test;
};
Split split_70_15_15(size_t n, std::uint64_t seed);

}  // namespace bmtool

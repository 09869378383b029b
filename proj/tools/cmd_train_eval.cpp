#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "blurmap/analysis.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace bmtool {

void write_features_csv(const std::string& path, const std::vector<FeatureRow>& rows) {
    std::ostringstream out;
    out << "id,label";
    for (const auto& name : blurmap::analysis::FeatureVector::names()) out << "," << name;
    out << "\n";
    char buf[64];
    for (const auto& row : rows) {
        out << row.id << "," << row.label;
        for (double v : row.features) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << "," << buf;
        }
        out << "\n";
    }
    write_text_atomic(path, out.str());
}

std::vector<blurmap::classify::DataRow> read_features_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open features CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty features CSV: " + path);
    std::vector<blurmap::classify::DataRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        blurmap::classify::DataRow row;
        if (!std::getline(ss, row.id, ',')) continue;
        std::string label;
        if (!std::getline(ss, label, ','))
            throw std::runtime_error("malformed CSV row: " + line);
        if (label == "real")
            row.label = 0;
        else if (label == "fake")
            row.label = 1;
        else
            throw std::runtime_error("unknown label '" + label + "' in CSV row: " + line);
        while (std::getline(ss, field, ',')) row.x.push_back(std::stod(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

Split split_70_15_15(size_t n, std::uint64_t seed) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    Split split;
    const size_t n_train = n * 70 / 100;
    const size_t n_val = n * 15 / 100;
    split.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
    split.val.assign(idx.begin() + static_cast<long>(n_train),
                     idx.begin() + static_cast<long>(n_train + n_val));
    split.test.assign(idx.begin() + static_cast<long>(n_train + n_val), idx.end());
    return split;
}

namespace {

blurmap::classify::Dataset take(const blurmap::classify::Dataset& all,
                                const std::vector<size_t>& idx) {
    blurmap::classify::Dataset out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(all[i]);
    return out;
}

bool has_both_classes(const blurmap::classify::Dataset& d) {
    bool r = false, f = false;
    for (const auto& row : d) (row.label ? f : r) = true;
    return r && f;
}

}  // namespace

int cmd_train(const blurmap::RunConfig& cfg, const TrainArgs& args) {
    auto rows = read_features_csv(args.features);
    if (rows.empty()) {
        std::cerr << "no inputs\n";
        return kExitUsage;
    }
    std::filesystem::create_directories(args.out_dir);

    Split split = split_70_15_15(rows.size(), cfg.seed);
    auto train = take(rows, split.train);
    auto val = take(rows, split.val);
    auto test = take(rows, split.test);
    if (!has_both_classes(train) || !has_both_classes(val) || !has_both_classes(test)) {
        std::cerr << "a split is missing a class; generate a larger corpus\n";
        return kExitUsage;
    }

    auto model = blurmap::classify::train_logistic(train, cfg.train_options());
    auto report = blurmap::classify::evaluate(model, test, cfg.threshold, cfg.ci_level);

    json mj = envelope(cfg);
    mj.update(blurmap::to_json(model));
    mj["feature_names"] = blurmap::analysis::FeatureVector::names();
    mj["n_train"] = train.size();
    write_json_atomic(args.out_dir + "/model.json", mj);

    json ej = envelope(cfg);
    ej.update(blurmap::to_json(report));
    ej["split"] = "test";
    ej["split_sizes"] = {{"train", train.size()}, {"val", val.size()}, {"test", test.size()}};
    write_json_atomic(args.out_dir + "/eval.json", ej);

    std::cout << "trained on " << train.size() << ", test AUC " << report.auc << " ["
              << report.auc_ci_lo << ", " << report.auc_ci_hi << "] -> " << args.out_dir
              << "\n";
    return kExitOk;
}

int cmd_eval(const blurmap::RunConfig& cfg, const EvalArgs& args) {
    std::ifstream in(args.model);
    if (!in) {
        std::cerr << "cannot open model: " << args.model << "\n";
        return kExitUsage;
    }
    json mj = json::parse(in);
    auto model = blurmap::logistic_model_from_json(mj);

    auto rows = read_features_csv(args.features);
    if (rows.empty()) {
        std::cerr << "no inputs\n";
        return kExitUsage;
    }
    blurmap::classify::Dataset subset;
    if (args.split == "all") {
        subset = rows;
    } else {
        Split split = split_70_15_15(rows.size(), cfg.seed);
        if (args.split == "train")
            subset = take(rows, split.train);
        else if (args.split == "val")
            subset = take(rows, split.val);
        else if (args.split == "test")
            subset = take(rows, split.test);
        else {
            std::cerr << "unknown split: " << args.split << "\n";
            return kExitUsage;
        }
    }
    if (!has_both_classes(subset)) {
        std::cerr << "selected split is missing a class\n";
        return kExitUsage;
    }

    auto report = blurmap::classify::evaluate(model, subset, cfg.threshold, cfg.ci_level);
    std::filesystem::create_directories(args.out_dir);
    json ej = envelope(cfg);
    ej.update(blurmap::to_json(report));
    ej["split"] = args.split;
    write_json_atomic(args.out_dir + "/eval.json", ej);

    std::cout << "eval AUC " << report.auc << " [" << report.auc_ci_lo << ", "
              << report.auc_ci_hi << "] over " << subset.size() << " rows -> "
              << args.out_dir << "/eval.json\n";
    return kExitOk;
}

}  // namespace bmtool

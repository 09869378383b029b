// Logistic classifier over analysis features, plus ROC/AUC (Mann-Whitney
// with tie weight 0.5) and DeLong 95% confidence intervals. Training is
// full-batch gradient descent, deterministic from zero initialization.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blurmap::classify {

struct DataRow {
    std::string id;
    int label = 0;  // real = 0, fake = 1 (fake is the positive class)
    std::vector<double> x;
};

using Dataset = std::vector<DataRow>;

inline void check_dataset(const Dataset& data, bool both_classes = true) {
    if (data.empty()) throw std::invalid_argument("dataset is empty");
    const size_t dim = data.front().x.size();
    bool has0 = false, has1 = false;
    for (const auto& row : data) {
        if (row.x.size() != dim)
            throw std::invalid_argument("dataset rows have differing feature dimensions");
        if (row.label == 0) has0 = true;
        else has1 = true;
    }
    if (both_classes && (!has0 || !has1))
        throw std::invalid_argument("dataset must contain both classes");
}

struct LogisticModel {
    std::vector<double> weights;  // in standardized feature space
    double bias = 0.0;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;   // 1.0 for dropped features
    std::vector<int> dropped;          // zero-variance feature indices
    int feature_schema = 1;
};

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow
inline double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace detail

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

/// L2-regularized logistic loss and gradient over a standardized design
/// matrix (rows x features). The bias is not regularized.
inline LossGrad logistic_loss_grad(const std::vector<std::vector<double>>& X,
                                   const std::vector<int>& y,
                                   const std::vector<double>& w, double b, double l2) {
    const size_t n = X.size(), dim = w.size();
    LossGrad out;
    out.grad_w.assign(dim, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double z = b;
        for (size_t k = 0; k < dim; ++k) z += w[k] * X[i][k];
        out.loss += detail::softplus(z) - static_cast<double>(y[i]) * z;
        const double g = detail::sigmoid(z) - static_cast<double>(y[i]);
        for (size_t k = 0; k < dim; ++k) out.grad_w[k] += g * X[i][k];
        out.grad_b += g;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    out.loss *= inv_n;
    out.grad_b *= inv_n;
    double reg = 0.0;
    for (size_t k = 0; k < dim; ++k) {
        out.grad_w[k] = out.grad_w[k] * inv_n + l2 * w[k];
        reg += w[k] * w[k];
    }
    out.loss += 0.5 * l2 * reg;
    return out;
}

struct TrainOptions {
    double lr = 0.5;
    int epochs = 2000;
    double l2 = 1e-4;
};

/// Standardizes features from the training split, then runs full-batch
/// gradient descent from zero init. The learning rate is halved whenever a
/// step would increase the loss, so the loss is non-increasing.
inline LogisticModel train_logistic(const Dataset& train, const TrainOptions& opts = {}) {
    check_dataset(train);
    if (!(opts.lr > 0.0)) throw std::invalid_argument("train_logistic: lr must be positive");
    const size_t n = train.size(), dim = train.front().x.size();

    LogisticModel model;
    model.feature_mean.assign(dim, 0.0);
    model.feature_std.assign(dim, 1.0);
    for (const auto& row : train)
        for (size_t k = 0; k < dim; ++k) model.feature_mean[k] += row.x[k];
    for (double& m : model.feature_mean) m /= static_cast<double>(n);
    std::vector<double> var(dim, 0.0);
    for (const auto& row : train)
        for (size_t k = 0; k < dim; ++k) {
            const double d = row.x[k] - model.feature_mean[k];
            var[k] += d * d;
        }
    for (size_t k = 0; k < dim; ++k) {
        const double sd = std::sqrt(var[k] / static_cast<double>(n));
        if (sd > 1e-12) {
            model.feature_std[k] = sd;
        } else {
            model.feature_std[k] = 1.0;
            model.dropped.push_back(static_cast<int>(k));
        }
    }

    std::vector<std::vector<double>> X(n, std::vector<double>(dim));
    std::vector<int> y(n);
    for (size_t i = 0; i < n; ++i) {
        y[i] = train[i].label;
        for (size_t k = 0; k < dim; ++k)
            X[i][k] = (train[i].x[k] - model.feature_mean[k]) / model.feature_std[k];
        for (int k : model.dropped) X[i][static_cast<size_t>(k)] = 0.0;
    }

    model.weights.assign(dim, 0.0);
    model.bias = 0.0;
    double lr = opts.lr;
    LossGrad cur = logistic_loss_grad(X, y, model.weights, model.bias, opts.l2);
    std::vector<double> w_try(dim);
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        while (true) {
            for (size_t k = 0; k < dim; ++k) w_try[k] = model.weights[k] - lr * cur.grad_w[k];
            const double b_try = model.bias - lr * cur.grad_b;
            LossGrad next = logistic_loss_grad(X, y, w_try, b_try, opts.l2);
            if (next.loss <= cur.loss + 1e-9) {
                model.weights = w_try;
                model.bias = b_try;
                cur = std::move(next);
                break;
            }
            lr *= 0.5;
            if (lr < 1e-14) return model;  // converged to step-size floor
        }
    }
    for (int k : model.dropped) model.weights[static_cast<size_t>(k)] = 0.0;
    return model;
}

/// Sigmoid of the standardized dot product; result in (0,1).
inline double predict(const LogisticModel& model, std::span<const double> features) {
    if (features.size() != model.weights.size())
        throw std::invalid_argument("predict: feature dimension differs from model");
    double z = model.bias;
    for (size_t k = 0; k < features.size(); ++k)
        z += model.weights[k] * (features[k] - model.feature_mean[k]) / model.feature_std[k];
    return detail::sigmoid(z);
}

namespace detail {

/// 1-based midranks of a sample (ties share the average rank).
inline std::vector<double> midranks(std::span<const double> v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

struct Placements {
    std::vector<double> v10;  // one per positive
    std::vector<double> v01;  // one per negative
    double auc = 0.0;
};

/// DeLong structural components via midranks (Sun & Xu formulation).
inline Placements delong_placements(std::span<const double> scores,
                                    std::span<const int> labels) {
    std::vector<double> pos, neg;
    for (size_t i = 0; i < scores.size(); ++i)
        (labels[i] == 1 ? pos : neg).push_back(scores[i]);
    if (pos.empty() || neg.empty())
        throw std::invalid_argument("roc: both classes must be present");
    const double m = static_cast<double>(pos.size()), n = static_cast<double>(neg.size());

    std::vector<double> pooled = pos;
    pooled.insert(pooled.end(), neg.begin(), neg.end());
    std::vector<double> r = midranks(pooled);
    std::vector<double> r1 = midranks(pos);
    std::vector<double> r0 = midranks(neg);

    Placements p;
    p.v10.resize(pos.size());
    p.v01.resize(neg.size());
    // (r - r1) is an exact multiple of 0.5; summing before the single
    // division makes the AUC bit-identical to brute-force pair counting
    double total = 0.0;
    for (size_t i = 0; i < pos.size(); ++i) {
        const double t = r[i] - r1[i];
        p.v10[i] = t / n;
        total += t;
    }
    for (size_t j = 0; j < neg.size(); ++j)
        p.v01[j] = 1.0 - (r[pos.size() + j] - r0[j]) / m;
    p.auc = total / (m * n);
    return p;
}

/// Inverse standard normal CDF: Acklam's rational approximation refined by
/// one Halley step against erfc.
inline double probit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("probit: p must be in (0,1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= phigh) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

}  // namespace detail

/// Mann-Whitney AUC: P(score_fake > score_real) with ties counted 0.5.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    return detail::delong_placements(scores, labels).auc;
}

struct DelongCi {
    double auc = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    double variance = 0.0;
};

/// Normal-approximation CI around the AUC with DeLong's variance, clamped
/// to [0,1]. Needs at least two samples per class.
inline DelongCi delong_ci(std::span<const double> scores, std::span<const int> labels,
                          double level = 0.95) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("delong_ci: level must be in (0,1)");
    auto p = detail::delong_placements(scores, labels);
    if (p.v10.size() < 2 || p.v01.size() < 2)
        throw std::invalid_argument("delong_ci: need at least 2 samples per class");

    auto sample_var = [](const std::vector<double>& v, double mean) {
        double s = 0.0;
        for (double x : v) s += (x - mean) * (x - mean);
        return s / (static_cast<double>(v.size()) - 1.0);
    };
    DelongCi ci;
    ci.auc = p.auc;
    ci.variance = sample_var(p.v10, p.auc) / static_cast<double>(p.v10.size()) +
                  sample_var(p.v01, p.auc) / static_cast<double>(p.v01.size());
    const double z = detail::probit(1.0 - (1.0 - level) / 2.0);
    const double half = z * std::sqrt(std::max(ci.variance, 0.0));
    ci.lo = std::clamp(ci.auc - half, 0.0, 1.0);
    ci.hi = std::clamp(ci.auc + half, 0.0, 1.0);
    return ci;
}

struct EvalReport {
    double accuracy = 0.0;
    double recall = 0.0;
    double auc = 0.0;
    double auc_ci_lo = 0.0;
    double auc_ci_hi = 1.0;
    double threshold = 0.5;
    size_t n = 0;
    size_t n_real = 0;
    size_t n_fake = 0;
};

/// Accuracy, fake-class recall, AUC and DeLong CI on a labeled test set.
inline EvalReport evaluate(const LogisticModel& model, const Dataset& test,
                           double threshold = 0.5, double ci_level = 0.95) {
    check_dataset(test);
    EvalReport rep;
    rep.threshold = threshold;
    rep.n = test.size();
    std::vector<double> scores(test.size());
    std::vector<int> labels(test.size());
    size_t correct = 0, tp = 0, fakes = 0;
    for (size_t i = 0; i < test.size(); ++i) {
        scores[i] = predict(model, test[i].x);
        labels[i] = test[i].label;
        const int pred = scores[i] >= threshold ? 1 : 0;
        correct += pred == labels[i];
        if (labels[i] == 1) {
            ++fakes;
            tp += pred == 1;
        }
    }
    rep.n_fake = fakes;
    rep.n_real = test.size() - fakes;
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    rep.recall = fakes ? static_cast<double>(tp) / static_cast<double>(fakes) : 0.0;
    rep.auc = roc_auc(scores, labels);
    auto ci = delong_ci(scores, labels, ci_level);
    rep.auc_ci_lo = ci.lo;
    rep.auc_ci_hi = ci.hi;
    return rep;
}

}  // namespace blurmap::classify

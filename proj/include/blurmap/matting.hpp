// Closed-form matting Laplacian over 3x3 windows of a grayscale guide,
// plus the conjugate-gradient solve used to propagate sparse values.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blurmap/image.hpp"

namespace blurmap {

struct ConvergenceError : std::runtime_error {
    ConvergenceError(double residual_norm, int iterations)
        : std::runtime_error("conjugate gradient did not converge: residual " +
                             std::to_string(residual_norm) + " after " +
                             std::to_string(iterations) + " iterations"),
          residual(residual_norm), iters(iterations) {}
    double residual;
    int iters;
};

/// Symmetric sparse matrix in CSR form.
struct SparseMatrix {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;

    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += val[k] * x[col[k]];
            y[i] = acc;
        }
    }
};

/// Matting Laplacian of a gray guide with 3x3 windows. Windows are the
/// fully-contained ones; entry (i,j) accumulates, over every window holding
/// both pixels, delta_ij - (1 + (I_i-mu)(I_j-mu)/(var+reg)) / 9.
inline SparseMatrix matting_laplacian(const GrayImage& guide, double reg = 1e-7) {
    const int w = guide.width, h = guide.height;
    if (w < 3 || h < 3)
        throw std::invalid_argument("matting_laplacian: guide must be at least 3x3");
    const int n = w * h;
    const double inv_win = 1.0 / 9.0;

    // Neighbors of a pixel share a window only within a 5x5 halo, so each
    // row has at most 25 entries; accumulate into a dense stencil per row
    // would still be awkward, so gather triplets window by window.
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<size_t>(n));
    for (auto& r : rows) r.reserve(25);

    int idx[9];
    double vals[9];
    for (int cy = 1; cy < h - 1; ++cy) {
        for (int cx = 1; cx < w - 1; ++cx) {
            int m = 0;
            double mean = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int p = (cy + dy) * w + (cx + dx);
                    idx[m] = p;
                    vals[m] = guide.data[static_cast<size_t>(p)];
                    mean += vals[m];
                    ++m;
                }
            mean *= inv_win;
            double var = 0.0;
            for (int k = 0; k < 9; ++k) {
                double d = vals[k] - mean;
                var += d * d;
            }
            var *= inv_win;
            const double denom = var + reg;
            for (int a = 0; a < 9; ++a) {
                for (int b = 0; b < 9; ++b) {
                    double v = -inv_win * (1.0 + (vals[a] - mean) * (vals[b] - mean) / denom);
                    if (a == b) v += 1.0;
                    rows[static_cast<size_t>(idx[a])].emplace_back(idx[b], v);
                }
            }
        }
    }

    SparseMatrix out;
    out.n = n;
    out.row_ptr.resize(static_cast<size_t>(n) + 1, 0);
    size_t nnz = 0;
    for (int i = 0; i < n; ++i) {
        auto& r = rows[static_cast<size_t>(i)];
        std::sort(r.begin(), r.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        // merge duplicates in place
        size_t out_k = 0;
        for (size_t k = 0; k < r.size(); ++k) {
            if (out_k > 0 && r[out_k - 1].first == r[k].first)
                r[out_k - 1].second += r[k].second;
            else
                r[out_k++] = r[k];
        }
        r.resize(out_k);
        nnz += out_k;
        out.row_ptr[static_cast<size_t>(i) + 1] = static_cast<int>(nnz);
    }
    out.col.resize(nnz);
    out.val.resize(nnz);
    size_t k = 0;
    for (int i = 0; i < n; ++i)
        for (auto& [c, v] : rows[static_cast<size_t>(i)]) {
            out.col[k] = c;
            out.val[k] = v;
            ++k;
        }
    return out;
}

struct CgResult {
    std::vector<double> x;
    int iterations = 0;
    double residual = 0.0;
};

/// Solves (A + Diag(diag)) x = b by conjugate gradients from x0 = 0.
/// Convergence is ||r|| <= tol * ||b||; throws ConvergenceError otherwise.
inline CgResult solve_cg(const SparseMatrix& A, const std::vector<double>& diag,
                         const std::vector<double>& b, double tol, int max_iter) {
    const size_t n = b.size();
    CgResult res;
    res.x.assign(n, 0.0);
    std::vector<double> r = b, p = b, ap(n);

    double bb = 0.0;
    for (double v : b) bb += v * v;
    const double bnorm = std::sqrt(bb);
    if (bnorm == 0.0) return res;  // zero rhs, zero solution
    const double stop = tol * bnorm;

    double rs = bb;
    for (int it = 0; it < max_iter; ++it) {
        A.multiply(p, ap);
        for (size_t i = 0; i < n; ++i) ap[i] += diag[i] * p[i];
        double pap = 0.0;
        for (size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (pap <= 0.0) break;  // matrix not SPD on this subspace
        const double alpha = rs / pap;
        for (size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        double rs_new = 0.0;
        for (double v : r) rs_new += v * v;
        res.iterations = it + 1;
        res.residual = std::sqrt(rs_new);
        if (res.residual <= stop) return res;
        const double beta = rs_new / rs;
        rs = rs_new;
        for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    res.residual = std::sqrt(rs);
    throw ConvergenceError(res.residual, res.iterations);
}

}  // namespace blurmap

#pragma once
// Independent reference implementations used only by the tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

/// Fourier-Motzkin feasibility of {x : A x >= b}.
inline bool fm_feasible(Eigen::MatrixXd a, Eigen::VectorXd b, double tol = 1e-9) {
    while (a.cols() > 1) {
        const Eigen::Index j = a.cols() - 1;
        std::vector<Eigen::Index> pos, neg, zero;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double v = a(i, j);
            if (v > 1e-14) pos.push_back(i);
            else if (v < -1e-14) neg.push_back(i);
            else zero.push_back(i);
        }
        const auto rows = static_cast<Eigen::Index>(zero.size() + pos.size() * neg.size());
        Eigen::MatrixXd na(rows, j);
        Eigen::VectorXd nb(rows);
        Eigen::Index r = 0;
        for (auto i : zero) {
            na.row(r) = a.row(i).head(j);
            nb(r++) = b(i);
        }
        for (auto ip : pos) {
            for (auto in : neg) {
                const double sp = a(ip, j), sn = -a(in, j);
                na.row(r) = a.row(ip).head(j) / sp + a.row(in).head(j) / sn;
                nb(r++) = b(ip) / sp + b(in) / sn;
            }
        }
        a = std::move(na);
        b = std::move(nb);
    }
    if (a.cols() == 0) return b.size() == 0 || b.maxCoeff() <= tol;
    // One variable left: intersect the half-lines directly.
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double v = a(i, 0);
        if (v > 1e-14) lo = std::max(lo, b(i) / v);
        else if (v < -1e-14) hi = std::min(hi, b(i) / v);
        else if (b(i) > tol) return false;
    }
    return lo - hi <= tol;
}

/// Whether the violated set `mask` (bit k set = n_k'beta < 0, others >= 0) is realizable.
inline bool pattern_feasible(const Eigen::MatrixXd& normals, unsigned long mask) {
    const auto m = normals.cols();
    Eigen::MatrixXd a(m, normals.rows());
    Eigen::VectorXd b(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const bool v = (mask >> k) & 1UL;
        a.row(k) = (v ? -1.0 : 1.0) * normals.col(k).transpose();
        b(k) = v ? 1.0 : 0.0;
    }
    return fm_feasible(a, b);
}

inline double mask_value(const Eigen::VectorXd& w, unsigned long mask) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        if ((mask >> k) & 1UL) total += w(k);
    }
    return total;
}

/// max (sup) or min (inf) of sum_k w_k 1{n_k'beta < 0} by scanning all 2^m violated sets in value order.
inline double brute_force_optimum(const Eigen::MatrixXd& normals, const Eigen::VectorXd& w, bool sup) {
    const auto m = normals.cols();
    const unsigned long count = 1UL << m;
    std::vector<std::pair<double, unsigned long>> order;
    order.reserve(count);
    for (unsigned long mask = 0; mask < count; ++mask) order.emplace_back(mask_value(w, mask), mask);
    std::sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
        return sup ? x.first > y.first : x.first < y.first;
    });
    for (const auto& [value, mask] : order) {
        if (pattern_feasible(normals, mask)) return value;
    }
    return 0.0;
}

/// All realizable violated sets.
inline std::vector<unsigned long> feasible_masks(const Eigen::MatrixXd& normals) {
    std::vector<unsigned long> out;
    const unsigned long count = 1UL << normals.cols();
    for (unsigned long mask = 0; mask < count; ++mask) {
        if (pattern_feasible(normals, mask)) out.push_back(mask);
    }
    return out;
}

/// Type-1 (nearest-rank) weighted quantile by sorting (value, weight) pairs.
inline double weighted_quantile(std::vector<double> values, std::vector<double> weights, double q) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) { return values[i] < values[j]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double cum = 0.0;
    for (auto i : idx) {
        cum += weights[i];
        if (cum >= q * total) return values[i];
    }
    return values[idx.back()];
}

}  // namespace oracle

#include "nonreg/lp.hpp"

#include <limits>
#include <vector>

namespace nonreg {

std::optional<Eigen::VectorXd> find_feasible_point(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                   double tolerance) {
    const Eigen::Index m = a.rows();
    const Eigen::Index p = a.cols();
    if (m == 0) return Eigen::VectorXd::Zero(p);

    // Columns: u (p), v (p), surplus (m), artificial (one per row with b > 0), rhs.
    std::vector<Eigen::Index> art_row;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (b(i) > 0.0) art_row.push_back(i);
    }
    const Eigen::Index n_art = static_cast<Eigen::Index>(art_row.size());
    const Eigen::Index cols = 2 * p + m + n_art;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, cols + 1);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    Eigen::Index next_art = 2 * p + m;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double sign = b(i) > 0.0 ? 1.0 : -1.0;
        t.block(i, 0, 1, p) = sign * a.row(i);
        t.block(i, p, 1, p) = -sign * a.row(i);
        t(i, 2 * p + i) = -sign;
        t(i, cols) = sign * b(i);
        if (b(i) > 0.0) {
            t(i, next_art) = 1.0;
            basis[static_cast<std::size_t>(i)] = next_art++;
        } else {
            basis[static_cast<std::size_t>(i)] = 2 * p + i;
        }
    }
    // Phase-one objective: minimise the sum of artificials, written in reduced-cost form.
    for (Eigen::Index i : art_row) t.row(m) -= t.row(i);
    for (Eigen::Index j = 2 * p + m; j < cols; ++j) t(m, j) = 0.0;

    const Eigen::Index max_iter = 50 * (m + cols) + 100;
    for (Eigen::Index iter = 0; iter < max_iter; ++iter) {
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (t(m, j) < -tolerance) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;
        Eigen::Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (t(i, enter) > tolerance) {
                const double ratio = t(i, cols) / t(i, enter);
                if (ratio < best - 1e-15 ||
                    (ratio <= best + 1e-15 && leave >= 0 &&
                     basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                    best = std::min(best, ratio);
                    leave = i;
                }
            }
        }
        if (leave < 0) break;  // unbounded direction cannot occur in phase one
        t.row(leave) /= t(leave, enter);
        for (Eigen::Index i = 0; i <= m; ++i) {
            if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
        }
        basis[static_cast<std::size_t>(leave)] = enter;
    }
    if (-t(m, cols) > tolerance * std::max(1.0, b.cwiseAbs().maxCoeff())) return std::nullopt;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index j = basis[static_cast<std::size_t>(i)];
        if (j < p) {
            x(j) += t(i, cols);
        } else if (j < 2 * p) {
            x(j - p) -= t(i, cols);
        }
    }
    if (((a * x - b).array() < -1e-7 * std::max(1.0, x.cwiseAbs().maxCoeff())).any()) return std::nullopt;
    return x;
}

}  // namespace nonreg

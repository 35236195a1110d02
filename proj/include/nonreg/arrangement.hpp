#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace nonreg {

/// Sign of a normal against a direction: -1 strictly negative (a violation), 0 on the hyperplane,
/// +1 strictly positive.
using Sign = signed char;

/// Closed arc of directions (cos phi, sin phi), phi in [start, start + width], width in [0, 2 pi).
struct AngleWindow {
    double start = 0.0;
    double width = 0.0;
};

/// Events closer than this (radians) are merged.
inline constexpr double kAngleTolerance = 1e-12;

namespace detail {

inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    if (a >= two_pi) a = 0.0;
    return a;
}

struct SweepGroup {
    double rel = 0.0;
    // (index, sign after the event)
    std::vector<std::pair<std::size_t, Sign>> crossing;
};

}  // namespace detail

/// Angular sweep over the central line arrangement {beta in R^2 : n_k'beta = 0}.
///
/// The visitor receives
///   reset(signs)        the full sign vector of the first face,
///   change(k, s)        one sign update,
///   face(direction)     the current sign vector is realized by `direction` (and its positive multiples).
/// Without a window every ray and open sector of the circle is reported once; the origin is not.
/// With a window only faces meeting the arc are reported, the ones containing its end points included.
template <class Visitor>
void sweep_lines(const Eigen::Matrix2Xd& normals, const std::optional<AngleWindow>& window, Visitor& visitor) {
    constexpr double pi = std::numbers::pi;
    constexpr double two_pi = 2.0 * pi;
    const auto m = static_cast<std::size_t>(normals.cols());
    const double origin = window ? window->start : 0.0;
    const double width = window ? window->width : two_pi;

    struct Event {
        double rel;
        std::size_t k;
        Sign after;
    };
    std::vector<Event> events;
    std::vector<Sign> signs(m, 0);
    std::vector<double> rel_in(m, 0.0), rel_out(m, 0.0);
    std::vector<char> active(m, 0);
    events.reserve(2 * m);
    for (std::size_t k = 0; k < m; ++k) {
        const double nx = normals(0, static_cast<Eigen::Index>(k));
        const double ny = normals(1, static_cast<Eigen::Index>(k));
        if (nx == 0.0 && ny == 0.0) continue;
        active[k] = 1;
        const double psi = std::atan2(ny, nx);
        double in = detail::wrap_angle(psi + 0.5 * pi - origin);
        double out = detail::wrap_angle(psi + 1.5 * pi - origin);
        if (two_pi - in < kAngleTolerance) in = 0.0;
        if (two_pi - out < kAngleTolerance) out = 0.0;
        rel_in[k] = in;
        rel_out[k] = out;
        // Just before relative angle 0 the point is violated iff its violated arc wraps past 0.
        signs[k] = out < in || (out == 0.0 && in > 0.0) ? Sign{-1} : Sign{1};
        events.push_back({in, k, Sign{-1}});
        events.push_back({out, k, Sign{1}});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return a.rel < b.rel || (a.rel == b.rel && a.k < b.k);
    });

    std::vector<detail::SweepGroup> groups;
    for (const auto& e : events) {
        if (e.rel > width + kAngleTolerance) break;
        if (groups.empty() || e.rel - groups.back().rel > kAngleTolerance) {
            groups.push_back({e.rel, {}});
        }
        groups.back().crossing.emplace_back(e.k, e.after);
    }
    auto direction = [&](double rel) {
        const double a = origin + rel;
        return Eigen::Vector2d(std::cos(a), std::sin(a));
    };

    visitor.reset(std::span<const Sign>(signs));
    if (groups.empty()) {
        visitor.face(direction(window ? 0.5 * width : 0.0));
        return;
    }
    if (window && groups.front().rel > 0.0) {
        visitor.face(direction(0.5 * groups.front().rel));
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& group = groups[g];
        for (const auto& [k, after] : group.crossing) {
            (void)after;
            if (signs[k] != 0) {
                signs[k] = 0;
                visitor.change(k, Sign{0});
            }
        }
        visitor.face(direction(group.rel));
        for (const auto& [k, after] : group.crossing) {
            signs[k] = after;
            visitor.change(k, after);
        }
        double next;
        if (g + 1 < groups.size()) {
            next = groups[g + 1].rel;
        } else if (window) {
            next = width;
        } else {
            next = groups.front().rel + two_pi;
        }
        if (next > group.rel) visitor.face(direction(0.5 * (group.rel + next)));
    }
}

/// Closed arc of directions whose open rays meet the ellipse {beta : (beta - c)'A(beta - c) <= r2}.
/// Returns nullopt when the ellipse contains the origin, so every direction qualifies.
std::optional<AngleWindow> ellipse_direction_window(const Eigen::Vector2d& center, const Eigen::Matrix2d& shape,
                                                    double radius2);

/// Orthonormal basis (columns) of the orthogonal complement of `normal`.
Eigen::MatrixXd orthogonal_complement(const Eigen::VectorXd& normal);

namespace detail {

template <class Visitor>
struct PlaneLift {
    Visitor& inner;
    const std::vector<std::size_t>& map;
    const std::vector<std::size_t>& parallel;
    const std::vector<Sign>& push_sign;
    const Eigen::MatrixXd& basis;
    const Eigen::VectorXd& normal;
    const Eigen::MatrixXd& normals;
    std::vector<Sign> full;
    std::size_t total;

    void reset(std::span<const Sign> sub) {
        full.assign(total, Sign{0});
        for (std::size_t j = 0; j < sub.size(); ++j) full[map[j]] = sub[j];
        inner.reset(std::span<const Sign>(full));
    }
    void change(std::size_t j, Sign s) {
        full[map[j]] = s;
        inner.change(map[j], s);
    }
    void face(const Eigen::Vector2d& dir2) {
        const Eigen::VectorXd dir = basis * dir2;
        inner.face(dir);
        bool interior = true;
        for (std::size_t idx : map) {
            if (full[idx] == 0) {
                interior = false;
                break;
            }
        }
        if (!interior) return;
        // Leave the plane on either side; only the hyperplanes parallel to it change sign.
        double eps = 1.0;
        for (std::size_t idx : map) {
            const Eigen::VectorXd nj = normals.col(static_cast<Eigen::Index>(idx));
            const double along = std::abs(nj.dot(normal));
            if (along > 0.0) eps = std::min(eps, 0.5 * std::abs(nj.dot(dir)) / along);
        }
        for (const double side : {1.0, -1.0}) {
            for (std::size_t t = 0; t < parallel.size(); ++t) {
                const Sign s = static_cast<Sign>(side > 0 ? push_sign[t] : -push_sign[t]);
                inner.change(parallel[t], s);
            }
            inner.face(Eigen::VectorXd(dir + side * eps * normal));
        }
        for (std::size_t idx : parallel) inner.change(idx, Sign{0});
    }
};

}  // namespace detail

/// Visits every face of the central arrangement {beta in R^p : n_k'beta = 0}, p in {1, 2, 3},
/// with the visitor protocol of sweep_lines (directions are p-vectors). Faces may be reported more
/// than once; the origin is always reported first.
template <class Visitor>
void enumerate_faces(const Eigen::MatrixXd& normals, Visitor& visitor) {
    const auto p = normals.rows();
    const auto m = static_cast<std::size_t>(normals.cols());
    std::vector<Sign> zeros(m, Sign{0});
    visitor.reset(std::span<const Sign>(zeros));
    visitor.face(Eigen::VectorXd::Zero(p));
    if (m == 0) return;

    if (p == 1) {
        for (const double side : {1.0, -1.0}) {
            std::vector<Sign> s(m);
            for (std::size_t k = 0; k < m; ++k) {
                const double v = side * normals(0, static_cast<Eigen::Index>(k));
                s[k] = v > 0 ? Sign{1} : (v < 0 ? Sign{-1} : Sign{0});
            }
            visitor.reset(std::span<const Sign>(s));
            visitor.face(Eigen::VectorXd::Constant(1, side));
        }
        return;
    }

    if (p == 2) {
        struct Adapter {
            Visitor& inner;
            void reset(std::span<const Sign> s) { inner.reset(s); }
            void change(std::size_t k, Sign s) { inner.change(k, s); }
            void face(const Eigen::Vector2d& d) { inner.face(Eigen::VectorXd(d)); }
        } adapter{visitor};
        const Eigen::Matrix2Xd n2 = normals;
        sweep_lines(n2, std::nullopt, adapter);
        return;
    }

    // p == 3: sweep inside every plane, then step off each plane-interior face to both sides.
    for (std::size_t k = 0; k < m; ++k) {
        const Eigen::VectorXd nk = normals.col(static_cast<Eigen::Index>(k));
        const double norm_k = nk.norm();
        if (norm_k == 0.0) continue;
        const Eigen::MatrixXd basis = orthogonal_complement(nk);
        const Eigen::VectorXd unit = nk / norm_k;
        std::vector<std::size_t> map, parallel;
        std::vector<Sign> push_sign;
        Eigen::Matrix2Xd restricted(2, static_cast<Eigen::Index>(m));
        Eigen::Index cols = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const Eigen::VectorXd nj = normals.col(static_cast<Eigen::Index>(j));
            const double norm_j = nj.norm();
            if (norm_j == 0.0) continue;
            const Eigen::Vector2d r = basis.transpose() * nj;
            if (r.norm() <= 1e-12 * norm_j) {
                parallel.push_back(j);
                push_sign.push_back(nj.dot(unit) > 0 ? Sign{1} : Sign{-1});
            } else {
                map.push_back(j);
                restricted.col(cols++) = r;
            }
        }
        // Zero normals stay at sign 0 everywhere; they are left out of both lists.
        detail::PlaneLift<Visitor> lift{visitor, map, parallel, push_sign, basis, unit, normals, {}, m};
        const Eigen::Matrix2Xd sub = restricted.leftCols(cols);
        sweep_lines(sub, std::nullopt, lift);
    }
}

}  // namespace nonreg

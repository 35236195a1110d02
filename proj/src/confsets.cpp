#include "nonreg/confsets.hpp"

#include "nonreg/arrangement.hpp"
#include "nonreg/distributions.hpp"
#include "nonreg/error.hpp"
#include "nonreg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>

namespace nonreg {

namespace {

void check_level(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) throw ValidationError(std::string(name) + " must lie in (0, 1)");
}

// An explicit split may put omega at or above 1 (a vacuous level); the degenerate eta -> 1 limit needs it.
Split resolve_split(double omega, std::optional<Split> split) {
    if (!split) check_level(omega, "omega");
    const Split s = split ? *split : Split::even(omega);
    check_level(s.alpha, "alpha");
    check_level(s.eta, "eta");
    if (std::abs(s.alpha + s.eta - omega) > 1e-12) throw ValidationError("split must satisfy omega = alpha + eta");
    return s;
}

struct Envelope {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(const Interval& i) {
        lo = std::min(lo, i.lo);
        hi = std::max(hi, i.hi);
    }
    Interval interval() const { return {lo, hi}; }
};

// Tracks the weighted violation sums of the current face and hands them to `on_face`.
template <class OnFace>
struct SumVisitor {
    const Eigen::VectorXd& w;
    OnFace on_face;
    std::vector<Sign> signs;
    double s1 = 0.0;
    double s2 = 0.0;

    void reset(std::span<const Sign> s) {
        signs.assign(s.begin(), s.end());
        s1 = s2 = 0.0;
        for (std::size_t k = 0; k < signs.size(); ++k) {
            if (signs[k] < 0) add(k, 1.0);
        }
    }
    void change(std::size_t k, Sign s) {
        if (signs[k] < 0) add(k, -1.0);
        if (s < 0) add(k, 1.0);
        signs[k] = s;
    }
    template <typename Dir>
    void face(const Dir&) {
        on_face(s1, s2);
    }
    void add(std::size_t k, double sign) {
        const double v = w(static_cast<Eigen::Index>(k));
        s1 += sign * v;
        s2 += sign * v * v;
    }
};

// Calls on_face(s1, s2) for every sign pattern of {n_k'beta} realized inside the ellipsoid (p <= 2).
template <class OnFace>
void faces_in_ellipsoid(const Eigen::MatrixXd& normals, const Eigen::VectorXd& weights, const EllipsoidSet& set,
                        OnFace on_face) {
    const auto p = normals.rows();
    const auto m = static_cast<std::size_t>(normals.cols());
    SumVisitor<OnFace> visitor{weights, on_face, {}, 0.0, 0.0};
    if (p == 1) {
        const double half = std::sqrt(set.radius2 / set.shape(0, 0));
        const double lo = set.center(0) - half, hi = set.center(0) + half;
        for (const double dir : {-1.0, 0.0, 1.0}) {
            if ((dir < 0 && !(lo < 0)) || (dir == 0 && !(lo <= 0 && hi >= 0)) || (dir > 0 && !(hi > 0))) continue;
            std::vector<Sign> s(m);
            for (std::size_t k = 0; k < m; ++k) {
                const double v = dir * normals(0, static_cast<Eigen::Index>(k));
                s[k] = v < 0 ? Sign{-1} : (v > 0 ? Sign{1} : Sign{0});
            }
            visitor.reset(s);
            visitor.face(dir);
        }
        return;
    }
    const Eigen::Vector2d c = set.center;
    const Eigen::Matrix2d a = set.shape;
    const auto window = ellipse_direction_window(c, a, set.radius2);
    if (!window) {
        std::vector<Sign> zeros(m, Sign{0});
        visitor.reset(zeros);
        visitor.face(0.0);
    }
    const Eigen::Matrix2Xd n2 = normals;
    sweep_lines(n2, window, visitor);
}

bool exact_applicable(const SearchConfig& search, Eigen::Index p) { return search.exact_low_dim && p <= 2; }

template <class PerBeta>
Envelope sampled_envelope(const EllipsoidSet& set, const SearchConfig& search, PerBeta per_beta) {
    const auto points = ellipsoid_search_points(set, search);
    std::vector<Interval> slots(points.size());
    parallel_for(points.size(), search.threads, [&](std::size_t i) { slots[i] = per_beta(points[i]); });
    Envelope env;
    for (const auto& s : slots) env.add(s);
    return env;
}

}  // namespace

EllipsoidSet wald_ellipsoid(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& sigma, std::size_t n,
                            double eta) {
    check_level(eta, "eta");
    const auto p = beta_hat.size();
    if (sigma.rows() != p || sigma.cols() != p) throw ValidationError("covariance dimension mismatch");
    if (n == 0) throw ValidationError("Wald ellipsoid needs n >= 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    const double top = eig.eigenvalues().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(top, 1e-300))) {
        throw EstimationError("Wald ellipsoid: covariance matrix is singular");
    }
    EllipsoidSet set;
    set.center = beta_hat;
    set.sigma = sigma;
    set.n = n;
    set.eta = eta;
    set.shape = static_cast<double>(n) * eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                eig.eigenvectors().transpose();
    set.shape = 0.5 * (set.shape + set.shape.transpose()).eval();
    set.radius2 = chi2_quantile(1.0 - eta, static_cast<double>(p));
    return set;
}

EllipsoidSet wald_ellipsoid(const CoefEstimate& est, double eta) {
    return wald_ellipsoid(est.beta, est.sigma, est.n, eta);
}

std::vector<Eigen::VectorXd> ellipsoid_search_points(const EllipsoidSet& set, const SearchConfig& search) {
    const auto p = set.center.size();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(set.sigma);
    // beta = center + transform * u maps the unit ball onto the ellipsoid.
    const Eigen::MatrixXd transform = std::sqrt(set.radius2 / static_cast<double>(set.n)) * eig.eigenvectors() *
                                      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    std::vector<Eigen::VectorXd> points;
    points.reserve(1 + 2 * static_cast<std::size_t>(p) + search.n_interior + search.n_boundary);
    points.push_back(set.center);
    for (Eigen::Index j = 0; j < p; ++j) {
        points.push_back(set.center + transform.col(j));
        points.push_back(set.center - transform.col(j));
    }
    Engine eng = search.seed.engine();
    std::normal_distribution<double> norm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto unit = [&] {
        Eigen::VectorXd g(p);
        do {
            for (Eigen::Index j = 0; j < p; ++j) g(j) = norm(eng);
        } while (g.norm() == 0.0);
        return Eigen::VectorXd(g / g.norm());
    };
    for (std::size_t i = 0; i < search.n_interior; ++i) {
        const Eigen::VectorXd u = unit();
        const double r = std::pow(unif(eng), 1.0 / static_cast<double>(p));
        points.push_back(set.center + transform * (r * u));
    }
    for (std::size_t i = 0; i < search.n_boundary; ++i) points.push_back(set.center + transform * unit());
    return points;
}

Interval rate_interval(double m, std::size_t n, double alpha) {
    check_level(alpha, "alpha");
    const double half = two_sided_z(alpha) * misclass_sd(m) / std::sqrt(static_cast<double>(n));
    return {std::clamp(m - half, 0.0, 1.0), std::clamp(m + half, 0.0, 1.0)};
}

Interval fixed_beta_interval(const ClassDataset& data, const Eigen::VectorXd& beta, double alpha) {
    return rate_interval(empirical_misclass(data, beta), data.n(), alpha);
}

Interval projection_interval(const ClassDataset& data, const CoefEstimate& est, double omega,
                             std::optional<Split> split, const SearchConfig& search) {
    const Split s = resolve_split(omega, split);
    const EllipsoidSet set = wald_ellipsoid(est, s.eta);
    const auto n = data.n();
    Envelope env;
    env.add(fixed_beta_interval(data, est.beta, s.alpha));
    if (exact_applicable(search, data.x().cols())) {
        const Eigen::MatrixXd normals = (data.y().asDiagonal() * data.x()).transpose();
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
        faces_in_ellipsoid(normals, ones, set, [&](double count, double) {
            env.add(rate_interval(count / static_cast<double>(n), n, s.alpha));
        });
        return env.interval();
    }
    const Envelope sampled =
        sampled_envelope(set, search, [&](const Eigen::VectorXd& b) { return fixed_beta_interval(data, b, s.alpha); });
    env.add(sampled.interval());
    return env.interval();
}

Interval w_interval(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                    const NearBoundaryPartition& partition, double alpha, const WOptions& options) {
    check_level(alpha, "alpha");
    const double g = empirical_G(data, beta_hat, beta, partition);
    const double rho = options.bootstrap_rho
                           ? rho_bootstrap(data, beta_hat, beta, partition, options.draws, options.seed)
                           : std::sqrt(std::max(0.0, g * (1.0 - g)));
    const double half = two_sided_z(alpha) * rho / std::sqrt(static_cast<double>(data.n()));
    return {std::clamp(g - half, 0.0, 1.0), std::clamp(g + half, 0.0, 1.0)};
}

Interval w_interval(const ClassDataset& data, const CoefEstimate& est, const Eigen::VectorXd& beta, double lambda,
                    double alpha, const WOptions& options) {
    const auto partition = boundary_test_statistics(data, est, lambda);
    return w_interval(data, est.beta, beta, partition, alpha, options);
}

Interval adaptive_projection_interval(const ClassDataset& data, const CoefEstimate& est, double omega,
                                      std::optional<Split> split, double lambda, const SearchConfig& search,
                                      const WOptions& options) {
    const Split s = resolve_split(omega, split);
    const EllipsoidSet set = wald_ellipsoid(est, s.eta);
    const auto partition = boundary_test_statistics(data, est, lambda);
    const auto n = data.n();
    Envelope env;
    env.add(w_interval(data, est.beta, est.beta, partition, s.alpha, options));
    if (exact_applicable(search, data.x().cols()) && !options.bootstrap_rho) {
        const auto near = partition.near_indices();
        double far_count = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            if (!partition.is_near(i) && data.y()(r) * data.x().row(r).dot(est.beta) < 0.0) far_count += 1.0;
        }
        Eigen::MatrixXd normals(data.x().cols(), static_cast<Eigen::Index>(near.size()));
        for (std::size_t j = 0; j < near.size(); ++j) {
            const auto r = static_cast<Eigen::Index>(near[j]);
            normals.col(static_cast<Eigen::Index>(j)) = data.y()(r) * data.x().row(r).transpose();
        }
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(normals.cols());
        const double z = two_sided_z(s.alpha);
        const double root_n = std::sqrt(static_cast<double>(n));
        faces_in_ellipsoid(normals, ones, set, [&](double count, double) {
            const double g = (far_count + count) / static_cast<double>(n);
            const double half = z * std::sqrt(std::max(0.0, g * (1.0 - g))) / root_n;
            env.add({std::clamp(g - half, 0.0, 1.0), std::clamp(g + half, 0.0, 1.0)});
        });
        return env.interval();
    }
    const Envelope sampled = sampled_envelope(set, search, [&](const Eigen::VectorXd& b) {
        return w_interval(data, est.beta, b, partition, s.alpha, options);
    });
    env.add(sampled.interval());
    return env.interval();
}

Interval value_fixed_interval(const DecisionDataset& data, const Eigen::VectorXd& beta1, const Eigen::VectorXd& pi,
                              double alpha) {
    check_level(alpha, "alpha");
    const auto v = empirical_value(data, beta1, pi);
    const double half = two_sided_z(alpha) * v.sd / std::sqrt(static_cast<double>(data.n()));
    return {v.value - half, v.value + half};
}

Interval value_fixed_interval(const DecisionDataset& data, const Eigen::VectorXd& beta1,
                              const PropensityModel& propensity, double alpha) {
    return value_fixed_interval(data, beta1, evaluate_propensities(propensity, data).pi, alpha);
}

Interval value_projection_interval(const DecisionDataset& data, const QCoefEstimate& qest,
                                   const PropensityModel& propensity, double omega, std::optional<Split> split,
                                   const SearchConfig& search) {
    const Split s = resolve_split(omega, split);
    const EllipsoidSet set = wald_ellipsoid(qest.beta1, qest.r_hat, qest.n, s.eta);
    const Eigen::VectorXd pi = evaluate_propensities(propensity, data).pi;
    Envelope env;
    env.add(value_fixed_interval(data, qest.beta1, pi, s.alpha));
    if (exact_applicable(search, data.x1().cols())) {
        const auto n = static_cast<double>(data.n());
        const Eigen::MatrixXd normals = -(data.a().asDiagonal() * data.x1()).transpose();
        const Eigen::VectorXd w = data.y().cwiseQuotient(pi);
        const double z = two_sided_z(s.alpha);
        faces_in_ellipsoid(normals, w, set, [&](double s1, double s2) {
            const double v = s1 / n;
            const double sd = std::sqrt(std::max(0.0, s2 / n - v * v));
            const double half = z * sd / std::sqrt(n);
            env.add({v - half, v + half});
        });
        return env.interval();
    }
    const Envelope sampled = sampled_envelope(
        set, search, [&](const Eigen::VectorXd& b) { return value_fixed_interval(data, b, pi, s.alpha); });
    env.add(sampled.interval());
    return env.interval();
}

}  // namespace nonreg

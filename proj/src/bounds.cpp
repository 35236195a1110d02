#include "nonreg/bounds.hpp"

#include "nonreg/error.hpp"
#include "nonreg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace nonreg {

namespace {

double resolve_lambda(double lambda, std::size_t n) {
    if (std::isnan(lambda)) return default_lambda(n);
    if (!(lambda >= 0.0)) throw ValidationError("lambda must be non-negative");
    return lambda;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
}

void check_skipped(std::size_t skipped, std::size_t total) {
    if (static_cast<double>(skipped) > 0.05 * static_cast<double>(total)) {
        throw EstimationError(std::to_string(skipped) + " of " + std::to_string(total) +
                              " bootstrap draws failed (more than 5%)");
    }
}

}  // namespace

BoundPair weighted_bound(const Eigen::MatrixXd& normals, const Eigen::VectorXd& weights,
                         const std::vector<char>& near, const Eigen::VectorXd& hint, const SignPatternOptions& sign,
                         const std::optional<AngleWindow>& window, bool include_origin) {
    const auto m = normals.cols();
    if (weights.size() != m || static_cast<Eigen::Index>(near.size()) != m) {
        throw ValidationError("weighted bound: inconsistent sizes");
    }
    const Eigen::VectorXd margin = normals.transpose() * hint;
    double far = 0.0;
    std::vector<Eigen::Index> near_idx;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (near[static_cast<std::size_t>(i)]) {
            near_idx.push_back(i);
        } else if (margin(i) < 0.0) {
            far += weights(i);
        }
    }
    BoundPair out;
    out.n_near = near_idx.size();
    SignPatternProblem problem;
    problem.normals.resize(normals.rows(), static_cast<Eigen::Index>(near_idx.size()));
    problem.weights.resize(static_cast<Eigen::Index>(near_idx.size()));
    for (std::size_t j = 0; j < near_idx.size(); ++j) {
        problem.normals.col(static_cast<Eigen::Index>(j)) = normals.col(near_idx[j]);
        problem.weights(static_cast<Eigen::Index>(j)) = weights(near_idx[j]);
    }
    problem.window = window;
    problem.include_origin = include_origin;
    SignPatternOptions opts = sign;
    opts.hints.push_back(hint);
    const double at_hint = evaluate_sign_pattern(problem, hint);
    problem.sense = Sense::sup;
    const double sup = optimize_sign_pattern(problem, opts).value;
    problem.sense = Sense::inf;
    const double inf = optimize_sign_pattern(problem, opts).value;
    out.upper = far + sup;
    out.lower = far + inf;
    out.statistic = far + at_hint;
    return out;
}

BoundDraw centered_bound_draw(const ClassDataset& data, const CoefEstimate& est, std::span<const int> multiplicity,
                              const CoefEstimate& est_b, const BoundOptions& options) {
    const auto n = data.n();
    if (multiplicity.size() != n) throw ValidationError("multiplicity vector has wrong length");
    const double lambda = resolve_lambda(options.lambda, n);
    const CoefEstimate& split_fit = options.partition == PartitionSource::bootstrap ? est_b : est;
    const auto partition = boundary_partition(data.x(), split_fit.beta, split_fit.sigma, lambda);
    const Eigen::MatrixXd normals = (data.y().asDiagonal() * data.x()).transpose();
    const double root_n = std::sqrt(static_cast<double>(n));
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i)) = (multiplicity[i] - 1) / root_n;

    std::optional<AngleWindow> window;
    bool include_origin = true;
    if (options.ellipsoid_restricted) {
        if (data.p() != 2) throw ValidationError("ellipsoid-restricted bounds require p = 2");
        const EllipsoidSet set = wald_ellipsoid(est_b.beta, est_b.sigma, n, options.restriction_eta);
        window = ellipse_direction_window(set.center, set.shape, set.radius2);
        include_origin = !window.has_value();
    }
    const BoundPair pair = weighted_bound(normals, w, partition.near, est_b.beta, options.sign, window, include_origin);
    BoundDraw draw;
    draw.lower = pair.lower;
    draw.upper = pair.upper;
    draw.statistic = pair.statistic;
    draw.n_near = pair.n_near;
    draw.beta_b = est_b.beta;
    return draw;
}

std::vector<BoundDraw> bootstrap_bound_draws(const ClassDataset& data, const CoefEstimate& est, std::size_t draws,
                                             const RngSeed& seed, const BoundOptions& options) {
    std::vector<BoundDraw> out(draws);
    parallel_for(draws, options.threads, [&](std::size_t b) {
        const RngSeed stream = seed.child(b);
        const auto k = multiplicities(bootstrap_indices(data.n(), stream.child(0)), data.n());
        BoundOptions local = options;
        local.sign.seed = stream.child(1);
        try {
            const CoefEstimate est_b = fit_least_squares(data, k, options.fit);
            out[b] = centered_bound_draw(data, est, k, est_b, local);
        } catch (const EstimationError& e) {
            out[b].skipped = true;
            out[b].skipped_reason = std::string("fit: ") + e.what();
        } catch (const AssumptionError& e) {
            out[b].skipped = true;
            out[b].skipped_reason = std::string("assumption: ") + e.what();
        }
    });
    return out;
}

double nearest_rank_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(q * static_cast<double>(values.size()) - 1e-9);
    const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(values.size()))) - 1;
    return values[idx];
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q) {
    if (values.empty() || values.size() != weights.size()) throw ValidationError("weighted quantile: bad input");
    if (std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights.front(); })) {
        return nearest_rank_quantile(std::vector<double>(values.begin(), values.end()), q);
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double cum = 0.0;
    for (auto i : order) {
        cum += weights[i];
        if (cum >= q * total) return values[i];
    }
    return values[order.back()];
}

BoundInterval bound_interval_from_draws(const ClassDataset& data, const CoefEstimate& est, double alpha,
                                        std::vector<BoundDraw> draws) {
    check_alpha(alpha);
    BoundInterval out;
    std::vector<double> lower, upper;
    for (const auto& d : draws) {
        if (d.skipped) {
            ++out.skipped;
            continue;
        }
        lower.push_back(d.lower);
        upper.push_back(d.upper);
        if (!(d.lower <= d.statistic && d.statistic <= d.upper)) ++out.sandwich_violations;
    }
    check_skipped(out.skipped, draws.size());
    const double root_n = std::sqrt(static_cast<double>(data.n()));
    out.estimate = empirical_misclass(data, est.beta);
    out.upper_quantile = nearest_rank_quantile(upper, 1.0 - alpha / 2.0);
    out.lower_quantile = nearest_rank_quantile(lower, alpha / 2.0);
    out.interval = {std::clamp(out.estimate - out.upper_quantile / root_n, 0.0, 1.0),
                    std::clamp(out.estimate - out.lower_quantile / root_n, 0.0, 1.0)};
    out.draws = std::move(draws);
    return out;
}

BoundInterval bootstrap_ci_M(const ClassDataset& data, double alpha, std::size_t draws, const RngSeed& seed,
                             const BoundOptions& options) {
    check_alpha(alpha);
    if (draws < 100) throw ValidationError("bootstrap interval needs B >= 100");
    const CoefEstimate est = fit_least_squares(data, options.fit);
    return bound_interval_from_draws(data, est, alpha, bootstrap_bound_draws(data, est, draws, seed, options));
}

std::vector<double> kernel_weights(const std::vector<BoundDraw>& draws, const Eigen::VectorXd& beta,
                                   const KernelConfig& kernel) {
    const auto p = beta.size();
    std::vector<const BoundDraw*> used;
    for (const auto& d : draws) {
        if (!d.skipped) used.push_back(&d);
    }
    if (used.empty()) throw EstimationError("no usable bootstrap draws");
    Eigen::VectorXd h = kernel.bandwidths;
    if (h.size() != 0 && !(h.array() > 0.0).all()) throw ValidationError("kernel bandwidths must be positive");
    if (h.size() == 0) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(p), m2 = Eigen::VectorXd::Zero(p);
        for (std::size_t i = 0; i < used.size(); ++i) {
            const Eigen::VectorXd delta = used[i]->beta_b - mean;
            mean += delta / static_cast<double>(i + 1);
            m2 += delta.cwiseProduct(used[i]->beta_b - mean);
        }
        const double count = static_cast<double>(used.size());
        const Eigen::VectorXd sd = (m2 / std::max(1.0, count - 1.0)).cwiseSqrt();
        h = 1.06 * sd * std::pow(count, -0.2);
    }
    if (h.size() != p) throw ValidationError("kernel bandwidths have wrong dimension");
    std::vector<double> w;
    w.reserve(used.size());
    for (const auto* d : used) {
        double weight = 1.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double diff = d->beta_b(j) - beta(j);
            if (std::isinf(h(j))) continue;
            if (h(j) == 0.0) {
                if (diff != 0.0) weight = 0.0;
                continue;
            }
            const double u = diff / h(j);
            weight *= std::exp(-0.5 * u * u);
        }
        w.push_back(weight);
    }
    return w;
}

BoundInterval conditional_interval_from_draws(const ClassDataset& data, const CoefEstimate& est, double alpha,
                                              std::vector<BoundDraw> draws, const KernelConfig& kernel) {
    check_alpha(alpha);
    BoundInterval out;
    std::vector<double> lower, upper;
    for (const auto& d : draws) {
        if (d.skipped) {
            ++out.skipped;
            continue;
        }
        lower.push_back(d.lower);
        upper.push_back(d.upper);
        if (!(d.lower <= d.statistic && d.statistic <= d.upper)) ++out.sandwich_violations;
    }
    check_skipped(out.skipped, draws.size());
    const auto w = kernel_weights(draws, est.beta, kernel);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    const double sum2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    if (!(sum > 0.0) || sum * sum / sum2 < 10.0) {
        throw EstimationError("kernel bandwidth too small: effective number of draws below 10");
    }
    const double root_n = std::sqrt(static_cast<double>(data.n()));
    out.estimate = empirical_misclass(data, est.beta);
    out.upper_quantile = weighted_quantile(upper, w, 1.0 - alpha / 2.0);
    out.lower_quantile = weighted_quantile(lower, w, alpha / 2.0);
    out.interval = {std::clamp(out.estimate - out.upper_quantile / root_n, 0.0, 1.0),
                    std::clamp(out.estimate - out.lower_quantile / root_n, 0.0, 1.0)};
    out.draws = std::move(draws);
    return out;
}

BoundInterval conditional_ci_M(const ClassDataset& data, double alpha, std::size_t draws, const RngSeed& seed,
                               const KernelConfig& kernel, const BoundOptions& options) {
    check_alpha(alpha);
    if (draws < 500) throw ValidationError("conditional interval needs B >= 500");
    const CoefEstimate est = fit_least_squares(data, options.fit);
    return conditional_interval_from_draws(data, est, alpha, bootstrap_bound_draws(data, est, draws, seed, options),
                                           kernel);
}

GammaEstimate mn_gamma_estimate(const ClassDataset& data, std::size_t draws, const RngSeed& seed, TieRule tie,
                                const FitOptions& fit) {
    if (draws < 50) throw ValidationError("M_n(Gamma) estimate needs at least 50 resamples");
    const auto n = data.n();
    GammaEstimate out;
    double total = 0.0;
    for (std::size_t b = 0; b < draws; ++b) {
        const auto k = multiplicities(bootstrap_indices(n, seed.child(b)), n);
        CoefEstimate est_b;
        try {
            est_b = fit_least_squares(data, k, fit);
        } catch (const EstimationError&) {
            ++out.failed;
            continue;
        }
        const Eigen::VectorXd margin = data.y().cwiseProduct(data.x() * est_b.beta);
        double errors = 0.0;
        for (Eigen::Index i = 0; i < margin.size(); ++i) {
            if (margin(i) < 0.0) {
                errors += 1.0;
            } else if (margin(i) == 0.0 && tie == TieRule::randomized_half) {
                errors += 0.5;
            }
        }
        total += errors / static_cast<double>(n);
        out.betas.push_back(std::move(est_b.beta));
    }
    check_skipped(out.failed, draws);
    out.value = total / static_cast<double>(out.betas.size());
    return out;
}

namespace {

// sqrt(n) sum_{near i} [ k_i/n * mean_j 1{a1_ij < -t_i} - 1/n * mean_j 1{a2_ij < -t_i} ], t_i = u_i'beta.
struct ShiftedObjective {
    Eigen::MatrixXd u;  // p x near
    std::vector<std::vector<double>> boot_shift;
    std::vector<std::vector<double>> base_shift;
    std::vector<double> boot_weight;
    double base_weight = 0.0;

    double operator()(const Eigen::VectorXd& beta) const {
        const Eigen::VectorXd t = u.transpose() * beta;
        double total = 0.0;
        for (std::size_t i = 0; i < boot_shift.size(); ++i) {
            const double cut = -t(static_cast<Eigen::Index>(i));
            const auto& a1 = boot_shift[i];
            const auto& a2 = base_shift[i];
            const double c1 = static_cast<double>(std::lower_bound(a1.begin(), a1.end(), cut) - a1.begin());
            const double c2 = static_cast<double>(std::lower_bound(a2.begin(), a2.end(), cut) - a2.begin());
            total += boot_weight[i] * c1 / static_cast<double>(a1.size()) -
                     base_weight * c2 / static_cast<double>(a2.size());
        }
        return total;
    }
};

}  // namespace

LearningCurveInterval learning_curve_ci(const ClassDataset& data, double alpha, std::size_t outer_draws,
                                        std::size_t inner_draws, const RngSeed& seed,
                                        const LearningCurveOptions& options) {
    check_alpha(alpha);
    if (outer_draws < 100) throw ValidationError("learning-curve interval needs B_outer >= 100");
    if (inner_draws < 25) throw ValidationError("learning-curve interval needs B_inner >= 25");
    const auto n = data.n();
    const auto p = static_cast<Eigen::Index>(data.p());
    const double root_n = std::sqrt(static_cast<double>(n));
    const double lambda = resolve_lambda(options.lambda, n);
    const CoefEstimate est = fit_least_squares(data, options.fit);
    const Eigen::MatrixXd u = (data.y().asDiagonal() * data.x()).transpose();

    // First level: resamples of the data approximate the sampling distribution of the fit.
    const GammaEstimate first = mn_gamma_estimate(data, std::max<std::size_t>(inner_draws, 50), seed.child(0), TieRule::strict, options.fit);
    const auto j_first = first.betas.size();
    std::vector<double> base_rate(n, 0.0);
    Eigen::MatrixXd base_shift_dir(p, static_cast<Eigen::Index>(j_first));
    for (std::size_t j = 0; j < j_first; ++j) {
        base_shift_dir.col(static_cast<Eigen::Index>(j)) = root_n * (first.betas[j] - est.beta);
        const Eigen::VectorXd margin = u.transpose() * first.betas[j];
        for (std::size_t i = 0; i < n; ++i) {
            if (margin(static_cast<Eigen::Index>(i)) < 0.0) base_rate[i] += 1.0 / static_cast<double>(j_first);
        }
    }
    const Eigen::MatrixXd base_proj = u.transpose() * base_shift_dir;  // n x J

    const Eigen::LLT<Eigen::MatrixXd> chol(est.sigma);
    const Eigen::MatrixXd scale_factor = chol.info() == Eigen::Success
                                             ? Eigen::MatrixXd(chol.matrixL())
                                             : Eigen::MatrixXd(Eigen::MatrixXd::Identity(p, p));
    const Eigen::VectorXd hint = root_n * est.beta;

    LearningCurveInterval out;
    out.estimate = first.value;
    out.draws.resize(outer_draws);
    parallel_for(outer_draws, options.threads, [&](std::size_t b) {
        LearningCurveDraw& draw = out.draws[b];
        const RngSeed stream = seed.child(1).child(b);
        try {
            auto eng = stream.child(0).engine();
            const auto idx = bootstrap_indices(n, eng);
            const auto k = multiplicities(idx, n);
            const CoefEstimate est_b = fit_least_squares(data, k, options.fit);
            const CoefEstimate& split_fit = options.partition == PartitionSource::bootstrap ? est_b : est;
            const auto partition = boundary_partition(data.x(), split_fit.beta, split_fit.sigma, lambda);

            // Second level: resamples of the resample.
            std::vector<Eigen::VectorXd> inner;
            std::size_t failed = 0;
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (std::size_t j = 0; j < inner_draws; ++j) {
                std::vector<int> kk(n, 0);
                for (std::size_t r = 0; r < n; ++r) ++kk[idx[pick(eng)]];
                try {
                    inner.push_back(fit_least_squares(data, kk, options.fit).beta);
                } catch (const EstimationError&) {
                    ++failed;
                }
            }
            check_skipped(failed, inner_draws);
            const auto j_inner = inner.size();
            Eigen::MatrixXd boot_dir(p, static_cast<Eigen::Index>(j_inner));
            std::vector<double> boot_rate(n, 0.0);
            for (std::size_t j = 0; j < j_inner; ++j) {
                boot_dir.col(static_cast<Eigen::Index>(j)) = root_n * (inner[j] - est.beta);
                const Eigen::VectorXd margin = u.transpose() * inner[j];
                for (std::size_t i = 0; i < n; ++i) {
                    if (margin(static_cast<Eigen::Index>(i)) < 0.0) boot_rate[i] += 1.0 / static_cast<double>(j_inner);
                }
            }
            double far = 0.0;
            ShiftedObjective objective;
            const auto near = partition.near_indices();
            objective.u.resize(p, static_cast<Eigen::Index>(near.size()));
            objective.base_weight = 1.0 / root_n;
            for (std::size_t i = 0; i < n; ++i) {
                if (partition.is_near(i)) continue;
                far += (k[i] * boot_rate[i] - base_rate[i]) / root_n;
            }
            const Eigen::MatrixXd boot_proj = u.transpose() * boot_dir;
            for (std::size_t t = 0; t < near.size(); ++t) {
                const auto i = static_cast<Eigen::Index>(near[t]);
                objective.u.col(static_cast<Eigen::Index>(t)) = u.col(i);
                std::vector<double> a1(j_inner);
                for (std::size_t j = 0; j < j_inner; ++j) a1[j] = boot_proj(i, static_cast<Eigen::Index>(j));
                std::vector<double> a2(j_first);
                for (std::size_t j = 0; j < j_first; ++j) a2[j] = base_proj(i, static_cast<Eigen::Index>(j));
                std::sort(a1.begin(), a1.end());
                std::sort(a2.begin(), a2.end());
                objective.boot_shift.push_back(std::move(a1));
                objective.base_shift.push_back(std::move(a2));
                objective.boot_weight.push_back(k[near[t]] / root_n);
            }

            const double at_hint = objective(hint);
            double sup = at_hint, inf = at_hint;
            std::normal_distribution<double> norm(0.0, 1.0);
            const double scales[] = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
            const double far_radius = 1e6 * (1.0 + hint.norm() + scale_factor.norm());
            Eigen::VectorXd g(p);
            for (std::size_t c = 0; c < options.n_candidates; ++c) {
                for (Eigen::Index j = 0; j < p; ++j) g(j) = norm(eng);
                Eigen::VectorXd beta;
                if (c % 8 == 7) {
                    beta = far_radius * g / std::max(g.norm(), 1e-300);
                } else {
                    beta = hint + scales[c % 7] * (scale_factor * g);
                }
                const double v = objective(beta);
                sup = std::max(sup, v);
                inf = std::min(inf, v);
            }
            draw.upper = far + sup;
            draw.lower = far + inf;
            draw.statistic = far + at_hint;
            draw.n_near = near.size();
        } catch (const EstimationError& e) {
            draw.skipped = true;
            draw.skipped_reason = std::string("fit: ") + e.what();
        } catch (const AssumptionError& e) {
            draw.skipped = true;
            draw.skipped_reason = std::string("assumption: ") + e.what();
        }
    });

    std::vector<double> lower, upper;
    for (const auto& d : out.draws) {
        if (d.skipped) {
            ++out.skipped;
            continue;
        }
        if (!(d.lower <= d.upper)) ++out.order_violations;
        lower.push_back(d.lower);
        upper.push_back(d.upper);
    }
    check_skipped(out.skipped, outer_draws);
    out.upper_quantile = nearest_rank_quantile(upper, 1.0 - alpha / 2.0);
    out.lower_quantile = nearest_rank_quantile(lower, alpha / 2.0);
    out.interval = {std::clamp(out.estimate - out.upper_quantile / root_n, 0.0, 1.0),
                    std::clamp(out.estimate - out.lower_quantile / root_n, 0.0, 1.0)};
    return out;
}

void write_draws_csv(std::ostream& out, const std::vector<BoundDraw>& draws, std::optional<double> value_scale) {
    out << "draw,L,U,n_near,skipped_reason";
    if (value_scale) out << ",value_scale";
    out << '\n';
    out.precision(17);
    for (std::size_t b = 0; b < draws.size(); ++b) {
        const auto& d = draws[b];
        std::string reason = d.skipped_reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        std::replace(reason.begin(), reason.end(), '\n', ' ');
        out << b << ',';
        if (d.skipped) {
            out << ",,";
        } else {
            out << d.lower << ',' << d.upper << ',';
        }
        out << d.n_near << ',' << reason;
        if (value_scale) out << ',' << *value_scale;
        out << '\n';
    }
}

}  // namespace nonreg

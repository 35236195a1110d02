#include "nonreg/itr.hpp"

#include "nonreg/error.hpp"
#include "nonreg/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace nonreg {

double default_rho(std::size_t n) {
    if (n < 2) throw ValidationError("rho default needs n >= 2");
    return std::log(static_cast<double>(n));
}

double z_statistic(const Eigen::VectorXd& x1, const QCoefEstimate& qest) {
    if (x1.size() != qest.beta1.size()) throw ValidationError("x1 dimension does not match interaction coefficients");
    const double scale = x1.dot(qest.r_hat * x1);
    if (!(scale > 1e-12)) throw AssumptionError("x1'R x1 is numerically zero");
    const double fit = x1.dot(qest.beta1);
    return static_cast<double>(qest.n) * fit * fit / scale;
}

NearBoundaryPartition value_partition(const Eigen::MatrixXd& x1, const Eigen::VectorXd& beta1,
                                      const Eigen::MatrixXd& r_hat, std::size_t n, double rho) {
    if (!(rho >= 0.0)) throw ValidationError("rho must be non-negative");
    NearBoundaryPartition part = boundary_partition(x1, beta1, r_hat, 0.0);
    part.lambda = rho;
    for (Eigen::Index i = 0; i < x1.rows(); ++i) {
        part.statistic(i) *= static_cast<double>(n);
        part.near[static_cast<std::size_t>(i)] = part.statistic(i) <= rho ? 1 : 0;
    }
    return part;
}

ValueBoundDraw value_bound_draw(const DecisionDataset& data, const QCoefEstimate& qest, const Eigen::VectorXd& pi,
                                std::span<const int> multiplicity, const QCoefEstimate& qest_b,
                                const Eigen::VectorXd& pi_b, const ValueBoundOptions& options) {
    const auto n = data.n();
    if (multiplicity.size() != n) throw ValidationError("multiplicity vector has wrong length");
    if (pi.size() != static_cast<Eigen::Index>(n) || pi_b.size() != static_cast<Eigen::Index>(n)) {
        throw ValidationError("propensity vector has wrong length");
    }
    const double rho = std::isnan(options.rho) ? default_rho(n) : options.rho;
    const QCoefEstimate& split_fit = options.partition == PartitionSource::bootstrap ? qest_b : qest;
    const auto partition = value_partition(data.x1(), split_fit.beta1, split_fit.r_hat, n, rho);
    const Eigen::MatrixXd normals = -(data.a().asDiagonal() * data.x1()).transpose();
    const double root_n = std::sqrt(static_cast<double>(n));
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        w(r) = (multiplicity[i] / pi_b(r) - 1.0 / pi(r)) * data.y()(r) / root_n;
    }
    const BoundPair pair = weighted_bound(normals, w, partition.near, qest_b.beta1, options.sign);
    ValueBoundDraw draw;
    draw.lower = pair.lower;
    draw.upper = pair.upper;
    draw.statistic = pair.statistic;
    draw.n_near = pair.n_near;
    draw.beta_b = qest_b.beta1;
    return draw;
}

std::vector<ValueBoundDraw> bootstrap_value_draws(const DecisionDataset& data, const QCoefEstimate& qest,
                                                  const PropensityModel& propensity, std::size_t draws,
                                                  const RngSeed& seed, const ValueBoundOptions& options) {
    const Eigen::VectorXd pi = evaluate_propensities(propensity, data).pi;
    const bool refit = propensity.kind() == PropensityModel::Kind::logistic_fit;
    std::vector<ValueBoundDraw> out(draws);
    parallel_for(draws, options.threads, [&](std::size_t b) {
        const RngSeed stream = seed.child(b);
        const auto k = multiplicities(bootstrap_indices(data.n(), stream.child(0)), data.n());
        ValueBoundOptions local = options;
        local.sign.seed = stream.child(1);
        try {
            const QCoefEstimate qest_b = fit_q_model(data, k, options.fit);
            const Eigen::VectorXd pi_b =
                refit ? evaluate_propensities(PropensityModel::logistic(data, k), data).pi : pi;
            out[b] = value_bound_draw(data, qest, pi, k, qest_b, pi_b, local);
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

ValueBoundInterval bootstrap_ci_V(const DecisionDataset& data, double alpha, std::size_t draws, const RngSeed& seed,
                                  const PropensityModel& propensity, const ValueBoundOptions& options) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (draws < 100) throw ValidationError("bootstrap interval needs B >= 100");
    const QCoefEstimate qest = fit_q_model(data, options.fit);
    const Eigen::VectorXd pi = evaluate_propensities(propensity, data).pi;
    ValueBoundInterval out;
    out.draws = bootstrap_value_draws(data, qest, propensity, draws, seed, options);
    std::vector<double> lower, upper;
    for (const auto& d : out.draws) {
        if (d.skipped) {
            ++out.skipped;
            continue;
        }
        lower.push_back(d.lower);
        upper.push_back(d.upper);
        if (!(d.lower <= d.statistic && d.statistic <= d.upper)) ++out.sandwich_violations;
    }
    if (static_cast<double>(out.skipped) > 0.05 * static_cast<double>(draws)) {
        throw EstimationError(std::to_string(out.skipped) + " of " + std::to_string(draws) +
                              " bootstrap draws failed (more than 5%)");
    }
    out.value_scale = data.y().cwiseQuotient(pi).cwiseAbs().mean();
    const double root_n = std::sqrt(static_cast<double>(data.n()));
    out.estimate = empirical_value(data, qest.beta1, pi).value;
    out.upper_quantile = nearest_rank_quantile(upper, 1.0 - alpha / 2.0);
    out.lower_quantile = nearest_rank_quantile(lower, alpha / 2.0);
    out.interval = {out.estimate - out.upper_quantile / root_n, out.estimate - out.lower_quantile / root_n};
    return out;
}

}  // namespace nonreg

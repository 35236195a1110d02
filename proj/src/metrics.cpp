#include "nonreg/metrics.hpp"

#include "nonreg/distributions.hpp"
#include "nonreg/error.hpp"

#include <algorithm>
#include <cmath>

namespace nonreg {

namespace {

void check_dim(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
    if (x.cols() != beta.size()) throw ValidationError("coefficient dimension does not match features");
}

void check_partition(const ClassDataset& data, const NearBoundaryPartition& partition) {
    if (partition.size() != data.n()) throw ValidationError("partition size does not match dataset");
}

double g_summand(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                 const NearBoundaryPartition& partition, Eigen::Index i) {
    const Eigen::VectorXd& b = partition.is_near(static_cast<std::size_t>(i)) ? beta : beta_hat;
    return data.y()(i) * data.x().row(i).dot(b) < 0.0 ? 1.0 : 0.0;
}

}  // namespace

double empirical_misclass(const ClassDataset& data, const Eigen::VectorXd& beta) {
    check_dim(data.x(), beta);
    const Eigen::VectorXd margin = data.y().cwiseProduct(data.x() * beta);
    return static_cast<double>((margin.array() < 0.0).count()) / static_cast<double>(data.n());
}

double misclass_sd(double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw ValidationError("misclassification rate outside [0, 1]");
    return std::sqrt(m * (1.0 - m));
}

double smooth_surrogate(const ClassDataset& data, const Eigen::VectorXd& beta, double tau) {
    check_dim(data.x(), beta);
    if (!(tau > 0.0)) throw ValidationError("tau must be positive");
    const Eigen::VectorXd margin = data.y().cwiseProduct(data.x() * beta);
    double total = 0.0;
    for (Eigen::Index i = 0; i < margin.size(); ++i) total += expit(-tau * margin(i));
    return total / static_cast<double>(data.n());
}

std::size_t NearBoundaryPartition::near_count() const {
    return static_cast<std::size_t>(std::count(near.begin(), near.end(), char{1}));
}

std::vector<std::size_t> NearBoundaryPartition::near_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < near.size(); ++i) {
        if (near[i]) out.push_back(i);
    }
    return out;
}

NearBoundaryPartition boundary_partition(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                                         const Eigen::MatrixXd& sigma, double lambda) {
    check_dim(x, beta);
    if (sigma.rows() != beta.size() || sigma.cols() != beta.size()) {
        throw ValidationError("covariance dimension does not match coefficients");
    }
    if (!(lambda >= 0.0)) throw ValidationError("lambda must be non-negative");
    NearBoundaryPartition part;
    part.lambda = lambda;
    part.near.resize(static_cast<std::size_t>(x.rows()));
    part.statistic.resize(x.rows());
    const Eigen::VectorXd fit = x * beta;
    const Eigen::VectorXd scale = (x * sigma).cwiseProduct(x).rowwise().sum();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (!(scale(i) > 1e-12)) {
            throw AssumptionError("x'Sigma x is numerically zero at row " + std::to_string(i + 1));
        }
        part.statistic(i) = fit(i) * fit(i) / scale(i);
        part.near[static_cast<std::size_t>(i)] = part.statistic(i) <= lambda ? 1 : 0;
    }
    return part;
}

NearBoundaryPartition boundary_test_statistics(const ClassDataset& data, const CoefEstimate& est, double lambda) {
    return boundary_partition(data.x(), est.beta, est.sigma, lambda);
}

double empirical_G(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                   const NearBoundaryPartition& partition) {
    check_dim(data.x(), beta_hat);
    check_dim(data.x(), beta);
    check_partition(data, partition);
    double total = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(data.n()); ++i) {
        total += g_summand(data, beta_hat, beta, partition, i);
    }
    return total / static_cast<double>(data.n());
}

double rho_hat(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
               const NearBoundaryPartition& partition) {
    const double g = empirical_G(data, beta_hat, beta, partition);
    return std::sqrt(std::max(0.0, g * (1.0 - g)));
}

double rho_bootstrap(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                     const NearBoundaryPartition& partition, std::size_t draws, const RngSeed& seed) {
    check_partition(data, partition);
    if (draws < 2) throw ValidationError("bootstrap standard deviation needs at least 2 draws");
    const auto n = data.n();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = g_summand(data, beta_hat, beta, partition, static_cast<Eigen::Index>(i));
    double mean = 0.0, m2 = 0.0;
    for (std::size_t b = 0; b < draws; ++b) {
        const auto idx = bootstrap_indices(n, seed.child(b));
        double g = 0.0;
        for (auto i : idx) g += v[i];
        g /= static_cast<double>(n);
        const double d = g - mean;
        mean += d / static_cast<double>(b + 1);
        m2 += d * (g - mean);
    }
    return std::sqrt(static_cast<double>(n) * m2 / static_cast<double>(draws - 1));
}

bool value_indicator(ValueIndicator indicator, double a, double margin) {
    switch (indicator) {
        case ValueIndicator::strict_margin:
            return -a * margin < 0.0;
        case ValueIndicator::rule_match:
            return (margin >= 0.0 ? 1.0 : -1.0) == a;
        case ValueIndicator::rule_not_opposite:
            return (margin >= 0.0 ? 1.0 : -1.0) != -a;
    }
    return false;
}

ValueEstimate empirical_value(const DecisionDataset& data, const Eigen::VectorXd& beta1, const Eigen::VectorXd& pi,
                              ValueIndicator indicator) {
    check_dim(data.x1(), beta1);
    if (pi.size() != static_cast<Eigen::Index>(data.n())) throw ValidationError("propensity vector has wrong length");
    const Eigen::VectorXd margin = data.x1() * beta1;
    const auto n = static_cast<Eigen::Index>(data.n());
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        w(i) = value_indicator(indicator, data.a()(i), margin(i)) ? data.y()(i) / pi(i) : 0.0;
    }
    ValueEstimate out;
    out.value = w.mean();
    out.sd = std::sqrt((w.array() - out.value).square().mean());
    return out;
}

ValueEstimate empirical_value(const DecisionDataset& data, const Eigen::VectorXd& beta1,
                              const PropensityModel& propensity, ValueIndicator indicator) {
    const auto pv = evaluate_propensities(propensity, data);
    ValueEstimate out = empirical_value(data, beta1, pv.pi, indicator);
    out.clip_count = pv.clip_count;
    out.clip_warning = static_cast<double>(pv.clip_count) > 0.1 * static_cast<double>(data.n());
    return out;
}

}  // namespace nonreg

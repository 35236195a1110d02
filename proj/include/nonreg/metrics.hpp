#pragma once

#include "nonreg/data.hpp"
#include "nonreg/estimators.hpp"
#include "nonreg/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

namespace nonreg {

inline constexpr double kDefaultTau = 3.0;

/// log(n) / n: vanishes while n * lambda diverges.
inline double default_lambda(std::size_t n) {
    return std::log(static_cast<double>(n)) / static_cast<double>(n);
}

/// P_n 1{Y X'beta < 0}.
double empirical_misclass(const ClassDataset& data, const Eigen::VectorXd& beta);

/// sqrt(m (1 - m)).
double misclass_sd(double m);

/// P_n expit(-tau Y X'beta).
double smooth_surrogate(const ClassDataset& data, const Eigen::VectorXd& beta, double tau = kDefaultTau);

/// Split of the sample by T(x) = (x'beta)^2 / (x'Sigma x) <= lambda.
struct NearBoundaryPartition {
    std::vector<char> near;
    Eigen::VectorXd statistic;
    double lambda = 0.0;

    std::size_t size() const noexcept { return near.size(); }
    bool is_near(std::size_t i) const { return near[i] != 0; }
    std::size_t near_count() const;
    std::vector<std::size_t> near_indices() const;
};

/// Partition of the rows of `x`. Throws AssumptionError when some x'Sigma x <= 1e-12.
NearBoundaryPartition boundary_partition(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                                         const Eigen::MatrixXd& sigma, double lambda);

NearBoundaryPartition boundary_test_statistics(const ClassDataset& data, const CoefEstimate& est, double lambda);

/// P_n[1{Y X'beta_hat < 0} 1{far} + 1{Y X'beta < 0} 1{near}].
double empirical_G(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                   const NearBoundaryPartition& partition);

/// Plug-in standard deviation of the summands of empirical_G.
double rho_hat(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
               const NearBoundaryPartition& partition);

/// sqrt(n) times the bootstrap standard deviation of empirical_G with the partition held fixed.
double rho_bootstrap(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                     const NearBoundaryPartition& partition, std::size_t draws, const RngSeed& seed);

/// How a decision rule is matched against the observed action.
enum class ValueIndicator {
    /// 1{-A x1'beta < 0}; an exact zero margin never matches.
    strict_margin,
    /// 1{d(X) = A} with d(x) = sign(x1'beta), sign(0) = +1.
    rule_match,
    /// 1{d(X) != -A}.
    rule_not_opposite,
};

struct ValueEstimate {
    double value = 0.0;
    /// Plug-in standard deviation of the weighted summands.
    double sd = 0.0;
    std::size_t clip_count = 0;
    /// Set when more than 10% of propensities were clipped.
    bool clip_warning = false;
};

/// Inverse-probability-weighted value P_n[Y 1{rule matches A} / pi(A; X)].
ValueEstimate empirical_value(const DecisionDataset& data, const Eigen::VectorXd& beta1,
                              const PropensityModel& propensity,
                              ValueIndicator indicator = ValueIndicator::strict_margin);

/// Same with the propensities of the observed actions already evaluated.
ValueEstimate empirical_value(const DecisionDataset& data, const Eigen::VectorXd& beta1, const Eigen::VectorXd& pi,
                              ValueIndicator indicator = ValueIndicator::strict_margin);

bool value_indicator(ValueIndicator indicator, double a, double margin);

}  // namespace nonreg

#pragma once

#include "nonreg/bounds.hpp"
#include "nonreg/data.hpp"
#include "nonreg/estimators.hpp"
#include "nonreg/metrics.hpp"
#include "nonreg/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace nonreg {

/// log(n).
double default_rho(std::size_t n);

/// n (x1'beta1)^2 / x1'R x1 for the interaction coefficients of a Q-model fit.
double z_statistic(const Eigen::VectorXd& x1, const QCoefEstimate& qest);

/// Rows whose statistic is at most rho are near the treatment boundary.
NearBoundaryPartition value_partition(const Eigen::MatrixXd& x1, const Eigen::VectorXd& beta1,
                                      const Eigen::MatrixXd& r_hat, std::size_t n, double rho);

struct ValueBoundOptions {
    /// Near-boundary threshold for the Z statistic; NaN selects log(n).
    double rho = std::numeric_limits<double>::quiet_NaN();
    PartitionSource partition = PartitionSource::bootstrap;
    SignPatternOptions sign{};
    FitOptions fit{};
    std::size_t threads = 1;
};

/// Bounds on the centered value statistic; beta_b holds the resampled interaction coefficients.
using ValueBoundDraw = BoundDraw;

/// Bounds for one resample. `pi` and `pi_b` are the propensities of the observed actions under the
/// original and resampled propensity fits.
ValueBoundDraw value_bound_draw(const DecisionDataset& data, const QCoefEstimate& qest, const Eigen::VectorXd& pi,
                                std::span<const int> multiplicity, const QCoefEstimate& qest_b,
                                const Eigen::VectorXd& pi_b, const ValueBoundOptions& options = {});

/// Draws b = 0..B-1 from streams seed.child(b). A fitted propensity model is refitted on every resample.
std::vector<ValueBoundDraw> bootstrap_value_draws(const DecisionDataset& data, const QCoefEstimate& qest,
                                                  const PropensityModel& propensity, std::size_t draws,
                                                  const RngSeed& seed, const ValueBoundOptions& options = {});

struct ValueBoundInterval {
    Interval interval;
    double estimate = 0.0;
    double lower_quantile = 0.0;
    double upper_quantile = 0.0;
    std::size_t skipped = 0;
    std::size_t sandwich_violations = 0;
    /// Mean of |y / pi|, reported with the draws.
    double value_scale = 0.0;
    std::vector<ValueBoundDraw> draws;
};

/// [V_hat - u / sqrt(n), V_hat - l / sqrt(n)] from bootstrap percentiles of the value bounds.
ValueBoundInterval bootstrap_ci_V(const DecisionDataset& data, double alpha, std::size_t draws, const RngSeed& seed,
                                  const PropensityModel& propensity, const ValueBoundOptions& options = {});

}  // namespace nonreg

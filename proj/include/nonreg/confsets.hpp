#pragma once

#include "nonreg/data.hpp"
#include "nonreg/estimators.hpp"
#include "nonreg/metrics.hpp"
#include "nonreg/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace nonreg {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

/// {beta : (beta - center)' shape (beta - center) <= radius2}.
template <typename Scalar = double>
struct Ellipsoid {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> center;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> shape;
    Scalar radius2 = 0;

    template <typename Derived>
    Scalar statistic(const Eigen::MatrixBase<Derived>& beta) const {
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d = beta - center;
        return d.dot(shape * d);
    }

    template <typename Derived>
    bool contains(const Eigen::MatrixBase<Derived>& beta, Scalar rel_tol = Scalar(1e-9)) const {
        return statistic(beta) <= radius2 * (Scalar(1) + rel_tol);
    }
};

/// Wald confidence ellipsoid n (beta_hat - beta)' Sigma^{-1} (beta_hat - beta) <= chi2_{p, 1 - eta}.
struct EllipsoidSet : Ellipsoid<double> {
    double eta = 0.05;
    /// Sigma and n, kept for sampling along the principal axes.
    Eigen::MatrixXd sigma;
    std::size_t n = 0;
};

EllipsoidSet wald_ellipsoid(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& sigma, std::size_t n, double eta);
EllipsoidSet wald_ellipsoid(const CoefEstimate& est, double eta);

/// How the union over a confidence ellipsoid is searched.
struct SearchConfig {
    std::size_t n_interior = 4096;
    std::size_t n_boundary = 512;
    /// For p <= 2, enumerate every sign pattern realized inside the ellipsoid instead of sampling.
    bool exact_low_dim = true;
    RngSeed seed{};
    std::size_t threads = 1;
};

/// Center, the 2p principal-axis end points, then uniform interior and uniform boundary draws.
std::vector<Eigen::VectorXd> ellipsoid_search_points(const EllipsoidSet& set, const SearchConfig& search);

/// Levels of a projection interval: per-coefficient alpha and ellipsoid eta, with omega = alpha + eta.
struct Split {
    double alpha = 0.05;
    double eta = 0.05;

    static Split even(double omega) { return {omega / 2.0, omega / 2.0}; }
};

/// Normal-theory interval for a rate m on n samples, truncated to [0, 1].
Interval rate_interval(double m, std::size_t n, double alpha);

/// M_hat(beta) -/+ z sigma_hat(beta) / sqrt(n), truncated to [0, 1].
Interval fixed_beta_interval(const ClassDataset& data, const Eigen::VectorXd& beta, double alpha);

Interval projection_interval(const ClassDataset& data, const CoefEstimate& est, double omega,
                             std::optional<Split> split = std::nullopt, const SearchConfig& search = {});

struct WOptions {
    /// Replace the plug-in rho by sqrt(n) times the bootstrap sd of G.
    bool bootstrap_rho = false;
    std::size_t draws = 200;
    RngSeed seed{};
};

/// G_hat(beta_hat, beta) -/+ z rho_hat(beta) / sqrt(n), truncated to [0, 1].
Interval w_interval(const ClassDataset& data, const CoefEstimate& est, const Eigen::VectorXd& beta, double lambda,
                    double alpha, const WOptions& options = {});

/// Same with the partition already computed.
Interval w_interval(const ClassDataset& data, const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                    const NearBoundaryPartition& partition, double alpha, const WOptions& options = {});

Interval adaptive_projection_interval(const ClassDataset& data, const CoefEstimate& est, double omega,
                                      std::optional<Split> split, double lambda, const SearchConfig& search = {},
                                      const WOptions& options = {});

/// V_hat(beta1) -/+ z varsigma_hat(beta1) / sqrt(n).
Interval value_fixed_interval(const DecisionDataset& data, const Eigen::VectorXd& beta1,
                              const PropensityModel& propensity, double alpha);
Interval value_fixed_interval(const DecisionDataset& data, const Eigen::VectorXd& beta1, const Eigen::VectorXd& pi,
                              double alpha);

/// Union of value_fixed_interval over the Wald ellipsoid for the interaction coefficients.
Interval value_projection_interval(const DecisionDataset& data, const QCoefEstimate& qest,
                                   const PropensityModel& propensity, double omega,
                                   std::optional<Split> split = std::nullopt, const SearchConfig& search = {});

}  // namespace nonreg

#pragma once

#include "nonreg/confsets.hpp"
#include "nonreg/data.hpp"
#include "nonreg/estimators.hpp"
#include "nonreg/metrics.hpp"
#include "nonreg/rng.hpp"
#include "nonreg/sign_pattern.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nonreg {

/// Which fit defines the near/far split inside a bootstrap draw.
enum class PartitionSource { bootstrap, original };

struct BoundOptions {
    /// Near-boundary threshold; NaN selects log(n) / n.
    double lambda = std::numeric_limits<double>::quiet_NaN();
    PartitionSource partition = PartitionSource::bootstrap;
    /// Restrict the sup/inf to the Wald ellipsoid of the draw (p = 2 only) instead of all of R^p.
    bool ellipsoid_restricted = false;
    double restriction_eta = 0.05;
    SignPatternOptions sign{};
    FitOptions fit{};
    std::size_t threads = 1;
};

/// One bootstrap realization of the centered lower and upper bounds.
struct BoundDraw {
    double lower = 0.0;
    double upper = 0.0;
    /// The centered statistic at the resampled coefficients; lower <= statistic <= upper.
    double statistic = 0.0;
    Eigen::VectorXd beta_b;
    std::size_t n_near = 0;
    bool skipped = false;
    std::string skipped_reason;
};

/// Far-part plus sup (inf) over the near part of sum_i w_i 1{n_i'beta < 0}, with `hint` used for the far
/// part and offered to the optimizer. Shared by the classification and value bounds.
struct BoundPair {
    double lower = 0.0;
    double upper = 0.0;
    double statistic = 0.0;
    std::size_t n_near = 0;
};

BoundPair weighted_bound(const Eigen::MatrixXd& normals, const Eigen::VectorXd& weights,
                         const std::vector<char>& near, const Eigen::VectorXd& hint, const SignPatternOptions& sign,
                         const std::optional<AngleWindow>& window = std::nullopt, bool include_origin = true);

/// Bounds for one resample given by its multiplicities. `est_b` is the fit on that resample.
BoundDraw centered_bound_draw(const ClassDataset& data, const CoefEstimate& est, std::span<const int> multiplicity,
                              const CoefEstimate& est_b, const BoundOptions& options = {});

/// Draws b = 0..B-1 from streams seed.child(b). Failed fits become skipped draws.
std::vector<BoundDraw> bootstrap_bound_draws(const ClassDataset& data, const CoefEstimate& est, std::size_t draws,
                                             const RngSeed& seed, const BoundOptions& options = {});

struct BoundInterval {
    Interval interval;
    double estimate = 0.0;
    double lower_quantile = 0.0;
    double upper_quantile = 0.0;
    std::size_t skipped = 0;
    std::size_t sandwich_violations = 0;
    std::vector<BoundDraw> draws;
};

/// Nearest-rank quantile: the ceil(q m)-th smallest value.
double nearest_rank_quantile(std::vector<double> values, double q);

/// Nearest-rank quantile of a weighted sample: smallest value whose cumulative weight reaches q * total.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q);

/// [M_hat(beta_hat) - u / sqrt(n), M_hat(beta_hat) - l / sqrt(n)] from bootstrap percentiles of the bounds.
BoundInterval bootstrap_ci_M(const ClassDataset& data, double alpha, std::size_t draws, const RngSeed& seed,
                             const BoundOptions& options = {});

/// Same interval rebuilt from existing draws.
BoundInterval bound_interval_from_draws(const ClassDataset& data, const CoefEstimate& est, double alpha,
                                        std::vector<BoundDraw> draws);

struct KernelConfig {
    /// Per-coordinate bandwidths; empty selects 1.06 sd_j B^{-1/5} from the bootstrap coefficients.
    /// Infinite entries give uniform weights.
    Eigen::VectorXd bandwidths;
};

/// Gaussian product-kernel weights K(B^{-1}(beta_b - beta)) for every unskipped draw.
std::vector<double> kernel_weights(const std::vector<BoundDraw>& draws, const Eigen::VectorXd& beta,
                                   const KernelConfig& kernel);

/// Conditional interval using kernel-weighted percentiles at beta_hat.
BoundInterval conditional_ci_M(const ClassDataset& data, double alpha, std::size_t draws, const RngSeed& seed,
                               const KernelConfig& kernel = {}, const BoundOptions& options = {});

BoundInterval conditional_interval_from_draws(const ClassDataset& data, const CoefEstimate& est, double alpha,
                                              std::vector<BoundDraw> draws, const KernelConfig& kernel);

/// Convention for points on the boundary x'beta = 0.
enum class TieRule {
    /// 1{Y X'beta < 0}: boundary points are correct.
    strict,
    /// Boundary points count one half.
    randomized_half,
};

struct GammaEstimate {
    double value = 0.0;
    std::size_t failed = 0;
    /// One fitted coefficient vector per successful resample.
    std::vector<Eigen::VectorXd> betas;
};

/// (1/B) sum_b P_n 1{Y X'beta_b < 0} over B resampled fits.
GammaEstimate mn_gamma_estimate(const ClassDataset& data, std::size_t draws, const RngSeed& seed,
                                TieRule tie = TieRule::strict, const FitOptions& fit = {});

struct LearningCurveOptions {
    double lambda = std::numeric_limits<double>::quiet_NaN();
    PartitionSource partition = PartitionSource::bootstrap;
    /// Candidate coefficients tried in each inner supremum.
    std::size_t n_candidates = 1024;
    FitOptions fit{};
    std::size_t threads = 1;
};

struct LearningCurveDraw {
    double lower = 0.0;
    double upper = 0.0;
    double statistic = 0.0;
    std::size_t n_near = 0;
    bool skipped = false;
    std::string skipped_reason;
};

struct LearningCurveInterval {
    Interval interval;
    double estimate = 0.0;
    double lower_quantile = 0.0;
    double upper_quantile = 0.0;
    std::size_t skipped = 0;
    std::size_t order_violations = 0;
    std::vector<LearningCurveDraw> draws;
};

/// Bootstrap-of-bootstrap interval for the expected error of the fitted rule over training sets of size n.
LearningCurveInterval learning_curve_ci(const ClassDataset& data, double alpha, std::size_t outer_draws,
                                        std::size_t inner_draws, const RngSeed& seed,
                                        const LearningCurveOptions& options = {});

/// CSV with columns draw,L,U,n_near,skipped_reason (and value_scale when given).
void write_draws_csv(std::ostream& out, const std::vector<BoundDraw>& draws,
                     std::optional<double> value_scale = std::nullopt);

}  // namespace nonreg

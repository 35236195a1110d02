#pragma once

#include "nonreg/data.hpp"
#include "nonreg/rng.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <variant>

namespace nonreg {

/// Y uniform on {-1, +1}. X | Y=+1 has mean -2 with probability 1/2 - delta and +2 otherwise;
/// X | Y=-1 is centred at 0. Features are (1, X).
struct MixtureModel {
    double delta = 0.0;
    double sd_pos = 0.5;
    double sd_neg = 0.5;

    void validate() const;
};

/// Mixture whose tilt shrinks with the sample size: delta_n = min(c / sqrt(n), 1/2).
struct LocalSequence {
    double c = 1.0;
    double sd_pos = 0.5;
    double sd_neg = 0.5;

    MixtureModel at(std::size_t n) const;
    void validate() const;
};

/// Scalar X in {0, x_pos} with no intercept feature. X = 0 sits on every linear boundary.
struct AtomModel {
    double q = 0.4;
    double x_pos = 2.0;
    double p_pos_at_zero = 0.5;
    double p_pos_at_x = 0.9;

    void validate() const;
};

/// X ~ Normal(0, I_d); A = +1 with probability pi;
/// Y = gamma'(1, X) + A theta'(1, X) + noise_sd * Normal(0, 1). Both x0 and x1 are (1, X).
struct DecisionGenModel {
    Eigen::VectorXd gamma = (Eigen::VectorXd(2) << 1.0, 0.5).finished();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
    double noise_sd = 1.0;
    double pi = 0.5;

    std::size_t covariates() const noexcept { return static_cast<std::size_t>(gamma.size()) - 1; }
    void validate() const;
};

using ClassModel = std::variant<MixtureModel, LocalSequence, AtomModel>;
using ModelSpec = std::variant<MixtureModel, LocalSequence, AtomModel, DecisionGenModel>;

/// Misclassification probability under the strict indicator 1{Y X'beta < 0}, and with half of
/// the boundary mass P(X'beta = 0) added.
struct MisclassValue {
    double strict = 0.0;
    double randomized_tie = 0.0;
};

ClassDataset sample(const MixtureModel& model, std::size_t n, const RngSeed& seed);
ClassDataset sample(const LocalSequence& model, std::size_t n, const RngSeed& seed);
ClassDataset sample(const AtomModel& model, std::size_t n, const RngSeed& seed);
ClassDataset sample(const ClassModel& model, std::size_t n, const RngSeed& seed);
DecisionDataset sample(const DecisionGenModel& model, std::size_t n, const RngSeed& seed);

MisclassValue true_misclass(const MixtureModel& model, const Eigen::VectorXd& beta);
MisclassValue true_misclass(const AtomModel& model, const Eigen::VectorXd& beta);
/// `n` selects the member of a local sequence; ignored otherwise.
MisclassValue true_misclass(const ClassModel& model, const Eigen::VectorXd& beta, std::size_t n);

/// E expit(-tau Y X'beta), exact up to Gauss-Hermite quadrature error (below 1e-12).
double true_smooth_surrogate(const MixtureModel& model, const Eigen::VectorXd& beta, double tau);
double true_smooth_surrogate(const AtomModel& model, const Eigen::VectorXd& beta, double tau);
double true_smooth_surrogate(const ClassModel& model, const Eigen::VectorXd& beta, double tau, std::size_t n);

/// Least-squares projection of Y on the features under the model.
Eigen::VectorXd population_beta(const MixtureModel& model);
Eigen::VectorXd population_beta(const AtomModel& model);
Eigen::VectorXd population_beta(const ClassModel& model, std::size_t n);

/// Feature dimension of the datasets the model produces.
std::size_t feature_dim(const ClassModel& model);

/// Value of the rule d(x) = sign(x1'beta1) (sign(0) = +1) in closed form.
double true_value(const DecisionGenModel& model, const Eigen::VectorXd& beta1);

struct MonteCarloValue {
    double value = 0.0;
    double standard_error = 0.0;
};

/// Monte Carlo value of the same rule from potential outcomes.
MonteCarloValue true_value_mc(const DecisionGenModel& model, const Eigen::VectorXd& beta1, std::size_t draws,
                              const RngSeed& seed);

/// Interaction coefficients of the correctly specified Q-model: theta.
Eigen::VectorXd population_beta1(const DecisionGenModel& model);

nlohmann::json model_to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::json& j);

}  // namespace nonreg

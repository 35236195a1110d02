#pragma once

#include "nonreg/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace nonreg {

/// One classification pair. Labels are coded in {-1, +1}.
struct ClassSample {
    Eigen::VectorXd x;
    int y = 1;
};

/// Immutable classification sample stored row-wise: features (n x p) and labels in {-1, +1}.
class ClassDataset {
public:
    ClassDataset(Eigen::MatrixXd features, Eigen::VectorXd labels);

    std::size_t n() const noexcept { return static_cast<std::size_t>(x_.rows()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(x_.cols()); }
    const Eigen::MatrixXd& x() const noexcept { return x_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }
    ClassSample sample(std::size_t i) const;

    /// New dataset made of the given rows (repeats allowed).
    ClassDataset select(const std::vector<std::size_t>& rows) const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
};

struct DecisionSample {
    Eigen::VectorXd x0;
    Eigen::VectorXd x1;
    int a = 1;
    double y = 0.0;
    std::optional<double> pi;
};

/// Immutable decision sample: main-effect features x0, interaction features x1,
/// actions in {-1, +1}, outcomes, and optionally the known probability of the observed action.
class DecisionDataset {
public:
    DecisionDataset(Eigen::MatrixXd x0, Eigen::MatrixXd x1, Eigen::VectorXd a, Eigen::VectorXd y,
                    std::optional<Eigen::VectorXd> pi = std::nullopt);

    std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
    std::size_t p0() const noexcept { return static_cast<std::size_t>(x0_.cols()); }
    std::size_t p1() const noexcept { return static_cast<std::size_t>(x1_.cols()); }
    const Eigen::MatrixXd& x0() const noexcept { return x0_; }
    const Eigen::MatrixXd& x1() const noexcept { return x1_; }
    const Eigen::VectorXd& a() const noexcept { return a_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }
    const std::optional<Eigen::VectorXd>& pi() const noexcept { return pi_; }
    DecisionSample sample(std::size_t i) const;

    DecisionDataset select(const std::vector<std::size_t>& rows) const;

private:
    Eigen::MatrixXd x0_;
    Eigen::MatrixXd x1_;
    Eigen::VectorXd a_;
    Eigen::VectorXd y_;
    std::optional<Eigen::VectorXd> pi_;
};

/// Column layout of a classification CSV.
struct ClassSchema {
    std::string label = "y";
    /// Empty means every column except the label.
    std::vector<std::string> features;
    /// Prepend a constant-1 column unless a column named "intercept" is already present.
    bool add_intercept = true;
};

/// Column layout of a decision CSV. x0 and x1 default to every non-reserved column.
struct DecisionSchema {
    std::string action = "a";
    std::string outcome = "y";
    std::string propensity = "pi";
    std::vector<std::string> x0;
    std::vector<std::string> x1;
    bool add_intercept = true;
};

ClassDataset parse_class_dataset(const std::string& path, const ClassSchema& schema = {});
ClassDataset parse_class_dataset_text(const std::string& text, const ClassSchema& schema = {});
DecisionDataset parse_decision_dataset(const std::string& path, const DecisionSchema& schema = {});
DecisionDataset parse_decision_dataset_text(const std::string& text, const DecisionSchema& schema = {});

/// Indices of a nonparametric bootstrap resample of size n.
std::vector<std::size_t> bootstrap_indices(std::size_t n, Engine& engine);
std::vector<std::size_t> bootstrap_indices(std::size_t n, const RngSeed& seed);

/// Multiplicity of each original index in a resample; sums to n.
std::vector<int> multiplicities(const std::vector<std::size_t>& indices, std::size_t n);

ClassDataset bootstrap_resample(const ClassDataset& data, const RngSeed& seed);
DecisionDataset bootstrap_resample(const DecisionDataset& data, const RngSeed& seed);

}  // namespace nonreg

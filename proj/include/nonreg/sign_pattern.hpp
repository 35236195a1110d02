#pragma once

#include "nonreg/arrangement.hpp"
#include "nonreg/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace nonreg {

enum class Sense { sup, inf };

/// Objective F(beta) = sum_k c_k 1{n_k'beta < 0} over beta in R^p.
struct SignPatternProblem {
    /// p x m; column k is the normal n_k (for classification, y_k x_k).
    Eigen::MatrixXd normals;
    Eigen::VectorXd weights;
    Sense sense = Sense::sup;
    /// p == 2 only: restrict beta to directions in this arc (plus the origin if include_origin).
    std::optional<AngleWindow> window;
    bool include_origin = true;
};

struct SignPatternOptions {
    /// Exact enumeration at p == 3 is used up to this many hyperplanes. p <= 2 is always exact.
    std::size_t exact_limit = 18;
    std::size_t n_directions = 2048;
    bool force_stochastic = false;
    RngSeed seed{};
    /// Extra candidate coefficients; the result is never worse than any of them.
    std::vector<Eigen::VectorXd> hints;
};

struct SignPatternResult {
    double value = 0.0;
    /// A coefficient vector attaining `value` (up to the symbolic treatment of exact zeros).
    Eigen::VectorXd witness;
    /// Violation pattern of the optimum: -1 violated, 0 on the hyperplane, +1 strictly satisfied.
    std::vector<Sign> signs;
    /// True when the optimum was found by complete enumeration. Otherwise a sup is a lower bound
    /// of the true sup and an inf an upper bound of the true inf.
    bool exact = false;
};

/// F(beta), summed in index order.
double evaluate_sign_pattern(const SignPatternProblem& problem, const Eigen::VectorXd& beta);

/// sum of c_k over the violated entries of `signs`, in index order.
double pattern_value(const Eigen::VectorXd& weights, const std::vector<Sign>& signs);

bool uses_exact_enumeration(const SignPatternProblem& problem, const SignPatternOptions& options);

SignPatternResult optimize_sign_pattern(const SignPatternProblem& problem, const SignPatternOptions& options = {});

/// Whether some beta has n_k'beta < 0 where signs[k] < 0 and n_k'beta >= 0 elsewhere.
/// With `open_cell`, additionally n_k'beta > 0 where signs[k] >= 0. Returns a witness.
std::optional<Eigen::VectorXd> realize_pattern(const Eigen::MatrixXd& normals, const std::vector<Sign>& signs,
                                               bool open_cell);

}  // namespace nonreg

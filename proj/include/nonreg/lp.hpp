#pragma once

#include <Eigen/Dense>

#include <optional>

namespace nonreg {

/// A point x with A x >= b, or nullopt when the system is infeasible (up to `tolerance`).
/// Dense two-phase simplex with Bland's rule; x is unrestricted in sign.
std::optional<Eigen::VectorXd> find_feasible_point(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                   double tolerance = 1e-9);

}  // namespace nonreg

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

namespace nonreg {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Standard normal quantile, absolute error below 1e-12 on (1e-300, 1 - 1e-16).
double normal_quantile(double p);

/// z_{1-alpha/2}.
inline double two_sided_z(double alpha) { return normal_quantile(1.0 - alpha / 2.0); }

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

double chi2_cdf(double x, double dof);

/// Chi-square quantile with `dof` degrees of freedom, absolute error below 1e-10.
double chi2_quantile(double p, double dof);

/// Numerically stable logistic function exp(u) / (1 + exp(u)).
inline double expit(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

/// Nodes and weights such that sum_k w_k f(z_k) approximates E f(Z), Z ~ Normal(0, 1).
template <typename Scalar>
struct GaussHermiteRule {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

/// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
template <typename Scalar = double>
GaussHermiteRule<Scalar> gauss_hermite(std::size_t order) {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const auto m = static_cast<Eigen::Index>(order);
    Matrix jacobi = Matrix::Zero(m, m);
    for (Eigen::Index k = 1; k < m; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<Scalar>(k));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi);
    GaussHermiteRule<Scalar> rule;
    rule.nodes = solver.eigenvalues();
    rule.weights = solver.eigenvectors().row(0).transpose().array().square();
    return rule;
}

/// E f(mean + sd * Z) under a fixed Gauss-Hermite rule.
template <typename Scalar, typename Fn>
Scalar normal_expectation(const GaussHermiteRule<Scalar>& rule, Scalar mean, Scalar sd, Fn&& f) {
    Scalar total = 0;
    for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) {
        total += rule.weights(k) * f(mean + sd * rule.nodes(k));
    }
    return total;
}

}  // namespace nonreg

#pragma once

#include "nonreg/data.hpp"
#include "nonreg/error.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nonreg {

struct FitOptions {
    /// Fits whose Gram matrix has a larger condition number are rejected.
    double max_condition = 1e12;
    /// Opt-in: add 1e-8 * trace / p to the Gram diagonal instead of failing.
    bool ridge_fallback = false;
};

template <typename Scalar>
struct LeastSquaresFit {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta;
    /// Sandwich estimate of the asymptotic covariance of sqrt(n) (beta_hat - beta*).
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sigma;
    Scalar condition_number = 0;
    bool ridged = false;
};

/// Frequency-weighted least squares with the sandwich covariance
///   G^{-1} (P_w r^2 x x') G^{-1},  G = P_w x x',
/// where P_w averages rows with weights w (bootstrap multiplicities, or all ones).
template <typename DerivedX, typename DerivedY, typename DerivedW>
LeastSquaresFit<typename DerivedX::Scalar> weighted_least_squares(const Eigen::MatrixBase<DerivedX>& x,
                                                                  const Eigen::MatrixBase<DerivedY>& y,
                                                                  const Eigen::MatrixBase<DerivedW>& w,
                                                                  const FitOptions& options = {}) {
    using Scalar = typename DerivedX::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    const Scalar total = w.sum();
    const auto p = x.cols();
    if (!(total > 0)) throw EstimationError("least squares: empty weighted sample");

    Matrix gram = x.transpose() * w.asDiagonal() * x / total;
    gram = Scalar(0.5) * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const Scalar lo = eig.eigenvalues().minCoeff();
    const Scalar hi = eig.eigenvalues().maxCoeff();
    const Scalar condition = (lo > 0) ? hi / lo : std::numeric_limits<Scalar>::infinity();

    LeastSquaresFit<Scalar> fit;
    fit.condition_number = condition;
    if (!(condition < options.max_condition)) {
        if (!options.ridge_fallback) {
            throw EstimationError("least squares: Gram matrix singular or ill-conditioned (condition " +
                                      std::to_string(static_cast<double>(condition)) + ")",
                                  static_cast<double>(condition));
        }
        gram.diagonal().array() += Scalar(1e-8) * gram.trace() / static_cast<Scalar>(p);
        fit.ridged = true;
    }

    const Eigen::LDLT<Matrix> ldlt(gram);
    const Vector xty = x.transpose() * (w.array() * y.array()).matrix() / total;
    fit.beta = ldlt.solve(xty);

    const Vector resid = y - x * fit.beta;
    const Vector meat_w = w.array() * resid.array().square();
    const Matrix meat = x.transpose() * meat_w.asDiagonal() * x / total;
    const Matrix gram_inv = ldlt.solve(Matrix::Identity(p, p));
    fit.sigma = gram_inv * meat * gram_inv;
    fit.sigma = Scalar(0.5) * (fit.sigma + fit.sigma.transpose()).eval();
    return fit;
}

/// Least-squares coefficients with their sandwich covariance and the sample size.
struct CoefEstimate {
    Eigen::VectorXd beta;
    Eigen::MatrixXd sigma;
    std::size_t n = 0;
    double condition_number = 0.0;
};

CoefEstimate fit_least_squares(const ClassDataset& data, const FitOptions& options = {});

/// Fit on a bootstrap resample given as multiplicities of the original rows.
CoefEstimate fit_least_squares(const ClassDataset& data, std::span<const int> multiplicity,
                               const FitOptions& options = {});

/// sign(x'beta) with sign(0) = +1.
int classify(const Eigen::VectorXd& beta, const Eigen::VectorXd& x);

/// Q(x, a; beta) = x0'beta0 + a x1'beta1 fitted jointly. `r_hat` is the interaction block of the
/// joint sandwich covariance.
struct QCoefEstimate {
    Eigen::VectorXd beta0;
    Eigen::VectorXd beta1;
    Eigen::MatrixXd r_hat;
    Eigen::MatrixXd sigma;
    std::size_t n = 0;
    double condition_number = 0.0;
};

QCoefEstimate fit_q_model(const DecisionDataset& data, const FitOptions& options = {});
QCoefEstimate fit_q_model(const DecisionDataset& data, std::span<const int> multiplicity,
                          const FitOptions& options = {});

/// Stacked design [x0, a * x1].
Eigen::MatrixXd q_design(const DecisionDataset& data);

inline constexpr double kPropensityFloor = 1e-3;

/// Treatment-assignment probability pi(a; x).
class PropensityModel {
public:
    enum class Kind { known_constant, known_column, logistic_fit };

    /// P(A = +1 | X) = p_treat for every x.
    static PropensityModel known_constant(double p_treat);
    /// Read P(A = a_i | X = x_i) from the dataset's propensity column.
    static PropensityModel known_column();
    /// Logistic regression of 1{A = +1} on x0 by Newton-Raphson; fails after 100 iterations.
    static PropensityModel logistic(const DecisionDataset& data, std::span<const int> multiplicity = {});
    /// known column > known constant > logistic fit.
    static PropensityModel choose(const DecisionDataset& data, std::optional<double> p_treat = std::nullopt);

    Kind kind() const noexcept { return kind_; }
    double constant() const noexcept { return constant_; }
    const Eigen::VectorXd& coefficients() const noexcept { return coef_; }

    /// Unclipped P(A = a | X = x). `column` supplies the known value for known_column models.
    double raw(const Eigen::VectorXd& x0, int a, std::optional<double> column = std::nullopt) const;

private:
    Kind kind_ = Kind::known_constant;
    double constant_ = 0.5;
    Eigen::VectorXd coef_;
};

struct Propensity {
    double value = 0.5;
    bool clipped = false;
};

/// pi(a; x) clipped into (kPropensityFloor, 1 - kPropensityFloor).
Propensity evaluate_propensity(const PropensityModel& model, const Eigen::VectorXd& x0, int a,
                               std::optional<double> column = std::nullopt);

struct PropensityValues {
    Eigen::VectorXd pi;
    std::size_t clip_count = 0;
};

/// pi(A_i; X_i) at every observed pair.
PropensityValues evaluate_propensities(const PropensityModel& model, const DecisionDataset& data);

}  // namespace nonreg

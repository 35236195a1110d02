#include "nonreg/estimators.hpp"

#include "nonreg/distributions.hpp"

#include <algorithm>
#include <cmath>

namespace nonreg {

namespace {

Eigen::VectorXd weight_vector(std::span<const int> multiplicity, std::size_t n) {
    if (multiplicity.empty()) return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    if (multiplicity.size() != n) throw ValidationError("multiplicity vector has wrong length");
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i)) = multiplicity[i];
    return w;
}

}  // namespace

CoefEstimate fit_least_squares(const ClassDataset& data, const FitOptions& options) {
    return fit_least_squares(data, {}, options);
}

CoefEstimate fit_least_squares(const ClassDataset& data, std::span<const int> multiplicity,
                               const FitOptions& options) {
    if (data.n() <= data.p()) throw EstimationError("least squares: need n > p");
    const Eigen::VectorXd w = weight_vector(multiplicity, data.n());
    auto fit = weighted_least_squares(data.x(), data.y(), w, options);
    return {std::move(fit.beta), std::move(fit.sigma), data.n(), fit.condition_number};
}

int classify(const Eigen::VectorXd& beta, const Eigen::VectorXd& x) {
    if (beta.size() != x.size()) throw ValidationError("classify: dimension mismatch");
    return x.dot(beta) >= 0.0 ? 1 : -1;
}

Eigen::MatrixXd q_design(const DecisionDataset& data) {
    Eigen::MatrixXd z(data.x0().rows(), data.x0().cols() + data.x1().cols());
    z.leftCols(data.x0().cols()) = data.x0();
    z.rightCols(data.x1().cols()) = data.a().asDiagonal() * data.x1();
    return z;
}

QCoefEstimate fit_q_model(const DecisionDataset& data, const FitOptions& options) {
    return fit_q_model(data, {}, options);
}

QCoefEstimate fit_q_model(const DecisionDataset& data, std::span<const int> multiplicity,
                          const FitOptions& options) {
    const auto p0 = data.x0().cols();
    const auto p1 = data.x1().cols();
    if (data.n() <= static_cast<std::size_t>(p0 + p1)) throw EstimationError("Q-model: need n > p0 + p1");
    const Eigen::VectorXd w = weight_vector(multiplicity, data.n());
    auto fit = weighted_least_squares(q_design(data), data.y(), w, options);
    QCoefEstimate q;
    q.beta0 = fit.beta.head(p0);
    q.beta1 = fit.beta.tail(p1);
    q.r_hat = fit.sigma.bottomRightCorner(p1, p1);
    q.sigma = std::move(fit.sigma);
    q.n = data.n();
    q.condition_number = fit.condition_number;
    return q;
}

PropensityModel PropensityModel::known_constant(double p_treat) {
    if (!(p_treat > 0.0 && p_treat < 1.0)) throw ValidationError("propensity constant must lie in (0, 1)");
    PropensityModel m;
    m.kind_ = Kind::known_constant;
    m.constant_ = p_treat;
    return m;
}

PropensityModel PropensityModel::known_column() {
    PropensityModel m;
    m.kind_ = Kind::known_column;
    return m;
}

PropensityModel PropensityModel::logistic(const DecisionDataset& data, std::span<const int> multiplicity) {
    const Eigen::MatrixXd& x = data.x0();
    const Eigen::VectorXd w = weight_vector(multiplicity, data.n());
    const Eigen::VectorXd t = (data.a().array() > 0.0).cast<double>();
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(x.cols());
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = x * coef;
        Eigen::VectorXd mu(eta.size()), v(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu(i) = expit(eta(i));
            v(i) = w(i) * mu(i) * (1.0 - mu(i));
        }
        const Eigen::VectorXd score = x.transpose() * (w.array() * (t - mu).array()).matrix();
        const Eigen::MatrixXd info = x.transpose() * v.asDiagonal() * x;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
            throw EstimationError("logistic propensity fit: singular information matrix");
        }
        const Eigen::VectorXd step = ldlt.solve(score);
        coef += step;
        if (!coef.allFinite()) break;
        if (step.lpNorm<Eigen::Infinity>() < 1e-10) {
            PropensityModel m;
            m.kind_ = Kind::logistic_fit;
            m.coef_ = coef;
            return m;
        }
    }
    throw EstimationError("logistic propensity fit did not converge within 100 iterations");
}

PropensityModel PropensityModel::choose(const DecisionDataset& data, std::optional<double> p_treat) {
    if (data.pi()) return known_column();
    if (p_treat) return known_constant(*p_treat);
    return logistic(data);
}

double PropensityModel::raw(const Eigen::VectorXd& x0, int a, std::optional<double> column) const {
    switch (kind_) {
        case Kind::known_constant:
            return a > 0 ? constant_ : 1.0 - constant_;
        case Kind::known_column:
            if (!column) throw ValidationError("known-column propensity requires a propensity value");
            return *column;
        case Kind::logistic_fit: {
            if (x0.size() != coef_.size()) throw ValidationError("propensity: dimension mismatch");
            const double p1 = expit(x0.dot(coef_));
            return a > 0 ? p1 : 1.0 - p1;
        }
    }
    return 0.5;
}

Propensity evaluate_propensity(const PropensityModel& model, const Eigen::VectorXd& x0, int a,
                               std::optional<double> column) {
    const double p = model.raw(x0, a, column);
    const double clamped = std::clamp(p, kPropensityFloor, 1.0 - kPropensityFloor);
    return {clamped, clamped != p};
}

PropensityValues evaluate_propensities(const PropensityModel& model, const DecisionDataset& data) {
    if (model.kind() == PropensityModel::Kind::known_column && !data.pi()) {
        throw ValidationError("dataset has no propensity column");
    }
    PropensityValues out{Eigen::VectorXd(static_cast<Eigen::Index>(data.n())), 0};
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(data.n()); ++i) {
        std::optional<double> column;
        if (data.pi()) column = (*data.pi())(i);
        const auto p = evaluate_propensity(model, data.x0().row(i).transpose(), static_cast<int>(data.a()(i)),
                                           column);
        out.pi(i) = p.value;
        out.clip_count += p.clipped ? 1 : 0;
    }
    return out;
}

}  // namespace nonreg

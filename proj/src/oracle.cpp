#include "nonreg/oracle.hpp"

#include "nonreg/distributions.hpp"
#include "nonreg/error.hpp"

#include <cmath>
#include <random>

namespace nonreg {

namespace {

// P(b0 + b1 X < 0) and P(b0 + b1 X = 0) for X ~ Normal(mean, sd^2).
struct SideProb {
    double below = 0.0;
    double tie = 0.0;
};

SideProb normal_side(double b0, double b1, double mean, double sd) {
    if (b1 == 0.0) {
        if (b0 < 0.0) return {1.0, 0.0};
        if (b0 == 0.0) return {0.0, 1.0};
        return {0.0, 0.0};
    }
    const double u = b0 + b1 * mean;
    return {normal_cdf(-u / (std::abs(b1) * sd)), 0.0};
}

void check_beta(const Eigen::VectorXd& beta, Eigen::Index p) {
    if (beta.size() != p) throw ValidationError("coefficient vector has wrong dimension");
    if (!beta.allFinite()) throw ValidationError("coefficient vector is not finite");
}

const GaussHermiteRule<double>& quadrature() {
    static const GaussHermiteRule<double> rule = gauss_hermite<double>(96);
    return rule;
}

}  // namespace

void MixtureModel::validate() const {
    if (!(delta >= 0.0 && delta <= 0.5)) throw ValidationError("mixture delta must lie in [0, 1/2]");
    if (!(sd_pos > 0.0 && sd_neg > 0.0)) throw ValidationError("mixture standard deviations must be positive");
}

MixtureModel LocalSequence::at(std::size_t n) const {
    validate();
    if (n == 0) throw ValidationError("local sequence needs n >= 1");
    return {std::min(c / std::sqrt(static_cast<double>(n)), 0.5), sd_pos, sd_neg};
}

void LocalSequence::validate() const {
    if (!(c >= 0.0)) throw ValidationError("local drift constant must be non-negative");
    if (!(sd_pos > 0.0 && sd_neg > 0.0)) throw ValidationError("mixture standard deviations must be positive");
}

void AtomModel::validate() const {
    auto open = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open(q) || !open(p_pos_at_zero) || !open(p_pos_at_x)) {
        throw ValidationError("atom model probabilities must lie in (0, 1)");
    }
    if (!(x_pos != 0.0 && std::isfinite(x_pos))) throw ValidationError("atom location must be finite and non-zero");
}

void DecisionGenModel::validate() const {
    if (gamma.size() < 1 || gamma.size() != theta.size()) {
        throw ValidationError("decision model: gamma and theta must have equal length >= 1");
    }
    if (!(pi > 0.0 && pi < 1.0)) throw ValidationError("decision model: pi must lie in (0, 1)");
    if (!(noise_sd > 0.0)) throw ValidationError("decision model: noise_sd must be positive");
}

ClassDataset sample(const MixtureModel& model, std::size_t n, const RngSeed& seed) {
    model.validate();
    if (n == 0) throw ValidationError("sample size must be >= 1");
    Engine eng = seed.engine();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> norm(0.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const bool positive = unif(eng) < 0.5;
        const double u = unif(eng);
        const double z = norm(eng);
        x(i, 0) = 1.0;
        if (positive) {
            const double mean = u <= 0.5 - model.delta ? -2.0 : 2.0;
            x(i, 1) = mean + model.sd_pos * z;
            y(i) = 1.0;
        } else {
            x(i, 1) = model.sd_neg * z;
            y(i) = -1.0;
        }
    }
    return ClassDataset(std::move(x), std::move(y));
}

ClassDataset sample(const LocalSequence& model, std::size_t n, const RngSeed& seed) {
    return sample(model.at(n), n, seed);
}

ClassDataset sample(const AtomModel& model, std::size_t n, const RngSeed& seed) {
    model.validate();
    if (n == 0) throw ValidationError("sample size must be >= 1");
    Engine eng = seed.engine();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const bool at_zero = unif(eng) < model.q;
        const double p_pos = at_zero ? model.p_pos_at_zero : model.p_pos_at_x;
        x(i, 0) = at_zero ? 0.0 : model.x_pos;
        y(i) = unif(eng) < p_pos ? 1.0 : -1.0;
    }
    return ClassDataset(std::move(x), std::move(y));
}

ClassDataset sample(const ClassModel& model, std::size_t n, const RngSeed& seed) {
    return std::visit([&](const auto& m) { return sample(m, n, seed); }, model);
}

DecisionDataset sample(const DecisionGenModel& model, std::size_t n, const RngSeed& seed) {
    model.validate();
    if (n == 0) throw ValidationError("sample size must be >= 1");
    Engine eng = seed.engine();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> norm(0.0, 1.0);
    const auto p = model.gamma.size();
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd x(rows, p);
    Eigen::VectorXd a(rows), y(rows), pi(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        x(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < p; ++j) x(i, j) = norm(eng);
        a(i) = unif(eng) < model.pi ? 1.0 : -1.0;
        pi(i) = a(i) > 0 ? model.pi : 1.0 - model.pi;
        const Eigen::VectorXd xi = x.row(i).transpose();
        y(i) = model.gamma.dot(xi) + a(i) * model.theta.dot(xi) + model.noise_sd * norm(eng);
    }
    return DecisionDataset(x, x, std::move(a), std::move(y), std::move(pi));
}

MisclassValue true_misclass(const MixtureModel& model, const Eigen::VectorXd& beta) {
    model.validate();
    check_beta(beta, 2);
    const double b0 = beta(0), b1 = beta(1);
    const double w_low = 0.5 - model.delta, w_high = 0.5 + model.delta;
    const SideProb low = normal_side(b0, b1, -2.0, model.sd_pos);
    const SideProb high = normal_side(b0, b1, 2.0, model.sd_pos);
    const SideProb neg = normal_side(b0, b1, 0.0, model.sd_neg);
    const double pos_wrong = w_low * low.below + w_high * high.below;
    const double pos_tie = w_low * low.tie + w_high * high.tie;
    const double neg_wrong = 1.0 - neg.below - neg.tie;
    MisclassValue out;
    out.strict = 0.5 * pos_wrong + 0.5 * neg_wrong;
    out.randomized_tie = out.strict + 0.25 * (pos_tie + neg.tie);
    return out;
}

MisclassValue true_misclass(const AtomModel& model, const Eigen::VectorXd& beta) {
    model.validate();
    check_beta(beta, 1);
    const double s = model.x_pos * beta(0);
    const double mass_x = 1.0 - model.q;
    double wrong = 0.0, tie = model.q;
    if (s > 0.0) {
        wrong = mass_x * (1.0 - model.p_pos_at_x);
    } else if (s < 0.0) {
        wrong = mass_x * model.p_pos_at_x;
    } else {
        tie += mass_x;
    }
    return {wrong, wrong + 0.5 * tie};
}

MisclassValue true_misclass(const ClassModel& model, const Eigen::VectorXd& beta, std::size_t n) {
    if (const auto* local = std::get_if<LocalSequence>(&model)) return true_misclass(local->at(n), beta);
    if (const auto* mix = std::get_if<MixtureModel>(&model)) return true_misclass(*mix, beta);
    return true_misclass(std::get<AtomModel>(model), beta);
}

double true_smooth_surrogate(const MixtureModel& model, const Eigen::VectorXd& beta, double tau) {
    model.validate();
    check_beta(beta, 2);
    if (!(tau > 0.0)) throw ValidationError("tau must be positive");
    const double b0 = beta(0), b1 = beta(1);
    const auto& rule = quadrature();
    auto loss_pos = [&](double x) { return expit(-tau * (b0 + b1 * x)); };
    auto loss_neg = [&](double x) { return expit(tau * (b0 + b1 * x)); };
    const double pos = (0.5 - model.delta) * normal_expectation(rule, -2.0, model.sd_pos, loss_pos) +
                       (0.5 + model.delta) * normal_expectation(rule, 2.0, model.sd_pos, loss_pos);
    const double neg = normal_expectation(rule, 0.0, model.sd_neg, loss_neg);
    return 0.5 * pos + 0.5 * neg;
}

double true_smooth_surrogate(const AtomModel& model, const Eigen::VectorXd& beta, double tau) {
    model.validate();
    check_beta(beta, 1);
    if (!(tau > 0.0)) throw ValidationError("tau must be positive");
    const double m = model.x_pos * beta(0);
    const double at_x = model.p_pos_at_x * expit(-tau * m) + (1.0 - model.p_pos_at_x) * expit(tau * m);
    return model.q * 0.5 + (1.0 - model.q) * at_x;
}

double true_smooth_surrogate(const ClassModel& model, const Eigen::VectorXd& beta, double tau, std::size_t n) {
    if (const auto* local = std::get_if<LocalSequence>(&model)) return true_smooth_surrogate(local->at(n), beta, tau);
    if (const auto* mix = std::get_if<MixtureModel>(&model)) return true_smooth_surrogate(*mix, beta, tau);
    return true_smooth_surrogate(std::get<AtomModel>(model), beta, tau);
}

Eigen::VectorXd population_beta(const MixtureModel& model) {
    model.validate();
    const double ex = 2.0 * model.delta;
    const double ex2 = 0.5 * (4.0 + model.sd_pos * model.sd_pos) + 0.5 * model.sd_neg * model.sd_neg;
    const double exy = 2.0 * model.delta;
    Eigen::Matrix2d g;
    g << 1.0, ex, ex, ex2;
    const Eigen::Vector2d rhs(0.0, exy);
    return g.ldlt().solve(rhs);
}

Eigen::VectorXd population_beta(const AtomModel& model) {
    model.validate();
    Eigen::VectorXd beta(1);
    beta(0) = (2.0 * model.p_pos_at_x - 1.0) / model.x_pos;
    return beta;
}

Eigen::VectorXd population_beta(const ClassModel& model, std::size_t n) {
    if (const auto* local = std::get_if<LocalSequence>(&model)) return population_beta(local->at(n));
    if (const auto* mix = std::get_if<MixtureModel>(&model)) return population_beta(*mix);
    return population_beta(std::get<AtomModel>(model));
}

std::size_t feature_dim(const ClassModel& model) {
    return std::holds_alternative<AtomModel>(model) ? 1 : 2;
}

double true_value(const DecisionGenModel& model, const Eigen::VectorXd& beta1) {
    model.validate();
    check_beta(beta1, model.theta.size());
    const double b0 = beta1(0);
    const Eigen::VectorXd br = beta1.tail(beta1.size() - 1);
    const Eigen::VectorXd tr = model.theta.tail(model.theta.size() - 1);
    const double sigma = br.norm();
    // E[1{d(X) = +1} theta'(1, X)]
    double treated;
    if (sigma == 0.0) {
        treated = b0 >= 0.0 ? model.theta(0) : 0.0;
    } else {
        const double c = b0 / sigma;
        treated = model.theta(0) * normal_cdf(c) + tr.dot(br) / sigma * normal_pdf(c);
    }
    return model.gamma(0) + 2.0 * treated - model.theta(0);
}

MonteCarloValue true_value_mc(const DecisionGenModel& model, const Eigen::VectorXd& beta1, std::size_t draws,
                              const RngSeed& seed) {
    model.validate();
    check_beta(beta1, model.theta.size());
    if (draws < 2) throw ValidationError("Monte Carlo value needs at least 2 draws");
    Engine eng = seed.engine();
    std::normal_distribution<double> norm(0.0, 1.0);
    const auto p = model.gamma.size();
    Eigen::VectorXd x(p);
    x(0) = 1.0;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        for (Eigen::Index j = 1; j < p; ++j) x(j) = norm(eng);
        const double d = x.dot(beta1) >= 0.0 ? 1.0 : -1.0;
        const double v = model.gamma.dot(x) + d * model.theta.dot(x) + model.noise_sd * norm(eng);
        const double delta = v - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(draws - 1);
    return {mean, std::sqrt(var / static_cast<double>(draws))};
}

Eigen::VectorXd population_beta1(const DecisionGenModel& model) {
    model.validate();
    return model.theta;
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json model_to_json(const ModelSpec& spec) {
    using nlohmann::json;
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MixtureModel>) {
                return {{"model", "mixture"}, {"delta", m.delta}, {"sds", {m.sd_pos, m.sd_neg}}};
            } else if constexpr (std::is_same_v<T, LocalSequence>) {
                return {{"model", "local"}, {"c", m.c}, {"sds", {m.sd_pos, m.sd_neg}}};
            } else if constexpr (std::is_same_v<T, AtomModel>) {
                return {{"model", "atom"},
                        {"q", m.q},
                        {"x_pos", m.x_pos},
                        {"p_pos", {m.p_pos_at_zero, m.p_pos_at_x}}};
            } else {
                return {{"model", "decision"},
                        {"gamma", to_vector(m.gamma)},
                        {"theta", to_vector(m.theta)},
                        {"pi", m.pi},
                        {"noise_sd", m.noise_sd}};
            }
        },
        spec);
}

ModelSpec model_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw ValidationError("model spec must be a JSON object");
        const std::string kind = j.value("model", std::string("mixture"));
        auto read_sds = [&](double& pos, double& neg) {
            if (!j.contains("sds")) return;
            const auto& s = j.at("sds");
            if (s.is_number()) {
                pos = neg = s.get<double>();
            } else {
                const auto v = s.get<std::vector<double>>();
                if (v.size() != 2) throw ValidationError("sds must be a number or a pair");
                pos = v[0];
                neg = v[1];
            }
        };
        if (kind == "mixture") {
            MixtureModel m;
            m.delta = j.value("delta", m.delta);
            read_sds(m.sd_pos, m.sd_neg);
            m.validate();
            return m;
        }
        if (kind == "local") {
            LocalSequence m;
            m.c = j.value("c", m.c);
            read_sds(m.sd_pos, m.sd_neg);
            m.validate();
            return m;
        }
        if (kind == "atom") {
            AtomModel m;
            m.q = j.value("q", m.q);
            m.x_pos = j.value("x_pos", m.x_pos);
            if (j.contains("p_pos")) {
                const auto v = j.at("p_pos").get<std::vector<double>>();
                if (v.size() != 2) throw ValidationError("p_pos must be a pair");
                m.p_pos_at_zero = v[0];
                m.p_pos_at_x = v[1];
            }
            m.validate();
            return m;
        }
        if (kind == "decision") {
            DecisionGenModel m;
            if (j.contains("gamma")) m.gamma = from_vector(j.at("gamma").get<std::vector<double>>());
            if (j.contains("theta")) {
                m.theta = from_vector(j.at("theta").get<std::vector<double>>());
            } else {
                m.theta = Eigen::VectorXd::Zero(m.gamma.size());
            }
            m.pi = j.value("pi", m.pi);
            m.noise_sd = j.value("noise_sd", m.noise_sd);
            m.validate();
            return m;
        }
        throw ValidationError("unknown model kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model spec: ") + e.what());
    }
}

}  // namespace nonreg

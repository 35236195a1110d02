#include <doctest.h>

#include "oracles.hpp"

#include "nonreg/error.hpp"
#include "nonreg/itr.hpp"
#include "nonreg/oracle.hpp"

#include <cmath>
#include <random>

using namespace nonreg;

namespace {

QCoefEstimate manual_q(const Eigen::VectorXd& beta1, std::size_t n) {
    QCoefEstimate q;
    q.beta0 = Eigen::VectorXd::Zero(1);
    q.beta1 = beta1;
    q.r_hat = Eigen::MatrixXd::Identity(beta1.size(), beta1.size());
    q.sigma = q.r_hat;
    q.n = n;
    return q;
}

DecisionDataset random_decision(std::size_t n, Engine& eng, bool unit_outcome) {
    std::normal_distribution<double> norm;
    std::bernoulli_distribution coin(0.5);
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd x0 = Eigen::MatrixXd::Ones(rows, 1);
    Eigen::MatrixXd x1(rows, 2);
    Eigen::VectorXd a(rows), y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        x1(i, 0) = 1.0;
        x1(i, 1) = norm(eng);
        a(i) = coin(eng) ? 1.0 : -1.0;
        y(i) = unit_outcome ? 1.0 : norm(eng);
    }
    return {x0, x1, a, y};
}

}  // namespace

TEST_SUITE("itr") {

TEST_CASE("z statistic") {
    const auto q = manual_q(Eigen::Vector2d(0, 1), 100);
    CHECK(z_statistic(Eigen::Vector2d(1, 2), q) == doctest::Approx(80.0).epsilon(1e-14));
    CHECK(z_statistic(Eigen::Vector2d(1, 0), q) == 0.0);
    CHECK(z_statistic(Eigen::Vector2d(3, 6), q) == doctest::Approx(80.0).epsilon(1e-14));
    CHECK_THROWS_AS(z_statistic(Eigen::Vector2d(0, 0), q), AssumptionError);
    CHECK_THROWS_AS(z_statistic(Eigen::Vector3d(0, 0, 1), q), ValidationError);
    CHECK(default_rho(100) == doctest::Approx(std::log(100.0)));

    Eigen::MatrixXd x1(2, 2);
    x1 << 1, 2, 1, 0.01;
    const auto part = value_partition(x1, q.beta1, q.r_hat, 100, 1.0);
    CHECK_FALSE(part.is_near(0));
    CHECK(part.is_near(1));
    CHECK(part.statistic(0) == doctest::Approx(80.0));
}

TEST_CASE("degenerate value draws are zero") {
    auto eng = RngSeed{11, 0}.engine();
    auto d = random_decision(20, eng, false);
    const auto q = manual_q(Eigen::Vector2d(0.1, 0.5), 20);
    const Eigen::VectorXd pi = Eigen::VectorXd::Constant(20, 0.5);
    const std::vector<int> ones(20, 1);
    const auto same = value_bound_draw(d, q, pi, ones, q, pi);
    CHECK(same.lower == 0.0);
    CHECK(same.upper == 0.0);

    const DecisionDataset zero(d.x0(), d.x1(), d.a(), Eigen::VectorXd::Zero(20));
    std::vector<int> k(20, 0);
    k[0] = 20;
    const auto z = value_bound_draw(zero, q, pi, k, q, pi);
    CHECK(z.lower == 0.0);
    CHECK(z.upper == 0.0);
}

TEST_CASE("value bounds match brute force with signed weights") {
    auto eng = RngSeed{12, 0}.engine();
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 6 + rep % 4;
        const auto d = random_decision(n, eng, false);
        std::vector<int> k(n, 0);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t j = 0; j < n; ++j) ++k[pick(eng)];
        std::uniform_real_distribution<double> prob(0.2, 0.8);
        Eigen::VectorXd pi(static_cast<Eigen::Index>(n)), pi_b(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            pi(static_cast<Eigen::Index>(i)) = prob(eng);
            pi_b(static_cast<Eigen::Index>(i)) = prob(eng);
        }
        const auto q = manual_q(Eigen::Vector2d(0.3, -0.2), n);
        ValueBoundOptions options;
        options.rho = 1e12;
        const auto draw = value_bound_draw(d, q, pi, k, q, pi_b, options);
        Eigen::VectorXd w(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            w(r) = (k[i] / pi_b(r) - 1.0 / pi(r)) * d.y()(r) / std::sqrt(static_cast<double>(n));
        }
        const Eigen::MatrixXd normals = -(d.a().asDiagonal() * d.x1()).transpose();
        CHECK(draw.n_near == n);
        CHECK(draw.upper == doctest::Approx(oracle::brute_force_optimum(normals, w, true)).epsilon(1e-12));
        CHECK(draw.lower == doctest::Approx(oracle::brute_force_optimum(normals, w, false)).epsilon(1e-12));
        CHECK(draw.lower <= draw.statistic);
        CHECK(draw.statistic <= draw.upper);
    }
}

TEST_CASE("unit outcomes and propensities reduce to the classification bound") {
    auto eng = RngSeed{13, 0}.engine();
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 30;
        const auto d = random_decision(n, eng, true);
        std::vector<int> k(n, 0);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t j = 0; j < n; ++j) ++k[pick(eng)];
        const Eigen::Vector2d beta(0.05 * rep - 0.5, 0.4);
        const auto q = manual_q(beta, n);
        CoefEstimate c;
        c.beta = beta;
        c.sigma = q.r_hat;
        c.n = n;
        const double lambda = 0.05;
        ValueBoundOptions vopt;
        vopt.rho = static_cast<double>(n) * lambda;
        BoundOptions copt;
        copt.lambda = lambda;
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
        const ClassDataset labels(d.x1(), -d.a());
        const auto v = value_bound_draw(d, q, ones, k, q, ones, vopt);
        const auto m = centered_bound_draw(labels, c, k, c, copt);
        CHECK(v.n_near == m.n_near);
        CHECK(v.lower == m.lower);
        CHECK(v.upper == m.upper);
        CHECK(v.statistic == m.statistic);
    }
}

TEST_CASE("bootstrap value interval") {
    DecisionGenModel model;
    model.theta = Eigen::Vector2d(0.0, 0.5);
    const auto d = sample(model, 200, RngSeed{14, 0});
    const auto known = PropensityModel::known_constant(0.5);
    const auto ci = bootstrap_ci_V(d, 0.10, 200, RngSeed{14, 1}, known);
    CHECK(ci.sandwich_violations == 0);
    CHECK(ci.lower_quantile <= ci.upper_quantile);
    CHECK(ci.interval.lo <= ci.interval.hi);
    CHECK(ci.value_scale > 0.0);
    CHECK(ci.draws.size() == 200);
    const auto again = bootstrap_ci_V(d, 0.10, 200, RngSeed{14, 1}, known);
    CHECK(again.interval.lo == ci.interval.lo);
    CHECK(again.interval.hi == ci.interval.hi);

    const auto fitted = bootstrap_ci_V(d, 0.10, 100, RngSeed{14, 2}, PropensityModel::logistic(d));
    CHECK(fitted.sandwich_violations == 0);
    CHECK(fitted.interval.lo <= fitted.interval.hi);
    CHECK_THROWS_AS(bootstrap_ci_V(d, 0.10, 99, RngSeed{14, 1}, known), ValidationError);
    CHECK_THROWS_AS(bootstrap_ci_V(d, 1.0, 200, RngSeed{14, 1}, known), ValidationError);
}

}

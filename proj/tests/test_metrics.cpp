#include <doctest.h>

#include "nonreg/error.hpp"
#include "nonreg/metrics.hpp"
#include "nonreg/oracle.hpp"

#include <cmath>
#include <limits>

using namespace nonreg;

namespace {

ClassDataset three_points() {
    Eigen::MatrixXd x(3, 2);
    x << 1, 2, 1, -1, 1, 3;
    return {x, Eigen::Vector3d(1, 1, -1)};
}

// Hand dataset: rows 0, 1 near the boundary of beta_hat = (0, 1), rows 2, 3 far.
ClassDataset four_points() {
    Eigen::MatrixXd x(4, 2);
    x << 1, 0.01, 1, -0.02, 1, 3, 1, -4;
    return {x, Eigen::Vector4d(-1, 1, -1, -1)};
}

NearBoundaryPartition split_of(const ClassDataset& d, std::initializer_list<int> near) {
    NearBoundaryPartition p;
    p.near.assign(d.n(), 0);
    for (int i : near) p.near[static_cast<std::size_t>(i)] = 1;
    p.statistic = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.n()));
    return p;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("empirical misclassification") {
    const auto d = three_points();
    CHECK(empirical_misclass(d, Eigen::Vector2d(0, 1)) == doctest::Approx(2.0 / 3.0));
    CHECK(empirical_misclass(d, Eigen::Vector2d(0, 0)) == 0.0);
    CHECK_THROWS_AS(empirical_misclass(d, Eigen::Vector3d(0, 1, 2)), ValidationError);
}

TEST_CASE("plug-in error matches the closed form on a large sample") {
    const MixtureModel m{0.25};
    const Eigen::VectorXd beta = population_beta(m);
    const auto d = sample(m, 100000, RngSeed{1, 0});
    CHECK(std::abs(empirical_misclass(d, beta) - true_misclass(m, beta).strict) < 0.005);
}

TEST_CASE("misclassification sd") {
    CHECK(misclass_sd(0.5) == 0.5);
    CHECK(misclass_sd(0.0) == 0.0);
    CHECK(misclass_sd(0.25) == doctest::Approx(std::sqrt(0.1875)));
}

TEST_CASE("smooth surrogate") {
    const auto d = three_points();
    CHECK(smooth_surrogate(d, Eigen::Vector2d(0, 0), 3.0) == 0.5);
    CHECK(std::abs(smooth_surrogate(d, Eigen::Vector2d(0, 1), 1e4) - empirical_misclass(d, Eigen::Vector2d(0, 1))) <
          1e-6);
    CHECK(kDefaultTau == 3.0);
    CHECK_THROWS_AS(smooth_surrogate(d, Eigen::Vector2d(0, 1), 0.0), ValidationError);
    // Decreasing in each margin.
    Eigen::MatrixXd x(1, 1);
    double last = 1.0;
    for (double m = -3.0; m <= 3.0; m += 0.5) {
        x(0, 0) = m;
        const double s = smooth_surrogate(ClassDataset(x, Eigen::VectorXd::Ones(1)), Eigen::VectorXd::Ones(1), 2.0);
        CHECK(s < last);
        last = s;
    }
}

TEST_CASE("boundary test statistics") {
    const Eigen::Matrix2d identity = Eigen::Matrix2d::Identity();
    const Eigen::Vector2d beta(0, 1);
    Eigen::MatrixXd x(2, 2);
    x << 1, 0, 1, 5;
    const auto part = boundary_partition(x, beta, identity, std::log(100.0) / 100.0);
    CHECK(part.statistic(0) == 0.0);
    CHECK(part.is_near(0));
    CHECK(part.statistic(1) == doctest::Approx(25.0 / 26.0));
    CHECK(!part.is_near(1));
    CHECK(part.near_count() == 1);
    CHECK(part.near_indices() == std::vector<std::size_t>{0});
    const auto all = boundary_partition(x, beta, identity, std::numeric_limits<double>::infinity());
    CHECK(all.near_count() == 2);
    CHECK_THROWS_AS(boundary_partition(x, beta, Eigen::Matrix2d::Zero(), 0.1), AssumptionError);
    CHECK(default_lambda(100) == doctest::Approx(std::log(100.0) / 100.0));
}

TEST_CASE("partitioned functional recombines") {
    const auto d = four_points();
    const Eigen::Vector2d beta_hat(0, 1), beta(0.5, -1);
    for (const auto& part : {split_of(d, {}), split_of(d, {0, 1}), split_of(d, {0, 1, 2, 3}), split_of(d, {2})}) {
        CHECK(empirical_G(d, beta_hat, beta_hat, part) == empirical_misclass(d, beta_hat));
    }
    CHECK(empirical_G(d, beta_hat, beta, split_of(d, {})) == empirical_misclass(d, beta_hat));
    CHECK(empirical_G(d, beta_hat, beta, split_of(d, {0, 1, 2, 3})) == empirical_misclass(d, beta));
}

TEST_CASE("rho by hand") {
    const auto d = four_points();
    const Eigen::Vector2d beta_hat(0, 1), beta(0.5, -1);
    const auto part = split_of(d, {0, 1});
    // Summands: near rows use beta: row0 y x'b = -(0.49) < 0 -> 1, row1 = 0.52 -> 0;
    // far rows use beta_hat: row2 -3 -> 1, row3 4 -> 0. Mean 1/2, sd 1/2.
    CHECK(empirical_G(d, beta_hat, beta, part) == 0.5);
    CHECK(rho_hat(d, beta_hat, beta, part) == 0.5);
    const auto far = split_of(d, {});
    CHECK(rho_hat(d, beta_hat, beta_hat, far) == misclass_sd(empirical_misclass(d, beta_hat)));
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
    const ClassDataset constant(x, Eigen::Vector4d::Ones());
    CHECK(rho_hat(constant, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), split_of(constant, {})) == 0.0);
}

TEST_CASE("bounds on the functionals over random data") {
    for (std::uint64_t r = 0; r < 30; ++r) {
        const auto d = sample(MixtureModel{0.1}, 50, RngSeed{2, r});
        const auto est = fit_least_squares(d);
        const auto part = boundary_test_statistics(d, est, 0.05 * static_cast<double>(r % 5));
        const Eigen::Vector2d beta(std::sin(r), std::cos(r));
        const double g = empirical_G(d, est.beta, beta, part);
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
        const double rho = rho_hat(d, est.beta, beta, part);
        CHECK(rho >= 0.0);
        CHECK(rho <= 0.5);
        CHECK(empirical_misclass(d, beta) == empirical_misclass(d, 3.7 * beta));
        CHECK(empirical_G(d, est.beta, est.beta, part) == empirical_misclass(d, est.beta));
    }
}

TEST_CASE("bootstrap rho is close to the plug-in") {
    const auto d = sample(MixtureModel{0.25}, 400, RngSeed{3, 0});
    const auto est = fit_least_squares(d);
    const auto part = boundary_test_statistics(d, est, default_lambda(400));
    const double plug = rho_hat(d, est.beta, est.beta, part);
    const double boot = rho_bootstrap(d, est.beta, est.beta, part, 2000, RngSeed{3, 1});
    CHECK(std::abs(boot - plug) < 0.1 * plug);
}

TEST_CASE("empirical value") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
    const Eigen::Vector4d y(1, 2, 3, 6);
    const DecisionDataset treated(x, x, Eigen::Vector4d::Ones(), y);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    CHECK(empirical_value(treated, Eigen::VectorXd::Ones(1), ones).value == 3.0);

    DecisionGenModel m;
    m.theta = Eigen::Vector2d(0.2, 0.4);
    const auto d = sample(m, 500, RngSeed{4, 0});
    const auto prop = PropensityModel::known_constant(0.5);
    for (const Eigen::Vector2d beta : {Eigen::Vector2d(0.3, -1), Eigen::Vector2d(0, 1), Eigen::Vector2d(0, 0)}) {
        const double a = empirical_value(d, beta, prop, ValueIndicator::rule_match).value;
        const double b = empirical_value(d, beta, prop, ValueIndicator::rule_not_opposite).value;
        CHECK(a == b);
        double matched = 0.0;
        for (Eigen::Index i = 0; i < 500; ++i) {
            const int rule = d.x1().row(i).dot(beta) >= 0.0 ? 1 : -1;
            if (rule == static_cast<int>(d.a()(i))) matched += d.y()(i);
        }
        CHECK(a == doctest::Approx(2.0 * matched / 500.0).epsilon(1e-12));
    }
    const Eigen::Vector2d generic(0.3, -1);
    CHECK(empirical_value(d, generic, prop).value == empirical_value(d, generic, prop, ValueIndicator::rule_match).value);
    CHECK(empirical_value(d, Eigen::Vector2d(0, 0), prop).value == 0.0);
}

TEST_CASE("empirical value agrees with the closed form") {
    DecisionGenModel m;
    m.theta = Eigen::Vector2d(0.2, 0.4);
    const Eigen::Vector2d beta(0.1, 1.0);
    const auto d = sample(m, 100000, RngSeed{5, 0});
    const auto v = empirical_value(d, beta, PropensityModel::known_constant(0.5));
    CHECK(std::abs(v.value - true_value(m, beta)) < 3.0 * v.sd / std::sqrt(1e5));
    CHECK(v.clip_count == 0);
    CHECK(!v.clip_warning);
}

TEST_CASE("clip warning") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
    const DecisionDataset d(x, x, Eigen::Vector4d(1, -1, 1, -1), Eigen::Vector4d(1, 2, 3, 4),
                            Eigen::VectorXd(Eigen::Vector4d(1e-5, 0.5, 0.5, 0.5)));
    const auto v = empirical_value(d, Eigen::VectorXd::Ones(1), PropensityModel::known_column());
    CHECK(v.clip_count == 1);
    CHECK(v.clip_warning);
}

}

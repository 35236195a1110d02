#include <doctest.h>

#include "nonreg/data.hpp"
#include "nonreg/distributions.hpp"
#include "nonreg/error.hpp"
#include "nonreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

using namespace nonreg;

TEST_SUITE("data_model") {

TEST_CASE("class csv with intercept flag") {
    const auto d = parse_class_dataset_text("x,y\n2,1\n-1,1\n3,-1\n");
    CHECK(d.n() == 3);
    CHECK(d.p() == 2);
    CHECK(d.x()(0, 0) == 1.0);
    CHECK(d.x()(0, 1) == 2.0);
    CHECK(d.y()(2) == -1.0);
    const auto s = d.sample(0);
    CHECK(s.x.size() == 2);
    CHECK(s.y == 1);
}

TEST_CASE("class csv without intercept") {
    ClassSchema schema;
    schema.add_intercept = false;
    const auto d = parse_class_dataset_text("x,y\n2,1\n-1,1\n", schema);
    CHECK(d.p() == 1);
    CHECK(d.x()(1, 0) == -1.0);
}

TEST_CASE("zero-one labels are recoded") {
    const auto d = parse_class_dataset_text("y,x\n0,1\n1,2\n");
    CHECK(d.y()(0) == -1.0);
    CHECK(d.y()(1) == 1.0);
}

TEST_CASE("bad inputs are rejected") {
    CHECK_THROWS_AS(parse_class_dataset_text(""), ValidationError);
    CHECK_THROWS_AS(parse_class_dataset_text("x,y\n"), ValidationError);
    CHECK_THROWS_AS(parse_class_dataset_text("x,y\n1,2\n"), ValidationError);
    CHECK_THROWS_AS(parse_class_dataset_text("x,y\n1,1\nabc,1\n"), ParseError);
    CHECK_THROWS_AS(parse_class_dataset_text("x,y\n1,1\n2\n"), ParseError);
    CHECK_THROWS_AS(parse_class_dataset_text("x,y\n,1\n"), ParseError);
    CHECK_THROWS_AS(parse_class_dataset("/nonexistent/file.csv"), ValidationError);
    try {
        parse_class_dataset_text("x,y\n1,1\n1,1\nzz,1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 3);
    }
}

TEST_CASE("decision csv") {
    const auto d = parse_decision_dataset_text("a,y,pi,x\n1,2.5,0.5,1\n-1,0.5,0.25,-2\n");
    CHECK(d.n() == 2);
    CHECK(d.p0() == 2);
    CHECK(d.p1() == 2);
    CHECK(d.a()(1) == -1.0);
    REQUIRE(d.pi().has_value());
    CHECK((*d.pi())(1) == 0.25);
    CHECK(d.x1()(1, 1) == -2.0);
    CHECK_THROWS_AS(parse_decision_dataset_text("a,y,x\n2,1,1\n"), ValidationError);
    CHECK_THROWS_AS(parse_decision_dataset_text("a,y,pi,x\n1,1,1.5,1\n"), ValidationError);
}

TEST_CASE("file round trip") {
    const std::string path = "data_model_test.csv";
    {
        std::ofstream out(path);
        out << "x,y\n0.5,1\n-0.5,-1\n";
    }
    const auto d = parse_class_dataset(path);
    CHECK(d.n() == 2);
    CHECK(d.x()(1, 1) == -0.5);
    std::remove(path.c_str());
}

TEST_CASE("single-row resample equals the original") {
    const ClassDataset d(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1));
    const auto r = bootstrap_resample(d, RngSeed{3, 4});
    CHECK(r.x() == d.x());
    CHECK(r.y() == d.y());
}

TEST_CASE("resampling is deterministic and sized") {
    const RngSeed seed{42, 7};
    const auto a = bootstrap_indices(5, seed);
    const auto b = bootstrap_indices(5, seed);
    CHECK(a == b);
    CHECK(a.size() == 5);
    const auto k = multiplicities(a, 5);
    CHECK(std::accumulate(k.begin(), k.end(), 0) == 5);
    CHECK(bootstrap_indices(5, seed.child(1)) != a);
}

TEST_CASE("mean multiplicity is one") {
    const std::size_t reps = 10000, n = 4;
    std::vector<double> total(n, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto k = multiplicities(bootstrap_indices(n, RngSeed{11, 0}.child(r)), n);
        for (std::size_t i = 0; i < n; ++i) total[i] += k[i];
    }
    for (double t : total) CHECK(t / reps == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("decision resample keeps dimensions") {
    const auto d = parse_decision_dataset_text("a,y,x\n1,2,1\n-1,0,2\n1,1,3\n");
    const auto r = bootstrap_resample(d, RngSeed{1, 0});
    CHECK(r.n() == 3);
    CHECK(r.p1() == d.p1());
}

TEST_CASE("rng streams") {
    const RngSeed s{5, 0};
    CHECK(s.child(1) == s.child(1));
    CHECK(!(s.child(1) == s.child(2)));
    auto e1 = s.engine();
    auto e2 = s.engine();
    CHECK(e1() == e2());
    CHECK(stream_id("bound") == stream_id("bound"));
    CHECK(stream_id("bound") != stream_id("projection"));
    std::set<std::uint64_t> firsts;
    for (std::uint64_t i = 0; i < 100; ++i) firsts.insert(s.child(i).engine()());
    CHECK(firsts.size() == 100);
}

TEST_CASE("normal quantiles against tabled values") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
    CHECK(std::abs(normal_quantile(1e-8) + 5.612001244174789) < 1e-10);
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
    CHECK(two_sided_z(0.05) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    for (double p : {1e-6, 0.01, 0.3, 0.7, 0.999}) CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-12);
}

TEST_CASE("chi-square quantiles against tabled values") {
    struct Row { double p, dof, q; };
    const Row rows[] = {{0.9, 1, 2.705543454095404},  {0.95, 1, 3.841458820694124}, {0.99, 1, 6.6348966010212145},
                        {0.9, 2, 4.605170185988092},  {0.95, 2, 5.991464547107979}, {0.99, 2, 9.21034037197618},
                        {0.95, 3, 7.814727903251179}, {0.5, 3, 2.3659738843753377}, {0.95, 4, 9.487729036781154},
                        {0.95, 5, 11.070497693516351}};
    for (const auto& r : rows) {
        CHECK(std::abs(chi2_quantile(r.p, r.dof) - r.q) < 1e-9);
        CHECK(std::abs(chi2_cdf(r.q, r.dof) - r.p) < 1e-10);
    }
}

TEST_CASE("gauss-hermite integrates normal moments") {
    const auto rule = gauss_hermite<double>(32);
    CHECK(normal_expectation(rule, 0.0, 1.0, [](double z) { return z * z; }) == doctest::Approx(1.0));
    CHECK(normal_expectation(rule, 1.0, 2.0, [](double z) { return z * z * z * z; }) ==
          doctest::Approx(1.0 + 6.0 * 4.0 + 3.0 * 16.0));
    CHECK(expit(0.0) == 0.5);
    CHECK(expit(-800.0) >= 0.0);
}

}

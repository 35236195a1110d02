#include <doctest.h>

#include "oracles.hpp"

#include "nonreg/arrangement.hpp"
#include "nonreg/lp.hpp"
#include "nonreg/sign_pattern.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace nonreg;

namespace {

struct Instance {
    Eigen::MatrixXd normals;
    Eigen::VectorXd weights;
};

Instance random_instance(std::size_t p, std::size_t m, std::uint64_t id) {
    auto eng = RngSeed{77, id}.engine();
    std::normal_distribution<double> norm;
    Instance inst{Eigen::MatrixXd(p, m), Eigen::VectorXd(m)};
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(m); ++k) {
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) inst.normals(j, k) = norm(eng);
        inst.weights(k) = norm(eng);
    }
    return inst;
}

SignPatternProblem problem_of(const Instance& inst, Sense sense) {
    SignPatternProblem pr;
    pr.normals = inst.normals;
    pr.weights = inst.weights;
    pr.sense = sense;
    return pr;
}

// Collects the violated sets of every visited face.
struct MaskCollector {
    std::vector<Sign> signs;
    std::set<unsigned long> masks;
    std::set<std::vector<Sign>> open_cells;

    void reset(std::span<const Sign> s) { signs.assign(s.begin(), s.end()); }
    void change(std::size_t k, Sign s) { signs[k] = s; }
    template <class Direction>
    void face(const Direction&) {
        unsigned long mask = 0;
        bool open = true;
        for (std::size_t k = 0; k < signs.size(); ++k) {
            if (signs[k] < 0) mask |= 1UL << k;
            if (signs[k] == 0) open = false;
        }
        masks.insert(mask);
        if (open) open_cells.insert(signs);
    }
};

}  // namespace

TEST_SUITE("sign_pattern") {

TEST_CASE("single point") {
    for (std::size_t p = 1; p <= 4; ++p) {
        SignPatternProblem pr;
        pr.normals = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(p), 1);
        pr.weights = Eigen::VectorXd::Constant(1, 2.0);
        const auto r = optimize_sign_pattern(pr);
        CHECK(r.value == 2.0);
        CHECK(evaluate_sign_pattern(pr, r.witness) == 2.0);
    }
}

TEST_CASE("empty and non-positive problems") {
    SignPatternProblem empty;
    empty.normals = Eigen::MatrixXd(2, 0);
    empty.weights = Eigen::VectorXd(0);
    CHECK(optimize_sign_pattern(empty).value == 0.0);
    const auto inst = random_instance(2, 8, 1);
    auto pr = problem_of(inst, Sense::sup);
    pr.weights = -inst.weights.cwiseAbs();
    const auto r = optimize_sign_pattern(pr);
    CHECK(r.value == 0.0);
    CHECK(evaluate_sign_pattern(pr, r.witness) == 0.0);
    CHECK(evaluate_sign_pattern(pr, Eigen::Vector2d::Zero()) == 0.0);
}

TEST_CASE("exact enumeration matches brute force") {
    std::uint64_t id = 0;
    for (std::size_t p = 1; p <= 3; ++p) {
        for (std::size_t m = 1; m <= 11; m += 2) {
            for (int rep = 0; rep < 4; ++rep) {
                const auto inst = random_instance(p, m, ++id);
                for (Sense sense : {Sense::sup, Sense::inf}) {
                    const auto pr = problem_of(inst, sense);
                    const auto r = optimize_sign_pattern(pr);
                    CHECK(r.exact);
                    const double oracle = oracle::brute_force_optimum(inst.normals, inst.weights, sense == Sense::sup);
                    CHECK(std::abs(r.value - oracle) < 1e-12);
                    CHECK(std::abs(evaluate_sign_pattern(pr, r.witness) - r.value) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("stochastic mode matches brute force in the plane") {
    for (std::uint64_t id = 0; id < 30; ++id) {
        const auto inst = random_instance(2, 3 + id % 10, 1000 + id);
        SignPatternOptions opts;
        opts.force_stochastic = true;
        opts.seed = RngSeed{5, id};
        const auto pr = problem_of(inst, Sense::sup);
        const auto r = optimize_sign_pattern(pr, opts);
        CHECK(!r.exact);
        CHECK(std::abs(r.value - oracle::brute_force_optimum(inst.normals, inst.weights, true)) < 1e-12);
    }
}

TEST_CASE("stochastic mode in higher dimension is certified") {
    const auto inst = random_instance(5, 40, 3);
    const auto pr = problem_of(inst, Sense::sup);
    const auto r = optimize_sign_pattern(pr);
    CHECK(!r.exact);
    CHECK(evaluate_sign_pattern(pr, r.witness) == doctest::Approx(r.value).epsilon(1e-12));
    auto inf = problem_of(inst, Sense::inf);
    CHECK(optimize_sign_pattern(inf).value <= r.value);
}

TEST_CASE("negation duality") {
    for (std::uint64_t id = 0; id < 40; ++id) {
        const auto inst = random_instance(1 + id % 3, 2 + id % 12, 2000 + id);
        auto sup = problem_of(inst, Sense::sup);
        auto inf = problem_of(inst, Sense::inf);
        inf.weights = -inf.weights;
        CHECK(optimize_sign_pattern(sup).value == -optimize_sign_pattern(inf).value);
    }
}

TEST_CASE("hints never beat the optimum") {
    auto eng = RngSeed{9, 0}.engine();
    std::normal_distribution<double> norm;
    for (std::uint64_t id = 0; id < 20; ++id) {
        const std::size_t p = id % 2 ? 2 : 4;
        const auto inst = random_instance(p, 25, 3000 + id);
        SignPatternOptions opts;
        opts.n_directions = 64;
        for (int h = 0; h < 5; ++h) {
            Eigen::VectorXd b(p);
            for (auto& v : b) v = norm(eng);
            opts.hints.push_back(b);
        }
        const auto pr = problem_of(inst, Sense::sup);
        const double best = optimize_sign_pattern(pr, opts).value;
        for (const auto& h : opts.hints) CHECK(best >= evaluate_sign_pattern(pr, h));
        CHECK(best >= evaluate_sign_pattern(pr, Eigen::VectorXd::Zero(p)));
    }
}

TEST_CASE("plane sweep visits exactly the realizable violation sets") {
    for (std::uint64_t id = 0; id < 20; ++id) {
        const std::size_t m = 2 + id % 11;
        const auto inst = random_instance(2, m, 4000 + id);
        MaskCollector c;
        const Eigen::Matrix2Xd normals = inst.normals;
        sweep_lines(normals, std::nullopt, c);
        c.masks.insert(0UL);  // the origin
        const auto expected = oracle::feasible_masks(inst.normals);
        CHECK(c.masks == std::set<unsigned long>(expected.begin(), expected.end()));
        CHECK(c.open_cells.size() <= 2 * m);
    }
}

TEST_CASE("face enumeration in three dimensions") {
    for (std::uint64_t id = 0; id < 10; ++id) {
        const auto inst = random_instance(3, 3 + id % 6, 5000 + id);
        MaskCollector c;
        enumerate_faces(inst.normals, c);
        const auto expected = oracle::feasible_masks(inst.normals);
        CHECK(c.masks == std::set<unsigned long>(expected.begin(), expected.end()));
    }
}

TEST_CASE("parallel normals") {
    Eigen::MatrixXd normals(2, 3);
    normals << 1, -2, 3, 0, 0, 0;
    SignPatternProblem pr;
    pr.normals = normals;
    pr.weights = Eigen::Vector3d(1, 1, 1);
    CHECK(optimize_sign_pattern(pr).value == 2.0);
    pr.sense = Sense::inf;
    CHECK(optimize_sign_pattern(pr).value == 0.0);
}

TEST_CASE("pattern realization") {
    const auto inst = random_instance(3, 6, 6);
    for (unsigned long mask : oracle::feasible_masks(inst.normals)) {
        std::vector<Sign> signs(6);
        for (int k = 0; k < 6; ++k) signs[static_cast<std::size_t>(k)] = (mask >> k) & 1UL ? -1 : 1;
        const auto w = realize_pattern(inst.normals, signs, false);
        REQUIRE(w.has_value());
        const Eigen::VectorXd margin = inst.normals.transpose() * *w;
        for (int k = 0; k < 6; ++k) {
            if ((mask >> k) & 1UL) {
                CHECK(margin(k) < 0.0);
            } else {
                CHECK(margin(k) >= -1e-9);
            }
        }
        // With generic normals only the empty set can be confined to the origin.
        if (mask == 0) continue;
        const auto open = realize_pattern(inst.normals, signs, true);
        REQUIRE(open.has_value());
        const Eigen::VectorXd strict = inst.normals.transpose() * *open;
        for (int k = 0; k < 6; ++k) CHECK(((strict(k) < 0.0) == (((mask >> k) & 1UL) != 0)));
    }
    Eigen::MatrixXd opposite(1, 2);
    opposite << 1, -1;
    CHECK(!realize_pattern(opposite, {-1, -1}, false).has_value());
    CHECK(pattern_value(Eigen::Vector3d(1, 2, 4), {-1, 0, -1}) == 5.0);
}

TEST_CASE("feasibility solver agrees with elimination") {
    auto eng = RngSeed{10, 0}.engine();
    std::normal_distribution<double> norm;
    int feasible = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const int rows = 2 + rep % 6, cols = 1 + rep % 3;
        Eigen::MatrixXd a(rows, cols);
        Eigen::VectorXd b(rows);
        for (auto& v : a.reshaped()) v = norm(eng);
        for (auto& v : b) v = norm(eng);
        const auto x = find_feasible_point(a, b);
        CHECK(x.has_value() == oracle::fm_feasible(a, b));
        if (x) {
            ++feasible;
            CHECK(((a * *x - b).array() >= -1e-7).all());
        }
    }
    CHECK(feasible > 0);
    Eigen::MatrixXd a(2, 1);
    a << 1, -1;
    CHECK(!find_feasible_point(a, Eigen::Vector2d(1, 1)).has_value());
    CHECK(find_feasible_point(a, Eigen::Vector2d(1, -2)).has_value());
}

TEST_CASE("window restriction") {
    Eigen::MatrixXd normals(2, 2);
    normals << 1, 0, 0, 1;
    SignPatternProblem pr;
    pr.normals = normals;
    pr.weights = Eigen::Vector2d(1, 1);
    CHECK(optimize_sign_pattern(pr).value == 2.0);
    // Only directions in the first quadrant: nothing is violated.
    pr.window = AngleWindow{0.1, 1.0};
    pr.include_origin = false;
    CHECK(optimize_sign_pattern(pr).value == 0.0);
    pr.window = AngleWindow{3.3, 1.0};
    CHECK(optimize_sign_pattern(pr).value == 2.0);
}

}

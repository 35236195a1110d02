#include <doctest.h>

#include "nonreg/cli.hpp"
#include "nonreg/confsets.hpp"
#include "nonreg/data.hpp"
#include "nonreg/oracle.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace nonreg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "nonreg");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "nonreg_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const auto path = scratch(name);
    std::ofstream(path) << text;
    return path;
}

fs::path mixture_csv(std::size_t n) {
    const auto d = sample(MixtureModel{0.25}, n, RngSeed{21, 0});
    std::ostringstream text;
    text.precision(17);
    text << "y,x\n";
    for (Eigen::Index i = 0; i < d.x().rows(); ++i) text << d.y()(i) << ',' << d.x()(i, 1) << '\n';
    return write_file("mixture.csv", text.str());
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fixed interval on a three point dataset") {
    const auto path = write_file("three.csv", "y,x\n1,1\n-1,2\n1,-1\n");
    const auto r = run({"ci", "--data", path.string(), "--method", "fixed", "--beta", "0,1", "--alpha", "0.05"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    const auto data = parse_class_dataset(path.string());
    const auto expected = fixed_beta_interval(data, Eigen::Vector2d(0, 1), 0.05);
    CHECK(j.at("method") == "fixed");
    CHECK(j.at("target") == "M(beta_star)");
    CHECK(j.at("lo").get<double>() == expected.lo);
    CHECK(j.at("hi").get<double>() == expected.hi);
    CHECK(j.at("n") == 3);
    CHECK(j.at("level").get<double>() == doctest::Approx(0.95));

    const auto fit = run({"fit", "--data", path.string()});
    REQUIRE(fit.code == 0);
    CHECK(json::parse(fit.out).contains("beta"));
}

TEST_CASE("usage errors exit with status 2") {
    const auto path = write_file("three.csv", "y,x\n1,1\n-1,2\n1,-1\n");
    const auto unknown = run({"ci", "--data", path.string(), "--method", "nonsense"});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("unknown method") != std::string::npos);
    CHECK(unknown.err.find("--method") != std::string::npos);
    CHECK(run({"ci", "--data", path.string()}).code == 2);
    CHECK(run({"ci", "--data", path.string(), "--method", "fixed", "--alpha", "abc"}).code == 2);
    CHECK(run({"ci", "--data", scratch("missing.csv").string(), "--method", "fixed"}).code == 2);
    const auto bad = write_file("bad.csv", "y,x\n1,1\n2,2\n");
    CHECK(run({"ci", "--data", bad.string(), "--method", "fixed"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("bootstrap interval is reproducible and writes draws") {
    const auto path = mixture_csv(150);
    const std::vector<std::string> args{"ci", "--data", path.string(), "--method", "bound", "--B", "200", "--seed", "7"};
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto j = json::parse(a.out);
    CHECK(j.at("lo").get<double>() <= j.at("hi").get<double>());
    CHECK(j.at("diagnostics").at("sandwich_violations") == 0);

    const auto draws = scratch("draws.csv");
    auto with_out = args;
    with_out.insert(with_out.end(), {"--out", draws.string()});
    REQUIRE(run(with_out).code == 0);
    std::ifstream in(draws);
    std::string header;
    std::getline(in, header);
    CHECK(header == "draw,L,U,n_near,skipped_reason");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 200);

    auto unwritable = args;
    unwritable.insert(unwritable.end(), {"--out", "/nonexistent_dir/draws.csv"});
    CHECK(run(unwritable).code == 2);
}

TEST_CASE("seed from the environment") {
    const auto path = mixture_csv(150);
    const std::vector<std::string> base{"ci", "--data", path.string(), "--method", "bound", "--B", "100"};
    auto explicit_seed = base;
    explicit_seed.insert(explicit_seed.end(), {"--seed", "99"});
    const auto pinned = run(explicit_seed);
    ::setenv("NONREG_SEED", "99", 1);
    const auto from_env = run(base);
    ::setenv("NONREG_SEED", "12", 1);
    const auto flag_wins = run(explicit_seed);
    ::unsetenv("NONREG_SEED");
    REQUIRE(pinned.code == 0);
    CHECK(from_env.out == pinned.out);
    CHECK(flag_wins.out == pinned.out);
}

TEST_CASE("simulate and coverage commands") {
    const auto config = write_file("config.json", R"({
        "models": [{"model": "mixture", "delta": 0.25}],
        "sizes": [50], "replications": 3, "methods": ["fixed", "bound"], "B": 100, "seed": 3
    })");
    const auto sim = run({"simulate", "--config", config.string(), "--n", "20"});
    REQUIRE(sim.code == 0);
    const auto parsed = parse_class_dataset_text(sim.out);
    CHECK(parsed.n() == 20);
    CHECK(parsed.p() == 2);
    CHECK(run({"simulate", "--config", config.string(), "--dry-run"}).out.empty());

    const auto dir = scratch("coverage_out");
    fs::remove_all(dir);
    const auto dry = run({"coverage", "--config", config.string(), "--out", dir.string(), "--dry-run"});
    CHECK(dry.code == 0);
    CHECK(dry.out.find("config valid") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "coverage.csv"));
    const auto cov = run({"coverage", "--config", config.string(), "--out", dir.string()});
    REQUIRE(cov.code == 0);
    CHECK(fs::exists(dir / "coverage.csv"));
    std::ifstream report(dir / "coverage.json");
    const auto j = json::parse(report);
    CHECK(j.at("rows").size() == 2);
    CHECK(j.at("kind") == "coverage");

    const auto hist = run({"histogram", "--config", config.string(), "--out", dir.string()});
    CHECK(hist.code == 0);
    CHECK(fs::exists(dir / "sampling.csv"));

    const auto broken = write_file("broken.json", R"({"models": [], "sizes": [50], "replications": 0})");
    CHECK(run({"coverage", "--config", broken.string(), "--dry-run"}).code == 2);
    const auto typo = write_file("typo.json", R"({"modles": []})");
    CHECK(run({"coverage", "--config", typo.string(), "--dry-run"}).code == 2);
}

}

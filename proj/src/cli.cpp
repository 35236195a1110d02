#include "nonreg/cli.hpp"

#include "nonreg/bounds.hpp"
#include "nonreg/confsets.hpp"
#include "nonreg/data.hpp"
#include "nonreg/error.hpp"
#include "nonreg/estimators.hpp"
#include "nonreg/itr.hpp"
#include "nonreg/metrics.hpp"
#include "nonreg/oracle.hpp"
#include "nonreg/simharness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace nonreg {

namespace {

using nlohmann::json;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct Flags {
    std::string data;
    std::string method;
    std::string config;
    std::string out;
    std::string beta;
    std::string label = "y";
    bool no_intercept = false;
    bool decision = false;
    bool dry_run = false;
    double alpha = 0.05;
    double omega = 0.10;
    double eta = kUnset;
    double lambda = kUnset;
    double rho = kUnset;
    double tau = kDefaultTau;
    double p_treat = kUnset;
    std::size_t B = 1000;
    std::size_t B_outer = 200;
    std::size_t B_inner = 50;
    std::size_t n = 200;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Flags whose value was given on the command line, by long name.
using Given = std::map<std::string, bool>;

std::uint64_t resolve_seed(const Flags& f, const Given& given, std::uint64_t fallback) {
    if (given.count("seed")) return f.seed;
    if (const char* env = std::getenv("NONREG_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ValidationError(std::string("NONREG_SEED is not an unsigned integer: '") + env + "'");
        }
    }
    return fallback;
}

Eigen::VectorXd parse_vector(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError("cannot parse coefficient '" + item + "'");
        }
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
    return rows;
}

ClassDataset load_class(const Flags& f) {
    if (f.data.empty()) throw ValidationError("--data is required");
    ClassSchema schema;
    schema.label = f.label;
    schema.add_intercept = !f.no_intercept;
    return parse_class_dataset(f.data, schema);
}

DecisionDataset load_decision(const Flags& f) {
    if (f.data.empty()) throw ValidationError("--data is required");
    DecisionSchema schema;
    schema.add_intercept = !f.no_intercept;
    return parse_decision_dataset(f.data, schema);
}

std::optional<double> p_treat(const Flags& f) {
    if (std::isnan(f.p_treat)) return std::nullopt;
    return f.p_treat;
}

std::optional<Split> split_of(const Flags& f) {
    if (std::isnan(f.eta)) return std::nullopt;
    return Split{f.omega - f.eta, f.eta};
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    return out;
}

std::filesystem::path prepare_dir(const std::string& dir) {
    if (dir.empty()) throw ValidationError("--out is required");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw ValidationError("cannot create output directory '" + dir + "'");
    return dir;
}

int cmd_fit(const Flags& f, std::ostream& out) {
    json j;
    if (f.decision) {
        const DecisionDataset data = load_decision(f);
        const QCoefEstimate q = fit_q_model(data);
        j = {{"n", data.n()},
             {"beta0", to_json(q.beta0)},
             {"beta1", to_json(q.beta1)},
             {"r_hat", to_json(q.r_hat)},
             {"condition_number", q.condition_number}};
    } else {
        const ClassDataset data = load_class(f);
        const CoefEstimate est = fit_least_squares(data);
        j = {{"n", data.n()},
             {"beta", to_json(est.beta)},
             {"sigma", to_json(est.sigma)},
             {"condition_number", est.condition_number},
             {"training_error", empirical_misclass(data, est.beta)}};
    }
    out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_ci(const Flags& f, const Given& given, std::ostream& out) {
    const auto& methods = known_methods();
    if (std::find(methods.begin(), methods.end(), f.method) == methods.end()) {
        throw ValidationError("unknown method '" + f.method + "'");
    }
    const RngSeed seed{resolve_seed(f, given, 1), 0};
    json diag = json::object();
    Interval iv;
    double level = 1.0 - f.alpha;
    std::size_t n = 0;
    SearchConfig search;
    search.seed = seed;
    search.threads = f.threads;
    std::optional<double> value_scale;
    std::vector<BoundDraw> draws;
    if (is_value_method(f.method)) {
        const DecisionDataset data = load_decision(f);
        n = data.n();
        const PropensityModel propensity = PropensityModel::choose(data, p_treat(f));
        const QCoefEstimate q = fit_q_model(data);
        if (f.method == "value-fixed") {
            const Eigen::VectorXd beta1 = f.beta.empty() ? q.beta1 : parse_vector(f.beta);
            iv = value_fixed_interval(data, beta1, propensity, f.alpha);
            diag["beta1"] = to_json(beta1);
        } else if (f.method == "value-projection") {
            iv = value_projection_interval(data, q, propensity, f.omega, split_of(f), search);
            level = 1.0 - f.omega;
            diag["beta1_hat"] = to_json(q.beta1);
        } else {
            ValueBoundOptions options;
            options.rho = f.rho;
            options.threads = f.threads;
            const ValueBoundInterval ci = bootstrap_ci_V(data, f.alpha, f.B, seed, propensity, options);
            iv = ci.interval;
            diag = {{"estimate", ci.estimate},       {"lower_quantile", ci.lower_quantile},
                    {"upper_quantile", ci.upper_quantile}, {"skipped", ci.skipped},
                    {"sandwich_violations", ci.sandwich_violations}, {"B", f.B},
                    {"rho", std::isnan(f.rho) ? default_rho(n) : f.rho}, {"value_scale", ci.value_scale}};
            value_scale = ci.value_scale;
            draws = ci.draws;
        }
    } else {
        const ClassDataset data = load_class(f);
        n = data.n();
        const CoefEstimate est = fit_least_squares(data);
        const double lambda = std::isnan(f.lambda) ? default_lambda(n) : f.lambda;
        diag["beta_hat"] = to_json(est.beta);
        if (f.method == "fixed") {
            const Eigen::VectorXd beta = f.beta.empty() ? est.beta : parse_vector(f.beta);
            iv = fixed_beta_interval(data, beta, f.alpha);
            diag["beta"] = to_json(beta);
        } else if (f.method == "projection") {
            iv = projection_interval(data, est, f.omega, split_of(f), search);
            level = 1.0 - f.omega;
        } else if (f.method == "adaptive") {
            iv = adaptive_projection_interval(data, est, f.omega, split_of(f), lambda, search);
            level = 1.0 - f.omega;
            diag["lambda"] = lambda;
        } else if (f.method == "bound" || f.method == "conditional") {
            BoundOptions options;
            options.lambda = lambda;
            options.threads = f.threads;
            const BoundInterval ci = f.method == "bound" ? bootstrap_ci_M(data, f.alpha, f.B, seed, options)
                                                         : conditional_ci_M(data, f.alpha, f.B, seed, {}, options);
            iv = ci.interval;
            diag["estimate"] = ci.estimate;
            diag["lower_quantile"] = ci.lower_quantile;
            diag["upper_quantile"] = ci.upper_quantile;
            diag["skipped"] = ci.skipped;
            diag["sandwich_violations"] = ci.sandwich_violations;
            diag["B"] = f.B;
            diag["lambda"] = lambda;
            draws = ci.draws;
        } else {
            LearningCurveOptions options;
            options.lambda = lambda;
            options.threads = f.threads;
            const LearningCurveInterval ci = learning_curve_ci(data, f.alpha, f.B_outer, f.B_inner, seed, options);
            iv = ci.interval;
            diag["estimate"] = ci.estimate;
            diag["lower_quantile"] = ci.lower_quantile;
            diag["upper_quantile"] = ci.upper_quantile;
            diag["skipped"] = ci.skipped;
            diag["order_violations"] = ci.order_violations;
            diag["B_outer"] = f.B_outer;
            diag["B_inner"] = f.B_inner;
            diag["lambda"] = lambda;
        }
    }
    if (!f.out.empty() && !draws.empty()) {
        auto file = open_output(f.out);
        write_draws_csv(file, draws, value_scale);
    }
    const json j = {{"method", f.method}, {"target", method_target(f.method)},
                    {"lo", iv.lo},        {"hi", iv.hi},
                    {"level", level},     {"n", n},
                    {"diagnostics", diag}};
    out << j.dump(2) << '\n';
    return kExitOk;
}

ExperimentConfig config_with_overrides(const Flags& f, const Given& given) {
    if (f.config.empty()) throw ValidationError("--config is required");
    ExperimentConfig cfg = load_config(f.config);
    if (given.count("alpha")) cfg.alpha = f.alpha;
    if (given.count("omega")) cfg.omega = f.omega;
    if (given.count("eta")) cfg.eta = f.eta;
    if (given.count("lambda")) cfg.lambda = f.lambda;
    if (given.count("rho")) cfg.rho = f.rho;
    if (given.count("tau")) cfg.tau = f.tau;
    if (given.count("B")) cfg.B = f.B;
    if (given.count("B-outer")) cfg.B_outer = f.B_outer;
    if (given.count("B-inner")) cfg.B_inner = f.B_inner;
    if (given.count("threads")) cfg.threads = f.threads;
    cfg.seed = resolve_seed(f, given, cfg.seed);
    if (!given.count("method") || f.method.empty()) return cfg;
    cfg.methods = {f.method};
    return cfg;
}

int cmd_simulate(const Flags& f, const Given& given, std::ostream& out) {
    if (f.config.empty()) throw ValidationError("--config is required");
    const ExperimentConfig cfg = load_config(f.config);
    if (cfg.models.empty()) throw ValidationError("config has no model");
    const ModelSpec& spec = cfg.models.front().spec;
    const RngSeed seed{resolve_seed(f, given, cfg.seed), 0};
    if (f.dry_run) return kExitOk;
    std::ofstream file;
    if (!f.out.empty()) file = open_output(f.out);
    std::ostream& sink = f.out.empty() ? out : file;
    sink << std::setprecision(17);
    if (const auto* decision = std::get_if<DecisionGenModel>(&spec)) {
        const DecisionDataset data = sample(*decision, f.n, seed);
        sink << "a,y,pi";
        for (std::size_t j = 1; j < data.p1(); ++j) sink << ",x" << j;
        sink << '\n';
        for (std::size_t i = 0; i < data.n(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            sink << data.a()(r) << ',' << data.y()(r) << ',' << (*data.pi())(r);
            for (Eigen::Index j = 1; j < data.x1().cols(); ++j) sink << ',' << data.x1()(r, j);
            sink << '\n';
        }
    } else {
        const ClassModel model = std::visit(
            [](const auto& m) -> ClassModel {
                if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DecisionGenModel>) {
                    return MixtureModel{};
                } else {
                    return m;
                }
            },
            spec);
        const ClassDataset data = sample(model, f.n, seed);
        sink << "y";
        int covariate = 0;
        for (Eigen::Index j = 0; j < data.x().cols(); ++j) {
            const bool intercept = j == 0 && (data.x().col(0).array() == 1.0).all();
            sink << ',' << (intercept ? std::string("intercept") : "x" + std::to_string(++covariate));
        }
        sink << '\n';
        for (Eigen::Index i = 0; i < data.x().rows(); ++i) {
            sink << data.y()(i);
            for (Eigen::Index j = 0; j < data.x().cols(); ++j) sink << ',' << data.x()(i, j);
            sink << '\n';
        }
    }
    return kExitOk;
}

int cmd_coverage(const Flags& f, const Given& given, std::ostream& out) {
    const ExperimentConfig cfg = config_with_overrides(f, given);
    cfg.validate();
    if (cfg.methods.empty()) throw ValidationError("coverage study needs at least one method");
    if (f.dry_run) {
        out << "config valid: " << cfg.models.size() << " model(s), " << cfg.sizes.size() << " size(s), "
            << cfg.methods.size() << " method(s), " << cfg.replications << " replications\n";
        return kExitOk;
    }
    const auto dir = prepare_dir(f.out);
    const CoverageReport report = run_coverage_study(cfg);
    {
        auto csv = open_output(dir / "coverage.csv");
        write_coverage_csv(csv, report);
        auto js = open_output(dir / "coverage.json");
        js << report_to_json(report).dump(2) << '\n';
    }
    print_coverage_table(out, report);
    return kExitOk;
}

double iqr(std::vector<double> v) {
    return nearest_rank_quantile(v, 0.75) - nearest_rank_quantile(std::move(v), 0.25);
}

int cmd_histogram(const Flags& f, const Given& given, std::ostream& out) {
    const ExperimentConfig cfg = config_with_overrides(f, given);
    cfg.validate();
    if (f.dry_run) {
        out << "config valid: " << cfg.models.size() << " model(s), " << cfg.sizes.size() << " size(s), "
            << cfg.replications << " replications\n";
        return kExitOk;
    }
    const auto dir = prepare_dir(f.out);
    const auto rows = run_sampling_distribution(cfg);
    {
        auto csv = open_output(dir / "sampling.csv");
        write_sampling_csv(csv, rows);
        auto js = open_output(dir / "config.json");
        js << config_to_json(cfg).dump(2) << '\n';
    }
    std::map<std::tuple<std::string, std::size_t, std::string>, std::vector<double>> groups;
    for (const auto& r : rows) groups[{r.model, r.n, r.metric}].push_back(r.value);
    out << std::left << std::setw(24) << "model" << std::setw(8) << "n" << std::setw(8) << "metric" << std::right
        << std::setw(12) << "median" << std::setw(12) << "iqr" << '\n';
    for (const auto& m : cfg.models) {
        for (auto n : cfg.sizes) {
            for (const char* metric : {"M", "S_tau"}) {
                const auto it = groups.find({m.label, n, metric});
                if (it == groups.end()) continue;
                out << std::left << std::setw(24) << m.label << std::setw(8) << n << std::setw(8) << metric
                    << std::right << std::setprecision(5) << std::setw(12) << nearest_rank_quantile(it->second, 0.5)
                    << std::setw(12) << iqr(it->second) << '\n';
            }
        }
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inference for the error of linear classifiers and the value of linear treatment rules"};
    app.require_subcommand(1, 1);
    Flags f;
    std::vector<CLI::Option*> options;

    auto data_flags = [&](CLI::App* sub) {
        options.push_back(sub->add_option("--data", f.data, "Input CSV"));
        options.push_back(sub->add_option("--label", f.label, "Label column of a classification CSV"));
        options.push_back(sub->add_flag("--no-intercept", f.no_intercept, "Do not prepend an intercept column"));
    };
    auto tuning_flags = [&](CLI::App* sub) {
        options.push_back(sub->add_option("--alpha", f.alpha, "Level of fixed and bootstrap intervals"));
        options.push_back(sub->add_option("--omega", f.omega, "Total level of projection intervals"));
        options.push_back(sub->add_option("--eta", f.eta, "Ellipsoid share of omega (default omega/2)"));
        options.push_back(sub->add_option("--lambda", f.lambda, "Near-boundary threshold (default log(n)/n)"));
        options.push_back(sub->add_option("--rho", f.rho, "Treatment near-boundary threshold (default log(n))"));
        options.push_back(sub->add_option("--B", f.B, "Bootstrap draws"));
        options.push_back(sub->add_option("--B-outer", f.B_outer, "Outer draws of the learning-curve interval"));
        options.push_back(sub->add_option("--B-inner", f.B_inner, "Inner draws of the learning-curve interval"));
        options.push_back(sub->add_option("--tau", f.tau, "Smooth-surrogate scale"));
        options.push_back(sub->add_option("--seed", f.seed, "Random seed (default: NONREG_SEED or 1)"));
        options.push_back(sub->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber));
    };

    auto* fit = app.add_subcommand("fit", "Least-squares fit of a classification or decision dataset");
    data_flags(fit);
    options.push_back(fit->add_flag("--decision", f.decision, "Treat the data as a decision dataset"));

    auto* ci = app.add_subcommand("ci", "Confidence interval for a misclassification rate or a value");
    data_flags(ci);
    tuning_flags(ci);
    options.push_back(ci->add_option("--method", f.method, "Interval method")->required());
    options.push_back(ci->add_option("--beta", f.beta, "Comma-separated coefficients for fixed methods"));
    options.push_back(ci->add_option("--p-treat", f.p_treat, "Known constant P(A = +1)"));
    options.push_back(ci->add_option("--out", f.out, "Write bootstrap draws to this CSV"));

    auto* simulate = app.add_subcommand("simulate", "Draw a dataset from the first model of a config");
    options.push_back(simulate->add_option("--config", f.config, "Experiment config (JSON)")->required());
    options.push_back(simulate->add_option("--n", f.n, "Sample size")->check(CLI::PositiveNumber));
    options.push_back(simulate->add_option("--seed", f.seed, "Random seed"));
    options.push_back(simulate->add_option("--out", f.out, "Output CSV (default: standard output)"));
    options.push_back(simulate->add_flag("--dry-run", f.dry_run, "Validate only"));

    for (auto* sub : {app.add_subcommand("coverage", "Run a coverage study"),
                      app.add_subcommand("histogram", "Sampling distribution of the fitted rule's error")}) {
        tuning_flags(sub);
        options.push_back(sub->add_option("--config", f.config, "Experiment config (JSON)")->required());
        options.push_back(sub->add_option("--out", f.out, "Output directory"));
        options.push_back(sub->add_option("--method", f.method, "Restrict to one method"));
        options.push_back(sub->add_flag("--dry-run", f.dry_run, "Validate the config and write nothing"));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    Given given;
    for (const auto* opt : options) {
        if (opt->count() > 0) given[opt->get_name(false, true).substr(2)] = true;
    }
    try {
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "fit") return cmd_fit(f, out);
        if (name == "ci") return cmd_ci(f, given, out);
        if (name == "simulate") return cmd_simulate(f, given, out);
        if (name == "coverage") return cmd_coverage(f, given, out);
        return cmd_histogram(f, given, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        if (std::string(e.what()).rfind("unknown method", 0) == 0) err << app.get_subcommand("ci")->help();
        return kExitValidation;
    } catch (const EstimationError& e) {
        err << "estimation failed: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const AssumptionError& e) {
        err << "assumption violated: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace nonreg

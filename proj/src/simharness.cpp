#include "nonreg/simharness.hpp"

#include "nonreg/bounds.hpp"
#include "nonreg/error.hpp"
#include "nonreg/estimators.hpp"
#include "nonreg/itr.hpp"
#include "nonreg/metrics.hpp"
#include "nonreg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>

namespace nonreg {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

bool is_class(const ModelSpec& spec) { return !std::holds_alternative<DecisionGenModel>(spec); }

ClassModel as_class(const ModelSpec& spec) {
    return std::visit(
        [](const auto& m) -> ClassModel {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DecisionGenModel>) {
                throw ValidationError("not a classification model");
            } else {
                return m;
            }
        },
        spec);
}

std::size_t design_dim(const ModelSpec& spec) {
    if (is_class(spec)) return feature_dim(as_class(spec));
    return 2 * (std::get<DecisionGenModel>(spec).covariates() + 1);
}

double nan_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<double>();
}

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

RngSeed replication_seed(const ExperimentConfig& cfg, const std::string& label, std::size_t n, std::size_t rep) {
    return RngSeed{cfg.seed, 0}.child(stream_id(label.c_str())).child(n).child(rep);
}

Split config_split(const ExperimentConfig& cfg) {
    if (std::isnan(cfg.eta)) return Split::even(cfg.omega);
    return {cfg.omega - cfg.eta, cfg.eta};
}

double method_level(const ExperimentConfig& cfg, const std::string& method) {
    if (method == "projection" || method == "adaptive" || method == "value-projection") return 1.0 - cfg.omega;
    return 1.0 - cfg.alpha;
}

struct MethodOutcome {
    std::optional<Interval> interval;
    double truth = 0.0;
    std::size_t violations = 0;
};

/// Expected true error of the fitted rule over independent training sets of size n.
double learning_curve_truth(const ClassModel& model, std::size_t n, std::size_t reps, const RngSeed& seed) {
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        try {
            const ClassDataset data = sample(model, n, seed.child(r));
            total += true_misclass(model, fit_least_squares(data).beta, n).strict;
            ++used;
        } catch (const EstimationError&) {
        }
    }
    if (used == 0) throw EstimationError("every training set failed to fit");
    return total / static_cast<double>(used);
}

MethodOutcome run_class_method(const ExperimentConfig& cfg, const std::string& method, const ClassModel& model,
                               const ClassDataset& data, std::size_t n, const RngSeed& seed, double gamma_truth) {
    MethodOutcome out;
    const CoefEstimate est = fit_least_squares(data);
    const Eigen::VectorXd beta_star = population_beta(model, n);
    SearchConfig search;
    search.n_interior = cfg.n_interior;
    search.n_boundary = cfg.n_boundary;
    search.exact_low_dim = cfg.exact_low_dim;
    search.seed = seed;
    const double lambda = std::isnan(cfg.lambda) ? default_lambda(n) : cfg.lambda;
    if (method == "fixed") {
        out.interval = fixed_beta_interval(data, beta_star, cfg.alpha);
        out.truth = true_misclass(model, beta_star, n).strict;
    } else if (method == "projection") {
        out.interval = projection_interval(data, est, cfg.omega, config_split(cfg), search);
        out.truth = true_misclass(model, beta_star, n).strict;
    } else if (method == "adaptive") {
        out.interval = adaptive_projection_interval(data, est, cfg.omega, config_split(cfg), lambda, search);
        out.truth = true_misclass(model, beta_star, n).strict;
    } else if (method == "bound" || method == "conditional") {
        BoundOptions options;
        options.lambda = lambda;
        const BoundInterval ci = method == "bound" ? bootstrap_ci_M(data, cfg.alpha, cfg.B, seed, options)
                                                   : conditional_ci_M(data, cfg.alpha, cfg.B, seed, {}, options);
        out.interval = ci.interval;
        out.violations = ci.sandwich_violations;
        out.truth = true_misclass(model, est.beta, n).strict;
    } else if (method == "learning-curve") {
        LearningCurveOptions options;
        options.lambda = lambda;
        const LearningCurveInterval ci = learning_curve_ci(data, cfg.alpha, cfg.B_outer, cfg.B_inner, seed, options);
        out.interval = ci.interval;
        out.violations = ci.order_violations;
        out.truth = gamma_truth;
    } else {
        throw ValidationError("method '" + method + "' does not apply to classification models");
    }
    return out;
}

MethodOutcome run_value_method(const ExperimentConfig& cfg, const std::string& method, const DecisionGenModel& model,
                               const DecisionDataset& data, const RngSeed& seed) {
    MethodOutcome out;
    const PropensityModel propensity = PropensityModel::choose(data);
    const Eigen::VectorXd beta1_star = population_beta1(model);
    if (method == "value-fixed") {
        out.interval = value_fixed_interval(data, beta1_star, propensity, cfg.alpha);
        out.truth = true_value(model, beta1_star);
    } else if (method == "value-projection") {
        SearchConfig search;
        search.n_interior = cfg.n_interior;
        search.n_boundary = cfg.n_boundary;
        search.exact_low_dim = cfg.exact_low_dim;
        search.seed = seed;
        out.interval = value_projection_interval(data, fit_q_model(data), propensity, cfg.omega, config_split(cfg),
                                                 search);
        out.truth = true_value(model, beta1_star);
    } else if (method == "value-bound") {
        ValueBoundOptions options;
        options.rho = cfg.rho;
        const ValueBoundInterval ci = bootstrap_ci_V(data, cfg.alpha, cfg.B, seed, propensity, options);
        out.interval = ci.interval;
        out.violations = ci.sandwich_violations;
        out.truth = true_value(model, fit_q_model(data).beta1);
    } else {
        throw ValidationError("method '" + method + "' does not apply to decision models");
    }
    return out;
}

bool applies(const std::string& method, const ModelSpec& spec) { return is_value_method(method) != is_class(spec); }

}  // namespace

std::string model_label(const ModelSpec& spec) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MixtureModel>) {
                return "mixture(delta=" + fmt(m.delta) + ")";
            } else if constexpr (std::is_same_v<T, LocalSequence>) {
                return "local(c=" + fmt(m.c) + ")";
            } else if constexpr (std::is_same_v<T, AtomModel>) {
                return "atom(q=" + fmt(m.q) + ")";
            } else {
                std::string s = "decision(theta=";
                for (Eigen::Index i = 0; i < m.theta.size(); ++i) s += (i ? ";" : "") + fmt(m.theta(i));
                return s + ")";
            }
        },
        spec);
}

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods = {"fixed",          "projection",  "adaptive",
                                                     "bound",          "conditional", "learning-curve",
                                                     "value-fixed",    "value-projection", "value-bound"};
    return methods;
}

bool is_value_method(const std::string& method) { return method.rfind("value-", 0) == 0; }

std::string method_target(const std::string& method) {
    if (method == "fixed" || method == "projection" || method == "adaptive") return "M(beta_star)";
    if (method == "bound" || method == "conditional") return "M(beta_hat)";
    if (method == "learning-curve") return "M_n(Gamma)";
    if (method == "value-fixed" || method == "value-projection") return "V(beta1_star)";
    if (method == "value-bound") return "V(beta1_hat)";
    throw ValidationError("unknown method '" + method + "'");
}

void ExperimentConfig::validate() const {
    if (models.empty()) throw ValidationError("config needs at least one model");
    if (sizes.empty()) throw ValidationError("config needs at least one training size");
    if (replications < 1) throw ValidationError("replications must be at least 1");
    std::set<std::string> labels;
    for (const auto& m : models) {
        if (!labels.insert(m.label).second) throw ValidationError("duplicate model label '" + m.label + "'");
        for (auto n : sizes) {
            if (n < design_dim(m.spec) + 2) {
                throw ValidationError("training size " + std::to_string(n) + " too small for model " + m.label);
            }
        }
    }
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(alpha)) throw ValidationError("alpha must lie in (0, 1)");
    if (!in_unit(omega)) throw ValidationError("omega must lie in (0, 1)");
    if (!std::isnan(eta) && !(eta > 0.0 && eta < omega)) throw ValidationError("eta must lie in (0, omega)");
    if (!(tau > 0.0)) throw ValidationError("tau must be positive");
    if (threads < 1) throw ValidationError("threads must be at least 1");
    if (!std::isnan(lambda) && !(lambda >= 0.0)) throw ValidationError("lambda must be non-negative");
    if (!std::isnan(rho) && !(rho >= 0.0)) throw ValidationError("rho must be non-negative");
    for (const auto& method : methods) {
        if (std::find(known_methods().begin(), known_methods().end(), method) == known_methods().end()) {
            throw ValidationError("unknown method '" + method + "'");
        }
        if (std::none_of(models.begin(), models.end(), [&](const auto& m) { return applies(method, m.spec); })) {
            throw ValidationError("method '" + method + "' applies to none of the configured models");
        }
        if ((method == "bound" || method == "value-bound") && B < 100) {
            throw ValidationError("method '" + method + "' needs B >= 100");
        }
        if (method == "conditional" && B < 500) throw ValidationError("method 'conditional' needs B >= 500");
        if (method == "learning-curve") {
            if (B_outer < 100) throw ValidationError("method 'learning-curve' needs B_outer >= 100");
            if (B_inner < 25) throw ValidationError("method 'learning-curve' needs B_inner >= 25");
            if (truth_reps < 1) throw ValidationError("truth_reps must be at least 1");
        }
    }
}

ExperimentConfig config_from_json(const json& j) {
    static const std::set<std::string> allowed = {
        "model", "models", "sizes",      "replications", "methods",    "alpha",  "omega", "eta",
        "tau",   "B",      "B_outer",    "B_inner",      "truth_reps", "search", "lambda", "rho",
        "seed",  "threads", "schema",    "kind",         "rows"};
    try {
        if (!j.is_object()) throw ValidationError("config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (!allowed.count(key)) throw ValidationError("unknown config key '" + key + "'");
        }
        ExperimentConfig cfg;
        std::vector<json> models;
        if (j.contains("models")) {
            for (const auto& m : j.at("models")) models.push_back(m);
        }
        if (j.contains("model")) models.push_back(j.at("model"));
        for (const auto& m : models) {
            LabeledModel lm;
            lm.spec = model_from_json(m);
            lm.label = m.value("label", model_label(lm.spec));
            cfg.models.push_back(std::move(lm));
        }
        if (j.contains("sizes")) cfg.sizes = j.at("sizes").get<std::vector<std::size_t>>();
        cfg.replications = j.value("replications", cfg.replications);
        if (j.contains("methods")) cfg.methods = j.at("methods").get<std::vector<std::string>>();
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.omega = j.value("omega", cfg.omega);
        cfg.eta = nan_or(j, "eta", cfg.eta);
        cfg.tau = j.value("tau", cfg.tau);
        cfg.B = j.value("B", cfg.B);
        cfg.B_outer = j.value("B_outer", cfg.B_outer);
        cfg.B_inner = j.value("B_inner", cfg.B_inner);
        cfg.truth_reps = j.value("truth_reps", cfg.truth_reps);
        if (j.contains("search")) {
            const auto& s = j.at("search");
            for (const auto& [key, value] : s.items()) {
                if (key != "n_interior" && key != "n_boundary" && key != "exact_low_dim") {
                    throw ValidationError("unknown search key '" + key + "'");
                }
            }
            cfg.n_interior = s.value("n_interior", cfg.n_interior);
            cfg.n_boundary = s.value("n_boundary", cfg.n_boundary);
            cfg.exact_low_dim = s.value("exact_low_dim", cfg.exact_low_dim);
        }
        cfg.lambda = nan_or(j, "lambda", cfg.lambda);
        cfg.rho = nan_or(j, "rho", cfg.rho);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
        return cfg;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

json config_to_json(const ExperimentConfig& cfg) {
    json models = json::array();
    for (const auto& m : cfg.models) {
        json mj = model_to_json(m.spec);
        mj["label"] = m.label;
        models.push_back(mj);
    }
    return {{"models", models},
            {"sizes", cfg.sizes},
            {"replications", cfg.replications},
            {"methods", cfg.methods},
            {"alpha", cfg.alpha},
            {"omega", cfg.omega},
            {"eta", nan_to_null(cfg.eta)},
            {"tau", cfg.tau},
            {"B", cfg.B},
            {"B_outer", cfg.B_outer},
            {"B_inner", cfg.B_inner},
            {"truth_reps", cfg.truth_reps},
            {"search",
             {{"n_interior", cfg.n_interior}, {"n_boundary", cfg.n_boundary}, {"exact_low_dim", cfg.exact_low_dim}}},
            {"lambda", nan_to_null(cfg.lambda)},
            {"rho", nan_to_null(cfg.rho)},
            {"seed", cfg.seed},
            {"threads", cfg.threads}};
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::vector<SamplingRow> run_sampling_distribution(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<SamplingRow> rows;
    for (const auto& m : cfg.models) {
        if (!is_class(m.spec)) throw ValidationError("sampling distributions need a classification model");
        const ClassModel model = as_class(m.spec);
        for (auto n : cfg.sizes) {
            std::vector<std::optional<std::pair<double, double>>> slots(cfg.replications);
            parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
                const ClassDataset data = sample(model, n, replication_seed(cfg, m.label, n, rep).child(0));
                try {
                    const Eigen::VectorXd beta = fit_least_squares(data).beta;
                    slots[rep] = std::make_pair(true_misclass(model, beta, n).strict,
                                                true_smooth_surrogate(model, beta, cfg.tau, n));
                } catch (const EstimationError&) {
                }
            });
            std::size_t failed = 0;
            for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
                if (!slots[rep]) {
                    ++failed;
                    continue;
                }
                rows.push_back({m.label, n, rep, "M", slots[rep]->first});
                rows.push_back({m.label, n, rep, "S_tau", slots[rep]->second});
            }
            if (static_cast<double>(failed) > 0.05 * static_cast<double>(cfg.replications)) {
                throw EstimationError(std::to_string(failed) + " of " + std::to_string(cfg.replications) +
                                      " fits failed for " + m.label + " at n=" + std::to_string(n));
            }
        }
    }
    return rows;
}

void write_sampling_csv(std::ostream& out, const std::vector<SamplingRow>& rows) {
    out << "# schema=1\nmodel,n,rep,metric,value\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.model << ',' << r.n << ',' << r.rep << ',' << r.metric << ',' << r.value << '\n';
}

CoverageReport run_coverage_study(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.methods.empty()) throw ValidationError("coverage study needs at least one method");
    CoverageReport report;
    report.config = cfg;
    for (const auto& m : cfg.models) {
        std::vector<std::string> methods;
        for (const auto& method : cfg.methods) {
            if (applies(method, m.spec)) methods.push_back(method);
        }
        if (methods.empty()) continue;
        for (auto n : cfg.sizes) {
            double gamma_truth = 0.0;
            if (std::find(methods.begin(), methods.end(), "learning-curve") != methods.end()) {
                gamma_truth = learning_curve_truth(as_class(m.spec), n, cfg.truth_reps,
                                                   RngSeed{cfg.seed, 1}.child(stream_id(m.label.c_str())).child(n));
            }
            std::vector<std::vector<std::optional<MethodOutcome>>> slots(cfg.replications);
            parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
                const RngSeed rs = replication_seed(cfg, m.label, n, rep);
                auto& row = slots[rep];
                row.resize(methods.size());
                if (is_class(m.spec)) {
                    const ClassModel model = as_class(m.spec);
                    const ClassDataset data = sample(model, n, rs.child(0));
                    for (std::size_t k = 0; k < methods.size(); ++k) {
                        try {
                            row[k] = run_class_method(cfg, methods[k], model, data, n,
                                                      rs.child(stream_id(methods[k].c_str())), gamma_truth);
                        } catch (const EstimationError&) {
                        } catch (const AssumptionError&) {
                        }
                    }
                } else {
                    const auto& model = std::get<DecisionGenModel>(m.spec);
                    const DecisionDataset data = sample(model, n, rs.child(0));
                    for (std::size_t k = 0; k < methods.size(); ++k) {
                        try {
                            row[k] = run_value_method(cfg, methods[k], model, data,
                                                      rs.child(stream_id(methods[k].c_str())));
                        } catch (const EstimationError&) {
                        } catch (const AssumptionError&) {
                        }
                    }
                }
            });
            for (std::size_t k = 0; k < methods.size(); ++k) {
                CoverageRow row;
                row.model = m.label;
                row.method = methods[k];
                row.target = method_target(methods[k]);
                row.n = n;
                row.level = method_level(cfg, methods[k]);
                double covered = 0.0, width = 0.0;
                for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
                    const auto& outcome = slots[rep][k];
                    if (!outcome || !outcome->interval) {
                        ++row.failures;
                        continue;
                    }
                    ++row.replications;
                    row.invariant_violations += outcome->violations;
                    if (outcome->interval->contains(outcome->truth)) covered += 1.0;
                    width += outcome->interval->width();
                }
                if (row.replications > 0) {
                    const double r = static_cast<double>(row.replications);
                    row.coverage = covered / r;
                    row.mean_width = width / r;
                    row.mc_se = std::sqrt(row.coverage * (1.0 - row.coverage) / r);
                }
                row.flagged = static_cast<double>(row.failures) > 0.05 * static_cast<double>(cfg.replications);
                report.rows.push_back(row);
            }
        }
    }
    return report;
}

json report_to_json(const CoverageReport& report) {
    json j = config_to_json(report.config);
    j["schema"] = 1;
    j["kind"] = "coverage";
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"model", r.model},
                        {"method", r.method},
                        {"target", r.target},
                        {"n", r.n},
                        {"level", r.level},
                        {"coverage", r.coverage},
                        {"mean_width", r.mean_width},
                        {"mc_se", r.mc_se},
                        {"replications", r.replications},
                        {"failures", r.failures},
                        {"flagged", r.flagged},
                        {"invariant_violations", r.invariant_violations}});
    }
    j["rows"] = rows;
    return j;
}

CoverageReport report_from_json(const json& j) {
    CoverageReport report;
    report.config = config_from_json(j);
    try {
        if (j.contains("rows")) {
            for (const auto& rj : j.at("rows")) {
                CoverageRow r;
                r.model = rj.at("model").get<std::string>();
                r.method = rj.at("method").get<std::string>();
                r.target = rj.at("target").get<std::string>();
                r.n = rj.at("n").get<std::size_t>();
                r.level = rj.at("level").get<double>();
                r.coverage = rj.at("coverage").get<double>();
                r.mean_width = rj.at("mean_width").get<double>();
                r.mc_se = rj.at("mc_se").get<double>();
                r.replications = rj.at("replications").get<std::size_t>();
                r.failures = rj.at("failures").get<std::size_t>();
                r.flagged = rj.at("flagged").get<bool>();
                r.invariant_violations = rj.value("invariant_violations", std::size_t{0});
                report.rows.push_back(r);
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("report rows: ") + e.what());
    }
    return report;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
    out << "# schema=1\nmodel,method,target,n,level,coverage,mean_width,mc_se,replications,failures,flagged,"
           "invariant_violations\n"
        << std::setprecision(17);
    for (const auto& r : report.rows) {
        out << r.model << ',' << r.method << ',' << r.target << ',' << r.n << ',' << r.level << ',' << r.coverage
            << ',' << r.mean_width << ',' << r.mc_se << ',' << r.replications << ',' << r.failures << ','
            << (r.flagged ? 1 : 0) << ',' << r.invariant_violations << '\n';
    }
}

void print_coverage_table(std::ostream& out, const CoverageReport& report) {
    out << std::left << std::setw(24) << "model" << std::setw(18) << "method" << std::setw(8) << "n" << std::right
        << std::setw(8) << "level" << std::setw(10) << "coverage" << std::setw(9) << "mc_se" << std::setw(11)
        << "width" << std::setw(7) << "reps" << std::setw(6) << "fail" << '\n';
    for (const auto& r : report.rows) {
        out << std::left << std::setw(24) << r.model << std::setw(18) << r.method << std::setw(8) << r.n
            << std::right << std::fixed << std::setprecision(3) << std::setw(8) << r.level << std::setw(10)
            << r.coverage << std::setw(9) << r.mc_se << std::setprecision(4) << std::setw(11) << r.mean_width
            << std::setw(7) << r.replications << std::setw(6) << r.failures << (r.flagged ? "  FLAGGED" : "")
            << '\n';
        out.unsetf(std::ios::floatfield);
    }
}

}  // namespace nonreg

#pragma once

#include "nonreg/confsets.hpp"
#include "nonreg/oracle.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace nonreg {

struct LabeledModel {
    std::string label;
    ModelSpec spec;
};

/// Default label such as "mixture(delta=0.25)".
std::string model_label(const ModelSpec& spec);

/// Interval methods understood by the coverage study and the command line.
const std::vector<std::string>& known_methods();
bool is_value_method(const std::string& method);

struct ExperimentConfig {
    std::vector<LabeledModel> models;
    std::vector<std::size_t> sizes;
    std::size_t replications = 125;
    std::vector<std::string> methods;
    /// Level of the bootstrap and fixed-coefficient intervals.
    double alpha = 0.10;
    /// Total level of the projection intervals; NaN eta splits it evenly.
    double omega = 0.10;
    double eta = std::numeric_limits<double>::quiet_NaN();
    double tau = 3.0;
    std::size_t B = 1000;
    std::size_t B_outer = 200;
    std::size_t B_inner = 50;
    /// Training sets used to compute the expected-error target of the learning-curve method.
    std::size_t truth_reps = 500;
    std::size_t n_interior = 4096;
    std::size_t n_boundary = 512;
    bool exact_low_dim = true;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double rho = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    void validate() const;
};

/// Unknown keys are rejected, except the extra keys written into reports.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

struct SamplingRow {
    std::string model;
    std::size_t n = 0;
    std::size_t rep = 0;
    std::string metric;
    double value = 0.0;
};

/// For every model, size and replication: fit on a fresh training set and record the true error
/// ("M") and the true smooth surrogate ("S_tau") of the fitted rule.
std::vector<SamplingRow> run_sampling_distribution(const ExperimentConfig& cfg);
void write_sampling_csv(std::ostream& out, const std::vector<SamplingRow>& rows);

struct CoverageRow {
    std::string model;
    std::string method;
    std::string target;
    std::size_t n = 0;
    double level = 0.0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double mc_se = 0.0;
    std::size_t replications = 0;
    std::size_t failures = 0;
    /// Failures above 5% of the requested replications.
    bool flagged = false;
    /// Bootstrap draws whose bounds failed to sandwich the centered statistic (bound, conditional,
    /// value-bound) or whose bounds were out of order (learning-curve).
    std::size_t invariant_violations = 0;
};

struct CoverageReport {
    ExperimentConfig config;
    std::vector<CoverageRow> rows;
};

/// Target functional of a method, e.g. "M(beta_hat)".
std::string method_target(const std::string& method);

CoverageReport run_coverage_study(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const CoverageReport& report);
CoverageReport report_from_json(const nlohmann::json& j);
void write_coverage_csv(std::ostream& out, const CoverageReport& report);
/// Fixed-width summary for terminals.
void print_coverage_table(std::ostream& out, const CoverageReport& report);

}  // namespace nonreg

#include "nonreg/data.hpp"

#include "nonreg/error.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace nonreg {

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Table read_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Table table;
    bool have_header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (!have_header) {
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
            table.header = split(line);
            have_header = true;
            continue;
        }
        ++row;
        const auto fields = split(line);
        if (fields.size() != table.header.size()) {
            throw ParseError(row, "expected " + std::to_string(table.header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
        }
        std::vector<double> values(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const std::string& f = fields[j];
            if (f.empty()) throw ParseError(row, "missing value in column '" + table.header[j] + "'");
            errno = 0;
            char* end = nullptr;
            values[j] = std::strtod(f.c_str(), &end);
            if (end != f.c_str() + f.size() || errno == ERANGE || !std::isfinite(values[j])) {
                throw ParseError(row, "non-numeric value '" + f + "' in column '" + table.header[j] + "'");
            }
        }
        table.rows.push_back(std::move(values));
    }
    if (!have_header) throw ValidationError("empty input: no header row");
    if (table.rows.empty()) throw ValidationError("input has no data rows");
    return table;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::size_t column(const Table& t, const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw ValidationError("column '" + name + "' not found");
    return static_cast<std::size_t>(it - t.header.begin());
}

bool has_column(const Table& t, const std::string& name) {
    return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
}

Eigen::MatrixXd gather(const Table& t, const std::vector<std::string>& names, bool add_intercept) {
    const bool prepend = add_intercept && std::find(names.begin(), names.end(), "intercept") == names.end();
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    const auto p = static_cast<Eigen::Index>(names.size() + (prepend ? 1 : 0));
    if (p == 0) throw ValidationError("no feature columns");
    Eigen::MatrixXd x(n, p);
    std::vector<std::size_t> cols;
    for (const auto& name : names) cols.push_back(column(t, name));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index j = 0;
        if (prepend) x(i, j++) = 1.0;
        for (const auto c : cols) x(i, j++) = t.rows[static_cast<std::size_t>(i)][c];
    }
    return x;
}

std::vector<std::string> remaining(const Table& t, const std::vector<std::string>& reserved) {
    std::vector<std::string> out;
    for (const auto& h : t.header) {
        if (std::find(reserved.begin(), reserved.end(), h) == reserved.end()) out.push_back(h);
    }
    return out;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw ValidationError(std::string(what) + " contains non-finite values");
}

}  // namespace

ClassDataset::ClassDataset(Eigen::MatrixXd features, Eigen::VectorXd labels)
    : x_(std::move(features)), y_(std::move(labels)) {
    if (x_.rows() < 1) throw ValidationError("dataset must contain at least one sample");
    if (x_.cols() < 1) throw ValidationError("feature dimension must be at least 1");
    if (x_.rows() != y_.size()) throw ValidationError("feature and label counts differ");
    check_finite(x_, "features");
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
        if (y_(i) != 1.0 && y_(i) != -1.0) throw ValidationError("labels must be -1 or +1");
    }
}

ClassSample ClassDataset::sample(std::size_t i) const {
    const auto r = static_cast<Eigen::Index>(i);
    return {x_.row(r).transpose(), static_cast<int>(y_(r))};
}

ClassDataset ClassDataset::select(const std::vector<std::size_t>& rows) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        x.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(rows[k]));
        y(static_cast<Eigen::Index>(k)) = y_(static_cast<Eigen::Index>(rows[k]));
    }
    return {std::move(x), std::move(y)};
}

DecisionDataset::DecisionDataset(Eigen::MatrixXd x0, Eigen::MatrixXd x1, Eigen::VectorXd a, Eigen::VectorXd y,
                                 std::optional<Eigen::VectorXd> pi)
    : x0_(std::move(x0)), x1_(std::move(x1)), a_(std::move(a)), y_(std::move(y)), pi_(std::move(pi)) {
    const auto n = y_.size();
    if (n < 1) throw ValidationError("dataset must contain at least one sample");
    if (x0_.rows() != n || x1_.rows() != n || a_.size() != n) throw ValidationError("inconsistent sample counts");
    if (x1_.cols() < 1) throw ValidationError("interaction feature dimension must be at least 1");
    check_finite(x0_, "x0");
    check_finite(x1_, "x1");
    check_finite(y_, "outcomes");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a_(i) != 1.0 && a_(i) != -1.0) throw ValidationError("actions must be -1 or +1");
    }
    if (pi_) {
        if (pi_->size() != n) throw ValidationError("propensity column has wrong length");
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = (*pi_)(i);
            if (!(v > 0.0 && v < 1.0)) throw ValidationError("propensities must lie in (0, 1)");
        }
    }
}

DecisionSample DecisionDataset::sample(std::size_t i) const {
    const auto r = static_cast<Eigen::Index>(i);
    DecisionSample s{x0_.row(r).transpose(), x1_.row(r).transpose(), static_cast<int>(a_(r)), y_(r), {}};
    if (pi_) s.pi = (*pi_)(r);
    return s;
}

DecisionDataset DecisionDataset::select(const std::vector<std::size_t>& rows) const {
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x0(m, x0_.cols());
    Eigen::MatrixXd x1(m, x1_.cols());
    Eigen::VectorXd a(m), y(m);
    std::optional<Eigen::VectorXd> pi;
    if (pi_) pi = Eigen::VectorXd(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)]);
        x0.row(k) = x0_.row(r);
        x1.row(k) = x1_.row(r);
        a(k) = a_(r);
        y(k) = y_(r);
        if (pi_) (*pi)(k) = (*pi_)(r);
    }
    return {std::move(x0), std::move(x1), std::move(a), std::move(y), std::move(pi)};
}

ClassDataset parse_class_dataset_text(const std::string& text, const ClassSchema& schema) {
    const Table t = read_table(text);
    const std::size_t label_col = column(t, schema.label);
    const auto features = schema.features.empty() ? remaining(t, {schema.label}) : schema.features;
    Eigen::MatrixXd x = gather(t, features, schema.add_intercept);
    Eigen::VectorXd y(static_cast<Eigen::Index>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double v = t.rows[i][label_col];
        if (v == 1.0) {
            y(static_cast<Eigen::Index>(i)) = 1.0;
        } else if (v == 0.0 || v == -1.0) {
            y(static_cast<Eigen::Index>(i)) = -1.0;
        } else {
            throw ValidationError("row " + std::to_string(i + 1) + ": label must be -1, 0 or 1");
        }
    }
    return {std::move(x), std::move(y)};
}

ClassDataset parse_class_dataset(const std::string& path, const ClassSchema& schema) {
    return parse_class_dataset_text(slurp(path), schema);
}

DecisionDataset parse_decision_dataset_text(const std::string& text, const DecisionSchema& schema) {
    const Table t = read_table(text);
    const std::size_t a_col = column(t, schema.action);
    const std::size_t y_col = column(t, schema.outcome);
    const bool with_pi = has_column(t, schema.propensity);
    std::vector<std::string> reserved{schema.action, schema.outcome};
    if (with_pi) reserved.push_back(schema.propensity);
    const auto rest = remaining(t, reserved);
    Eigen::MatrixXd x0 = gather(t, schema.x0.empty() ? rest : schema.x0, schema.add_intercept);
    Eigen::MatrixXd x1 = gather(t, schema.x1.empty() ? rest : schema.x1, schema.add_intercept);
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    Eigen::VectorXd a(n), y(n);
    std::optional<Eigen::VectorXd> pi;
    if (with_pi) pi = Eigen::VectorXd(n);
    const std::size_t pi_col = with_pi ? column(t, schema.propensity) : 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        const double av = row[a_col];
        if (av == 1.0) {
            a(i) = 1.0;
        } else if (av == 0.0 || av == -1.0) {
            a(i) = -1.0;
        } else {
            throw ValidationError("row " + std::to_string(i + 1) + ": action must be -1, 0 or 1");
        }
        y(i) = row[y_col];
        if (with_pi) (*pi)(i) = row[pi_col];
    }
    return {std::move(x0), std::move(x1), std::move(a), std::move(y), std::move(pi)};
}

DecisionDataset parse_decision_dataset(const std::string& path, const DecisionSchema& schema) {
    return parse_decision_dataset_text(slurp(path), schema);
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, Engine& engine) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(engine);
    return idx;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, const RngSeed& seed) {
    auto engine = seed.engine();
    return bootstrap_indices(n, engine);
}

std::vector<int> multiplicities(const std::vector<std::size_t>& indices, std::size_t n) {
    std::vector<int> k(n, 0);
    for (const auto i : indices) ++k[i];
    return k;
}

ClassDataset bootstrap_resample(const ClassDataset& data, const RngSeed& seed) {
    return data.select(bootstrap_indices(data.n(), seed));
}

DecisionDataset bootstrap_resample(const DecisionDataset& data, const RngSeed& seed) {
    return data.select(bootstrap_indices(data.n(), seed));
}

}  // namespace nonreg

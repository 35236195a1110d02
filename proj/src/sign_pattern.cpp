#include "nonreg/sign_pattern.hpp"

#include "nonreg/error.hpp"
#include "nonreg/lp.hpp"

#include <algorithm>
#include <random>
#include <span>
#include <string>
#include <unordered_set>

namespace nonreg {

namespace {

void validate(const SignPatternProblem& problem) {
    if (problem.normals.rows() < 1) throw ValidationError("sign-pattern problem needs p >= 1");
    if (problem.normals.cols() != problem.weights.size()) {
        throw ValidationError("sign-pattern problem: one weight per normal required");
    }
    if (!problem.weights.allFinite() || !problem.normals.allFinite()) {
        throw ValidationError("sign-pattern problem has non-finite entries");
    }
    if (problem.window && problem.normals.rows() != 2) {
        throw ValidationError("angular windows are only supported at p = 2");
    }
}

double orient(const SignPatternProblem& problem, double v) { return problem.sense == Sense::sup ? v : -v; }

std::vector<Sign> signs_at(const Eigen::MatrixXd& normals, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd margin = normals.transpose() * beta;
    std::vector<Sign> s(static_cast<std::size_t>(margin.size()));
    for (Eigen::Index k = 0; k < margin.size(); ++k) {
        s[static_cast<std::size_t>(k)] = margin(k) < 0.0 ? Sign{-1} : (margin(k) > 0.0 ? Sign{1} : Sign{0});
    }
    return s;
}

// Keeps the best face seen during an enumeration. Running sums are incremental; any face within
// a small tolerance of the incumbent is re-summed in index order before it can replace it.
class BestFace {
public:
    BestFace(const SignPatternProblem& problem) : problem_(problem), weights_(problem.weights) {}

    void reset(std::span<const Sign> s) {
        signs_.assign(s.begin(), s.end());
        running_ = 0.0;
        for (std::size_t k = 0; k < signs_.size(); ++k) {
            if (signs_[k] < 0) running_ += weights_(static_cast<Eigen::Index>(k));
        }
    }

    void change(std::size_t k, Sign s) {
        const double c = weights_(static_cast<Eigen::Index>(k));
        if (signs_[k] < 0) running_ -= c;
        if (s < 0) running_ += c;
        signs_[k] = s;
    }

    void face(const Eigen::VectorXd& direction) {
        const double approx = orient(problem_, running_);
        if (have_ && approx < best_oriented_ - slack()) return;
        const double exact = pattern_value(weights_, signs_);
        if (!have_ || orient(problem_, exact) > best_oriented_) {
            have_ = true;
            best_oriented_ = orient(problem_, exact);
            best_value_ = exact;
            best_signs_ = signs_;
            best_witness_ = direction;
        }
    }

    bool have() const { return have_; }
    double value() const { return best_value_; }
    const std::vector<Sign>& signs() const { return best_signs_; }
    const Eigen::VectorXd& witness() const { return best_witness_; }

private:
    double slack() const { return 1e-9 * (1.0 + weights_.cwiseAbs().sum()); }

    const SignPatternProblem& problem_;
    const Eigen::VectorXd& weights_;
    std::vector<Sign> signs_;
    double running_ = 0.0;
    bool have_ = false;
    double best_oriented_ = 0.0;
    double best_value_ = 0.0;
    std::vector<Sign> best_signs_;
    Eigen::VectorXd best_witness_;
};

struct Adapter2 {
    BestFace& inner;
    void reset(std::span<const Sign> s) { inner.reset(s); }
    void change(std::size_t k, Sign s) { inner.change(k, s); }
    void face(const Eigen::Vector2d& d) { inner.face(Eigen::VectorXd(d)); }
};

// A face direction can sit on a hyperplane where rounding flips the sign. Try small nudges off the
// face, then (for small problems) an LP interior point of the optimal violated set.
void repair_witness(const SignPatternProblem& problem, SignPatternResult& out) {
    auto reproduces = [&](const Eigen::VectorXd& beta) {
        return pattern_value(problem.weights, signs_at(problem.normals, beta)) == out.value;
    };
    if (reproduces(out.witness)) return;
    const auto p = out.witness.size();
    const double scale = std::max(out.witness.norm(), 1.0);
    for (double step : {1e-9, 1e-6}) {
        for (Eigen::Index j = 0; j < p; ++j) {
            for (double sign : {1.0, -1.0}) {
                Eigen::VectorXd beta = out.witness;
                beta(j) += sign * step * scale;
                if (reproduces(beta)) {
                    out.witness = beta;
                    return;
                }
            }
        }
    }
    if (problem.normals.cols() > 64) return;
    std::vector<Sign> target(out.signs.size());
    for (std::size_t k = 0; k < target.size(); ++k) target[k] = out.signs[k] < 0 ? Sign{-1} : Sign{1};
    for (bool open : {true, false}) {
        const auto w = realize_pattern(problem.normals, target, open);
        if (w && reproduces(*w)) {
            out.witness = *w;
            return;
        }
    }
}

SignPatternResult enumerate(const SignPatternProblem& problem) {
    BestFace best(problem);
    const auto p = problem.normals.rows();
    if (problem.window) {
        if (problem.include_origin) {
            std::vector<Sign> zeros(static_cast<std::size_t>(problem.normals.cols()), Sign{0});
            best.reset(zeros);
            best.face(Eigen::VectorXd::Zero(p));
        }
        Adapter2 adapter{best};
        const Eigen::Matrix2Xd n2 = problem.normals;
        sweep_lines(n2, problem.window, adapter);
    } else {
        enumerate_faces(problem.normals, best);
    }
    SignPatternResult out;
    out.value = best.value();
    out.signs = best.signs();
    out.witness = best.witness();
    out.exact = true;
    if (!problem.window) repair_witness(problem, out);
    return out;
}

std::string key_of(const std::vector<Sign>& s) {
    std::string k(s.size(), '0');
    for (std::size_t i = 0; i < s.size(); ++i) k[i] = s[i] < 0 ? 'v' : (s[i] > 0 ? '+' : '0');
    return k;
}

struct Candidate {
    double value;
    std::vector<Sign> signs;
    Eigen::VectorXd witness;
};

// Greedy single-flip ascent over realizable patterns.
Candidate polish(const SignPatternProblem& problem, Candidate start) {
    const auto m = static_cast<std::size_t>(problem.weights.size());
    for (std::size_t round = 0; round < 4 * m + 4; ++round) {
        std::vector<std::pair<double, std::size_t>> moves;
        for (std::size_t k = 0; k < m; ++k) {
            const double c = orient(problem, problem.weights(static_cast<Eigen::Index>(k)));
            const double gain = start.signs[k] < 0 ? -c : c;
            if (gain > 0.0) moves.emplace_back(gain, k);
        }
        std::stable_sort(moves.begin(), moves.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        bool moved = false;
        for (const auto& [gain, k] : moves) {
            std::vector<Sign> trial = start.signs;
            trial[k] = trial[k] < 0 ? Sign{1} : Sign{-1};
            auto witness = realize_pattern(problem.normals, trial, true);
            if (!witness) witness = realize_pattern(problem.normals, trial, false);
            if (!witness) continue;
            const auto realized = signs_at(problem.normals, *witness);
            const double v = pattern_value(problem.weights, realized);
            if (orient(problem, v) > orient(problem, start.value)) {
                start = {v, realized, *witness};
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return start;
}

SignPatternResult stochastic(const SignPatternProblem& problem, const SignPatternOptions& options) {
    const auto p = problem.normals.rows();
    const auto m = problem.normals.cols();
    std::vector<Eigen::VectorXd> probes;
    probes.push_back(Eigen::VectorXd::Zero(p));
    for (Eigen::Index k = 0; k < m; ++k) {
        probes.push_back(problem.normals.col(k));
        probes.push_back(-problem.normals.col(k));
    }
    Engine eng = options.seed.engine();
    std::normal_distribution<double> norm(0.0, 1.0);
    for (std::size_t d = 0; d < options.n_directions; ++d) {
        Eigen::VectorXd v(p);
        for (Eigen::Index j = 0; j < p; ++j) v(j) = norm(eng);
        probes.push_back(v);
    }

    std::unordered_set<std::string> seen;
    std::vector<Candidate> pool;
    for (const auto& beta : probes) {
        auto s = signs_at(problem.normals, beta);
        if (!seen.insert(key_of(s)).second) continue;
        pool.push_back({pattern_value(problem.weights, s), std::move(s), beta});
    }
    std::stable_sort(pool.begin(), pool.end(), [&](const Candidate& a, const Candidate& b) {
        return orient(problem, a.value) > orient(problem, b.value);
    });
    const std::size_t n_polish = std::min<std::size_t>(pool.size(), 8);
    Candidate best = pool.front();
    for (std::size_t i = 0; i < n_polish; ++i) {
        Candidate c = polish(problem, pool[i]);
        if (orient(problem, c.value) > orient(problem, best.value)) best = std::move(c);
    }
    SignPatternResult out;
    out.value = best.value;
    out.signs = std::move(best.signs);
    out.witness = std::move(best.witness);
    out.exact = false;
    return out;
}

}  // namespace

double pattern_value(const Eigen::VectorXd& weights, const std::vector<Sign>& signs) {
    double total = 0.0;
    for (std::size_t k = 0; k < signs.size(); ++k) {
        if (signs[k] < 0) total += weights(static_cast<Eigen::Index>(k));
    }
    return total;
}

double evaluate_sign_pattern(const SignPatternProblem& problem, const Eigen::VectorXd& beta) {
    if (beta.size() != problem.normals.rows()) throw ValidationError("sign-pattern evaluation: dimension mismatch");
    return pattern_value(problem.weights, signs_at(problem.normals, beta));
}

bool uses_exact_enumeration(const SignPatternProblem& problem, const SignPatternOptions& options) {
    if (options.force_stochastic) return false;
    const auto p = problem.normals.rows();
    if (p <= 2) return true;
    return p == 3 && static_cast<std::size_t>(problem.normals.cols()) <= options.exact_limit;
}

std::optional<Eigen::VectorXd> realize_pattern(const Eigen::MatrixXd& normals, const std::vector<Sign>& signs,
                                               bool open_cell) {
    const auto m = normals.cols();
    Eigen::MatrixXd a(m, normals.rows());
    Eigen::VectorXd b(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const bool violated = signs[static_cast<std::size_t>(k)] < 0;
        a.row(k) = (violated ? -1.0 : 1.0) * normals.col(k).transpose();
        b(k) = violated || open_cell ? 1.0 : 0.0;
    }
    return find_feasible_point(a, b);
}

SignPatternResult optimize_sign_pattern(const SignPatternProblem& problem, const SignPatternOptions& options) {
    validate(problem);
    const auto p = problem.normals.rows();
    SignPatternResult out;
    if (problem.normals.cols() == 0) {
        out.witness = Eigen::VectorXd::Zero(p);
        out.exact = true;
        return out;
    }
    if (uses_exact_enumeration(problem, options)) {
        out = enumerate(problem);
    } else {
        if (problem.window) throw ValidationError("angular windows require exact enumeration");
        out = stochastic(problem, options);
    }
    for (const auto& hint : options.hints) {
        if (hint.size() != p) throw ValidationError("sign-pattern hint has wrong dimension");
        auto s = signs_at(problem.normals, hint);
        const double v = pattern_value(problem.weights, s);
        if (orient(problem, v) > orient(problem, out.value)) {
            out.value = v;
            out.signs = std::move(s);
            out.witness = hint;
        }
    }
    return out;
}

}  // namespace nonreg

#include "lilate/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lilate/error.hpp"
#include "lilate/kernels.hpp"
#include "linalg.hpp"

namespace lilate::nuisance {

namespace {

constexpr double kSaturatedIndex = 36.0;

double log1pexp(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double open_unit(double p) {
    static const double lo = std::numeric_limits<double>::min();
    static const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(p, lo, hi);
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct Evaluation {
    double objective = 0.0;
    std::vector<double> score;
    std::vector<double> hessian;  // row-major, negative of the objective's Hessian
    double max_abs_index = 0.0;
};

class Objective {
public:
    Objective(const ColumnMatrix& x, std::span<const int> labels, double ridge)
        : x_(x), labels_(labels), ridge_(ridge), eta_(x.rows()), resid_(x.rows()), weight_(x.rows()) {
        for (int y : labels) positives_ += y;
    }

    Evaluation operator()(std::span<const double> beta) {
        return x_.cols() == 0 ? intercept_only(beta[0]) : general(beta);
    }

private:
    // Sufficient statistics suffice when there are no features.
    Evaluation intercept_only(double b) const {
        const double n = static_cast<double>(labels_.size());
        const double p = sigmoid(b);
        Evaluation e;
        e.objective = positives_ * b - n * log1pexp(b) - 0.5 * ridge_ * b * b;
        e.score = {positives_ - n * p - ridge_ * b};
        e.hessian = {n * p * (1.0 - p) + ridge_};
        e.max_abs_index = std::abs(b);
        return e;
    }

    Evaluation general(std::span<const double> beta) {
        const std::size_t n = x_.rows();
        const std::size_t p = beta.size();
        detail::linear_index(x_, beta, eta_);
        Evaluation e;
        double loglik = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double eta = eta_[i];
            const double prob = sigmoid(eta);
            loglik += labels_[i] * eta - log1pexp(eta);
            resid_[i] = labels_[i] - prob;
            weight_[i] = prob * (1.0 - prob);
            e.max_abs_index = std::max(e.max_abs_index, std::abs(eta));
        }
        double penalty = 0.0;
        for (double b : beta) penalty += b * b;
        e.objective = loglik - 0.5 * ridge_ * penalty;
        e.score = detail::design_transpose_times(x_, resid_);
        for (std::size_t j = 0; j < p; ++j) e.score[j] -= ridge_ * beta[j];
        e.hessian = detail::weighted_gram(x_, weight_);
        for (std::size_t j = 0; j < p; ++j) e.hessian[j * p + j] += ridge_;
        return e;
    }

    const ColumnMatrix& x_;
    std::span<const int> labels_;
    double ridge_;
    double positives_ = 0.0;
    std::vector<double> eta_;
    std::vector<double> resid_;
    std::vector<double> weight_;
};

void check_inputs(const ColumnMatrix& x, std::span<const int> labels, std::span<const std::string> names) {
    if (x.rows() == 0) throw Error("invalid_argument", "fit_logistic needs at least one row");
    if (labels.size() != x.rows()) throw Error("invalid_argument", "label count does not match design rows");
    if (names.size() != x.cols()) throw Error("invalid_argument", "feature name count does not match columns");
    for (int y : labels) {
        if (y != 0 && y != 1) throw Error("invalid_argument", "logistic labels must be 0/1");
    }
}

}  // namespace

double LogisticModel::predict(std::span<const double> x) const {
    if (x.size() + 1 != coefficients.size()) {
        std::ostringstream msg;
        msg << "predict: expected " << coefficients.size() - 1 << " feature(s), got " << x.size();
        throw Error("dimension_mismatch", msg.str());
    }
    double eta = coefficients[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients[j + 1] * x[j];
    return open_unit(sigmoid(eta));
}

std::vector<double> LogisticModel::predict_all(const ColumnMatrix& x) const {
    if (x.cols() + 1 != coefficients.size()) {
        std::ostringstream msg;
        msg << "predict: expected " << coefficients.size() - 1 << " feature(s), got " << x.cols();
        throw Error("dimension_mismatch", msg.str());
    }
    if (x.cols() == 0) return std::vector<double>(x.rows(), open_unit(sigmoid(coefficients[0])));
    std::vector<double> eta(x.rows(), coefficients[0]);
    for (std::size_t j = 0; j < x.cols(); ++j) kernels::axpy(coefficients[j + 1], x.col(j), eta);
    for (double& e : eta) e = open_unit(sigmoid(e));
    return eta;
}

double penalized_loglik(const ColumnMatrix& x, std::span<const int> labels, std::span<const double> beta,
                        double ridge) {
    Objective f(x, labels, ridge);
    return f(beta).objective;
}

std::vector<double> penalized_score(const ColumnMatrix& x, std::span<const int> labels,
                                    std::span<const double> beta, double ridge) {
    Objective f(x, labels, ridge);
    return f(beta).score;
}

LogisticModel fit_logistic(const ColumnMatrix& x, std::span<const int> labels,
                           std::span<const std::string> feature_names, const LogisticOptions& options) {
    check_inputs(x, labels, feature_names);
    const std::size_t n = x.rows();
    const std::size_t p = x.cols() + 1;
    const auto names = detail::with_intercept(feature_names);

    LogisticModel model;
    model.feature_names.assign(feature_names.begin(), feature_names.end());
    model.ridge = options.ridge;
    model.coefficients.assign(p, 0.0);

    std::size_t positives = 0;
    for (int y : labels) positives += static_cast<std::size_t>(y);
    const double share = static_cast<double>(positives) / static_cast<double>(n);
    const double start = std::clamp(share, 1e-6, 1.0 - 1e-6);
    model.coefficients[0] = std::log(start / (1.0 - start));

    if (options.ridge <= 0.0) {
        if (positives == 0 || positives == n) {
            model.diagnostic = "labels contain a single class; MLE does not exist without a ridge";
            return model;
        }
        if (x.cols() > 0) {
            const auto bad = detail::collinear_columns(detail::weighted_gram(x, {}), p);
            if (!bad.empty()) {
                std::ostringstream msg;
                msg << "rank-deficient design; collinear column(s):";
                for (std::size_t j : bad) msg << ' ' << names[j];
                throw Error("rank_deficient", msg.str());
            }
        }
    }

    Objective objective(x, labels, options.ridge);
    Evaluation current = objective(model.coefficients);
    model.objective_trace.push_back(current.objective);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        if (max_abs(current.score) < options.tol) {
            model.converged = true;
            break;
        }
        if (options.ridge <= 0.0 && current.max_abs_index > kSaturatedIndex) {
            model.diagnostic = "perfect separation: fitted probabilities saturate at 0/1";
            break;
        }
        std::vector<double> step;
        try {
            step = detail::solve_spd(current.hessian, current.score, names);
        } catch (const Error&) {
            model.diagnostic = "information matrix became singular";
            break;
        }
        // Step halving keeps the objective non-decreasing. Once the Newton
        // gain is below the objective's rounding level, a step is accepted if
        // it shrinks the score without a resolvable loss.
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(current.objective);
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h < 60; ++h) {
            std::vector<double> candidate = model.coefficients;
            for (std::size_t j = 0; j < p; ++j) candidate[j] += scale * step[j];
            Evaluation next = objective(candidate);
            const bool gains = next.objective >= current.objective;
            const bool flat = next.objective >= current.objective - slack &&
                              max_abs(next.score) < max_abs(current.score);
            if (std::isfinite(next.objective) && (gains || flat)) {
                model.coefficients = std::move(candidate);
                current = std::move(next);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            model.diagnostic = "step halving failed to improve the objective";
            break;
        }
        ++model.iterations;
        model.objective_trace.push_back(current.objective);
    }
    if (!model.converged && max_abs(current.score) < options.tol) model.converged = true;
    if (!model.converged && model.diagnostic.empty()) model.diagnostic = "iteration limit reached";
    return model;
}

Probability NuisanceFits::trim(double p) const {
    if (p < trim_low) return {trim_low, true};
    if (p > trim_high) return {trim_high, true};
    return {p, false};
}

Probability NuisanceFits::instrument_propensity(std::span<const double> x) const { return trim(p_z.predict(x)); }

Probability NuisanceFits::treated_given(int z, std::span<const double> x) const {
    return trim((z == 1 ? p_d_given_z1 : p_d_given_z0).predict(x));
}

Probability NuisanceFits::response(int z, int d, std::span<const double> x) const {
    const auto& model = q[z][d];
    if (!model) {
        throw Error("empty_cell", "empty cell (" + std::to_string(z) + "," + std::to_string(d) +
                                      "): no response model fitted");
    }
    return trim(model->predict(x));
}

namespace {

std::vector<Probability> trim_all(const NuisanceFits& fits, const std::vector<double>& p) {
    std::vector<Probability> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = fits.trim(p[i]);
    return out;
}

}  // namespace

std::vector<Probability> NuisanceFits::instrument_propensity_all(const ColumnMatrix& x) const {
    return trim_all(*this, p_z.predict_all(x));
}

std::vector<Probability> NuisanceFits::treated_given_all(int z, const ColumnMatrix& x) const {
    return trim_all(*this, (z == 1 ? p_d_given_z1 : p_d_given_z0).predict_all(x));
}

std::vector<Probability> NuisanceFits::response_all(int z, int d, const ColumnMatrix& x) const {
    if (!q[z][d]) {
        throw Error("empty_cell", "empty cell (" + std::to_string(z) + "," + std::to_string(d) +
                                      "): no response model fitted");
    }
    return trim_all(*this, q[z][d]->predict_all(x));
}

ColumnMatrix covariate_matrix(const Dataset& dataset) {
    const std::size_t n = dataset.size();
    const std::size_t k = dataset.num_covariates();
    ColumnMatrix x(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = dataset.observations[i].x;
        for (std::size_t j = 0; j < k; ++j) x(i, j) = row[j];
    }
    return x;
}

namespace {

LogisticModel fit_with_fallback(const ColumnMatrix& x, std::span<const int> labels,
                                std::span<const std::string> names, const NuisanceOptions& options) {
    std::string reason;
    try {
        LogisticModel m = fit_logistic(x, labels, names, options.logistic);
        if (m.converged || options.logistic.ridge > 0.0 || options.fallback_ridge <= 0.0) return m;
        reason = m.diagnostic;
    } catch (const Error& e) {
        if (e.code() != "rank_deficient" || options.fallback_ridge <= 0.0) throw;
        reason = e.what();
    }
    LogisticOptions penalized = options.logistic;
    penalized.ridge = options.fallback_ridge;
    LogisticModel m = fit_logistic(x, labels, names, penalized);
    std::ostringstream msg;
    msg << "refit with fallback ridge " << options.fallback_ridge << " after: " << reason;
    if (!m.diagnostic.empty()) msg << "; " << m.diagnostic;
    m.diagnostic = msg.str();
    return m;
}

}  // namespace

NuisanceFits fit_all(const Dataset& dataset, const NuisanceOptions& options, ResponseModels response_models) {
    require_valid(dataset);
    if (!(options.trim_low > 0.0 && options.trim_low < options.trim_high && options.trim_high < 1.0)) {
        throw Error("invalid_argument", "trim bounds must satisfy 0 < low < high < 1");
    }
    const ColumnMatrix x = covariate_matrix(dataset);
    const auto& names = dataset.covariate_names;
    const auto& rows = dataset.observations;

    NuisanceFits fits;
    fits.trim_low = options.trim_low;
    fits.trim_high = options.trim_high;
    fits.pi_c_floor = options.pi_c_floor;

    std::vector<int> z_labels;
    z_labels.reserve(rows.size());
    for (const auto& o : rows) z_labels.push_back(o.z);
    fits.p_z = fit_with_fallback(x, z_labels, names, options);

    std::array<std::vector<std::size_t>, 2> arm;
    std::array<std::array<std::vector<std::size_t>, 2>, 2> cell;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        arm[rows[i].z].push_back(i);
        cell[rows[i].z][rows[i].d].push_back(i);
    }

    for (int z = 0; z <= 1; ++z) {
        std::vector<int> labels;
        for (std::size_t i : arm[z]) labels.push_back(rows[i].d);
        auto model = fit_with_fallback(x.select_rows(arm[z]), labels, names, options);
        (z == 0 ? fits.p_d_given_z0 : fits.p_d_given_z1) = std::move(model);
    }

    if (response_models == ResponseModels::none) return fits;
    for (int z = 0; z <= 1; ++z) {
        for (int d = 0; d <= 1; ++d) {
            const auto& idx = cell[z][d];
            if (idx.empty()) {
                if (response_models == ResponseModels::all_cells) {
                    throw Error("empty_cell",
                                "empty cell (" + std::to_string(z) + "," + std::to_string(d) + ")");
                }
                continue;
            }
            std::vector<int> labels;
            for (std::size_t i : idx) labels.push_back(rows[i].r);
            fits.q[z][d] = fit_with_fallback(x.select_rows(idx), labels, names, options);
        }
    }
    return fits;
}

}  // namespace lilate::nuisance

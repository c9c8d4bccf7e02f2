#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lilate/core.hpp"
#include "lilate/matrix.hpp"

namespace lilate::nuisance {

struct LogisticOptions {
    int max_iter = 100;
    double tol = 1e-10;  // on the max absolute score component
    double ridge = 0.0;  // penalty ridge/2 * ||beta||^2, intercept included
};

struct LogisticModel {
    std::vector<double> coefficients;  // intercept first
    std::vector<std::string> feature_names;
    bool converged = false;
    int iterations = 0;
    double ridge = 0.0;
    std::string diagnostic;
    std::vector<double> objective_trace;  // penalized log-likelihood per iterate

    // Logistic transform of the linear index, kept strictly inside (0,1).
    double predict(std::span<const double> x) const;
    // predict() for every row of a covariate matrix.
    std::vector<double> predict_all(const ColumnMatrix& x) const;
};

// Penalized Bernoulli log-likelihood and its gradient for [1, X].
double penalized_loglik(const ColumnMatrix& x, std::span<const int> labels,
                        std::span<const double> beta, double ridge);
std::vector<double> penalized_score(const ColumnMatrix& x, std::span<const int> labels,
                                    std::span<const double> beta, double ridge);

// Newton/IRLS with step halving, so the objective never decreases. Perfect
// separation (or single-class labels) without a ridge returns converged=false
// with a diagnostic; a rank-deficient design without a ridge throws
// Error("rank_deficient") naming the collinear columns.
LogisticModel fit_logistic(const ColumnMatrix& x, std::span<const int> labels,
                           std::span<const std::string> feature_names, const LogisticOptions& options = {});

struct Probability {
    double value = 0.0;
    bool trimmed = false;
};

struct NuisanceOptions {
    LogisticOptions logistic;
    double fallback_ridge = 1e-4;
    double trim_low = 0.01;
    double trim_high = 0.99;
    double pi_c_floor = 0.01;
};

// Which response models fit_all has to produce.
enum class ResponseModels {
    none,
    nonempty_cells,  // fit q_zd wherever cell (z,d) has rows
    all_cells,       // every q_zd; an empty cell is an error
};

struct NuisanceFits {
    LogisticModel p_z;            // Pr(Z=1|X)
    LogisticModel p_d_given_z0;   // Pr(D=1|Z=0,X)
    LogisticModel p_d_given_z1;   // Pr(D=1|Z=1,X)
    std::array<std::array<std::optional<LogisticModel>, 2>, 2> q;  // q[z][d] = Pr(R=1|Z=z,D=d,X)
    double trim_low = 0.01;
    double trim_high = 0.99;
    double pi_c_floor = 0.01;

    Probability trim(double p) const;
    Probability instrument_propensity(std::span<const double> x) const;
    Probability treated_given(int z, std::span<const double> x) const;
    // Response model for cell (z,d); throws Error("empty_cell") if not fitted.
    Probability response(int z, int d, std::span<const double> x) const;
    bool has_response(int z, int d) const { return q[z][d].has_value(); }

    // Row-wise versions over a covariate matrix, trimmed like the scalar ones.
    std::vector<Probability> instrument_propensity_all(const ColumnMatrix& x) const;
    std::vector<Probability> treated_given_all(int z, const ColumnMatrix& x) const;
    std::vector<Probability> response_all(int z, int d, const ColumnMatrix& x) const;
};

// Fits each model on its own subsample: p_z on all rows, p_d_given_z on the
// z-arm, q_zd on cell (z,d) with r as the label. Unpenalized fits that fail
// are refitted with options.fallback_ridge.
NuisanceFits fit_all(const Dataset& dataset, const NuisanceOptions& options,
                     ResponseModels response_models = ResponseModels::all_cells);

// Covariates of a dataset as a column-major n x k matrix.
ColumnMatrix covariate_matrix(const Dataset& dataset);

}  // namespace lilate::nuisance

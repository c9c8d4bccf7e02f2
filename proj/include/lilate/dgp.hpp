#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lilate/core.hpp"

namespace lilate::dgp {

// Error laws for (U, V, W). V is standard normal in every variant.
struct IdenticalErrors {};  // U = V = W

struct CorrelatedErrors {  // (U,V) ~ BVN(rho), W = delta1*V + sigma_eps*e
    double delta1 = 1.0;
    double rho = 0.0;
    double sigma_eps = 1.0;
};

struct ComplierShiftErrors {  // U = pi*1(complier) + sigma_u*e, V, W, e independent
    double pi = 0.0;
    double sigma_u = 1.0;
};

using ErrorStructure = std::variant<IdenticalErrors, CorrelatedErrors, ComplierShiftErrors>;

std::string_view scenario_name(const ErrorStructure& errors);

// Y = alpha0 + D*alpha1 + X'alpha_x + U
// D = 1(beta0 + Z*beta1 + X'beta_x >= V)
// R = 1(gamma0 + D*gamma1 + X'gamma_x >= W)
// Covariates are iid N(0,1); their count is the common length of the loading
// vectors (all empty means no covariates).
struct ParametricDgpConfig {
    double alpha0 = 0.0;
    double alpha1 = 1.0;
    double beta0 = 0.0;
    double beta1 = 1.0;
    double gamma0 = 0.0;
    double gamma1 = 0.5;
    double pz = 0.5;
    ErrorStructure errors = IdenticalErrors{};
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::vector<double> alpha_x;
    std::vector<double> beta_x;
    std::vector<double> gamma_x;

    std::size_t num_covariates() const { return alpha_x.size(); }
};

// Throws Error("invalid_config").
void validate_config(const ParametricDgpConfig& config);

struct LatentDraw {
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;
};

// Outcome catalogue phi(d, u; x).
struct LinearOutcome {
    double alpha0 = 0.0;
    double alpha1 = 1.0;
    std::vector<double> alpha_x;
};
struct LogLinearOutcome {  // exp(alpha0 + d*alpha1 + u)
    double alpha0 = 0.0;
    double alpha1 = 1.0;
};
using OutcomeFn = std::variant<LinearOutcome, LogLinearOutcome>;

// Treatment catalogue psi(z, v; x); D = 1(psi >= 0).
struct ThresholdTreatment {
    double beta0 = 0.0;
    double beta1 = 1.0;
    std::vector<double> beta_x;
};
using TreatmentFn = std::variant<ThresholdTreatment>;

// Response catalogue eta(d, w; x); R = 1(eta >= 0).
struct ThresholdResponse {
    double gamma0 = 0.0;
    double gamma1 = 0.5;
    std::vector<double> gamma_x;
};
struct AlwaysRespond {};  // eta = +1
using ResponseFn = std::variant<ThresholdResponse, AlwaysRespond>;

double evaluate(const OutcomeFn& phi, int d, double u, std::span<const double> x);
// phi(1, u; x) - phi(0, u; x), computed in closed form.
double individual_effect(const OutcomeFn& phi, double u, std::span<const double> x);
double evaluate(const TreatmentFn& psi, int z, double v, std::span<const double> x);
double evaluate(const ResponseFn& eta, int d, double w, std::span<const double> x);

// Selector strings: "name" or "name:p1,p2,...". Throws Error("unknown_selector").
//   outcome:   linear:a0,a1 | loglinear:a0,a1
//   treatment: threshold:b0,b1
//   response:  threshold:g0,g1 | always
OutcomeFn parse_outcome(std::string_view selector);
TreatmentFn parse_treatment(std::string_view selector);
ResponseFn parse_response(std::string_view selector);

struct NonparametricSpec {
    OutcomeFn outcome = LinearOutcome{};
    TreatmentFn treatment = ThresholdTreatment{};
    ResponseFn response = ThresholdResponse{};
    ErrorStructure errors = IdenticalErrors{};
    double pz = 0.5;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::size_t num_covariates = 0;
};

// Dataset rows carry t; latent keeps (u, v, w) for every row, including the
// nonrespondents whose y is absent from the dataset.
struct SimulatedDataset {
    Dataset dataset;
    std::vector<LatentDraw> latent;
    OutcomeFn outcome;

    // Full structural outcome phi(d_i, u_i; x_i), observed or not.
    double latent_outcome(std::size_t i) const;
};

SimulatedDataset simulate(const ParametricDgpConfig& config);
SimulatedDataset simulate_nonparametric(const NonparametricSpec& spec);

// Complier average effect implied by the additive model: alpha1.
double true_late(const ParametricDgpConfig& config);

// Moment functions f for the gap diagnostic: f(y) = y, y^2 or 1(y <= c).
struct MomentFunction {
    enum class Kind { identity, square, indicator };
    Kind kind = Kind::identity;
    double threshold = 0.0;  // indicator: 1(y <= threshold)

    double operator()(double y) const;
    std::string id() const;
};

// "identity" | "square" | "indicator:<c>"
MomentFunction parse_moment(std::string_view text);

struct MomentGap {
    std::string moment;
    std::optional<double> respondent_mean;
    std::optional<double> nonrespondent_mean;
    std::optional<double> gap;             // respondent - nonrespondent
    std::optional<double> standard_error;  // Monte Carlo s.e. of the gap
};

struct LiGapCell {
    int z = 0;
    ComplianceType type = ComplianceType::complier;
    std::size_t n_respondents = 0;
    std::size_t n_nonrespondents = 0;
    std::optional<double> max_respondent_u;
    std::optional<double> min_nonrespondent_u;
    std::optional<bool> supports_disjoint;  // max respondent u <= min nonrespondent u
    std::vector<MomentGap> moments;
};

struct LiGapReport {
    std::vector<std::string> moment_functions;
    std::size_t n_mc = 0;
    std::uint64_t seed = 0;
    std::vector<LiGapCell> cells;  // z in {0,1} x type in {complier, always, never}
    std::vector<std::string> flags;

    const LiGapCell* cell(int z, ComplianceType t) const;
};

inline constexpr std::size_t kMinLiGapDraws = 10000;

LiGapReport li_gap(const ParametricDgpConfig& config, std::span<const MomentFunction> moments,
                   std::size_t n_mc, std::uint64_t seed);
LiGapReport li_gap(const NonparametricSpec& spec, std::span<const MomentFunction> moments,
                   std::size_t n_mc, std::uint64_t seed);
// Gap table of an already simulated sample.
LiGapReport li_gap(const SimulatedDataset& sample, std::span<const MomentFunction> moments);

}  // namespace lilate::dgp

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lilate/core.hpp"
#include "lilate/dgp.hpp"
#include "lilate/nuisance.hpp"

namespace lilate::estimators {

enum class EstimatorId { wald, mar, li_mar, oracle };

std::string_view to_string(EstimatorId id);
std::optional<EstimatorId> parse_estimator(std::string_view name);

struct EffectEstimate {
    EstimatorId id = EstimatorId::wald;
    double point = 0.0;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> warnings;
};

struct EstimatorOptions {
    nuisance::NuisanceOptions nuisance;
    bool hajek = true;                 // late_mar: normalize weights per arm
    bool cell_regression = true;       // late_li_mar: mu_zd(x) by OLS on x; false = raw cell means
    double decomposition_floor = 1e-3; // floor on A-B and C-E
    double degenerate_share = 0.10;    // floored share that makes li_mar fail
    double floor_warning_share = 0.50; // q at the trim floor share that triggers a warning
};

// Wald ratio among respondents.
EffectEstimate wald_respondents(const Dataset& dataset);

// Instrument-and-response inverse probability weighting under Y _|_ R | X, Z, D.
EffectEstimate late_mar(const Dataset& dataset, const nuisance::NuisanceFits& fits,
                        const EstimatorOptions& options = {});

// Principal-stratum mixture decomposition under latent ignorability given X.
// A negative first stage is handled by relabeling the instrument internally.
EffectEstimate late_li_mar(const Dataset& dataset, const nuisance::NuisanceFits& fits,
                           const EstimatorOptions& options = {});

// Complier average of phi(1,u) - phi(0,u) using the latent draws.
EffectEstimate late_oracle(const dgp::SimulatedDataset& simulated);

// Fits whatever nuisances `id` needs and runs it. Oracle needs latent data
// and is rejected for plain datasets.
EffectEstimate estimate(const Dataset& dataset, EstimatorId id, const EstimatorOptions& options = {});
EffectEstimate estimate(const dgp::SimulatedDataset& simulated, EstimatorId id,
                        const EstimatorOptions& options = {});

// Checks of the identifying conditions that data can speak to.
struct AssumptionReport {
    double first_stage = 0.0;        // mean d | z=1 minus mean d | z=0
    bool compliers_exist = false;    // first stage bounded away from zero
    std::size_t defier_evidence_rows = 0;  // rows with Pr(D=1|Z=1,x) < Pr(D=1|Z=0,x)
    std::size_t overlap_trimmed_rows = 0;  // rows with p(x) outside the trim bounds
    double min_propensity = 1.0;
    double max_propensity = 0.0;
};

AssumptionReport check_assumptions(const Dataset& dataset, const nuisance::NuisanceFits& fits);

}  // namespace lilate::estimators

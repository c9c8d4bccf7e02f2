#include "lilate/estimators.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "lilate/error.hpp"
#include "lilate/kernels.hpp"
#include "linalg.hpp"

namespace lilate::estimators {

namespace {

constexpr double kZeroFirstStage = 1e-12;

std::string cell_label(int z, int d) { return "(" + std::to_string(z) + "," + std::to_string(d) + ")"; }

double kish_ess(std::span<const double> w) {
    const double s = kernels::sum(w);
    const double s2 = kernels::dot(w, w);
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

// Respondent outcome mean in one (z,d) cell, either constant or linear in x.
struct CellMean {
    std::vector<double> coefficients;  // intercept first; size 1 in covariate-free mode

    double at(std::span<const double> x) const {
        double m = coefficients[0];
        for (std::size_t j = 1; j < coefficients.size(); ++j) m += coefficients[j] * x[j - 1];
        return m;
    }
};

CellMean fit_cell_mean(const Dataset& dataset, int z, int d, bool use_covariates) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& o = dataset.observations[i];
        if (o.z == z && o.d == d && o.r == 1) idx.push_back(i);
    }
    if (idx.empty()) throw Error("empty_cell", "no respondents in cell " + cell_label(z, d));

    std::vector<double> y;
    y.reserve(idx.size());
    for (std::size_t i : idx) y.push_back(*dataset.observations[i].y);

    if (!use_covariates || dataset.num_covariates() == 0) {
        return {{kernels::sum(y) / static_cast<double>(y.size())}};
    }
    const ColumnMatrix x = nuisance::covariate_matrix(dataset).select_rows(idx);
    const auto names = detail::with_intercept(dataset.covariate_names);
    try {
        return {detail::solve_spd(detail::weighted_gram(x, {}), detail::design_transpose_times(x, y), names)};
    } catch (const Error& e) {
        throw Error(e.code(), "outcome regression in respondent cell " + cell_label(z, d) + ": " + e.what());
    }
}

}  // namespace

std::string_view to_string(EstimatorId id) {
    switch (id) {
        case EstimatorId::wald: return "wald";
        case EstimatorId::mar: return "mar";
        case EstimatorId::li_mar: return "li_mar";
        case EstimatorId::oracle: return "oracle";
    }
    return "unknown";
}

std::optional<EstimatorId> parse_estimator(std::string_view name) {
    if (name == "wald") return EstimatorId::wald;
    if (name == "mar") return EstimatorId::mar;
    if (name == "li_mar" || name == "li+mar") return EstimatorId::li_mar;
    if (name == "oracle") return EstimatorId::oracle;
    return std::nullopt;
}

EffectEstimate wald_respondents(const Dataset& dataset) {
    require_valid(dataset);
    std::array<double, 2> count{}, sum_y{}, sum_d{};
    for (const auto& o : dataset.observations) {
        if (o.r != 1) continue;
        count[o.z] += 1.0;
        sum_y[o.z] += *o.y;
        sum_d[o.z] += o.d;
    }
    for (int z = 0; z <= 1; ++z) {
        if (count[z] == 0.0) {
            throw Error("no_respondents", "instrument arm z=" + std::to_string(z) + " has no respondents");
        }
    }
    const double reduced_form = sum_y[1] / count[1] - sum_y[0] / count[0];
    const double first_stage = sum_d[1] / count[1] - sum_d[0] / count[0];
    if (std::abs(first_stage) < kZeroFirstStage) {
        throw Error("no_compliance_signal", "no compliance signal: first-stage difference among respondents is zero");
    }
    EffectEstimate est;
    est.id = EstimatorId::wald;
    est.point = reduced_form / first_stage;
    est.diagnostics["n_respondents_z0"] = count[0];
    est.diagnostics["n_respondents_z1"] = count[1];
    est.diagnostics["reduced_form"] = reduced_form;
    est.diagnostics["first_stage"] = first_stage;
    return est;
}

EffectEstimate late_mar(const Dataset& dataset, const nuisance::NuisanceFits& fits, const EstimatorOptions& options) {
    require_valid(dataset);
    const std::size_t n = dataset.size();

    // Per arm: response weights r/(p q), their outcome products, instrument
    // weights 1/p and their treatment products. Other-arm slots stay zero.
    std::array<std::vector<double>, 2> resp_w, resp_wy, inst_w, inst_wd;
    for (int z = 0; z <= 1; ++z) {
        resp_w[z].assign(n, 0.0);
        resp_wy[z].assign(n, 0.0);
        inst_w[z].assign(n, 0.0);
        inst_wd[z].assign(n, 0.0);
    }
    std::size_t pz_trimmed = 0, q_trimmed = 0, q_at_floor = 0, q_evaluated = 0;
    const ColumnMatrix x = nuisance::covariate_matrix(dataset);
    const auto propensity = fits.instrument_propensity_all(x);
    std::array<std::array<std::vector<nuisance::Probability>, 2>, 2> response;
    for (int z = 0; z <= 1; ++z) {
        for (int d = 0; d <= 1; ++d) {
            if (fits.has_response(z, d)) response[z][d] = fits.response_all(z, d, x);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const Observation& o = dataset.observations[i];
        const auto pz = propensity[i];
        pz_trimmed += pz.trimmed;
        const double iw = o.z == 1 ? 1.0 / pz.value : 1.0 / (1.0 - pz.value);
        inst_w[o.z][i] = iw;
        inst_wd[o.z][i] = iw * o.d;
        if (o.r == 1) {
            const auto& cell = response[o.z][o.d];
            if (cell.empty()) throw Error("empty_cell", "no response model for cell " + cell_label(o.z, o.d));
            const auto q = cell[i];
            ++q_evaluated;
            q_trimmed += q.trimmed;
            q_at_floor += q.value <= fits.trim_low;
            const double w = iw / q.value;
            resp_w[o.z][i] = w;
            resp_wy[o.z][i] = w * *o.y;
        }
    }

    std::array<double, 2> sw{}, swy{}, siw{}, siwd{};
    for (int z = 0; z <= 1; ++z) {
        sw[z] = kernels::sum(resp_w[z]);
        swy[z] = kernels::sum(resp_wy[z]);
        siw[z] = kernels::sum(inst_w[z]);
        siwd[z] = kernels::sum(inst_wd[z]);
        if (sw[z] <= 0.0) {
            throw Error("no_respondents", "instrument arm z=" + std::to_string(z) + " has no respondents");
        }
    }

    const double nn = static_cast<double>(n);
    const double num_hajek = swy[1] / sw[1] - swy[0] / sw[0];
    const double den_hajek = siwd[1] / siw[1] - siwd[0] / siw[0];
    const double num_ht = (swy[1] - swy[0]) / nn;
    const double den_ht = (siwd[1] - siwd[0]) / nn;
    const double den = options.hajek ? den_hajek : den_ht;
    if (std::abs(den) < kZeroFirstStage) {
        throw Error("no_compliance_signal", "no compliance signal: weighted first stage is zero");
    }

    EffectEstimate est;
    est.id = EstimatorId::mar;
    est.point = options.hajek ? num_hajek / den_hajek : num_ht / den_ht;
    auto& dg = est.diagnostics;
    dg["hajek"] = options.hajek ? 1.0 : 0.0;
    dg["point_hajek"] = num_hajek / den_hajek;
    dg["point_horvitz_thompson"] = std::abs(den_ht) < kZeroFirstStage ? 0.0 : num_ht / den_ht;
    dg["numerator_hajek"] = num_hajek;
    dg["denominator_hajek"] = den_hajek;
    dg["numerator_horvitz_thompson"] = num_ht;
    dg["denominator_horvitz_thompson"] = den_ht;
    dg["pz_trimmed"] = static_cast<double>(pz_trimmed);
    dg["q_trimmed"] = static_cast<double>(q_trimmed);
    dg["ess_respondents_z0"] = kish_ess(resp_w[0]);
    dg["ess_respondents_z1"] = kish_ess(resp_w[1]);
    const double floor_share = q_evaluated ? static_cast<double>(q_at_floor) / static_cast<double>(q_evaluated) : 0.0;
    dg["q_at_floor_share"] = floor_share;
    if (floor_share > options.floor_warning_share) {
        std::ostringstream msg;
        msg << "response probabilities at the trim floor for " << floor_share * 100.0 << "% of respondents";
        est.warnings.push_back(msg.str());
    }
    return est;
}

EffectEstimate late_li_mar(const Dataset& dataset, const nuisance::NuisanceFits& fits,
                           const EstimatorOptions& options) {
    require_valid(dataset);
    const std::size_t n = dataset.size();

    // Orient the instrument so that `hi` is the arm with more treatment.
    std::array<double, 2> arm_n{}, arm_d{};
    for (const auto& o : dataset.observations) {
        arm_n[o.z] += 1.0;
        arm_d[o.z] += o.d;
    }
    const double first_stage = arm_d[1] / arm_n[1] - arm_d[0] / arm_n[0];
    if (std::abs(first_stage) < kZeroFirstStage) {
        throw Error("no_compliance_signal", "no compliance signal: first-stage difference is zero");
    }
    const int hi = first_stage > 0.0 ? 1 : 0;
    const int lo = 1 - hi;

    for (int z = 0; z <= 1; ++z) {
        for (int d = 0; d <= 1; ++d) {
            if (!fits.has_response(z, d)) throw Error("empty_cell", "empty cell " + cell_label(z, d));
        }
    }
    std::array<std::array<CellMean, 2>, 2> mu;
    for (int z = 0; z <= 1; ++z) {
        for (int d = 0; d <= 1; ++d) mu[z][d] = fit_cell_mean(dataset, z, d, options.cell_regression);
    }

    std::vector<double> weight(n), effect(n);
    std::size_t pi_trimmed = 0, pi_c_floored = 0, pi_c_negative = 0, q_trimmed = 0;
    std::size_t ab_floored = 0, ce_floored = 0, rc1_clipped = 0, rc0_clipped = 0, identity_failures = 0;
    double max_identity_error = 0.0;

    const ColumnMatrix xm = nuisance::covariate_matrix(dataset);
    const auto treated_lo_all = fits.treated_given_all(lo, xm);
    const auto treated_hi_all = fits.treated_given_all(hi, xm);
    const auto q11_all = fits.response_all(hi, 1, xm);
    const auto q01_all = fits.response_all(lo, 1, xm);
    const auto q00_all = fits.response_all(lo, 0, xm);
    const auto q10_all = fits.response_all(hi, 0, xm);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = dataset.observations[i].x;
        const auto treated_lo = treated_lo_all[i];
        const auto treated_hi = treated_hi_all[i];
        pi_trimmed += treated_lo.trimmed + treated_hi.trimmed;
        const double pi_a = treated_lo.value;
        const double pi_n = 1.0 - treated_hi.value;
        const double pi_c_raw = 1.0 - pi_a - pi_n;
        pi_c_negative += pi_c_raw < 0.0;
        double pi_c = pi_c_raw;
        if (pi_c < fits.pi_c_floor) {
            pi_c = fits.pi_c_floor;
            ++pi_c_floored;
        }

        const auto q11 = q11_all[i];
        const auto q01 = q01_all[i];
        const auto q00 = q00_all[i];
        const auto q10 = q10_all[i];
        q_trimmed += q11.trimmed + q01.trimmed + q00.trimmed + q10.trimmed;

        const double a = (pi_a + pi_c) * q11.value;
        const double b = pi_a * q01.value;
        const double c = (pi_n + pi_c) * q00.value;
        const double e = pi_n * q10.value;
        double ab = a - b;
        double ce = c - e;

        // Implied complier response rates must rebuild the observed q11.
        const double rc1 = ab / pi_c;
        const double rc0 = ce / pi_c;
        const double rebuilt = (pi_a * q01.value + pi_c * rc1) / (pi_a + pi_c);
        const double identity_error = std::abs(rebuilt - q11.value);
        max_identity_error = std::max(max_identity_error, identity_error);
        identity_failures += identity_error > 1e-12;
        rc1_clipped += !(rc1 > 0.0 && rc1 <= 1.0);
        rc0_clipped += !(rc0 > 0.0 && rc0 <= 1.0);

        if (ab < options.decomposition_floor) {
            ab = options.decomposition_floor;
            ++ab_floored;
        }
        if (ce < options.decomposition_floor) {
            ce = options.decomposition_floor;
            ++ce_floored;
        }

        const double m_c1 = (a * mu[hi][1].at(x) - b * mu[lo][1].at(x)) / ab;
        const double m_c0 = (c * mu[lo][0].at(x) - e * mu[hi][0].at(x)) / ce;
        weight[i] = pi_c;
        effect[i] = m_c1 - m_c0;
    }

    const double nn = static_cast<double>(n);
    const double ab_share = static_cast<double>(ab_floored) / nn;
    const double ce_share = static_cast<double>(ce_floored) / nn;
    if (ab_share > options.degenerate_share || ce_share > options.degenerate_share) {
        std::ostringstream msg;
        msg << "LI decomposition degenerate: A-B floored for " << ab_share * 100.0 << "% and C-E for "
            << ce_share * 100.0 << "% of rows";
        throw Error("li_decomposition_degenerate", msg.str());
    }

    EffectEstimate est;
    est.id = EstimatorId::li_mar;
    est.point = kernels::dot(weight, effect) / kernels::sum(weight);
    auto& dg = est.diagnostics;
    dg["first_stage"] = first_stage;
    dg["instrument_orientation"] = hi == 1 ? 1.0 : -1.0;
    dg["complier_share_mean"] = kernels::sum(weight) / nn;
    dg["pi_trimmed"] = static_cast<double>(pi_trimmed);
    dg["pi_c_floored"] = static_cast<double>(pi_c_floored);
    dg["pi_c_negative"] = static_cast<double>(pi_c_negative);
    dg["q_trimmed"] = static_cast<double>(q_trimmed);
    dg["ab_floored"] = static_cast<double>(ab_floored);
    dg["ce_floored"] = static_cast<double>(ce_floored);
    dg["complier_response_treated_clipped"] = static_cast<double>(rc1_clipped);
    dg["complier_response_control_clipped"] = static_cast<double>(rc0_clipped);
    dg["cell_identity_max_error"] = max_identity_error;
    if (identity_failures > 0) {
        est.warnings.push_back("cell identity violated on " + std::to_string(identity_failures) + " row(s)");
    }
    if (pi_c_negative > 0) {
        est.warnings.push_back(std::to_string(pi_c_negative) +
                               " row(s) with negative implied complier share (defier evidence)");
    }
    return est;
}

EffectEstimate late_oracle(const dgp::SimulatedDataset& simulated) {
    const auto& rows = simulated.dataset.observations;
    if (simulated.latent.size() != rows.size()) {
        throw Error("invalid_argument", "oracle needs latent draws on every row");
    }
    double mean = 0.0;
    std::size_t compliers = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].t) throw Error("invalid_argument", "oracle needs compliance types on every row");
        if (*rows[i].t != ComplianceType::complier) continue;
        ++compliers;
        // Running mean: identical effects reproduce the effect bit-exactly.
        const double eff = dgp::individual_effect(simulated.outcome, simulated.latent[i].u, rows[i].x);
        mean += (eff - mean) / static_cast<double>(compliers);
    }
    if (compliers == 0) throw Error("no_compliers", "oracle: no compliers in the simulated sample");
    EffectEstimate est;
    est.id = EstimatorId::oracle;
    est.point = mean;
    est.diagnostics["n_compliers"] = static_cast<double>(compliers);
    return est;
}

namespace {

void note_nuisance(EffectEstimate& est, const nuisance::NuisanceFits& fits) {
    std::size_t fallback = 0, unconverged = 0;
    auto visit = [&](const nuisance::LogisticModel& m) {
        fallback += m.ridge > 0.0;
        unconverged += !m.converged;
    };
    visit(fits.p_z);
    visit(fits.p_d_given_z0);
    visit(fits.p_d_given_z1);
    for (const auto& row : fits.q) {
        for (const auto& m : row) {
            if (m) visit(*m);
        }
    }
    est.diagnostics["nuisance_ridge_models"] = static_cast<double>(fallback);
    est.diagnostics["nuisance_unconverged_models"] = static_cast<double>(unconverged);
    if (unconverged > 0) est.warnings.push_back(std::to_string(unconverged) + " nuisance model(s) did not converge");
}

}  // namespace

EffectEstimate estimate(const Dataset& dataset, EstimatorId id, const EstimatorOptions& options) {
    switch (id) {
        case EstimatorId::wald: return wald_respondents(dataset);
        case EstimatorId::mar: {
            const auto fits = nuisance::fit_all(dataset, options.nuisance, nuisance::ResponseModels::nonempty_cells);
            auto est = late_mar(dataset, fits, options);
            note_nuisance(est, fits);
            return est;
        }
        case EstimatorId::li_mar: {
            const auto fits = nuisance::fit_all(dataset, options.nuisance, nuisance::ResponseModels::all_cells);
            auto est = late_li_mar(dataset, fits, options);
            note_nuisance(est, fits);
            return est;
        }
        case EstimatorId::oracle:
            throw Error("oracle_requires_latent", "the oracle estimator needs simulated data with latent draws");
    }
    throw Error("invalid_argument", "unknown estimator");
}

EffectEstimate estimate(const dgp::SimulatedDataset& simulated, EstimatorId id, const EstimatorOptions& options) {
    if (id == EstimatorId::oracle) return late_oracle(simulated);
    return estimate(simulated.dataset, id, options);
}

AssumptionReport check_assumptions(const Dataset& dataset, const nuisance::NuisanceFits& fits) {
    require_valid(dataset);
    AssumptionReport rep;
    std::array<double, 2> arm_n{}, arm_d{};
    for (const auto& o : dataset.observations) {
        arm_n[o.z] += 1.0;
        arm_d[o.z] += o.d;
    }
    rep.first_stage = arm_d[1] / arm_n[1] - arm_d[0] / arm_n[0];
    rep.compliers_exist = std::abs(rep.first_stage) >= kZeroFirstStage;
    const int hi = rep.first_stage >= 0.0 ? 1 : 0;
    for (const auto& o : dataset.observations) {
        const double p = fits.p_z.predict(o.x);
        rep.min_propensity = std::min(rep.min_propensity, p);
        rep.max_propensity = std::max(rep.max_propensity, p);
        rep.overlap_trimmed_rows += p < fits.trim_low || p > fits.trim_high;
        const double treated_hi = (hi == 1 ? fits.p_d_given_z1 : fits.p_d_given_z0).predict(o.x);
        const double treated_lo = (hi == 1 ? fits.p_d_given_z0 : fits.p_d_given_z1).predict(o.x);
        rep.defier_evidence_rows += treated_hi < treated_lo;
    }
    return rep;
}

}  // namespace lilate::estimators

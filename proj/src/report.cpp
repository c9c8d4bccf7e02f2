#include "lilate/report.hpp"

#include <iomanip>
#include <sstream>
#include <variant>

#include "lilate/io.hpp"

namespace lilate::report {

namespace {

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

json to_json(const MomentSummary& s) {
    return json{{"n", s.n}, {"mean", opt(s.mean)}, {"sd", opt(s.sd)}};
}

json errors_json(const dgp::ErrorStructure& errors) {
    json j{{"scenario", std::string(dgp::scenario_name(errors))}};
    if (const auto* c = std::get_if<dgp::CorrelatedErrors>(&errors)) {
        j["delta1"] = c->delta1;
        j["rho"] = c->rho;
        j["sigma_eps"] = c->sigma_eps;
    } else if (const auto* s = std::get_if<dgp::ComplierShiftErrors>(&errors)) {
        j["pi"] = s->pi;
        j["sigma_u"] = s->sigma_u;
    }
    return j;
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string cell(const std::optional<double>& v, int digits = 2) { return v ? fixed(*v, digits) : "-"; }

}  // namespace

json to_json(const nuisance::LogisticModel& model) {
    return json{{"feature_names", model.feature_names},
                {"coefficients", model.coefficients},
                {"converged", model.converged},
                {"iterations", model.iterations},
                {"ridge", model.ridge},
                {"diagnostic", model.diagnostic}};
}

json to_json(const nuisance::NuisanceFits& fits) {
    json q = json::object();
    for (int z = 0; z <= 1; ++z) {
        for (int d = 0; d <= 1; ++d) {
            const std::string key = "q_" + std::to_string(z) + std::to_string(d);
            q[key] = fits.q[z][d] ? to_json(*fits.q[z][d]) : json(nullptr);
        }
    }
    return json{{"p_z", to_json(fits.p_z)},
                {"p_d_given_z0", to_json(fits.p_d_given_z0)},
                {"p_d_given_z1", to_json(fits.p_d_given_z1)},
                {"q", q},
                {"trim_bounds", {fits.trim_low, fits.trim_high}},
                {"pi_c_floor", fits.pi_c_floor}};
}

json to_json(const estimators::EffectEstimate& estimate) {
    json diag = json::object();
    for (const auto& [k, v] : estimate.diagnostics) diag[k] = v;
    return json{{"estimator", std::string(estimators::to_string(estimate.id))},
                {"point", estimate.point},
                {"diagnostics", diag},
                {"warnings", estimate.warnings}};
}

json to_json(const estimators::AssumptionReport& r) {
    return json{{"first_stage", r.first_stage},
                {"compliers_exist", r.compliers_exist},
                {"defier_evidence_rows", r.defier_evidence_rows},
                {"overlap_trimmed_rows", r.overlap_trimmed_rows},
                {"min_propensity", r.min_propensity},
                {"max_propensity", r.max_propensity}};
}

json to_json(const inference::BootstrapResult& r, bool include_replicates) {
    json reasons = json::object();
    for (const auto& [k, v] : r.failure_reasons) reasons[k] = v;
    json j{{"estimator", std::string(estimators::to_string(r.id))},
           {"point", r.point},
           {"standard_error", r.standard_error},
           {"p_value", r.p_value},
           {"replicates", r.replicates},
           {"failed_replicates", r.failed_replicates},
           {"seed", r.seed},
           {"valid", r.valid},
           {"failure_reasons", reasons}};
    if (include_replicates) {
        json reps = json::array();
        for (const auto& e : r.replicate_estimates) reps.push_back(opt(e));
        j["replicate_estimates"] = reps;
    }
    return j;
}

json to_json(const dgp::ParametricDgpConfig& c) {
    return json{{"alpha0", c.alpha0}, {"alpha1", c.alpha1}, {"beta0", c.beta0},   {"beta1", c.beta1},
                {"gamma0", c.gamma0}, {"gamma1", c.gamma1}, {"pz", c.pz},         {"errors", errors_json(c.errors)},
                {"n", c.n},           {"seed", c.seed},     {"alpha_x", c.alpha_x}, {"beta_x", c.beta_x},
                {"gamma_x", c.gamma_x}};
}

json to_json(const inference::MonteCarloReport& r) {
    json summaries = json::array();
    for (const auto& s : r.summaries) {
        json reasons = json::object();
        for (const auto& [k, v] : s.failure_reasons) reasons[k] = v;
        summaries.push_back(json{{"estimator", std::string(estimators::to_string(s.id))},
                                 {"mean_estimate", s.mean_estimate},
                                 {"mean_bias", s.mean_bias},
                                 {"rmse", s.rmse},
                                 {"mc_standard_error", s.mc_standard_error},
                                 {"replications", s.replications},
                                 {"failures", s.failures},
                                 {"failure_reasons", reasons}});
    }
    return json{{"dgp", to_json(r.dgp)}, {"truth", r.truth}, {"reps", r.reps},
                {"n", r.n},              {"seed", r.seed},   {"estimators", summaries}};
}

json to_json(const dgp::LiGapReport& r) {
    json cells = json::array();
    for (const auto& c : r.cells) {
        json moments = json::array();
        for (const auto& m : c.moments) {
            moments.push_back(json{{"moment", m.moment},
                                   {"respondent_mean", opt(m.respondent_mean)},
                                   {"nonrespondent_mean", opt(m.nonrespondent_mean)},
                                   {"gap", opt(m.gap)},
                                   {"standard_error", opt(m.standard_error)}});
        }
        cells.push_back(json{{"z", c.z},
                             {"type", std::string(to_string(c.type))},
                             {"n_respondents", c.n_respondents},
                             {"n_nonrespondents", c.n_nonrespondents},
                             {"max_respondent_u", opt(c.max_respondent_u)},
                             {"min_nonrespondent_u", opt(c.min_nonrespondent_u)},
                             {"supports_disjoint", opt(c.supports_disjoint)},
                             {"moments", moments}});
    }
    return json{{"moment_functions", r.moment_functions}, {"n_mc", r.n_mc}, {"seed", r.seed},
                {"cells", cells},                         {"flags", r.flags}};
}

json to_json(const DescribeTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        rows.push_back(json{{"variable", r.variable},
                            {"total", to_json(r.total)},
                            {"respondents", to_json(r.respondents)},
                            {"nonrespondents", to_json(r.nonrespondents)}});
    }
    return json{{"n_total", t.n_total},
                {"n_respondents", t.n_respondents},
                {"n_nonrespondents", t.n_nonrespondents},
                {"rows", rows}};
}

namespace {

std::string_view column_label(estimators::EstimatorId id) {
    switch (id) {
        case estimators::EstimatorId::li_mar: return "LI + MAR";
        case estimators::EstimatorId::mar: return "MAR";
        case estimators::EstimatorId::wald: return "Wald";
        case estimators::EstimatorId::oracle: return "oracle";
    }
    return "?";
}

}  // namespace

std::string effect_table(const std::vector<EffectColumn>& columns) {
    constexpr int label_w = 36;
    constexpr int col_w = 10;
    std::ostringstream out;
    out << std::setw(label_w) << "" << " |";
    for (const auto& c : columns) out << std::setw(col_w) << column_label(c.id);
    out << '\n' << std::string(label_w + 2 + col_w * columns.size(), '-') << '\n';
    out << std::setw(label_w) << "effect" << " |";
    for (const auto& c : columns) out << std::setw(col_w) << fixed(c.effect);
    out << '\n' << std::setw(label_w) << "standard error" << " |";
    for (const auto& c : columns) out << std::setw(col_w) << cell(c.standard_error);
    out << '\n' << std::setw(label_w) << "bootstrap p-values (quantile-based)" << " |";
    for (const auto& c : columns) out << std::setw(col_w) << cell(c.p_value);
    out << '\n';
    return out.str();
}

std::string describe_table(const DescribeTable& t) {
    std::ostringstream out;
    constexpr int w = 9;
    out << std::setw(24) << "" << " |" << std::setw(2 * w) << "total sample" << " |" << std::setw(2 * w)
        << "working" << " |" << std::setw(2 * w) << "not working" << '\n';
    out << std::setw(24) << "" << " |";
    for (int s = 0; s < 3; ++s) out << std::setw(w) << "mean" << std::setw(w) << "std.dev" << " |";
    out << '\n' << std::string(24 + 3 * (2 * w + 2) + 2, '-') << '\n';
    for (const auto& r : t.rows) {
        out << std::setw(24) << r.variable << " |";
        for (const MomentSummary* s : {&r.total, &r.respondents, &r.nonrespondents}) {
            out << std::setw(w) << cell(s->mean) << std::setw(w) << cell(s->sd) << " |";
        }
        out << '\n';
    }
    out << std::setw(24) << "n" << " |" << std::setw(2 * w) << t.n_total << " |" << std::setw(2 * w)
        << t.n_respondents << " |" << std::setw(2 * w) << t.n_nonrespondents << " |\n";
    return out.str();
}

std::string li_gap_table(const dgp::LiGapReport& r) {
    std::ostringstream out;
    out << "n_mc=" << r.n_mc << " seed=" << r.seed << '\n';
    out << std::setw(3) << "z" << std::setw(14) << "type" << std::setw(18) << "moment" << std::setw(9) << "n_resp"
        << std::setw(9) << "n_nonr" << std::setw(12) << "gap" << std::setw(11) << "s.e." << std::setw(9) << "|t|"
        << std::setw(10) << "disjoint" << '\n';
    for (const auto& c : r.cells) {
        for (const auto& m : c.moments) {
            std::string t = "-";
            if (m.gap && m.standard_error && *m.standard_error > 0.0) t = fixed(std::abs(*m.gap) / *m.standard_error);
            out << std::setw(3) << c.z << std::setw(14) << to_string(c.type) << std::setw(18) << m.moment
                << std::setw(9) << c.n_respondents << std::setw(9) << c.n_nonrespondents << std::setw(12)
                << cell(m.gap, 4) << std::setw(11) << cell(m.standard_error, 4) << std::setw(9) << t << std::setw(10)
                << (c.supports_disjoint ? (*c.supports_disjoint ? "yes" : "no") : "-") << '\n';
        }
    }
    for (const auto& f : r.flags) out << "note: " << f << '\n';
    return out.str();
}

std::string montecarlo_table(const inference::MonteCarloReport& r) {
    std::ostringstream out;
    out << "scenario=" << dgp::scenario_name(r.dgp.errors) << " truth=" << r.truth << " reps=" << r.reps
        << " n=" << r.n << '\n';
    out << std::setw(10) << "estimator" << std::setw(12) << "mean" << std::setw(12) << "bias" << std::setw(12)
        << "mc s.e." << std::setw(9) << "|t|" << std::setw(12) << "rmse" << std::setw(9) << "failed" << '\n';
    for (const auto& s : r.summaries) {
        out << std::setw(10) << estimators::to_string(s.id);
        if (s.replications == 0) {
            out << std::setw(12) << "-" << std::setw(12) << "-" << std::setw(12) << "-" << std::setw(9) << "-"
                << std::setw(12) << "-" << std::setw(9) << s.failures << '\n';
            continue;
        }
        const std::string t = s.mc_standard_error > 0.0 ? fixed(std::abs(s.mean_bias) / s.mc_standard_error) : "-";
        out << std::setw(12) << fixed(s.mean_estimate, 4) << std::setw(12) << fixed(s.mean_bias, 4) << std::setw(12)
            << fixed(s.mc_standard_error, 4) << std::setw(9) << t << std::setw(12) << fixed(s.rmse, 4) << std::setw(9)
            << s.failures << '\n';
    }
    return out.str();
}

void write_replications_csv(std::ostream& out, const inference::MonteCarloReport& r) {
    out << "rep";
    for (const auto& s : r.summaries) out << ',' << estimators::to_string(s.id);
    out << '\n';
    for (std::size_t rep = 0; rep < r.reps; ++rep) {
        out << rep;
        for (const auto& col : r.estimates) {
            out << ',';
            if (col[rep]) out << io::format_double(*col[rep]);
        }
        out << '\n';
    }
}

void write_replicates_csv(std::ostream& out, const inference::BootstrapResult& r) {
    out << "replicate," << estimators::to_string(r.id) << '\n';
    for (std::size_t i = 0; i < r.replicate_estimates.size(); ++i) {
        out << i << ',';
        if (r.replicate_estimates[i]) out << io::format_double(*r.replicate_estimates[i]);
        out << '\n';
    }
}

}  // namespace lilate::report

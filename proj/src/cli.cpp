#include "lilate/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "lilate/error.hpp"
#include "lilate/estimators.hpp"
#include "lilate/inference.hpp"
#include "lilate/kernels.hpp"

#ifndef LILATE_VERSION
#define LILATE_VERSION "0.0.0"
#endif

namespace lilate::cli {

namespace fs = std::filesystem;
using report::json;

namespace {

std::string_view command_name(Command c) {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::estimate: return "estimate";
        case Command::montecarlo: return "montecarlo";
        case Command::diagnose: return "diagnose";
        case Command::describe: return "describe";
    }
    return "unknown";
}

dgp::ErrorStructure build_errors(const std::string& scenario, double delta1, double rho, double sigma_eps,
                                 double pi, double sigma_u) {
    if (scenario == "identical" || scenario == "A") return dgp::IdenticalErrors{};
    if (scenario == "correlated" || scenario == "B") return dgp::CorrelatedErrors{delta1, rho, sigma_eps};
    if (scenario == "complier_shift" || scenario == "C") return dgp::ComplierShiftErrors{pi, sigma_u};
    throw Error("invalid_config", "unknown scenario '" + scenario + "'");
}

std::vector<estimators::EstimatorId> parse_estimators(const std::vector<std::string>& names) {
    std::vector<estimators::EstimatorId> out;
    for (const auto& name : names) {
        const auto id = estimators::parse_estimator(name);
        if (!id) throw Error("invalid_config", "unknown estimator '" + name + "'");
        out.push_back(*id);
    }
    if (out.empty()) throw Error("invalid_config", "no estimator selected");
    return out;
}

estimators::EstimatorOptions estimator_options(const RunConfig& c) {
    estimators::EstimatorOptions o;
    o.nuisance.trim_low = c.trim_low;
    o.nuisance.trim_high = c.trim_high;
    o.nuisance.pi_c_floor = c.pi_c_floor;
    o.hajek = !c.horvitz_thompson;
    return o;
}

bool nonparametric(const RunConfig& c) { return c.phi || c.psi || c.eta; }

dgp::NonparametricSpec nonparametric_spec(const RunConfig& c) {
    dgp::NonparametricSpec s;
    std::ostringstream phi, psi, eta;
    phi << "linear:" << c.dgp.alpha0 << ',' << c.dgp.alpha1;
    psi << "threshold:" << c.dgp.beta0 << ',' << c.dgp.beta1;
    eta << "threshold:" << c.dgp.gamma0 << ',' << c.dgp.gamma1;
    s.outcome = dgp::parse_outcome(c.phi.value_or(phi.str()));
    s.treatment = dgp::parse_treatment(c.psi.value_or(psi.str()));
    s.response = dgp::parse_response(c.eta.value_or(eta.str()));
    s.errors = c.dgp.errors;
    s.pz = c.dgp.pz;
    s.n = c.dgp.n;
    s.seed = c.dgp.seed;
    return s;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

class Outputs {
public:
    explicit Outputs(const RunConfig& config) : config_(config) {}

    bool enabled() const { return !config_.output_dir.empty(); }

    void write(const std::string& name, std::string_view content) {
        const fs::path path = fs::path(config_.output_dir) / name;
        io::write_file_atomic(path, content);
        written_.push_back(name);
    }

    void write_manifest() {
        if (!enabled()) return;
        json manifest{{"tool", "lilate"},
                      {"version", LILATE_VERSION},
                      {"command", std::string(command_name(config_.command))},
                      {"seed", config_.seed},
                      {"kernels", std::string(kernels::active().name)},
                      {"config", config_.to_json()},
                      {"outputs", written_}};
        io::write_file_atomic(fs::path(config_.output_dir) / "manifest.json", dump(manifest));
    }

private:
    const RunConfig& config_;
    std::vector<std::string> written_;
};

int run_simulate(const RunConfig& c, std::ostream& out) {
    dgp::SimulatedDataset sim = nonparametric(c) ? dgp::simulate_nonparametric(nonparametric_spec(c))
                                                 : dgp::simulate(c.dgp);
    std::ostringstream csv;
    io::write_csv(csv, sim, c.oracle_columns);
    Outputs outputs(c);
    fs::path target;
    if (!c.output.empty()) {
        target = c.output;
        io::write_file_atomic(target, csv.str());
    } else if (outputs.enabled()) {
        outputs.write("simulated.csv", csv.str());
        target = fs::path(c.output_dir) / "simulated.csv";
    } else {
        out << csv.str();
        return 0;
    }
    outputs.write_manifest();
    std::size_t respondents = 0;
    for (const auto& o : sim.dataset.observations) respondents += o.r;
    out << "wrote " << sim.dataset.size() << " rows (" << respondents << " respondents) to " << target.string()
        << '\n';
    return 0;
}

int run_estimate(const RunConfig& c, std::ostream& out) {
    if (c.input.empty()) throw Error("invalid_config", "estimate needs --input");
    const Dataset data = io::load_csv(c.input, c.columns);
    require_valid(data);
    const auto ids = parse_estimators(c.estimators);
    const auto options = estimator_options(c);
    Outputs outputs(c);

    std::vector<report::EffectColumn> columns;
    json estimates = json::array();
    for (const auto id : ids) {
        const auto est = estimators::estimate(data, id, options);
        report::EffectColumn col{id, est.point, std::nullopt, std::nullopt};
        json entry = report::to_json(est);
        entry["standard_error"] = nullptr;
        entry["p_value"] = nullptr;
        if (c.bootstrap_b > 0) {
            inference::BootstrapOptions bo;
            bo.replicates = c.bootstrap_b;
            bo.seed = c.seed;
            bo.threads = c.threads;
            bo.estimator = options;
            const auto boot = inference::bootstrap(data, id, bo);
            col.standard_error = boot.standard_error;
            col.p_value = boot.p_value;
            entry["standard_error"] = boot.standard_error;
            entry["p_value"] = boot.p_value;
            entry["bootstrap"] = report::to_json(boot);
            if (!boot.valid) out << "warning: bootstrap for " << estimators::to_string(id) << " flagged invalid ("
                                 << boot.failed_replicates << " failed replicates)\n";
            if (outputs.enabled() && c.save_replicates) {
                std::ostringstream csv;
                report::write_replicates_csv(csv, boot);
                outputs.write("bootstrap_" + std::string(estimators::to_string(id)) + ".csv", csv.str());
            }
        }
        columns.push_back(col);
        estimates.push_back(std::move(entry));
    }

    json result{{"n", data.size()}, {"covariates", data.covariate_names}, {"estimates", estimates}};
    try {
        const auto fits = nuisance::fit_all(data, options.nuisance, nuisance::ResponseModels::nonempty_cells);
        result["assumptions"] = report::to_json(estimators::check_assumptions(data, fits));
        result["nuisance"] = report::to_json(fits);
    } catch (const Error& e) {
        result["assumptions"] = json{{"error", e.what()}};
    }

    out << report::effect_table(columns);
    for (const auto& e : estimates) {
        for (const auto& w : e["warnings"]) out << "warning (" << e["estimator"].get<std::string>() << "): "
                                                << w.get<std::string>() << '\n';
    }
    if (outputs.enabled()) {
        outputs.write("estimates.json", dump(result));
        outputs.write_manifest();
    }
    return 0;
}

int run_montecarlo(const RunConfig& c, std::ostream& out) {
    const auto ids = parse_estimators(c.estimators);
    inference::MonteCarloOptions mo;
    mo.reps = c.reps;
    mo.n = c.dgp.n;
    mo.seed = c.seed;
    mo.threads = c.threads;
    mo.estimator = estimator_options(c);
    const auto rep = inference::monte_carlo(c.dgp, ids, mo);
    out << report::montecarlo_table(rep);
    Outputs outputs(c);
    if (outputs.enabled()) {
        outputs.write("montecarlo.json", dump(report::to_json(rep)));
        if (c.save_replicates) {
            std::ostringstream csv;
            report::write_replications_csv(csv, rep);
            outputs.write("montecarlo_replications.csv", csv.str());
        }
        outputs.write_manifest();
    }
    return 0;
}

int run_diagnose(const RunConfig& c, std::ostream& out) {
    std::vector<dgp::MomentFunction> moments;
    for (const auto& m : c.moments) moments.push_back(dgp::parse_moment(m));
    const auto rep = nonparametric(c) ? dgp::li_gap(nonparametric_spec(c), moments, c.n_mc, c.seed)
                                      : dgp::li_gap(c.dgp, moments, c.n_mc, c.seed);
    out << report::li_gap_table(rep);
    Outputs outputs(c);
    if (outputs.enabled()) {
        outputs.write("li_gap.json", dump(report::to_json(rep)));
        outputs.write_manifest();
    }
    return 0;
}

int run_describe(const RunConfig& c, std::ostream& out) {
    if (c.input.empty()) throw Error("invalid_config", "describe needs --input");
    const Dataset data = io::load_csv(c.input, c.columns);
    const auto table = describe(data);
    out << report::describe_table(table);
    Outputs outputs(c);
    if (outputs.enabled()) {
        outputs.write("describe.json", dump(report::to_json(table)));
        outputs.write_manifest();
    }
    return 0;
}

}  // namespace

json RunConfig::to_json() const {
    json cols{{"y", columns.y}, {"d", columns.d}, {"z", columns.z}, {"r", columns.r}, {"x", columns.x}};
    cols["t"] = columns.t ? json(*columns.t) : json(nullptr);
    auto opt = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
    return json{{"command", std::string(command_name(command))},
                {"input", input},
                {"output_dir", output_dir},
                {"output", output},
                {"columns", cols},
                {"estimators", estimators},
                {"dgp", report::to_json(dgp)},
                {"phi", opt(phi)},
                {"psi", opt(psi)},
                {"eta", opt(eta)},
                {"bootstrap_b", bootstrap_b},
                {"seed", seed},
                {"trim_low", trim_low},
                {"trim_high", trim_high},
                {"pi_c_floor", pi_c_floor},
                {"horvitz_thompson", horvitz_thompson},
                {"oracle_columns", oracle_columns},
                {"reps", reps},
                {"n_mc", n_mc},
                {"moments", moments}};
}

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                                    int& exit_code) {
    RunConfig c;
    CLI::App app{"LATE estimation under outcome attrition, with a simulation lab for latent ignorability"};
    app.set_config("--config", "", "Read options from a key = value file (command-line flags win)");
    app.require_subcommand(1);

    std::vector<std::pair<Command, CLI::App*>> subs{
        {Command::simulate, app.add_subcommand("simulate", "Draw a dataset from the parametric/nonparametric model")},
        {Command::estimate, app.add_subcommand("estimate", "Estimate LATEs with bootstrap s.e. and p-values")},
        {Command::montecarlo, app.add_subcommand("montecarlo", "Bias/RMSE of estimators over simulated replications")},
        {Command::diagnose, app.add_subcommand("diagnose", "Respondent vs nonrespondent moment gaps per (z, type) cell")},
        {Command::describe, app.add_subcommand("describe", "Means and std-devs overall and by response status")},
    };
    for (auto& [cmd, sub] : subs) sub->fallthrough();

    app.add_option("--input", c.input, "Input CSV");
    app.add_option("--output-dir", c.output_dir, "Directory for JSON reports and the run manifest");
    app.add_option("--output", c.output, "simulate: CSV output path");
    app.add_option("--y-col", c.columns.y, "Outcome column")->capture_default_str();
    app.add_option("--d-col", c.columns.d, "Treatment column")->capture_default_str();
    app.add_option("--z-col", c.columns.z, "Instrument column")->capture_default_str();
    app.add_option("--r-col", c.columns.r, "Response indicator column")->capture_default_str();
    app.add_option("--x-cols", c.columns.x, "Covariate columns (comma separated; * = all others)")->delimiter(',');
    app.add_option("--estimators", c.estimators, "Estimators: li_mar, mar, wald, oracle")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--bootstrap-b", c.bootstrap_b, "Bootstrap replicates (0 disables)")->capture_default_str();
    app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
    app.add_option("--trim-low", c.trim_low, "Lower probability trim")->capture_default_str();
    app.add_option("--trim-high", c.trim_high, "Upper probability trim")->capture_default_str();
    app.add_option("--pi-c-floor", c.pi_c_floor, "Floor on the complier share")->capture_default_str();
    app.add_flag("--horvitz-thompson", c.horvitz_thompson, "mar: unnormalized weights");
    app.add_flag("--oracle-columns", c.oracle_columns, "simulate: also write t,u,v,w");
    app.add_flag("--save-replicates", c.save_replicates, "Persist per-replication estimates as CSV");
    app.add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();

    auto& d = c.dgp;
    app.add_option("--scenario", c.scenario, "Error structure: identical | correlated | complier_shift")
        ->capture_default_str();
    app.add_option("--alpha0", d.alpha0)->capture_default_str();
    app.add_option("--alpha1", d.alpha1)->capture_default_str();
    app.add_option("--beta0", d.beta0)->capture_default_str();
    app.add_option("--beta1", d.beta1)->capture_default_str();
    app.add_option("--gamma0", d.gamma0)->capture_default_str();
    app.add_option("--gamma1", d.gamma1)->capture_default_str();
    app.add_option("--pz", d.pz, "Pr(Z=1)")->capture_default_str();
    double delta1 = 1.0, rho = 0.0, sigma_eps = 1.0, pi = 0.0, sigma_u = 1.0;
    app.add_option("--delta1", delta1, "correlated: W = delta1*V + eps")->capture_default_str();
    app.add_option("--rho", rho, "correlated: corr(U,V)")->capture_default_str();
    app.add_option("--sigma-eps", sigma_eps, "correlated: sd of eps")->capture_default_str();
    app.add_option("--pi", pi, "complier_shift: complier level shift")->capture_default_str();
    app.add_option("--sigma-u", sigma_u, "complier_shift: outcome noise sd")->capture_default_str();
    app.add_option("--n", d.n, "Rows per simulated dataset")->capture_default_str();
    app.add_option("--alpha-x", d.alpha_x, "Covariate loadings in the outcome")->delimiter(',');
    app.add_option("--beta-x", d.beta_x, "Covariate loadings in the first stage")->delimiter(',');
    app.add_option("--gamma-x", d.gamma_x, "Covariate loadings in the response equation")->delimiter(',');
    std::string phi, psi, eta;
    auto* phi_opt = app.add_option("--phi", phi, "Outcome selector, e.g. linear:0,1 or loglinear:0,1");
    auto* psi_opt = app.add_option("--psi", psi, "Treatment selector, e.g. threshold:0,1");
    auto* eta_opt = app.add_option("--eta", eta, "Response selector, e.g. threshold:0.2,0.3 or always");
    app.add_option("--reps", c.reps, "montecarlo: replications")->capture_default_str();
    app.add_option("--n-mc", c.n_mc, "diagnose: Monte Carlo draws")->capture_default_str();
    app.add_option("--moments", c.moments, "diagnose: identity, square, indicator:<c>")
        ->delimiter(',')
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        exit_code = app.exit(e, out, err);
        return std::nullopt;
    }

    for (auto& [cmd, sub] : subs) {
        if (sub->parsed()) c.command = cmd;
    }
    d.seed = c.seed;
    d.errors = build_errors(c.scenario, delta1, rho, sigma_eps, pi, sigma_u);
    if (*phi_opt) c.phi = phi;
    if (*psi_opt) c.psi = psi;
    if (*eta_opt) c.eta = eta;
    exit_code = 0;
    return c;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        switch (config.command) {
            case Command::simulate: return run_simulate(config, out);
            case Command::estimate: return run_estimate(config, out);
            case Command::montecarlo: return run_montecarlo(config, out);
            case Command::diagnose: return run_diagnose(config, out);
            case Command::describe: return run_describe(config, out);
        }
    } catch (const Error& e) {
        err << json{{"error", {{"code", e.code()}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
        return 3;
    }
    return 1;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    int code = 0;
    std::optional<RunConfig> config;
    try {
        config = parse_args(argc, argv, out, err, code);
    } catch (const Error& e) {
        err << json{{"error", {{"code", e.code()}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    }
    if (!config) return code;
    return run(*config, out, err);
}

}  // namespace lilate::cli

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lilate/dgp.hpp"
#include "lilate/io.hpp"
#include "lilate/report.hpp"

namespace lilate::cli {

enum class Command { simulate, estimate, montecarlo, diagnose, describe };

struct RunConfig {
    Command command = Command::estimate;
    std::string input;
    std::string output_dir;
    std::string output;  // simulate: CSV path
    io::ColumnMapping columns;
    std::vector<std::string> estimators{"li_mar", "mar", "wald"};

    dgp::ParametricDgpConfig dgp;
    std::string scenario = "identical";
    std::optional<std::string> phi, psi, eta;  // nonparametric selectors (simulate)

    std::size_t bootstrap_b = 1999;  // 0 disables the bootstrap
    std::uint64_t seed = 1;
    double trim_low = 0.01;
    double trim_high = 0.99;
    double pi_c_floor = 0.01;
    bool horvitz_thompson = false;
    bool oracle_columns = false;
    bool save_replicates = false;
    std::size_t reps = 200;
    std::size_t n_mc = 100000;
    std::vector<std::string> moments{"identity", "square", "indicator:0"};
    unsigned threads = 0;

    report::json to_json() const;
};

// Parses argv (CLI11; `--config FILE` reads key = value pairs, flags win).
// Returns std::nullopt after printing help or a usage error; `exit_code` is
// set accordingly.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
                                    int& exit_code);

// Executes one command. Library errors become a JSON error object on `err`
// and a nonzero status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lilate::cli

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lilate/core.hpp"
#include "lilate/dgp.hpp"

namespace lilate::io {

// CSV with a header row. An empty y cell encodes a missing outcome and is
// legal only where r = 0.
struct ColumnMapping {
    std::string y = "y";
    std::string d = "d";
    std::string z = "z";
    std::string r = "r";
    std::vector<std::string> x;  // {"*"} = every column not mapped elsewhere (oracle columns excluded)
    std::optional<std::string> t;
};

Dataset load_csv(const std::filesystem::path& path, const ColumnMapping& mapping);
Dataset parse_csv(std::istream& in, const ColumnMapping& mapping, std::string_view source = "<stream>");

// Columns y,d,z,r,<covariates>[,t,u,v,w]; doubles use the shortest
// round-trip representation.
void write_csv(std::ostream& out, const dgp::SimulatedDataset& simulated, bool oracle_columns);
void write_csv(std::ostream& out, const Dataset& dataset);

std::string format_double(double v);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace lilate::io

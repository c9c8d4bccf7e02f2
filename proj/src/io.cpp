#include "lilate/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include "lilate/error.hpp"

namespace lilate::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// RFC 4180 subset: quoted fields with doubled quotes, no embedded newlines.
std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.emplace_back(trim(field));
    return out;
}

[[noreturn]] void fail(std::string code, std::string_view source, std::size_t line, std::string_view column,
                       const std::string& what) {
    std::ostringstream msg;
    msg << source << ": row " << line;
    if (!column.empty()) msg << ", column '" << column << "'";
    msg << ": " << what;
    throw Error(std::move(code), msg.str());
}

double parse_real(std::string_view cell, std::string_view source, std::size_t line, std::string_view column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        fail("parse_error", source, line, column, "cannot parse '" + std::string(cell) + "' as a number");
    }
    return v;
}

int parse_binary(std::string_view cell, std::string_view source, std::size_t line, std::string_view column) {
    const double v = parse_real(cell, source, line, column);
    if (v != 0.0 && v != 1.0) {
        fail("invalid_data", source, line, column, "value '" + std::string(cell) + "' is not binary (0/1)");
    }
    return static_cast<int>(v);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

Dataset parse_csv(std::istream& in, const ColumnMapping& mapping, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) throw Error("parse_error", std::string(source) + ": missing header row");
    const auto header = split_fields(line);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!index.emplace(header[j], j).second) {
            throw Error("parse_error", std::string(source) + ": duplicate column '" + header[j] + "'");
        }
    }
    auto column = [&](const std::string& name) {
        const auto it = index.find(name);
        if (it == index.end()) throw Error("missing_column", std::string(source) + ": no column '" + name + "'");
        return it->second;
    };
    const std::size_t cy = column(mapping.y), cd = column(mapping.d), cz = column(mapping.z), cr = column(mapping.r);
    std::optional<std::size_t> ct;
    if (mapping.t) ct = column(*mapping.t);

    std::vector<std::string> x_names = mapping.x;
    if (x_names.size() == 1 && x_names[0] == "*") {
        x_names.clear();
        const std::vector<std::string> skip{mapping.y, mapping.d, mapping.z, mapping.r, "t", "u", "v", "w"};
        for (const auto& h : header) {
            if (std::find(skip.begin(), skip.end(), h) == skip.end() && (!mapping.t || h != *mapping.t)) {
                x_names.push_back(h);
            }
        }
    }
    std::vector<std::size_t> cx;
    for (const auto& name : x_names) cx.push_back(column(name));

    Dataset ds;
    ds.covariate_names = x_names;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_fields(line);
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << "expected " << header.size() << " fields, found " << cells.size();
            fail("parse_error", source, line_no, "", msg.str());
        }
        Observation o;
        o.d = parse_binary(cells[cd], source, line_no, mapping.d);
        o.z = parse_binary(cells[cz], source, line_no, mapping.z);
        o.r = parse_binary(cells[cr], source, line_no, mapping.r);
        const std::string& ycell = cells[cy];
        if (o.r == 0 && !ycell.empty()) {
            fail("invalid_data", source, line_no, mapping.y,
                 "outcome present for a nonrespondent (r=0); y must be empty exactly when r=0");
        }
        if (o.r == 1) {
            if (ycell.empty()) {
                fail("invalid_data", source, line_no, mapping.y, "outcome missing for a respondent (r=1)");
            }
            o.y = parse_real(ycell, source, line_no, mapping.y);
        }
        o.x.reserve(cx.size());
        for (std::size_t j = 0; j < cx.size(); ++j) o.x.push_back(parse_real(cells[cx[j]], source, line_no, x_names[j]));
        if (ct) {
            const auto t = compliance_from_string(cells[*ct]);
            if (!t) fail("parse_error", source, line_no, *mapping.t, "unknown compliance type '" + cells[*ct] + "'");
            o.t = *t;
        }
        ds.observations.push_back(std::move(o));
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const ColumnMapping& mapping) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open '" + path.string() + "'");
    return parse_csv(in, mapping, path.string());
}

void write_csv(std::ostream& out, const Dataset& dataset) {
    out << "y,d,z,r";
    for (const auto& name : dataset.covariate_names) out << ',' << name;
    out << '\n';
    for (const auto& o : dataset.observations) {
        if (o.y) out << format_double(*o.y);
        out << ',' << o.d << ',' << o.z << ',' << o.r;
        for (double v : o.x) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_csv(std::ostream& out, const dgp::SimulatedDataset& simulated, bool oracle_columns) {
    if (!oracle_columns) {
        write_csv(out, simulated.dataset);
        return;
    }
    const auto& ds = simulated.dataset;
    out << "y,d,z,r";
    for (const auto& name : ds.covariate_names) out << ',' << name;
    out << ",t,u,v,w\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& o = ds.observations[i];
        if (o.y) out << format_double(*o.y);
        out << ',' << o.d << ',' << o.z << ',' << o.r;
        for (double v : o.x) out << ',' << format_double(v);
        const auto& l = simulated.latent[i];
        out << ',' << (o.t ? to_string(*o.t) : std::string_view()) << ',' << format_double(l.u) << ','
            << format_double(l.v) << ',' << format_double(l.w) << '\n';
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io_error", "cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("io_error", "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("io_error", "cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace lilate::io

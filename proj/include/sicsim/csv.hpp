#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sicsim/config.hpp"
#include "sicsim/metrics.hpp"
#include "sicsim/version.hpp"

namespace sicsim {

inline constexpr const char* kCsvColumns =
    "snr_db,imbalance_db,scheme,stage,user,ber,bit_errors,bits,e_bar,alpha_data,alpha_pilot,"
    "beta,trials";

/// Result table: commented header echoing the config and code version,
/// fixed column line, one row per (sweep point, stage, user). Numeric
/// formatting round-trips exactly.
inline std::string render_results(const std::vector<MetricsRecord>& records,
                                  const ExperimentConfig& cfg) {
    using detail::format_double;
    std::string out;
    std::istringstream echo(echo_config(cfg));
    std::string line;
    while (std::getline(echo, line)) out += "# " + line + '\n';
    out += std::string("# version = ") + kVersion + '\n';
    out += kCsvColumns;
    out += '\n';
    for (const auto& r : records) {
        out += format_double(r.snr_db) + ',';
        out += format_double(r.imbalance_db) + ',';
        out += std::string(to_string(r.scheme)) + ',';
        out += std::to_string(r.stage) + ',';
        out += std::to_string(r.user) + ',';
        out += format_double(r.ber) + ',';
        out += std::to_string(r.bit_errors) + ',';
        out += std::to_string(r.bits) + ',';
        out += format_double(r.e_bar) + ',';
        out += format_double(r.alpha_data) + ',';
        out += format_double(r.alpha_pilot) + ',';
        out += format_double(r.beta) + ',';
        out += std::to_string(r.trials) + '\n';
    }
    return out;
}

inline void emit_results(const std::vector<MetricsRecord>& records, const ExperimentConfig& cfg,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << render_results(records, cfg);
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Read back an emitted table. Comment lines are skipped; the column line
/// must match the writer's layout exactly.
inline std::vector<MetricsRecord> parse_results(const std::string& text) {
    std::vector<MetricsRecord> records;
    std::istringstream in(text);
    std::string line;
    bool saw_columns = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        if (!saw_columns) {
            if (line != kCsvColumns)
                throw std::invalid_argument("unexpected column line: " + line);
            saw_columns = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 13)
            throw std::invalid_argument("row " + std::to_string(lineno) + " has " +
                                        std::to_string(cells.size()) + " columns, wanted 13");
        MetricsRecord r;
        std::uint64_t stage = 0;
        std::uint64_t user = 0;
        bool ok = detail::parse_double(cells[0], r.snr_db) &&
                  detail::parse_double(cells[1], r.imbalance_db);
        if (cells[2] == "full")
            r.scheme = SicScheme::full;
        else if (cells[2] == "partial")
            r.scheme = SicScheme::partial;
        else
            ok = false;
        ok = ok && detail::parse_u64(cells[3], stage) && detail::parse_u64(cells[4], user) &&
             detail::parse_double(cells[5], r.ber) && detail::parse_u64(cells[6], r.bit_errors) &&
             detail::parse_u64(cells[7], r.bits) && detail::parse_double(cells[8], r.e_bar) &&
             detail::parse_double(cells[9], r.alpha_data) &&
             detail::parse_double(cells[10], r.alpha_pilot) &&
             detail::parse_double(cells[11], r.beta) && detail::parse_u64(cells[12], r.trials);
        if (!ok)
            throw std::invalid_argument("row " + std::to_string(lineno) + " is malformed");
        r.stage = static_cast<int>(stage);
        r.user = user;
        records.push_back(r);
    }
    if (!saw_columns) throw std::invalid_argument("no column line found");
    return records;
}

inline std::vector<MetricsRecord> parse_results_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open results file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_results(buf.str());
}

}  // namespace sicsim

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sicsim/em.hpp"
#include "sicsim/puncture.hpp"
#include "sicsim/sic.hpp"

namespace sicsim {

struct UserSpec {
    double rate = 0.0;
    std::size_t block_length = 0;
    std::size_t pilot_count = 0;
    double pilot_boost_db = 0.0;
};

/// Full description of one simulation campaign. Every field is echoed into
/// the output header, so a result file documents the run that produced it.
struct ExperimentConfig {
    std::vector<UserSpec> users;
    std::vector<double> snr_grid_db;
    double power_imbalance_db = 0.0;
    double sigma_p2 = 0.01;
    std::optional<double> baud_rate;  // alternative phase-noise parameterization: sigma_p2 = 100/baud
    int window_half_width = 16;
    int em_iterations = 15;
    int stages = 7;
    SicScheme scheme = SicScheme::partial;
    CsiMode csi_mode = CsiMode::em;
    EbarMode e_bar_mode = EbarMode::genie;
    bool alpha_clamp = true;
    bool early_exit = false;
    std::string e_bar_table_path;
    std::uint64_t trials = 100;
    std::uint64_t base_seed = 1;
    std::string output_path = "results.csv";
};

/// Carries every problem found in one parse, not just the first.
struct ConfigError : std::runtime_error {
    std::vector<std::string> problems;

    explicit ConfigError(std::vector<std::string> p)
        : std::runtime_error(join(p)), problems(std::move(p)) {}

    static std::string join(const std::vector<std::string>& p) {
        std::string out = "configuration invalid:";
        for (const auto& s : p) {
            out += "\n  - ";
            out += s;
        }
        return out;
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    const auto t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && std::isfinite(out);
}

inline bool parse_u64(const std::string& s, std::uint64_t& out) {
    const auto t = trim(s);
    if (t.empty() || t[0] == '-') return false;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    return res.ec == std::errc{} && res.ptr == t.data() + t.size();
}

inline bool parse_int(const std::string& s, int& out) {
    const auto t = trim(s);
    if (t.empty()) return false;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    return res.ec == std::errc{} && res.ptr == t.data() + t.size();
}

inline bool parse_bool(const std::string& s, bool& out) {
    const auto t = trim(s);
    if (t == "on" || t == "true" || t == "1") {
        out = true;
        return true;
    }
    if (t == "off" || t == "false" || t == "0") {
        out = false;
        return true;
    }
    return false;
}

inline bool parse_double_list(const std::string& s, std::vector<double>& out) {
    out.clear();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        if (!parse_double(item, v)) return false;
        out.push_back(v);
    }
    return !out.empty();
}

}  // namespace detail

inline const char* to_string(SicScheme s) {
    return s == SicScheme::full ? "full" : "partial";
}
inline const char* to_string(CsiMode m) {
    switch (m) {
        case CsiMode::perfect: return "perfect";
        case CsiMode::pilot_only: return "pilot_only";
        default: return "em";
    }
}
inline const char* to_string(EbarMode m) { return m == EbarMode::genie ? "genie" : "lookup"; }

/// Canonical key=value listing of a config, one line per field, user blocks
/// last. Parsing the echo reproduces the config.
inline std::string echo_config(const ExperimentConfig& cfg) {
    using detail::format_double;
    std::string out;
    out += "snr_grid_db = ";
    for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i) {
        if (i > 0) out += ", ";
        out += format_double(cfg.snr_grid_db[i]);
    }
    out += '\n';
    out += "power_imbalance_db = " + format_double(cfg.power_imbalance_db) + '\n';
    if (cfg.baud_rate)
        out += "baud_rate = " + format_double(*cfg.baud_rate) + '\n';
    else
        out += "sigma_p2 = " + format_double(cfg.sigma_p2) + '\n';
    out += "W = " + std::to_string(cfg.window_half_width) + '\n';
    out += "em_iterations = " + std::to_string(cfg.em_iterations) + '\n';
    out += "stages = " + std::to_string(cfg.stages) + '\n';
    out += std::string("scheme = ") + to_string(cfg.scheme) + '\n';
    out += std::string("csi_mode = ") + to_string(cfg.csi_mode) + '\n';
    out += std::string("e_bar_mode = ") + to_string(cfg.e_bar_mode) + '\n';
    out += std::string("alpha_clamp = ") + (cfg.alpha_clamp ? "on" : "off") + '\n';
    out += std::string("early_exit = ") + (cfg.early_exit ? "on" : "off") + '\n';
    if (!cfg.e_bar_table_path.empty()) out += "e_bar_table = " + cfg.e_bar_table_path + '\n';
    out += "trials = " + std::to_string(cfg.trials) + '\n';
    out += "base_seed = " + std::to_string(cfg.base_seed) + '\n';
    out += "output_path = " + cfg.output_path + '\n';
    for (const auto& u : cfg.users) {
        out += "[user]\n";
        out += "rate = " + format_double(u.rate) + '\n';
        out += "block_length = " + std::to_string(u.block_length) + '\n';
        out += "pilot_count = " + std::to_string(u.pilot_count) + '\n';
        out += "pilot_boost_db = " + format_double(u.pilot_boost_db) + '\n';
    }
    return out;
}

/// Key=value document with [user] sections. Collects every violation before
/// reporting: unknown keys, duplicates, malformed numbers, range errors.
inline ExperimentConfig parse_config(const std::string& text) {
    using namespace detail;
    ExperimentConfig cfg;
    std::vector<std::string> problems;
    bool in_user = false;
    bool saw_sigma = false;
    bool saw_baud = false;
    std::set<std::string> seen_global;
    std::set<std::string> seen_user;

    const std::set<std::string> user_keys = {"rate", "block_length", "pilot_count",
                                             "pilot_boost_db"};
    const std::set<std::string> global_keys = {
        "snr_grid_db", "power_imbalance_db", "sigma_p2",   "baud_rate",  "W",
        "em_iterations", "stages",           "scheme",     "csi_mode",   "e_bar_mode",
        "alpha_clamp",   "early_exit",       "e_bar_table", "trials",    "base_seed",
        "output_path"};

    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const auto line = trim(raw);
        if (line.empty()) continue;
        const auto at = [&] { return " (line " + std::to_string(lineno) + ")"; };

        if (line.front() == '[') {
            if (line == "[user]") {
                cfg.users.emplace_back();
                in_user = true;
                seen_user.clear();
            } else {
                problems.push_back("unknown section " + line + at());
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("expected key = value" + at());
            continue;
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        if (in_user) {
            if (!user_keys.count(key)) {
                problems.push_back(global_keys.count(key)
                                       ? "key '" + key + "' is not valid inside [user]" + at()
                                       : "unknown key '" + key + "'" + at());
                continue;
            }
            if (!seen_user.insert(key).second) {
                problems.push_back("duplicate key '" + key + "' in [user]" + at());
                continue;
            }
            auto& u = cfg.users.back();
            bool ok = true;
            std::uint64_t n = 0;
            if (key == "rate") {
                ok = parse_double(value, u.rate);
            } else if (key == "block_length") {
                ok = parse_u64(value, n);
                u.block_length = n;
            } else if (key == "pilot_count") {
                ok = parse_u64(value, n);
                u.pilot_count = n;
            } else {
                ok = parse_double(value, u.pilot_boost_db);
            }
            if (!ok) problems.push_back("malformed value for '" + key + "'" + at());
            continue;
        }

        if (user_keys.count(key)) {
            problems.push_back("key '" + key + "' belongs inside a [user] section" + at());
            continue;
        }
        if (!global_keys.count(key)) {
            problems.push_back("unknown key '" + key + "'" + at());
            continue;
        }
        if (!seen_global.insert(key).second) {
            problems.push_back("duplicate key '" + key + "'" + at());
            continue;
        }

        bool ok = true;
        if (key == "snr_grid_db") {
            ok = parse_double_list(value, cfg.snr_grid_db);
        } else if (key == "power_imbalance_db") {
            ok = parse_double(value, cfg.power_imbalance_db);
        } else if (key == "sigma_p2") {
            ok = parse_double(value, cfg.sigma_p2);
            saw_sigma = ok;
        } else if (key == "baud_rate") {
            double b = 0.0;
            ok = parse_double(value, b);
            if (ok) {
                cfg.baud_rate = b;
                saw_baud = true;
            }
        } else if (key == "W") {
            ok = parse_int(value, cfg.window_half_width);
        } else if (key == "em_iterations") {
            ok = parse_int(value, cfg.em_iterations);
        } else if (key == "stages") {
            ok = parse_int(value, cfg.stages);
        } else if (key == "scheme") {
            if (value == "full")
                cfg.scheme = SicScheme::full;
            else if (value == "partial")
                cfg.scheme = SicScheme::partial;
            else
                ok = false;
        } else if (key == "csi_mode") {
            if (value == "em")
                cfg.csi_mode = CsiMode::em;
            else if (value == "perfect")
                cfg.csi_mode = CsiMode::perfect;
            else if (value == "pilot_only")
                cfg.csi_mode = CsiMode::pilot_only;
            else
                ok = false;
        } else if (key == "e_bar_mode") {
            if (value == "genie")
                cfg.e_bar_mode = EbarMode::genie;
            else if (value == "lookup")
                cfg.e_bar_mode = EbarMode::lookup;
            else
                ok = false;
        } else if (key == "alpha_clamp") {
            ok = parse_bool(value, cfg.alpha_clamp);
        } else if (key == "early_exit") {
            ok = parse_bool(value, cfg.early_exit);
        } else if (key == "e_bar_table") {
            cfg.e_bar_table_path = value;
            ok = !value.empty();
        } else if (key == "trials") {
            ok = parse_u64(value, cfg.trials);
        } else if (key == "base_seed") {
            ok = parse_u64(value, cfg.base_seed);
        } else if (key == "output_path") {
            cfg.output_path = value;
            ok = !value.empty();
        }
        if (!ok) problems.push_back("malformed value for '" + key + "'" + at());
    }

    if (saw_sigma && saw_baud)
        problems.push_back("give either sigma_p2 or baud_rate, not both");
    if (saw_baud) {
        if (*cfg.baud_rate <= 0.0)
            problems.push_back("baud_rate must be > 0");
        else
            cfg.sigma_p2 = 100.0 / *cfg.baud_rate;
    }

    if (cfg.users.empty()) problems.push_back("at least one [user] section is required");
    for (std::size_t i = 0; i < cfg.users.size(); ++i) {
        const auto& u = cfg.users[i];
        const auto who = "[user] " + std::to_string(i);
        if (!(u.rate > 0.0 && u.rate < 1.0))
            problems.push_back(who + ": rate must lie in (0, 1)");
        if (u.block_length == 0) problems.push_back(who + ": block_length must be >= 1");
        if (u.rate > 0.0 && u.rate < 1.0 && u.block_length > 0) {
            const auto info = static_cast<std::size_t>(
                std::llround(u.rate * static_cast<double>(u.block_length)));
            try {
                exact_rate_pattern(info, u.block_length, 12);
            } catch (const std::exception& e) {
                problems.push_back(who + ": rate/block_length not encodable (" + e.what() + ")");
            }
        }
    }
    if (cfg.users.size() > 1) {
        const auto total0 = cfg.users[0].block_length + cfg.users[0].pilot_count;
        for (std::size_t i = 1; i < cfg.users.size(); ++i)
            if (cfg.users[i].block_length + cfg.users[i].pilot_count != total0)
                problems.push_back("[user] " + std::to_string(i) +
                                   ": frame length (block_length + pilot_count) must match user 0");
    }
    if (cfg.snr_grid_db.empty()) problems.push_back("snr_grid_db must list at least one value");
    if (cfg.trials == 0) problems.push_back("trials must be >= 1");
    if (cfg.stages < 1) problems.push_back("stages must be >= 1");
    if (cfg.em_iterations < 1) problems.push_back("em_iterations must be >= 1");
    if (cfg.window_half_width < 1) problems.push_back("W must be >= 1");
    if (!saw_baud && cfg.sigma_p2 < 0.0) problems.push_back("sigma_p2 must be >= 0");
    if (cfg.e_bar_mode == EbarMode::lookup && cfg.e_bar_table_path.empty())
        problems.push_back("e_bar_mode = lookup requires an e_bar_table path");

    if (!problems.empty()) throw ConfigError(std::move(problems));
    return cfg;
}

}  // namespace sicsim

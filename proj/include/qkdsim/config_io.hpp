#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qkdsim/config.hpp"
#include "qkdsim/errors.hpp"

namespace qkdsim {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw validation_error({"config: key '" + key + "' has non-numeric value '" + v + "'"});
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw validation_error({"config: key '" + key + "' has non-integer value '" + v + "'"});
    return out;
}

} // namespace detail

// Assigns one dotted-path key. Unknown keys are rejected so typos cannot
// silently fall back to defaults.
inline void set_config_field(experiment_config& cfg, const std::string& key,
                             const std::string& value) {
    using detail::parse_double;
    using detail::parse_u64;
    auto& tx = cfg.transmitter;
    if (key == "transmitter.rep_rate") tx.rep_rate = parse_double(key, value);
    else if (key == "transmitter.mu") tx.mu = parse_double(key, value);
    else if (key == "transmitter.nu") tx.nu = parse_double(key, value);
    else if (key == "transmitter.p_mu") tx.p_mu = parse_double(key, value);
    else if (key == "transmitter.p_z") tx.p_z = parse_double(key, value);
    else if (key == "transmitter.theta") tx.theta = parse_double(key, value);
    else if (key == "transmitter.mode") {
        if (value == "stationary") tx.mode = modulator_mode::stationary_point;
        else if (value == "quadrature") tx.mode = modulator_mode::quadrature;
        else throw validation_error({"config: transmitter.mode must be stationary or quadrature"});
    } else if (key == "transmitter.settle_fraction")
        tx.driver.settle_fraction = parse_double(key, value);
    else if (key == "transmitter.swing") tx.driver.swing = parse_double(key, value);
    else if (key == "transmitter.differential_leak")
        tx.driver.differential_leak = parse_double(key, value);
    else if (key == "channel.loss_db") cfg.channel.loss_db = parse_double(key, value);
    else if (key == "channel.background_rate")
        cfg.channel.background_rate = parse_double(key, value);
    else if (key == "receiver.split_z") cfg.receiver.split_z = parse_double(key, value);
    else if (key == "receiver.split_x") cfg.receiver.split_x = parse_double(key, value);
    else if (key == "receiver.det_efficiency")
        cfg.receiver.det_efficiency = parse_double(key, value);
    else if (key == "receiver.dark_rate") cfg.receiver.dark_rate = parse_double(key, value);
    else if (key == "receiver.receiver_loss_db")
        cfg.receiver.receiver_loss_db = parse_double(key, value);
    else if (key == "receiver.misalign_z") cfg.receiver.misalign_z = parse_double(key, value);
    else if (key == "receiver.misalign_x") cfg.receiver.misalign_x = parse_double(key, value);
    else if (key == "receiver.dead_time_s") cfg.receiver.dead_time_s = parse_double(key, value);
    else if (key == "security.eps_sec") cfg.security.eps_sec = parse_double(key, value);
    else if (key == "security.eps_cor") cfg.security.eps_cor = parse_double(key, value);
    else if (key == "security.f_ec") cfg.security.f_ec = parse_double(key, value);
    else if (key == "security.eps_sub") cfg.security.eps_sub = parse_double(key, value);
    else if (key == "security.lp_photon_cap")
        cfg.security.lp_photon_cap = static_cast<int>(parse_u64(key, value));
    else if (key == "run.seed") cfg.seed = parse_u64(key, value);
    else if (key == "run.duration_s") cfg.duration_s = parse_double(key, value);
    else if (key == "run.pulses") cfg.pulses = parse_u64(key, value);
    else if (key == "run.window_s") cfg.window_s = parse_double(key, value);
    else if (key == "run.block_bits") cfg.block_bits = parse_double(key, value);
    else throw validation_error({"config: unknown key '" + key + "'"});
}

// Text config: one `key = value` per line, '#' starts a comment, blank lines
// ignored. Later assignments win. The result is validated.
inline experiment_config parse_config_text(const std::string& text,
                                           experiment_config base = experiment_config{}) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> problems;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("config line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        try {
            set_config_field(base, key, value);
        } catch (const validation_error& e) {
            problems.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!problems.empty()) throw validation_error(problems);
    validate_or_throw(base);
    return base;
}

inline experiment_config load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw validation_error({"config: cannot open '" + path + "'"});
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

// Every field as dotted key -> string, suitable for round-tripping through
// set_config_field and for embedding in run manifests. Ordered container so
// serialization is deterministic.
inline std::map<std::string, std::string> config_to_map(const experiment_config& cfg) {
    using detail::format_double;
    std::map<std::string, std::string> m;
    const auto& tx = cfg.transmitter;
    m["transmitter.rep_rate"] = format_double(tx.rep_rate);
    m["transmitter.mu"] = format_double(tx.mu);
    m["transmitter.nu"] = format_double(tx.nu);
    m["transmitter.p_mu"] = format_double(tx.p_mu);
    m["transmitter.p_z"] = format_double(tx.p_z);
    m["transmitter.theta"] = format_double(tx.theta);
    m["transmitter.mode"] =
        tx.mode == modulator_mode::stationary_point ? "stationary" : "quadrature";
    m["transmitter.settle_fraction"] = format_double(tx.driver.settle_fraction);
    m["transmitter.swing"] = format_double(tx.driver.swing);
    m["transmitter.differential_leak"] = format_double(tx.driver.differential_leak);
    m["channel.loss_db"] = format_double(cfg.channel.loss_db);
    m["channel.background_rate"] = format_double(cfg.channel.background_rate);
    m["receiver.split_z"] = format_double(cfg.receiver.split_z);
    m["receiver.split_x"] = format_double(cfg.receiver.split_x);
    m["receiver.det_efficiency"] = format_double(cfg.receiver.det_efficiency);
    m["receiver.dark_rate"] = format_double(cfg.receiver.dark_rate);
    m["receiver.receiver_loss_db"] = format_double(cfg.receiver.receiver_loss_db);
    m["receiver.misalign_z"] = format_double(cfg.receiver.misalign_z);
    m["receiver.misalign_x"] = format_double(cfg.receiver.misalign_x);
    m["receiver.dead_time_s"] = format_double(cfg.receiver.dead_time_s);
    m["security.eps_sec"] = format_double(cfg.security.eps_sec);
    m["security.eps_cor"] = format_double(cfg.security.eps_cor);
    m["security.f_ec"] = format_double(cfg.security.f_ec);
    m["security.eps_sub"] = format_double(cfg.security.eps_sub);
    m["security.lp_photon_cap"] = std::to_string(cfg.security.lp_photon_cap);
    m["run.seed"] = std::to_string(cfg.seed);
    m["run.duration_s"] = format_double(cfg.duration_s);
    m["run.pulses"] = std::to_string(cfg.pulses);
    m["run.window_s"] = format_double(cfg.window_s);
    m["run.block_bits"] = format_double(cfg.block_bits);
    return m;
}

inline experiment_config config_from_map(const std::map<std::string, std::string>& m) {
    experiment_config cfg;
    for (const auto& [k, v] : m) set_config_field(cfg, k, v);
    validate_or_throw(cfg);
    return cfg;
}

inline std::string serialize_config(const experiment_config& cfg) {
    std::ostringstream out;
    for (const auto& [k, v] : config_to_map(cfg)) out << k << " = " << v << "\n";
    return out.str();
}

} // namespace qkdsim

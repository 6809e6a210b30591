#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "qkdsim/errors.hpp"
#include "qkdsim/link.hpp"
#include "qkdsim/security.hpp"
#include "qkdsim/transmitter.hpp"

namespace qkdsim {

// Full parameter set of one experiment run. Defaults reproduce the reference
// operating point: 50 MHz source, mu/nu = 0.6/0.2, 19.5 dB total attenuation
// including detection efficiency, 900 s key run segmented into 6.59e6-bit
// blocks.
struct experiment_config {
    transmitter_config transmitter{};
    channel_config channel{};
    receiver_config receiver{};
    security_params security{};
    std::uint64_t seed = 1;
    double duration_s = 900.0;          // aggregate-mode run length
    std::uint64_t pulses = 10'000'000;  // Monte Carlo run length
    double window_s = 1.0;              // time-series granularity
    double block_bits = 6.59e6;         // key-block size in sifted bits
};

// Collects every violated field constraint; empty means valid.
inline std::vector<std::string> validate(const experiment_config& c) {
    std::vector<std::string> bad;
    auto want = [&](bool ok, const std::string& msg) {
        if (!ok) bad.push_back(msg);
    };
    const auto& t = c.transmitter;
    want(t.rep_rate > 0, "transmitter.rep_rate: must be positive");
    want(t.mu > 0, "transmitter.mu: must be positive");
    want(t.nu > 0 && t.nu < t.mu, "transmitter.nu: must satisfy 0 < nu < mu");
    want(t.p_mu > 0 && t.p_mu < 1, "transmitter.p_mu: must lie in (0, 1)");
    want(t.p_z > 0 && t.p_z < 1, "transmitter.p_z: must lie in (0, 1)");
    want(std::isfinite(t.theta), "transmitter.theta: must be finite");
    want(std::abs(std::cos(t.theta - std::numbers::pi / 4)) > 1e-9,
         "transmitter.theta: analyzer at the extinction pole");
    want(t.driver.settle_fraction >= 0 && t.driver.settle_fraction < 1,
         "transmitter.driver.settle_fraction: must lie in [0, 1)");
    want(t.driver.swing == 0.0 ||
             (t.driver.swing > 0 && t.driver.swing <= std::numbers::pi + 1e-12),
         "transmitter.driver.swing: must lie in (0, pi] (0 selects the mode default)");
    want(t.driver.differential_leak >= 0 && t.driver.differential_leak <= 1,
         "transmitter.driver.differential_leak: must lie in [0, 1]");

    want(c.channel.loss_db >= 0, "channel.loss_db: must be non-negative");
    want(c.channel.background_rate >= 0, "channel.background_rate: must be non-negative");

    const auto& r = c.receiver;
    want(r.split_z >= 0 && r.split_z <= 1, "receiver.split_z: must lie in [0, 1]");
    want(r.split_x >= 0 && r.split_x <= 1, "receiver.split_x: must lie in [0, 1]");
    want(std::abs(r.split_z + r.split_x - 1.0) < 1e-9,
         "receiver.split_z/split_x: must sum to 1");
    want(r.det_efficiency > 0 && r.det_efficiency <= 1,
         "receiver.det_efficiency: must lie in (0, 1]");
    want(r.dark_rate >= 0, "receiver.dark_rate: must be non-negative");
    want(r.receiver_loss_db >= 0, "receiver.receiver_loss_db: must be non-negative");
    want(std::isfinite(r.misalign_z), "receiver.misalign_z: must be finite");
    want(std::isfinite(r.misalign_x), "receiver.misalign_x: must be finite");
    want(r.dead_time_s >= 0, "receiver.dead_time_s: must be non-negative");

    const auto& s = c.security;
    want(s.eps_sec > 0 && s.eps_sec < 1, "security.eps_sec: must lie in (0, 1)");
    want(s.eps_cor > 0 && s.eps_cor < 1, "security.eps_cor: must lie in (0, 1)");
    want(s.eps_sub == 0.0 || (s.eps_sub > 0 && s.eps_sub < 1),
         "security.eps_sub: must lie in (0, 1) (0 selects eps_sec/19)");
    want(s.f_ec >= 1, "security.f_ec: must be at least 1");
    want(s.lp_photon_cap >= 2 && s.lp_photon_cap <= 60,
         "security.lp_photon_cap: must lie in [2, 60]");

    want(c.duration_s > 0, "duration_s: must be positive");
    want(c.pulses >= 1, "pulses: must be at least 1");
    want(c.window_s > 0, "window_s: must be positive");
    want(c.block_bits >= 1, "block_bits: must be at least 1");
    return bad;
}

inline void validate_or_throw(const experiment_config& c) {
    auto bad = validate(c);
    if (!bad.empty()) throw validation_error(bad);
}

} // namespace qkdsim

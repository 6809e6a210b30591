#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qkdsim/errors.hpp"
#include "qkdsim/jones.hpp"
#include "qkdsim/rng.hpp"

namespace qkdsim {

enum class intensity_class : int { signal = 0, decoy = 1 };
enum class logical_state : int { zero = 0, one = 1, plus = 2 };

struct pulse_symbol {
    intensity_class intensity;
    logical_state state;
};

// zero and one span the key basis (circular states), plus is the single
// control state of the 3-state alphabet.
inline jones_vector encode_polarization(logical_state s) {
    switch (s) {
        case logical_state::zero: return circular_left();
        case logical_state::one: return circular_right();
        default: return diagonal();
    }
}

enum class modulator_mode : int { stationary_point = 0, quadrature = 1 };

// One-parameter settling model for the intensity-modulator driver. The
// applied drive of slot n is target_n + settle_fraction*(applied_{n-1} -
// target_n): the residual of a first-order exponential settling sampled one
// slot period after the step.
//
// swing is the full drive difference between the two intensity targets;
// 0 selects the mode default (pi between the response extrema for
// stationary-point operation, ratio-matched around the quadrature point
// otherwise).
//
// differential_leak models the common-mode rejection of the loop-based
// modulator at its stationary targets: both counter-propagating components
// see nearly the same drive error, so only this fraction of the residual
// survives as an output phase deviation. A conventional single-pass
// modulator (quadrature mode) has no such rejection and takes the full
// residual.
struct driver_model {
    double settle_fraction = 0.0;
    double swing = 0.0;
    double differential_leak = 0.05;
};

struct transmitter_config {
    double rep_rate = 5.0e7;   // pulses per second
    double mu = 0.6;           // signal mean photon number
    double nu = 0.2;           // decoy mean photon number
    double p_mu = 0.7;         // probability of the signal class
    double p_z = 0.65;         // probability of the key alphabet (zero/one)
    double theta = std::numbers::pi / 12;  // intensity-modulator analyzer angle
    driver_model driver{};
    modulator_mode mode = modulator_mode::stationary_point;
};

// I.i.d. symbol draw: intensity Bernoulli(p_mu), state zero/one each with
// probability p_z/2, plus with 1 - p_z.
inline std::vector<pulse_symbol> generate_sequence(std::uint64_t n, const transmitter_config& cfg,
                                                   rng_stream& rng) {
    std::vector<pulse_symbol> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        pulse_symbol s;
        s.intensity = rng.uniform01() < cfg.p_mu ? intensity_class::signal : intensity_class::decoy;
        double u = rng.uniform01();
        if (u < cfg.p_z / 2)
            s.state = logical_state::zero;
        else if (u < cfg.p_z)
            s.state = logical_state::one;
        else
            s.state = logical_state::plus;
        out.push_back(s);
    }
    return out;
}

// Fixed repeating intensity pattern (state draw unchanged); used by the
// patterning and sweep studies which exercise the intensity modulator with a
// known pseudorandom sequence.
inline std::vector<pulse_symbol> generate_pattern_sequence(const std::vector<intensity_class>& pattern,
                                                           std::uint64_t n,
                                                           const transmitter_config& cfg,
                                                           rng_stream& rng) {
    std::vector<pulse_symbol> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        pulse_symbol s;
        s.intensity = pattern[i % pattern.size()];
        double u = rng.uniform01();
        if (u < cfg.p_z / 2)
            s.state = logical_state::zero;
        else if (u < cfg.p_z)
            s.state = logical_state::one;
        else
            s.state = logical_state::plus;
        out.push_back(s);
    }
    return out;
}

// Random balanced-ish pattern of given length from its own seeded stream, the
// per-slot class probability matching p_mu.
inline std::vector<intensity_class> pseudorandom_pattern(std::size_t length, double p_mu,
                                                         rng_stream& rng) {
    std::vector<intensity_class> p(length);
    for (auto& c : p)
        c = rng.uniform01() < p_mu ? intensity_class::signal : intensity_class::decoy;
    return p;
}

// Drive targets per intensity class for the configured operating mode.
struct drive_targets {
    double signal;
    double decoy;
    double swing;
};

inline double auto_swing(const transmitter_config& cfg) {
    if (cfg.driver.swing > 0.0) return cfg.driver.swing;
    if (cfg.mode == modulator_mode::stationary_point) return std::numbers::pi;
    // Quadrature baseline: choose the swing whose two levels on the
    // full-contrast curve (1 + cos)/2 reproduce the analyzer's intensity
    // ratio, so both modes emit comparable pulse trains.
    double r = intensity_ratio(cfg.theta);
    return 2.0 * std::asin((1.0 - r) / (1.0 + r));
}

inline drive_targets targets_for(const transmitter_config& cfg) {
    double s = auto_swing(cfg);
    if (cfg.mode == modulator_mode::stationary_point)
        return {0.0, s, s};
    double q = std::numbers::pi / 2;
    return {q - s / 2, q + s / 2, s};
}

// Applied drive per slot under the settling recurrence. First slot starts
// exactly on target.
inline std::vector<double> driver_phase_trace(const std::vector<pulse_symbol>& symbols,
                                              const transmitter_config& cfg) {
    drive_targets t = targets_for(cfg);
    std::vector<double> applied(symbols.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        double target = symbols[i].intensity == intensity_class::signal ? t.signal : t.decoy;
        double a = (i == 0) ? target : target + cfg.driver.settle_fraction * (prev - target);
        applied[i] = a;
        prev = a;
    }
    return applied;
}

// Output phase deviation actually seen by the light for a given applied
// drive: stationary-point operation rejects common-mode drive error down to
// the differential leak; the quadrature baseline takes the residual in full.
inline double optical_phase(double applied, double target, const transmitter_config& cfg) {
    if (cfg.mode == modulator_mode::stationary_point)
        return target + cfg.driver.differential_leak * (applied - target);
    return applied;
}

// Normalized transmission at the intensity-modulator output for the operating
// mode: analyzer projection for stationary-point operation, full-contrast
// interferometric curve for the quadrature baseline.
inline double mode_response(double dphi, const transmitter_config& cfg) {
    if (cfg.mode == modulator_mode::stationary_point)
        return optical_response(dphi, cfg.theta);
    return 0.5 * (1.0 + std::cos(dphi));
}

// Mean photon number per slot: the attenuator is calibrated once so that an
// ideally settled signal slot carries exactly mu.
inline std::vector<double> pulse_mean_photons(const std::vector<pulse_symbol>& symbols,
                                              const transmitter_config& cfg) {
    drive_targets t = targets_for(cfg);
    double ideal_signal = mode_response(t.signal, cfg);
    if (ideal_signal <= 0.0)
        throw pole_error("pulse_mean_photons: signal response vanishes at this analyzer angle");
    double scale = cfg.mu / ideal_signal;

    std::vector<double> applied = driver_phase_trace(symbols, cfg);
    std::vector<double> mean(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        double target = symbols[i].intensity == intensity_class::signal ? t.signal : t.decoy;
        mean[i] = scale * mode_response(optical_phase(applied[i], target, cfg), cfg);
    }
    return mean;
}

} // namespace qkdsim

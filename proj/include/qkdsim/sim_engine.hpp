#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "qkdsim/config.hpp"
#include "qkdsim/count_table.hpp"
#include "qkdsim/link.hpp"
#include "qkdsim/rng.hpp"
#include "qkdsim/transmitter.hpp"

namespace qkdsim {

struct detection_record {
    std::uint64_t slot;
    pulse_symbol symbol;
    int photons;                        // true emitted photon number
    double mean_photons;                // realized per-slot mean
    std::optional<detector_id> outcome; // squashed
};

// Sifted detections (clicks, pre-squash) broken down by the true photon
// number of their slot; the ground truth the decoy bounds are tested against.
struct ground_truth_tallies {
    double s0_z = 0, s1_z = 0;
    double s0_x = 0, s1_x = 0;
};

// Slot partition by squashed outcome.
struct slot_partition {
    std::uint64_t sifted_z = 0;
    std::uint64_t sifted_x = 0;
    std::uint64_t cross_basis = 0;
    std::uint64_t no_detection = 0;
};

struct mc_result {
    count_table table;
    ground_truth_tallies truth;
    slot_partition partition;
    std::uint64_t squash_events = 0; // slots with more than one click
    std::vector<detection_record> records;
};

namespace detail {

// Cumulative Poisson table for fast inversion sampling at a fixed mean.
struct poisson_table {
    std::array<double, 41> cum{};
    void build(double mean) {
        double p = std::exp(-mean);
        double acc = p;
        cum[0] = acc;
        for (int n = 1; n <= 40; ++n) {
            p *= mean / n;
            acc += p;
            cum[n] = acc;
        }
    }
    int sample(rng_stream& rng) const {
        double u = rng.uniform01();
        for (int n = 0; n <= 40; ++n)
            if (u < cum[n]) return n;
        return 40;
    }
};

// Exact sampler for the joint dark-click pattern of the four detectors:
// one uniform decides "any dark at all" via the precomputed subset table,
// keeping the per-slot cost low at realistic dark probabilities.
struct dark_sampler {
    double p_any = 0.0;
    std::array<double, 15> cum{}; // nonempty subsets, conditional cumulative
    std::array<std::uint8_t, 15> subset{};

    void build(double p_dark) {
        double q = 1.0 - p_dark;
        p_any = 1.0 - q * q * q * q;
        if (p_any <= 0.0) return;
        double acc = 0.0;
        int idx = 0;
        for (int mask = 1; mask < 16; ++mask) {
            double pr = 1.0;
            for (int d = 0; d < 4; ++d) pr *= (mask >> d & 1) ? p_dark : q;
            acc += pr / p_any;
            cum[idx] = acc;
            subset[idx] = static_cast<std::uint8_t>(mask);
            ++idx;
        }
        cum[14] = 1.0;
    }

    std::uint8_t sample(rng_stream& rng) const {
        if (p_any <= 0.0) return 0;
        double u = rng.uniform01();
        if (u >= p_any) return 0;
        double v = u / p_any;
        for (int i = 0; i < 15; ++i)
            if (v < cum[i]) return subset[i];
        return subset[14];
    }
};

} // namespace detail

// Per-pulse Monte Carlo: sequential transmitter physics (driver settling
// preserved), per-photon routing through the receiver, exact dark-click
// statistics, squashing, and ground-truth photon tallies.
inline mc_result run_montecarlo(const experiment_config& cfg, std::uint64_t n_pulses,
                                std::uint64_t seed, bool keep_records = false) {
    validate_or_throw(cfg);
    const auto& tx = cfg.transmitter;
    rng_stream rng(seed);

    mc_result out;
    out.table.rep_rate = tx.rep_rate;
    out.table.duration = static_cast<double>(n_pulses) / tx.rep_rate;
    if (keep_records) out.records.reserve(n_pulses);

    drive_targets targets = targets_for(tx);
    double ideal_signal = mode_response(targets.signal, tx);
    if (ideal_signal <= 0.0)
        throw pole_error("run_montecarlo: signal response vanishes at this analyzer angle");
    double voa_scale = tx.mu / ideal_signal;

    // Per-photon routing cumulative probabilities for the three states.
    double eta = total_transmittance(cfg.channel, cfg.receiver);
    std::array<std::array<double, detector_count>, 3> route_cum{};
    for (int a = 0; a < 3; ++a) {
        auto route = route_probabilities(encode_polarization(static_cast<logical_state>(a)),
                                         cfg.receiver);
        double acc = 0.0;
        for (int d = 0; d < detector_count; ++d) {
            acc += eta * route[d];
            route_cum[a][d] = acc;
        }
    }

    double p_dark = dark_probability_per_slot(cfg.channel, cfg.receiver, tx.rep_rate);
    detail::dark_sampler darks;
    darks.build(p_dark);

    bool ideal_driver = tx.driver.settle_fraction == 0.0;
    detail::poisson_table pois_signal, pois_decoy;
    if (ideal_driver) {
        double decoy_mean = voa_scale * mode_response(targets.decoy, tx);
        pois_signal.build(tx.mu);
        pois_decoy.build(decoy_mean);
    }

    std::uint64_t dead_slots =
        cfg.receiver.dead_time_s > 0.0
            ? static_cast<std::uint64_t>(std::ceil(cfg.receiver.dead_time_s * tx.rep_rate))
            : 0;
    std::array<std::uint64_t, detector_count> dead_until{};

    double prev_applied = 0.0;
    for (std::uint64_t slot = 0; slot < n_pulses; ++slot) {
        pulse_symbol sym;
        sym.intensity =
            rng.uniform01() < tx.p_mu ? intensity_class::signal : intensity_class::decoy;
        double u = rng.uniform01();
        sym.state = u < tx.p_z / 2 ? logical_state::zero
                    : u < tx.p_z   ? logical_state::one
                                   : logical_state::plus;
        out.table.sent_at(sym.intensity, sym.state) += 1;

        double target =
            sym.intensity == intensity_class::signal ? targets.signal : targets.decoy;
        double applied = slot == 0 ? target
                                   : target + tx.driver.settle_fraction * (prev_applied - target);
        prev_applied = applied;

        int photons;
        double mean;
        if (ideal_driver) {
            mean = sym.intensity == intensity_class::signal
                       ? tx.mu
                       : voa_scale * mode_response(targets.decoy, tx);
            photons = (sym.intensity == intensity_class::signal ? pois_signal : pois_decoy)
                          .sample(rng);
        } else {
            mean = voa_scale * mode_response(optical_phase(applied, target, tx), tx);
            photons = static_cast<int>(rng.poisson(mean));
        }

        click_set clicks{};
        const auto& cum = route_cum[static_cast<int>(sym.state)];
        for (int ph = 0; ph < photons; ++ph) {
            double v = rng.uniform01();
            for (int d = 0; d < detector_count; ++d) {
                if (v < cum[d]) {
                    clicks[d] = true;
                    break;
                }
            }
        }
        if (std::uint8_t mask = darks.sample(rng)) {
            for (int d = 0; d < detector_count; ++d)
                if (mask >> d & 1) clicks[d] = true;
        }
        if (dead_slots > 0) {
            for (int d = 0; d < detector_count; ++d) {
                if (!clicks[d]) continue;
                if (slot < dead_until[d])
                    clicks[d] = false;
                else
                    dead_until[d] = slot + 1 + dead_slots;
            }
        }

        bool sender_z = sym.state != logical_state::plus;
        int n_clicks = 0;
        for (int d = 0; d < detector_count; ++d) {
            if (!clicks[d]) continue;
            ++n_clicks;
            out.table.at(sym.intensity, sym.state, static_cast<detector_id>(d)) += 1;
            bool det_z = d < 2;
            if (sender_z && det_z) {
                if (photons == 0) out.truth.s0_z += 1;
                if (photons == 1) out.truth.s1_z += 1;
            } else if (!sender_z && !det_z) {
                if (photons == 0) out.truth.s0_x += 1;
                if (photons == 1) out.truth.s1_x += 1;
            }
        }
        if (n_clicks > 1) out.squash_events += 1;

        std::optional<detector_id> outcome = squash_clicks(clicks, rng);
        if (!outcome) {
            out.partition.no_detection += 1;
        } else if (sender_z == is_z_detector(*outcome)) {
            (sender_z ? out.partition.sifted_z : out.partition.sifted_x) += 1;
        } else {
            out.partition.cross_basis += 1;
        }

        if (keep_records) out.records.push_back({slot, sym, photons, mean, outcome});
    }
    return out;
}

// Single-monitor-detector Monte Carlo over a repeating intensity pattern: the
// stream the patterning statistics and intensity-ratio sweep analyze. The
// full pulse (through the intensity modulator's analyzer) lands on one
// detector; no polarization receiver is involved.
struct monitor_result {
    std::vector<std::uint8_t> clicks;          // 0/1 per slot
    std::vector<std::uint8_t> pattern_class;   // intensity class per slot
    std::uint64_t total_clicks = 0;
    double dark_probability = 0.0;
};

inline monitor_result run_intensity_monitor(const experiment_config& cfg,
                                            const std::vector<intensity_class>& pattern,
                                            std::uint64_t n_slots, std::uint64_t seed) {
    validate_or_throw(cfg);
    if (pattern.empty()) throw validation_error({"run_intensity_monitor: empty pattern"});
    const auto& tx = cfg.transmitter;
    rng_stream rng(seed);

    drive_targets targets = targets_for(tx);
    double ideal_signal = mode_response(targets.signal, tx);
    if (ideal_signal <= 0.0)
        throw pole_error("run_intensity_monitor: signal response vanishes at this analyzer angle");
    double voa_scale = tx.mu / ideal_signal;

    double eta = total_transmittance(cfg.channel, cfg.receiver);
    double p_dark = dark_probability_per_slot(cfg.channel, cfg.receiver, tx.rep_rate);

    monitor_result out;
    out.clicks.resize(n_slots);
    out.pattern_class.resize(n_slots);
    out.dark_probability = p_dark;

    double prev_applied = 0.0;
    for (std::uint64_t i = 0; i < n_slots; ++i) {
        intensity_class k = pattern[i % pattern.size()];
        double target = k == intensity_class::signal ? targets.signal : targets.decoy;
        double applied =
            i == 0 ? target : target + tx.driver.settle_fraction * (prev_applied - target);
        prev_applied = applied;
        double mean = voa_scale * mode_response(optical_phase(applied, target, tx), tx);
        double p_sig = -std::expm1(-mean * eta);
        double p = 1.0 - (1.0 - p_sig) * (1.0 - p_dark);
        bool click = rng.bernoulli(p);
        out.clicks[i] = click;
        out.pattern_class[i] = static_cast<std::uint8_t>(k);
        out.total_clicks += click;
    }
    return out;
}

// Expected detections per (class, state, detector) cell for an ideally
// settled source; the aggregate engine's mean structure and the analytic
// oracle for engine-equivalence tests.
struct expected_cells {
    std::array<std::array<double, 3>, 2> sent{};                                  // [k][a]
    std::array<std::array<std::array<double, detector_count>, 3>, 2> detections{}; // [k][a][d]
};

inline expected_cells expected_cell_means(const experiment_config& cfg, double total_pulses) {
    const auto& tx = cfg.transmitter;
    expected_cells e;
    const double p_state[3] = {tx.p_z / 2, tx.p_z / 2, 1 - tx.p_z};
    const double p_class[2] = {tx.p_mu, 1 - tx.p_mu};
    const double intensity[2] = {tx.mu, tx.nu};
    for (int k = 0; k < 2; ++k) {
        for (int a = 0; a < 3; ++a) {
            double ns = total_pulses * p_class[k] * p_state[a];
            e.sent[k][a] = ns;
            auto p = click_probabilities(encode_polarization(static_cast<logical_state>(a)),
                                         intensity[k], cfg.channel, cfg.receiver, tx.rep_rate);
            for (int d = 0; d < detector_count; ++d) e.detections[k][a][d] = ns * p[d];
        }
    }
    return e;
}

namespace detail {

// Largest-remainder rounding of non-negative reals to integers preserving the
// (rounded) grand total.
inline std::array<std::array<std::uint64_t, 3>, 2> round_preserving_total(
    const std::array<std::array<double, 3>, 2>& vals, std::uint64_t total) {
    std::array<std::array<std::uint64_t, 3>, 2> out{};
    struct cell {
        int k, a;
        double frac;
    };
    std::vector<cell> cells;
    std::uint64_t assigned = 0;
    for (int k = 0; k < 2; ++k)
        for (int a = 0; a < 3; ++a) {
            double f = std::floor(vals[k][a]);
            out[k][a] = static_cast<std::uint64_t>(f);
            assigned += out[k][a];
            cells.push_back({k, a, vals[k][a] - f});
        }
    std::sort(cells.begin(), cells.end(), [](const cell& x, const cell& y) {
        if (x.frac != y.frac) return x.frac > y.frac;
        return x.k * 3 + x.a < y.k * 3 + y.a;
    });
    for (std::size_t i = 0; assigned < total && i < cells.size(); ++i, ++assigned)
        out[cells[i].k][cells[i].a] += 1;
    return out;
}

// Sent counts by largest-remainder rounding, detections by one Poisson draw
// per cell.
inline count_table draw_aggregate_table(const experiment_config& cfg, double duration,
                                        rng_stream& rng) {
    const auto& tx = cfg.transmitter;
    std::uint64_t total = static_cast<std::uint64_t>(std::llround(duration * tx.rep_rate));
    expected_cells e = expected_cell_means(cfg, static_cast<double>(total));
    count_table t;
    t.duration = duration;
    t.rep_rate = tx.rep_rate;
    auto sent = round_preserving_total(e.sent, total);
    for (int k = 0; k < 2; ++k)
        for (int a = 0; a < 3; ++a) {
            t.sent[k][a] = sent[k][a];
            double scale = e.sent[k][a] > 0.0 ? sent[k][a] / e.sent[k][a] : 0.0;
            for (int d = 0; d < detector_count; ++d)
                t.n[k][a][d] = rng.poisson(e.detections[k][a][d] * scale);
        }
    return t;
}

} // namespace detail

// Aggregate mode: expected counts per cell with one Poisson draw each;
// runtime independent of duration times rate. Driver settling plays no role
// (there is no slot sequence).
inline count_table run_aggregate(const experiment_config& cfg, double duration,
                                 std::uint64_t seed) {
    validate_or_throw(cfg);
    if (duration <= 0.0) throw validation_error({"run_aggregate: duration must be positive"});
    rng_stream rng(seed);
    return detail::draw_aggregate_table(cfg, duration, rng);
}

// Aggregate run cut into consecutive windows drawn from one stream; the time
// series and key-block segmentation consume these.
struct window_counts {
    double t0, t1;
    count_table table;
};

inline std::vector<window_counts> run_aggregate_windows(const experiment_config& cfg,
                                                        double duration, double window_s,
                                                        std::uint64_t seed) {
    validate_or_throw(cfg);
    if (window_s <= 0.0) throw validation_error({"run_aggregate_windows: window must be positive"});
    if (duration <= 0.0) throw validation_error({"run_aggregate_windows: duration must be positive"});
    rng_stream rng(seed);
    std::vector<window_counts> out;
    double t0 = 0.0;
    while (t0 < duration - 1e-12) {
        double w = std::min(window_s, duration - t0);
        out.push_back({t0, t0 + w, detail::draw_aggregate_table(cfg, w, rng)});
        t0 += w;
    }
    return out;
}

} // namespace qkdsim

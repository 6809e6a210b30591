#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "qkdsim/errors.hpp"
#include "qkdsim/security.hpp"
#include "qkdsim/sim_engine.hpp"

namespace qkdsim {

// Statistics of one ordered intensity transition (previous class -> current
// class) over a detected click stream.
struct transition_stats {
    std::uint64_t slots = 0;
    double mean = 0;     // mean clicks per slot in the group
    double std_err = 0;  // standard error of that mean
    double c = 0;        // group mean normalized to the signal-class mean
    double sigma_c = 0;
    double d = 0;        // relative deviation from the current class mean
    double sigma_d = 0;  // accounts for the group being part of the class mean
};

struct patterning_report {
    // indexed [previous][current], 0 = signal, 1 = decoy
    transition_stats transition[2][2];
    double class_mean[2] = {0, 0}; // per-slot clicks by current class
    std::uint64_t class_slots[2] = {0, 0};
    std::uint64_t considered = 0; // slots with a predecessor
};

// Per-transition normalized intensities and deviations over a monitor click
// stream. All statistics use slots 1..N-1 (those with a predecessor) so the
// four groups partition the data exactly.
inline patterning_report patterning_stats(const std::vector<std::uint8_t>& clicks,
                                          const std::vector<std::uint8_t>& klass) {
    if (clicks.size() != klass.size())
        throw validation_error({"patterning_stats: click and class streams differ in length"});
    if (clicks.size() < 2)
        throw validation_error({"patterning_stats: need at least two slots"});

    std::uint64_t n[2][2] = {};
    double sum[2][2] = {};
    std::uint64_t csum[2] = {};
    std::uint64_t cn[2] = {};
    const std::size_t N = clicks.size();
    for (std::size_t i = 1; i < N; ++i) {
        int prev = klass[i - 1], cur = klass[i];
        n[prev][cur] += 1;
        sum[prev][cur] += clicks[i];
        cn[cur] += 1;
        csum[cur] += clicks[i];
    }
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            if (n[p][q] == 0)
                throw missing_transition_error(
                    "patterning_stats: an intensity transition never occurs in the stream");

    patterning_report rep;
    rep.considered = N - 1;
    for (int q = 0; q < 2; ++q) {
        rep.class_slots[q] = cn[q];
        rep.class_mean[q] = static_cast<double>(csum[q]) / cn[q];
    }
    double mu_mean = rep.class_mean[0];
    if (mu_mean <= 0.0)
        throw validation_error({"patterning_stats: no detections in signal-class slots"});

    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
            transition_stats& ts = rep.transition[p][q];
            ts.slots = n[p][q];
            ts.mean = sum[p][q] / n[p][q];
            // clicks are 0/1: group variance is m(1-m)
            double var = ts.mean * (1.0 - ts.mean);
            ts.std_err = std::sqrt(var / n[p][q]);
            ts.c = ts.mean / mu_mean;
            ts.sigma_c = ts.std_err / mu_mean;

            // d compares the group mean to its class mean, which contains the
            // group: d = (1 - w)(m_g - m_o)/m_class with w the group's share.
            int other = 1 - p;
            double m_o = sum[other][q] / n[other][q];
            double se_o2 = m_o * (1.0 - m_o) / n[other][q];
            double w = static_cast<double>(n[p][q]) / cn[q];
            double m_class = rep.class_mean[q];
            ts.d = (ts.mean - m_class) / m_class;
            ts.sigma_d = (1.0 - w) * std::sqrt(ts.std_err * ts.std_err + se_o2) / m_class;
        }
    }
    return rep;
}

inline patterning_report patterning_stats(const monitor_result& m) {
    return patterning_stats(m.clicks, m.pattern_class);
}

struct sweep_point {
    double theta;
    double predicted;       // tan^2(theta - pi/4)
    double measured;        // background-subtracted intensity ratio
    double sigma;           // propagated statistical uncertainty
    std::uint64_t clicks_signal = 0;
    std::uint64_t clicks_decoy = 0;
};

struct sweep_result {
    std::vector<sweep_point> points;
    std::uint64_t pulses_per_angle = 0;
};

// Measured decoy/signal intensity ratio per analyzer angle. The per-class
// click fractions are dark-subtracted and inverted through the Poissonian
// click law, making the estimator unbiased in the mean photon numbers.
inline sweep_result malus_sweep(const std::vector<double>& angles,
                                std::uint64_t pulses_per_angle, const experiment_config& cfg,
                                std::uint64_t seed) {
    for (std::size_t i = 1; i < angles.size(); ++i)
        if (!(angles[i] > angles[i - 1]))
            throw validation_error({"malus_sweep: angles must be strictly increasing"});

    sweep_result out;
    out.pulses_per_angle = pulses_per_angle;
    for (std::size_t j = 0; j < angles.size(); ++j) {
        experiment_config c = cfg;
        c.transmitter.theta = angles[j];
        double predicted = intensity_ratio(angles[j]); // throws at the pole

        rng_stream pat_rng = rng_stream::derive(seed, 1000 + j);
        auto pattern = pseudorandom_pattern(1024, c.transmitter.p_mu, pat_rng);
        monitor_result m = run_intensity_monitor(
            c, pattern, pulses_per_angle,
            rng_stream::derive(seed, j).next_u64());

        std::uint64_t nk[2] = {}, ck[2] = {};
        for (std::size_t i = 0; i < m.clicks.size(); ++i) {
            nk[m.pattern_class[i]] += 1;
            ck[m.pattern_class[i]] += m.clicks[i];
        }
        sweep_point p;
        p.theta = angles[j];
        p.predicted = predicted;
        p.clicks_signal = ck[0];
        p.clicks_decoy = ck[1];

        double pd = m.dark_probability;
        double frac[2], ps[2], var_ps[2];
        for (int k = 0; k < 2; ++k) {
            frac[k] = static_cast<double>(ck[k]) / nk[k];
            ps[k] = std::max(0.0, (frac[k] - pd) / (1.0 - pd));
            var_ps[k] = frac[k] * (1.0 - frac[k]) / nk[k] / ((1.0 - pd) * (1.0 - pd));
        }
        double L_mu = -std::log1p(-ps[0]);
        double L_nu = -std::log1p(-ps[1]);
        if (L_mu <= 0.0)
            throw insufficient_data_error("malus_sweep: no signal-class detections above darks");
        p.measured = L_nu / L_mu;
        double d_nu = 1.0 / ((1.0 - ps[1]) * L_mu);
        double d_mu = L_nu / ((1.0 - ps[0]) * L_mu * L_mu);
        p.sigma = std::sqrt(d_nu * d_nu * var_ps[1] + d_mu * d_mu * var_ps[0]);
        out.points.push_back(p);
    }
    return out;
}

struct histogram_position {
    std::uint64_t position; // slot index within the displayed window
    int klass;              // 0 signal, 1 decoy
    double mean;            // mean clicks per slot at this pattern position
    double std_err;
};

struct histogram_result {
    std::vector<histogram_position> positions;
    double class_level[2] = {0, 0}; // mean of position means per class
    double class_band[2] = {0, 0};  // 2 sigma spread of position means per class
    std::uint64_t repetitions = 0;
};

// Per-position detection statistics across repetitions of the intensity
// pattern, for a leading window of positions.
inline histogram_result slot_histogram(const monitor_result& m, std::size_t period,
                                       std::size_t window) {
    if (period == 0 || m.clicks.size() < period)
        throw validation_error({"slot_histogram: need at least one full pattern period"});
    if (window > period) throw validation_error({"slot_histogram: window exceeds the period"});
    std::uint64_t reps = m.clicks.size() / period;

    histogram_result out;
    out.repetitions = reps;
    double class_sum[2] = {0, 0}, class_sq[2] = {0, 0};
    std::uint64_t class_n[2] = {0, 0};
    for (std::size_t p = 0; p < window; ++p) {
        std::uint64_t s = 0;
        for (std::uint64_t r = 0; r < reps; ++r) s += m.clicks[r * period + p];
        double mean = static_cast<double>(s) / reps;
        double se = std::sqrt(mean * (1.0 - mean) / reps);
        int k = m.pattern_class[p];
        out.positions.push_back({p, k, mean, se});
        class_sum[k] += mean;
        class_sq[k] += mean * mean;
        class_n[k] += 1;
    }
    for (int k = 0; k < 2; ++k) {
        if (class_n[k] == 0) continue;
        double mean = class_sum[k] / class_n[k];
        double var = class_sq[k] / class_n[k] - mean * mean;
        out.class_level[k] = mean;
        out.class_band[k] = 2.0 * std::sqrt(std::max(0.0, var));
    }
    return out;
}

// One finite-key block assembled from consecutive windows.
struct key_block {
    double t0 = 0, t1 = 0;
    count_table table;
    finite_key_report report;
};

// Groups consecutive windows into blocks of at least block_bits sifted
// key-basis detections; the trailing partial block is discarded. Each block's
// rate normalization uses the full run duration.
inline std::vector<key_block> segment_blocks(const std::vector<window_counts>& windows,
                                             double block_bits, const transmitter_config& tx,
                                             const security_params& sp, double run_duration) {
    std::vector<key_block> out;
    count_table acc;
    double t0 = windows.empty() ? 0.0 : windows.front().t0;
    bool open = false;
    for (const auto& w : windows) {
        if (!open) {
            t0 = w.t0;
            open = true;
        }
        acc += w.table;
        if (static_cast<double>(acc.sifted_z_total()) >= block_bits) {
            key_block b;
            b.t0 = t0;
            b.t1 = w.t1;
            b.table = acc;
            b.report = finite_key_from_table(acc, tx, sp, run_duration);
            out.push_back(std::move(b));
            acc = count_table{};
            open = false;
        }
    }
    return out;
}

} // namespace qkdsim

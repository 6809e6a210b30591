#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "qkdsim/errors.hpp"
#include "qkdsim/security.hpp"
#include "qkdsim/sim_engine.hpp"

namespace qkdsim {

// Per-basis statistics of an ideal (expectation-valued) run; the optimizer
// objective is evaluated on these rather than on sampled tables.
inline std::pair<basis_counts, basis_counts> expected_basis_counts(const experiment_config& cfg,
                                                                   double total_pulses) {
    expected_cells e = expected_cell_means(cfg, total_pulses);
    basis_counts z, x;
    for (int k = 0; k < 2; ++k) {
        double n_z = e.detections[k][0][0] + e.detections[k][0][1] + e.detections[k][1][0] +
                     e.detections[k][1][1];
        double m_z = e.detections[k][0][1] + e.detections[k][1][0];
        double n_x = e.detections[k][2][2] + e.detections[k][2][3];
        double m_x = e.detections[k][2][3];
        double sent_z = e.sent[k][0] + e.sent[k][1];
        double sent_x = e.sent[k][2];
        if (k == 0) {
            z.n_mu = n_z; z.m_mu = m_z; z.sent_mu = sent_z;
            x.n_mu = n_x; x.m_mu = m_x; x.sent_mu = sent_x;
        } else {
            z.n_nu = n_z; z.m_nu = m_z; z.sent_nu = sent_z;
            x.n_nu = n_x; x.m_nu = m_x; x.sent_nu = sent_x;
        }
    }
    return {z, x};
}

// Finite-key rate of the whole run evaluated on expected counts; returns a
// zero-rate report when the bounds are not evaluable at this design point.
inline finite_key_report expected_key_report(const experiment_config& cfg) {
    double total = cfg.duration_s * cfg.transmitter.rep_rate;
    auto [z, x] = expected_basis_counts(cfg, total);
    try {
        return finite_key_analysis(z, x, cfg.transmitter.mu, cfg.transmitter.nu, cfg.security,
                                    cfg.duration_s);
    } catch (const insufficient_data_error&) {
    } catch (const empty_basis_error&) {
    }
    finite_key_report r;
    r.t = cfg.duration_s;
    return r;
}

struct optimize_grid {
    std::vector<double> mu;
    std::vector<double> ratio; // decoy/signal intensity ratio
    std::vector<double> p_mu;
    std::vector<double> p_z;

    static optimize_grid defaults() {
        optimize_grid g;
        for (int i = 6; i <= 18; ++i) g.mu.push_back(i * 0.05);
        for (int i = 5; i <= 25; ++i) g.ratio.push_back(i * 0.02);
        for (int i = 5; i <= 9; ++i) g.p_mu.push_back(i * 0.1);
        for (int i = 5; i <= 9; ++i) g.p_z.push_back(i * 0.1);
        return g;
    }
};

struct optimize_point {
    double loss_db = 0; // total attenuation, source to detection
    double mu = 0;
    double nu = 0;
    double ratio = 0;
    double p_mu = 0;
    double p_z = 0;
    double skr = 0;
    double skr_asymptotic = 0;
};

struct optimize_result {
    std::vector<optimize_point> surface; // every evaluated grid point
    std::vector<optimize_point> best;    // one per loss, in input order
};

// Maps a total end-to-end attenuation onto the channel-loss knob, keeping the
// configured receiver insertion loss and detector efficiency as fixed parts
// of the budget.
inline double channel_loss_for_total(double total_db, const receiver_config& rx) {
    return total_db - rx.receiver_loss_db + 10.0 * std::log10(rx.det_efficiency);
}

// Exhaustive deterministic grid search maximizing the finite-key rate on
// expected counts at each total loss. Ties keep the earliest grid point
// (iteration order: mu, ratio, p_mu, p_z).
inline optimize_result optimize_decoy(const experiment_config& base,
                                      const std::vector<double>& total_losses_db,
                                      const optimize_grid& grid = optimize_grid::defaults()) {
    if (total_losses_db.empty())
        throw validation_error({"optimize_decoy: loss grid must be non-empty"});
    if (grid.mu.empty() || grid.ratio.empty() || grid.p_mu.empty() || grid.p_z.empty())
        throw validation_error({"optimize_decoy: parameter grid must be non-empty"});

    optimize_result out;
    for (double loss : total_losses_db) {
        experiment_config cfg = base;
        cfg.channel.loss_db = channel_loss_for_total(loss, base.receiver);
        optimize_point best;
        best.loss_db = loss;
        best.skr = -1.0;
        for (double mu : grid.mu)
            for (double ratio : grid.ratio)
                for (double pm : grid.p_mu)
                    for (double pz : grid.p_z) {
                        cfg.transmitter.mu = mu;
                        cfg.transmitter.nu = ratio * mu;
                        cfg.transmitter.p_mu = pm;
                        cfg.transmitter.p_z = pz;
                        validate_or_throw(cfg);
                        finite_key_report rep = expected_key_report(cfg);
                        optimize_point pt{loss, mu,  cfg.transmitter.nu, ratio,
                                          pm,   pz,  rep.skr,            rep.skr_asymptotic};
                        out.surface.push_back(pt);
                        if (pt.skr > best.skr) best = pt;
                    }
        out.best.push_back(best);
    }
    return out;
}

// Best rate over the grid restricted to one intensity ratio, for flatness
// comparisons against the unrestricted optimum.
inline optimize_point best_at_ratio(const optimize_result& r, double loss_db, double ratio,
                                    double tol = 1e-9) {
    optimize_point best;
    best.skr = -1.0;
    for (const auto& p : r.surface)
        if (std::abs(p.loss_db - loss_db) < tol && std::abs(p.ratio - ratio) < tol &&
            p.skr > best.skr)
            best = p;
    if (best.skr < 0.0)
        throw validation_error({"best_at_ratio: no grid point matches the requested slice"});
    return best;
}

} // namespace qkdsim

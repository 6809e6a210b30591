#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qkdsim/count_table.hpp"
#include "qkdsim/errors.hpp"
#include "qkdsim/transmitter.hpp"

namespace qkdsim {

struct security_params {
    double eps_sec = 1e-10;
    double eps_cor = 1e-15;
    double f_ec = 1.16;    // error-correction inefficiency
    int lp_photon_cap = 10;
    // Sub-epsilon for each concentration bound; 0 selects the default
    // union-bound split eps_sec/19.
    double eps_sub = 0.0;
    double resolved_eps_sub() const { return eps_sub > 0.0 ? eps_sub : eps_sec / 19.0; }
};

inline double binary_entropy(double p) {
    if (p < 0.0 || p > 1.0)
        throw std::domain_error("binary_entropy: argument outside [0, 1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

inline double poisson_pmf(int n, double k) {
    if (k == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(-k + n * std::log(k) - std::lgamma(n + 1.0));
}

// Total probability that an emitted pulse carries exactly n photons,
// averaged over the two intensity classes.
inline double tau_n(double p_mu, double mu, double nu, int n) {
    return p_mu * poisson_pmf(n, mu) + (1.0 - p_mu) * poisson_pmf(n, nu);
}

inline double hoeffding_delta(double n, double eps) {
    return std::sqrt(n / 2.0 * std::log(1.0 / eps));
}

// Per-basis observed statistics feeding the decoy estimation.
struct basis_counts {
    double n_mu = 0, n_nu = 0;       // detections by intensity class
    double m_mu = 0, m_nu = 0;       // errors by intensity class
    double sent_mu = 0, sent_nu = 0; // eligible emitted pulses by class
    double total() const { return n_mu + n_nu; }
    double errors() const { return m_mu + m_nu; }
};

inline basis_counts z_basis_counts(const count_table& t) {
    basis_counts b;
    b.n_mu = static_cast<double>(t.sifted_z(intensity_class::signal));
    b.n_nu = static_cast<double>(t.sifted_z(intensity_class::decoy));
    b.m_mu = static_cast<double>(t.errors_z(intensity_class::signal));
    b.m_nu = static_cast<double>(t.errors_z(intensity_class::decoy));
    b.sent_mu = static_cast<double>(t.sent_z(intensity_class::signal));
    b.sent_nu = static_cast<double>(t.sent_z(intensity_class::decoy));
    return b;
}

inline basis_counts x_basis_counts(const count_table& t) {
    basis_counts b;
    b.n_mu = static_cast<double>(t.sifted_x(intensity_class::signal));
    b.n_nu = static_cast<double>(t.sifted_x(intensity_class::decoy));
    b.m_mu = static_cast<double>(t.errors_x(intensity_class::signal));
    b.m_nu = static_cast<double>(t.errors_x(intensity_class::decoy));
    b.sent_mu = static_cast<double>(t.sent_x(intensity_class::signal));
    b.sent_nu = static_cast<double>(t.sent_x(intensity_class::decoy));
    return b;
}

struct decoy_bounds {
    double s0_lower = 0; // vacuum detections, lower bound
    double s0_upper = 0; // vacuum detections, error-count upper bound
    double s1_lower = 0; // single-photon detections, lower bound
    double v1_upper = 0; // single-photon errors, upper bound
};

// One-decoy finite-size bounds on vacuum and single-photon detections in one
// basis. `asymptotic` evaluates the same expressions with all concentration
// deviations set to zero. Class probabilities are taken from the realized
// sent counts, not the configured draw probabilities, so that these bounds
// and the LP oracle condition on exactly the same data.
inline decoy_bounds decoy_bounds_analytic(const basis_counts& b, double mu, double nu,
                                          double eps, bool asymptotic = false) {
    if (!(mu > nu) || nu <= 0.0)
        throw validation_error({"decoy_bounds_analytic: requires mu > nu > 0"});
    if (b.sent_mu <= 0.0 || b.sent_nu <= 0.0)
        throw validation_error({"decoy_bounds_analytic: both intensity classes must be present"});
    double p_mu = b.sent_mu / (b.sent_mu + b.sent_nu);
    double p_nu = 1.0 - p_mu;
    double dn = asymptotic ? 0.0 : hoeffding_delta(b.total(), eps);
    double dm = asymptotic ? 0.0 : hoeffding_delta(b.errors(), eps);
    if (b.n_nu - dn < 0.0 && !asymptotic)
        throw insufficient_data_error(
            "decoy_bounds_analytic: decoy-class detections below the concentration deviation");

    double tau0 = tau_n(p_mu, mu, nu, 0);
    double tau1 = tau_n(p_mu, mu, nu, 1);

    auto plus = [&](double count, double k, double pk, double d) {
        return std::exp(k) / pk * (count + d);
    };
    auto minus = [&](double count, double k, double pk, double d) {
        return std::exp(k) / pk * std::max(0.0, count - d);
    };

    double n_plus_mu = plus(b.n_mu, mu, p_mu, dn);
    double n_minus_nu = minus(b.n_nu, nu, p_nu, dn);
    // Error-count adjustments: the minus side is clamped at zero, which only
    // inflates v1 (the conservative direction).
    double m_plus_mu = plus(b.m_mu, mu, p_mu, dm);
    double m_minus_nu = minus(b.m_nu, nu, p_nu, dm);

    decoy_bounds r;
    r.s0_lower = std::max(0.0, tau0 * (mu * n_minus_nu - nu * n_plus_mu) / (mu - nu));
    r.s0_upper = 2.0 * (b.errors() + dn);
    r.s1_lower = std::max(0.0, tau1 * mu / (nu * (mu - nu)) *
                                   (n_minus_nu - (nu * nu) / (mu * mu) * n_plus_mu -
                                    (mu * mu - nu * nu) / (mu * mu) * (r.s0_upper / tau0)));
    r.v1_upper = std::max(0.0, tau1 * (m_plus_mu - m_minus_nu) / (mu - nu));
    double total = b.total();
    r.s0_lower = std::min(r.s0_lower, total);
    r.s1_lower = std::min(r.s1_lower, total);
    return r;
}

// Random-sampling correction for estimating the key-basis single-photon
// phase-error rate from the control basis.
inline double sampling_correction(double eps, double ratio, double s1_z, double s1_x) {
    if (ratio <= 0.0 || ratio >= 1.0) return 0.0;
    if (s1_z <= 0.0 || s1_x <= 0.0) return 0.0;
    double c = s1_z, d = s1_x, b = ratio;
    double front = (c + d) * (1.0 - b) * b / (c * d * std::log(2.0));
    double inside = (c + d) / (c * d * (1.0 - b) * b) * (21.0 * 21.0) / (eps * eps);
    if (inside <= 1.0) return 0.0;
    return std::sqrt(front * std::log2(inside));
}

// Upper bound on the key-basis single-photon phase-error rate.
inline double phase_error_bound(double s1_z, double s1_x, double v1_x, double eps,
                                bool asymptotic = false) {
    if (s1_x <= 0.0)
        throw insufficient_data_error("phase_error_bound: no single-photon control-basis bound");
    double ratio = v1_x / s1_x;
    double phi = ratio;
    if (!asymptotic) phi += sampling_correction(eps, std::clamp(ratio, 0.0, 1.0), s1_z, s1_x);
    return std::clamp(phi, 0.0, 0.5);
}

struct finite_key_report {
    double s0 = 0;
    double s1 = 0;
    double phi_z = 0;
    double lambda_ec = 0;
    double lambda_c = 0;
    double lambda_sec = 0;
    double n_z = 0;     // sifted key-basis detections consumed
    double q_z = 0;     // key-basis error fraction
    double q_x = 0;     // control-basis error fraction
    double ell = 0;     // extractable secret bits (clamped at 0)
    double t = 0;       // quantum transmission duration, seconds
    double skr = 0;     // bits per second
    double skr_asymptotic = 0;
};

// Secret fraction of one key block. The asymptotic figure reuses the same
// counts with deviations, sampling correction, and the fixed-cost leak terms
// switched off; error-correction leakage stays.
inline finite_key_report finite_key_analysis(const basis_counts& z, const basis_counts& x,
                                             double mu, double nu,
                                             const security_params& sp, double t) {
    if (t <= 0.0) throw validation_error({"finite_key_analysis: t must be positive"});
    double eps1 = sp.resolved_eps_sub();

    finite_key_report rep;
    rep.t = t;
    rep.n_z = z.total();
    if (z.total() <= 0.0)
        throw empty_basis_error("finite_key_analysis: no sifted key-basis detections");
    if (x.total() <= 0.0)
        throw empty_basis_error("finite_key_analysis: no sifted control-basis detections");
    rep.q_z = z.errors() / z.total();
    rep.q_x = x.errors() / x.total();

    decoy_bounds bz = decoy_bounds_analytic(z, mu, nu, eps1, false);
    decoy_bounds bx = decoy_bounds_analytic(x, mu, nu, eps1, false);
    rep.s0 = bz.s0_lower;
    rep.s1 = bz.s1_lower;
    rep.phi_z = phase_error_bound(bz.s1_lower, bx.s1_lower, bx.v1_upper, eps1, false);

    rep.lambda_ec = sp.f_ec * z.total() * binary_entropy(rep.q_z);
    rep.lambda_c = std::log2(1.0 / sp.eps_cor);
    rep.lambda_sec = 6.0 * std::log2(19.0 / sp.eps_sec);

    rep.ell = std::max(0.0, rep.s0 + rep.s1 * (1.0 - binary_entropy(rep.phi_z)) -
                                rep.lambda_ec - rep.lambda_c - rep.lambda_sec);
    rep.skr = rep.ell / t;

    decoy_bounds az = decoy_bounds_analytic(z, mu, nu, eps1, true);
    decoy_bounds ax = decoy_bounds_analytic(x, mu, nu, eps1, true);
    double phi_inf = ax.s1_lower > 0.0
                         ? phase_error_bound(az.s1_lower, ax.s1_lower, ax.v1_upper, eps1, true)
                         : 0.5;
    double ell_inf = std::max(0.0, az.s0_lower + az.s1_lower * (1.0 - binary_entropy(phi_inf)) -
                                       rep.lambda_ec);
    rep.skr_asymptotic = ell_inf / t;
    return rep;
}

inline finite_key_report finite_key_from_table(const count_table& t,
                                               const transmitter_config& tx,
                                               const security_params& sp, double duration) {
    return finite_key_analysis(z_basis_counts(t), x_basis_counts(t), tx.mu, tx.nu, sp, duration);
}

} // namespace qkdsim

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qkdsim/errors.hpp"
#include "qkdsim/security.hpp"

namespace qkdsim {

namespace detail {

struct simplex_result {
    bool feasible = false;
    double value = 0.0;
    std::vector<double> x;
};

// Dense two-phase simplex with Bland's rule: minimize c.x subject to
// A x <= b, x >= 0. Sized for this library's tiny programs (tens of rows);
// reduced costs are recomputed each iteration for simplicity.
inline simplex_result simplex_min(std::vector<double> c, std::vector<std::vector<double>> A,
                                  std::vector<double> b) {
    const double tol = 1e-9;
    const int m = static_cast<int>(A.size());
    const int n = static_cast<int>(c.size());

    // Tableau columns: n structural, m slacks, then artificials, then rhs.
    int n_art = 0;
    for (int i = 0; i < m; ++i)
        if (b[i] < 0.0) ++n_art;
    const int cols = n + m + n_art + 1;
    std::vector<std::vector<double>> T(m, std::vector<double>(cols, 0.0));
    std::vector<int> basis(m);
    int art = n + m;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][cols - 1] = b[i];
        if (b[i] < 0.0) {
            for (int j = 0; j < cols; ++j) T[i][j] = -T[i][j];
            T[i][art] = 1.0;
            basis[i] = art++;
        } else {
            basis[i] = n + i;
        }
    }

    auto pivot = [&](int pr, int pc) {
        double p = T[pr][pc];
        for (int j = 0; j < cols; ++j) T[pr][j] /= p;
        for (int i = 0; i < m; ++i) {
            if (i == pr) continue;
            double f = T[i][pc];
            if (f == 0.0) continue;
            for (int j = 0; j < cols; ++j) T[i][j] -= f * T[pr][j];
        }
        basis[pr] = pc;
    };

    // One simplex phase: minimize cost over the allowed column range.
    auto run = [&](const std::vector<double>& cost, int allowed_cols) -> bool {
        for (int iter = 0; iter < 10000; ++iter) {
            // reduced cost r_j = cost_j - sum_i cost_basis(i) * T[i][j]
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j) {
                double r = j < static_cast<int>(cost.size()) ? cost[j] : 0.0;
                for (int i = 0; i < m; ++i) {
                    int bi = basis[i];
                    double cb = bi < static_cast<int>(cost.size()) ? cost[bi] : 0.0;
                    if (cb != 0.0) r -= cb * T[i][j];
                }
                if (r < -tol) {
                    enter = j;
                    break; // Bland: first improving column
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                if (T[i][enter] > tol) {
                    double ratio = T[i][cols - 1] / T[i][enter];
                    if (leave < 0 || ratio < best - tol ||
                        (ratio < best + tol && basis[i] < basis[leave])) {
                        leave = i;
                        best = ratio;
                    }
                }
            }
            if (leave < 0) return false; // unbounded
            pivot(leave, enter);
        }
        return false;
    };

    if (n_art > 0) {
        std::vector<double> phase1(n + m + n_art, 0.0);
        for (int j = n + m; j < n + m + n_art; ++j) phase1[j] = 1.0;
        if (!run(phase1, n + m + n_art)) return {};
        double infeas = 0.0;
        for (int i = 0; i < m; ++i)
            if (basis[i] >= n + m) infeas += T[i][cols - 1];
        if (infeas > 1e-7) return {};
        // Pivot lingering zero-value artificials out of the basis.
        for (int i = 0; i < m; ++i) {
            if (basis[i] < n + m) continue;
            for (int j = 0; j < n + m; ++j) {
                if (std::abs(T[i][j]) > tol) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

    std::vector<double> phase2 = c;
    phase2.resize(n + m + n_art, 0.0);
    if (!run(phase2, n + m)) return {}; // artificials barred from re-entering

    simplex_result r;
    r.feasible = true;
    r.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) r.x[basis[i]] = T[i][cols - 1];
    for (int j = 0; j < n; ++j) r.value += c[j] * r.x[j];
    return r;
}

} // namespace detail

struct decoy_lp_bounds {
    double s0_min = 0, s0_max = 0;
    double s1_min = 0, s1_max = 0;
};

// Independent decoy-estimation oracle: exact linear-program optimization of
// the vacuum and single-photon yields subject to the same information the
// analytic bounds consume: per-class gain windows, the Poisson photon-number
// decomposition up to lp_photon_cap with an explicit tail slack, and the
// error-count vacuum cap (without which a one-decoy program cannot bound the
// single-photon yield from below at all). Class probabilities come from the
// realized sent counts, matching decoy_bounds_analytic.
inline decoy_lp_bounds decoy_bounds_lp(const basis_counts& b, double mu, double nu,
                                       const security_params& sp, bool asymptotic = false) {
    if (!(mu > nu) || nu <= 0.0)
        throw validation_error({"decoy_bounds_lp: requires mu > nu > 0"});
    if (b.sent_mu <= 0.0 || b.sent_nu <= 0.0)
        throw validation_error({"decoy_bounds_lp: both intensity classes must be present"});
    const int cap = sp.lp_photon_cap;
    const double eps = sp.resolved_eps_sub();
    const double delta = asymptotic ? 0.0 : hoeffding_delta(b.total(), eps);

    const int nv = cap + 1 + 2; // yields plus one tail slack per class
    const int s_mu = cap + 1, s_nu = cap + 2;

    std::vector<std::vector<double>> A;
    std::vector<double> rhs;
    auto add_row = [&](const std::vector<double>& row, double v) {
        A.push_back(row);
        rhs.push_back(v);
    };

    double tails[2];
    const double ks[2] = {mu, nu};
    const double sents[2] = {b.sent_mu, b.sent_nu};
    const double counts[2] = {b.n_mu, b.n_nu};
    for (int t = 0; t < 2; ++t) {
        double mass = 0.0;
        std::vector<double> row(nv, 0.0);
        for (int n = 0; n <= cap; ++n) {
            row[n] = poisson_pmf(n, ks[t]);
            mass += row[n];
        }
        tails[t] = std::max(0.0, 1.0 - mass);
        row[t == 0 ? s_mu : s_nu] = 1.0;
        double upper = (counts[t] + delta) / sents[t];
        double lower = std::max(0.0, (counts[t] - delta) / sents[t]);
        add_row(row, upper);
        std::vector<double> neg(nv);
        for (int j = 0; j < nv; ++j) neg[j] = -row[j];
        add_row(neg, -lower);
    }

    double n_total = b.sent_mu + b.sent_nu;
    double p_mu_hat = b.sent_mu / n_total;
    double tau0 = tau_n(p_mu_hat, mu, nu, 0);
    double tau1 = tau_n(p_mu_hat, mu, nu, 1);
    double s0_upper = 2.0 * (b.errors() + delta);
    double y0_cap = std::min(1.0, s0_upper / (n_total * tau0));

    for (int j = 0; j <= cap; ++j) {
        std::vector<double> row(nv, 0.0);
        row[j] = 1.0;
        add_row(row, j == 0 ? y0_cap : 1.0);
    }
    for (int t = 0; t < 2; ++t) {
        std::vector<double> row(nv, 0.0);
        row[t == 0 ? s_mu : s_nu] = 1.0;
        add_row(row, tails[t]);
    }

    auto objective = [&](int var, double sign) {
        std::vector<double> c(nv, 0.0);
        c[var] = sign;
        detail::simplex_result r = detail::simplex_min(c, A, rhs);
        if (!r.feasible)
            throw infeasible_program_error(
                "decoy_bounds_lp: no feasible yield vector (inconsistent counts or photon cap too small)");
        return sign * r.value;
    };

    decoy_lp_bounds out;
    out.s0_min = n_total * tau0 * objective(0, 1.0);
    out.s0_max = n_total * tau0 * objective(0, -1.0);
    out.s1_min = n_total * tau1 * objective(1, 1.0);
    out.s1_max = n_total * tau1 * objective(1, -1.0);
    return out;
}

} // namespace qkdsim

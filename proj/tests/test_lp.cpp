#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qkdsim/security_lp.hpp"
#include "qkdsim/sim_engine.hpp"

using namespace qkdsim;

TEST_CASE("simplex solves textbook programs") {
    // maximize x subject to x <= 3
    auto r = detail::simplex_min({-1.0}, {{1.0}}, {3.0});
    REQUIRE(r.feasible);
    CHECK(r.value == Catch::Approx(-3.0).epsilon(1e-12));
    CHECK(r.x[0] == Catch::Approx(3.0).epsilon(1e-12));

    // minimize x + y subject to x + y >= 2 (phase-one path)
    r = detail::simplex_min({1.0, 1.0}, {{-1.0, -1.0}}, {-2.0});
    REQUIRE(r.feasible);
    CHECK(r.value == Catch::Approx(2.0).epsilon(1e-12));

    // two binding rows, optimum at the vertex (1, 3)
    r = detail::simplex_min({-1.0, -2.0}, {{1.0, 1.0}, {0.0, 1.0}}, {4.0, 3.0});
    REQUIRE(r.feasible);
    CHECK(r.value == Catch::Approx(-7.0).epsilon(1e-12));
    CHECK(r.x[0] == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(r.x[1] == Catch::Approx(3.0).epsilon(1e-12));

    // contradictory rows: x <= 1 and x >= 3
    r = detail::simplex_min({1.0}, {{1.0}, {-1.0}}, {1.0, -3.0});
    CHECK_FALSE(r.feasible);

    // unbounded below: minimize -y with only x constrained
    r = detail::simplex_min({0.0, -1.0}, {{1.0, 0.0}}, {1.0});
    CHECK_FALSE(r.feasible);
}

TEST_CASE("noiseless program brackets the true yields") {
    // fabricate exact detection statistics from a known yield curve
    double eta = 0.1, pd = 1e-5, mu = 0.6, nu = 0.2;
    auto yield = [&](int n) { return 1.0 - (1.0 - pd) * std::pow(1.0 - eta, n); };
    auto gain = [&](double k) {
        double g = 0.0;
        for (int n = 0; n < 80; ++n) g += poisson_pmf(n, k) * yield(n);
        return g;
    };
    basis_counts b;
    b.sent_mu = 7e8;
    b.sent_nu = 3e8;
    b.n_mu = b.sent_mu * gain(mu);
    b.n_nu = b.sent_nu * gain(nu);
    b.m_mu = 0.01 * b.n_mu;
    b.m_nu = 0.01 * b.n_nu;

    security_params sp;
    decoy_lp_bounds lp = decoy_bounds_lp(b, mu, nu, sp, true);

    double n_total = b.sent_mu + b.sent_nu;
    double p_mu_hat = b.sent_mu / n_total;
    double true_s0 = n_total * tau_n(p_mu_hat, mu, nu, 0) * yield(0);
    double true_s1 = n_total * tau_n(p_mu_hat, mu, nu, 1) * yield(1);

    CHECK(lp.s0_min <= true_s0 * (1.0 + 1e-9));
    CHECK(lp.s0_max >= true_s0 * (1.0 - 1e-9));
    CHECK(lp.s1_min <= true_s1 * (1.0 + 1e-9));
    CHECK(lp.s1_max >= true_s1 * (1.0 - 1e-9));
    CHECK(lp.s1_min > 0.0);
    CHECK(lp.s1_min <= lp.s1_max);
    CHECK(lp.s0_min <= lp.s0_max);

    // the interval tightens when the deviations are switched back on
    decoy_lp_bounds fin = decoy_bounds_lp(b, mu, nu, sp, false);
    CHECK(fin.s1_min <= lp.s1_min * (1.0 + 1e-9));
    CHECK(fin.s1_max >= lp.s1_max * (1.0 - 1e-9));
}

TEST_CASE("closed-form bounds never beat the exact program") {
    experiment_config cfg;
    security_params sp;
    double eps1 = sp.resolved_eps_sub();
    const double slack = 1e-6;

    for (std::uint64_t seed : {11u, 12u, 13u}) {
        for (double loss : {10.0, 13.0}) {
            experiment_config c = cfg;
            c.channel.loss_db = loss;
            mc_result r = run_montecarlo(c, 2'000'000, seed);
            for (bool asym : {false, true}) {
                for (const basis_counts& b :
                     {z_basis_counts(r.table), x_basis_counts(r.table)}) {
                    decoy_bounds an = decoy_bounds_analytic(b, c.transmitter.mu,
                                                            c.transmitter.nu, eps1, asym);
                    decoy_lp_bounds lp =
                        decoy_bounds_lp(b, c.transmitter.mu, c.transmitter.nu, sp, asym);
                    CHECK(an.s0_lower <= lp.s0_min * (1.0 + slack) + slack);
                    CHECK(an.s1_lower <= lp.s1_min * (1.0 + slack) + slack);
                }
            }
            // the program's lower endpoints stay below the simulation truth
            decoy_lp_bounds lz =
                decoy_bounds_lp(z_basis_counts(r.table), c.transmitter.mu, c.transmitter.nu,
                                sp, false);
            CHECK(lz.s0_min <= r.truth.s0_z);
            CHECK(lz.s1_min <= r.truth.s1_z);
        }
    }
}

TEST_CASE("interval widens as the failure budget shrinks") {
    basis_counts b;
    b.n_mu = 6'000'000;
    b.n_nu = 630'000;
    b.m_mu = 37'230;
    b.m_nu = 3'920;
    b.sent_mu = 315'000'000;
    b.sent_nu = 135'000'000;

    security_params tight, loose;
    tight.eps_sub = 1e-12;
    loose.eps_sub = 1e-3;
    decoy_lp_bounds lt = decoy_bounds_lp(b, 0.6, 0.2, tight);
    decoy_lp_bounds ll = decoy_bounds_lp(b, 0.6, 0.2, loose);
    CHECK(lt.s1_min <= ll.s1_min);
    CHECK(lt.s1_max >= ll.s1_max);
    CHECK(lt.s0_max >= ll.s0_max);
}

TEST_CASE("photon-number cap does not steer the answer") {
    basis_counts b;
    b.n_mu = 6'000'000;
    b.n_nu = 630'000;
    b.m_mu = 37'230;
    b.m_nu = 3'920;
    b.sent_mu = 315'000'000;
    b.sent_nu = 135'000'000;

    security_params lo, hi;
    lo.lp_photon_cap = 8;
    hi.lp_photon_cap = 12;
    decoy_lp_bounds bl = decoy_bounds_lp(b, 0.6, 0.2, lo);
    decoy_lp_bounds bh = decoy_bounds_lp(b, 0.6, 0.2, hi);
    CHECK(bl.s1_min == Catch::Approx(bh.s1_min).epsilon(1e-3));
    CHECK(bl.s0_max == Catch::Approx(bh.s0_max).epsilon(1e-3));
}

TEST_CASE("degenerate or contradictory inputs are rejected") {
    security_params sp;
    basis_counts b;
    b.n_mu = 1000;
    b.n_nu = 500;
    b.sent_mu = 100'000;
    b.sent_nu = 100'000;

    CHECK_THROWS_AS(decoy_bounds_lp(b, 0.2, 0.6, sp), validation_error);
    basis_counts single = b;
    single.sent_nu = 0;
    CHECK_THROWS_AS(decoy_bounds_lp(single, 0.6, 0.2, sp), validation_error);

    // zero observed errors pin the vacuum yield at zero; a decoy gain larger
    // than any vacuum-free curve can reach has no explanation
    basis_counts impossible;
    impossible.sent_mu = 1'000'000;
    impossible.sent_nu = 1'000'000;
    impossible.n_mu = 10'000;
    impossible.n_nu = 500'000;
    impossible.m_mu = 0;
    impossible.m_nu = 0;
    CHECK_THROWS_AS(decoy_bounds_lp(impossible, 0.6, 0.2, sp, true),
                    infeasible_program_error);
}

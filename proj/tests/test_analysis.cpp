#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qkdsim/analysis.hpp"

using namespace qkdsim;
using std::numbers::pi;

TEST_CASE("transition statistics on a hand-computed stream") {
    std::vector<std::uint8_t> klass = {0, 0, 1, 0, 1, 1, 0, 0};
    std::vector<std::uint8_t> clicks = {1, 1, 0, 1, 0, 1, 1, 0};
    patterning_report rep = patterning_stats(clicks, klass);

    CHECK(rep.considered == 7);
    CHECK(rep.class_slots[0] == 4);
    CHECK(rep.class_slots[1] == 3);
    CHECK(rep.class_mean[0] == Catch::Approx(0.75).margin(1e-15));
    CHECK(rep.class_mean[1] == Catch::Approx(1.0 / 3.0).margin(1e-15));

    const transition_stats& ss = rep.transition[0][0];
    CHECK(ss.slots == 2);
    CHECK(ss.mean == Catch::Approx(0.5).margin(1e-15));
    CHECK(ss.std_err == Catch::Approx(std::sqrt(0.125)).margin(1e-15));
    CHECK(ss.c == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(ss.d == Catch::Approx(-1.0 / 3.0).margin(1e-15));
    CHECK(ss.sigma_d == Catch::Approx(0.5 * std::sqrt(0.125) / 0.75).margin(1e-15));

    const transition_stats& ds = rep.transition[1][0];
    CHECK(ds.slots == 2);
    CHECK(ds.mean == Catch::Approx(1.0).margin(1e-15));
    CHECK(ds.d == Catch::Approx(1.0 / 3.0).margin(1e-15));
    CHECK(ds.sigma_d == Catch::Approx(0.5 * std::sqrt(0.125) / 0.75).margin(1e-15));

    const transition_stats& sd = rep.transition[0][1];
    CHECK(sd.slots == 2);
    CHECK(sd.mean == Catch::Approx(0.0).margin(1e-15));
    CHECK(sd.c == Catch::Approx(0.0).margin(1e-15));
    CHECK(sd.d == Catch::Approx(-1.0).margin(1e-15));

    const transition_stats& dd = rep.transition[1][1];
    CHECK(dd.slots == 1);
    CHECK(dd.mean == Catch::Approx(1.0).margin(1e-15));
    CHECK(dd.d == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("normalized level and deviation describe the same group mean") {
    experiment_config cfg;
    cfg.transmitter.driver.settle_fraction = 0.1;
    rng_stream pat_rng = rng_stream::derive(5, 1);
    auto pattern = pseudorandom_pattern(1024, cfg.transmitter.p_mu, pat_rng);
    monitor_result m = run_intensity_monitor(cfg, pattern, 1'000'000, 42);
    patterning_report rep = patterning_stats(m);

    std::uint64_t slots = 0;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
            const transition_stats& ts = rep.transition[p][q];
            slots += ts.slots;
            // c normalizes to the signal-class mean, d to the current class
            // mean; both rescale the same measured group intensity
            CHECK(ts.c * rep.class_mean[0] == Catch::Approx(ts.mean).margin(1e-12));
            CHECK((1.0 + ts.d) * rep.class_mean[q] == Catch::Approx(ts.mean).margin(1e-12));
            CHECK(ts.sigma_c > 0.0);
        }
    CHECK(slots == rep.considered);
    CHECK(rep.class_slots[0] + rep.class_slots[1] == rep.considered);

    double counted = rep.class_mean[0] * rep.class_slots[0] +
                     rep.class_mean[1] * rep.class_slots[1];
    CHECK(counted == Catch::Approx(static_cast<double>(m.total_clicks - m.clicks[0]))
                         .margin(1e-6));
}

TEST_CASE("streams that cannot support the statistics are rejected") {
    std::vector<std::uint8_t> ones = {1, 1, 1, 1};
    std::vector<std::uint8_t> constant = {0, 0, 0, 0};
    CHECK_THROWS_AS(patterning_stats(ones, constant), missing_transition_error);

    std::vector<std::uint8_t> alternating = {0, 1, 0, 1, 0, 1};
    CHECK_THROWS_AS(patterning_stats(ones, alternating), validation_error); // length mismatch
    std::vector<std::uint8_t> clicks6 = {1, 1, 1, 1, 1, 1};
    CHECK_THROWS_AS(patterning_stats(clicks6, alternating), missing_transition_error);

    CHECK_THROWS_AS(patterning_stats({1}, {0}), validation_error);

    // all four transitions present but the signal class never clicks
    std::vector<std::uint8_t> klass = {0, 0, 1, 1, 0};
    std::vector<std::uint8_t> dark = {0, 0, 1, 1, 0};
    CHECK_THROWS_AS(patterning_stats(dark, klass), validation_error);
}

TEST_CASE("the first slot only ever contributes as a predecessor") {
    std::vector<std::uint8_t> klass = {0, 0, 1, 0, 1, 1, 0};
    std::vector<std::uint8_t> a = {1, 1, 0, 1, 0, 1, 1};
    std::vector<std::uint8_t> b = a;
    b[0] = 0; // the slot-0 click must not appear in any mean
    patterning_report ra = patterning_stats(a, klass);
    patterning_report rb = patterning_stats(b, klass);
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
            CHECK(ra.transition[p][q].mean == rb.transition[p][q].mean);
            CHECK(ra.transition[p][q].slots == rb.transition[p][q].slots);
        }
    CHECK(ra.class_mean[0] == rb.class_mean[0]);
    CHECK(ra.class_mean[1] == rb.class_mean[1]);
}

TEST_CASE("deviation error bars cover zero at the advertised rate") {
    experiment_config cfg;
    cfg.transmitter.driver.settle_fraction = 0.1;
    cfg.transmitter.theta = polarizer_angle_for_ratio(0.30);

    int covered = 0, total = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        rng_stream pat_rng = rng_stream::derive(s, 1000);
        auto pattern = pseudorandom_pattern(1024, cfg.transmitter.p_mu, pat_rng);
        monitor_result m =
            run_intensity_monitor(cfg, pattern, 200'000, rng_stream::derive(s, 0).next_u64());
        patterning_report rep = patterning_stats(m);
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
                const transition_stats& ts = rep.transition[p][q];
                total += 1;
                if (std::abs(ts.d) <= 2.0 * ts.sigma_d) covered += 1;
            }
    }
    // nominal two-sigma coverage is 95.45%; 93% is its binomial floor here
    CHECK(total == 400);
    CHECK(covered >= 372);
}

TEST_CASE("ratio sweep agrees with the analyzer geometry at one angle") {
    experiment_config cfg;
    const double theta = pi / 12.0;
    sweep_result sw = malus_sweep({theta}, 300'000, cfg, 7);
    REQUIRE(sw.points.size() == 1);
    CHECK(sw.pulses_per_angle == 300'000);
    const sweep_point& p = sw.points[0];
    CHECK(p.theta == theta);
    CHECK(p.predicted == Catch::Approx(intensity_ratio(theta)).margin(1e-15));
    CHECK(p.sigma > 0.0);
    CHECK(std::abs(p.measured - p.predicted) <= 4.0 * p.sigma);
    CHECK(p.clicks_signal > 0);
    CHECK(p.clicks_decoy > 0);
}

TEST_CASE("ratio sweep input validation") {
    experiment_config cfg;
    CHECK_THROWS_AS(malus_sweep({0.3, 0.3}, 1000, cfg, 1), validation_error);
    CHECK_THROWS_AS(malus_sweep({0.4, 0.2}, 1000, cfg, 1), validation_error);
    // bright level vanishes when the analyzer sits at the dark fringe
    CHECK_THROWS_AS(malus_sweep({3.0 * pi / 4.0}, 1000, cfg, 1), pole_error);
}

TEST_CASE("per-position histogram on a synthetic stream") {
    monitor_result m;
    m.clicks = {1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1};
    m.pattern_class = {0, 1, 1, 0, 1, 1, 0, 1, 1, 0, 1, 1, 0, 1};
    // period 3, 4 full repetitions; the trailing two slots are ignored
    histogram_result h = slot_histogram(m, 3, 3);
    CHECK(h.repetitions == 4);
    REQUIRE(h.positions.size() == 3);
    CHECK(h.positions[0].position == 0);
    CHECK(h.positions[0].klass == 0);
    CHECK(h.positions[0].mean == Catch::Approx(1.0).margin(1e-15));
    CHECK(h.positions[0].std_err == Catch::Approx(0.0).margin(1e-15));
    CHECK(h.positions[1].mean == Catch::Approx(0.0).margin(1e-15));
    CHECK(h.positions[2].mean == Catch::Approx(0.5).margin(1e-15));
    CHECK(h.positions[2].std_err == Catch::Approx(0.25).margin(1e-15));
    CHECK(h.class_level[0] == Catch::Approx(1.0).margin(1e-15));
    CHECK(h.class_level[1] == Catch::Approx(0.25).margin(1e-15));
    CHECK(h.class_band[1] == Catch::Approx(0.5).margin(1e-12));

    // a shorter display window keeps only the leading positions
    histogram_result w = slot_histogram(m, 3, 2);
    CHECK(w.positions.size() == 2);

    CHECK_THROWS_AS(slot_histogram(m, 0, 0), validation_error);
    CHECK_THROWS_AS(slot_histogram(m, 3, 4), validation_error);
    monitor_result tiny;
    tiny.clicks = {1, 0};
    tiny.pattern_class = {0, 1};
    CHECK_THROWS_AS(slot_histogram(tiny, 3, 3), validation_error);
}

TEST_CASE("window stream segments into whole key blocks") {
    experiment_config cfg;
    security_params sp;
    const double duration = 31.0;
    auto windows = run_aggregate_windows(cfg, duration, 1.0, 23);
    REQUIRE(windows.size() == 31);

    // roughly 1.06e5 sifted key bits arrive per window; two windows per block
    const double block_bits = 150'000.0;
    auto blocks = segment_blocks(windows, block_bits, cfg.transmitter, sp, duration);
    REQUIRE(blocks.size() == 15);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        CHECK(blocks[i].t0 == Catch::Approx(2.0 * i).margin(1e-12));
        CHECK(blocks[i].t1 == Catch::Approx(2.0 * i + 2.0).margin(1e-12));
        CHECK(blocks[i].table.sifted_z_total() >= block_bits);
        CHECK(blocks[i].report.t == duration);
        CHECK(blocks[i].report.skr ==
              Catch::Approx(blocks[i].report.ell / duration).epsilon(1e-12));
        CHECK(blocks[i].report.skr > 0.0);
    }
    // the 31st window never filled a block and is dropped

    CHECK(segment_blocks({}, block_bits, cfg.transmitter, sp, duration).empty());
}

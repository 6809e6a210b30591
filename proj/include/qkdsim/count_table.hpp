#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "qkdsim/errors.hpp"
#include "qkdsim/link.hpp"
#include "qkdsim/transmitter.hpp"

namespace qkdsim {

// Detection counts indexed by (intensity class, sent state, detector) plus
// emitted-pulse counts per (class, state). Cells count detector clicks before
// squashing, so Monte Carlo and aggregate mode agree cell by cell.
struct count_table {
    std::array<std::array<std::array<std::uint64_t, detector_count>, 3>, 2> n{};
    std::array<std::array<std::uint64_t, 3>, 2> sent{};
    double duration = 0.0; // seconds of emission this table covers
    double rep_rate = 0.0;

    std::uint64_t& at(intensity_class k, logical_state a, detector_id d) {
        return n[static_cast<int>(k)][static_cast<int>(a)][static_cast<int>(d)];
    }
    std::uint64_t at(intensity_class k, logical_state a, detector_id d) const {
        return n[static_cast<int>(k)][static_cast<int>(a)][static_cast<int>(d)];
    }
    std::uint64_t& sent_at(intensity_class k, logical_state a) {
        return sent[static_cast<int>(k)][static_cast<int>(a)];
    }
    std::uint64_t sent_at(intensity_class k, logical_state a) const {
        return sent[static_cast<int>(k)][static_cast<int>(a)];
    }

    count_table& operator+=(const count_table& o) {
        for (int k = 0; k < 2; ++k)
            for (int a = 0; a < 3; ++a) {
                sent[k][a] += o.sent[k][a];
                for (int d = 0; d < detector_count; ++d) n[k][a][d] += o.n[k][a][d];
            }
        duration += o.duration;
        if (rep_rate == 0.0) rep_rate = o.rep_rate;
        return *this;
    }

    std::uint64_t total_sent() const {
        std::uint64_t s = 0;
        for (int k = 0; k < 2; ++k)
            for (int a = 0; a < 3; ++a) s += sent[k][a];
        return s;
    }

    std::uint64_t total_detections() const {
        std::uint64_t s = 0;
        for (int k = 0; k < 2; ++k)
            for (int a = 0; a < 3; ++a)
                for (int d = 0; d < detector_count; ++d) s += n[k][a][d];
        return s;
    }

    // Key-basis sifting: key-alphabet sender, key-basis detector.
    std::uint64_t sifted_z(intensity_class k) const {
        int ki = static_cast<int>(k);
        return n[ki][0][0] + n[ki][0][1] + n[ki][1][0] + n[ki][1][1];
    }
    std::uint64_t errors_z(intensity_class k) const {
        int ki = static_cast<int>(k);
        return n[ki][0][1] + n[ki][1][0];
    }
    // Control-basis sifting: plus sender, control-basis detector.
    std::uint64_t sifted_x(intensity_class k) const {
        int ki = static_cast<int>(k);
        return n[ki][2][2] + n[ki][2][3];
    }
    std::uint64_t errors_x(intensity_class k) const {
        int ki = static_cast<int>(k);
        return n[ki][2][3];
    }

    std::uint64_t sent_z(intensity_class k) const {
        int ki = static_cast<int>(k);
        return sent[ki][0] + sent[ki][1];
    }
    std::uint64_t sent_x(intensity_class k) const { return sent[static_cast<int>(k)][2]; }

    std::uint64_t sifted_z_total() const {
        return sifted_z(intensity_class::signal) + sifted_z(intensity_class::decoy);
    }
    std::uint64_t sifted_x_total() const {
        return sifted_x(intensity_class::signal) + sifted_x(intensity_class::decoy);
    }
};

struct qber_result {
    double q_z;
    double q_x;
    double sigma_z; // normal approximation of the binomial
    double sigma_x;
};

// Per-basis error fractions among sifted detections.
inline qber_result qber_from_table(const count_table& t) {
    double nz = static_cast<double>(t.sifted_z_total());
    double nx = static_cast<double>(t.sifted_x_total());
    if (nz == 0.0) throw empty_basis_error("qber_from_table: no sifted key-basis detections");
    if (nx == 0.0) throw empty_basis_error("qber_from_table: no sifted control-basis detections");
    double mz = static_cast<double>(t.errors_z(intensity_class::signal) +
                                    t.errors_z(intensity_class::decoy));
    double mx = static_cast<double>(t.errors_x(intensity_class::signal) +
                                    t.errors_x(intensity_class::decoy));
    double qz = mz / nz;
    double qx = mx / nx;
    return {qz, qx, std::sqrt(qz * (1 - qz) / nz), std::sqrt(qx * (1 - qx) / nx)};
}

} // namespace qkdsim

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "qkdsim/errors.hpp"

namespace qkdsim {

using complexd = std::complex<double>;

// Two-component polarization state in the H/V basis.
using jones_vector = std::array<complexd, 2>;

// 2x2 operator on jones_vector, row-major.
struct jones_matrix {
    std::array<complexd, 4> m{};

    complexd& at(int r, int c) { return m[static_cast<std::size_t>(2 * r + c)]; }
    const complexd& at(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }

    jones_vector operator*(const jones_vector& v) const {
        return {at(0, 0) * v[0] + at(0, 1) * v[1],
                at(1, 0) * v[0] + at(1, 1) * v[1]};
    }

    jones_matrix operator*(const jones_matrix& o) const {
        jones_matrix r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                r.at(i, j) = at(i, 0) * o.at(0, j) + at(i, 1) * o.at(1, j);
        return r;
    }
};

inline jones_matrix identity_matrix() {
    jones_matrix r;
    r.at(0, 0) = 1.0;
    r.at(1, 1) = 1.0;
    return r;
}

// Physical rotation of the plane of polarization by angle a.
inline jones_matrix rotation(double a) {
    jones_matrix r;
    double c = std::cos(a), s = std::sin(a);
    r.at(0, 0) = c;
    r.at(0, 1) = -s;
    r.at(1, 0) = s;
    r.at(1, 1) = c;
    return r;
}

// Linear retarder: retardance gamma between fast and slow axes, fast axis at
// angle a from horizontal. gamma = pi gives a half-wave plate.
inline jones_matrix waveplate(double gamma, double a) {
    double c = std::cos(a), s = std::sin(a);
    complexd e = std::exp(complexd(0.0, gamma));
    jones_matrix r;
    r.at(0, 0) = c * c + e * s * s;
    r.at(0, 1) = c * s * (1.0 - e);
    r.at(1, 0) = c * s * (1.0 - e);
    r.at(1, 1) = s * s + e * c * c;
    return r;
}

// Ideal linear polarizer with transmission axis at angle a.
inline jones_matrix polarizer(double a) {
    double c = std::cos(a), s = std::sin(a);
    jones_matrix r;
    r.at(0, 0) = c * c;
    r.at(0, 1) = c * s;
    r.at(1, 0) = c * s;
    r.at(1, 1) = s * s;
    return r;
}

inline complexd inner(const jones_vector& u, const jones_vector& v) {
    return std::conj(u[0]) * v[0] + std::conj(u[1]) * v[1];
}

inline double norm_squared(const jones_vector& v) {
    return std::norm(v[0]) + std::norm(v[1]);
}

inline jones_vector normalized(jones_vector v) {
    double n = std::sqrt(norm_squared(v));
    if (n > 0.0) {
        v[0] /= n;
        v[1] /= n;
    }
    return v;
}

// Equality up to a global phase: |<u|v>| = 1 for unit vectors.
inline bool same_state(const jones_vector& u, const jones_vector& v, double tol = 1e-9) {
    double nu = std::sqrt(norm_squared(u));
    double nv = std::sqrt(norm_squared(v));
    if (nu == 0.0 || nv == 0.0) return false;
    return std::abs(std::abs(inner(u, v)) / (nu * nv) - 1.0) < tol;
}

inline const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;

inline jones_vector horizontal() { return {1.0, 0.0}; }
inline jones_vector vertical() { return {0.0, 1.0}; }
inline jones_vector diagonal() { return {inv_sqrt2, inv_sqrt2}; }
inline jones_vector antidiagonal() { return {inv_sqrt2, -inv_sqrt2}; }
inline jones_vector circular_left() { return {inv_sqrt2, complexd(0.0, 1.0) * inv_sqrt2}; }
inline jones_vector circular_right() { return {inv_sqrt2, complexd(0.0, -1.0) * inv_sqrt2}; }

// State leaving the polarization modulator for a phase difference dphi
// imprinted between the two counter-propagating components:
// (|H> + e^{i dphi} |V>)/sqrt(2).
inline jones_vector modulator_state(double dphi) {
    return {inv_sqrt2, std::exp(complexd(0.0, dphi)) * inv_sqrt2};
}

// Transmission of modulator_state(dphi) through a linear polarizer at angle
// theta. Closed form of |polarizer(theta) * modulator_state(dphi)|^2.
inline double optical_response(double dphi, double theta) {
    return 0.5 * (1.0 + std::sin(2.0 * theta) * std::cos(dphi));
}

// Ratio of the response minimum (dphi = pi) to its maximum (dphi = 0) as the
// analyzer angle is varied: tan^2(theta - pi/4).
inline double intensity_ratio(double theta) {
    double t = theta - std::numbers::pi / 4.0;
    double c = std::cos(t);
    if (std::abs(c) < 1e-12)
        throw pole_error("intensity_ratio: analyzer angle at pole, bright level vanishes");
    return std::pow(std::tan(t), 2);
}

// Analyzer angle realizing a requested min/max intensity ratio r in [0, 1].
// Returns the branch below pi/4; pi/4 + atan(sqrt(r)) is the mirror solution.
inline double polarizer_angle_for_ratio(double r) {
    if (r < 0.0 || r > 1.0)
        throw pole_error("polarizer_angle_for_ratio: ratio outside [0, 1]");
    return std::numbers::pi / 4.0 - std::atan(std::sqrt(r));
}

} // namespace qkdsim

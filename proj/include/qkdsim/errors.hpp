#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qkdsim {

// Thrown by optics helpers evaluated at a mathematical pole (e.g. intensity
// ratio where the bright-level transmission vanishes).
struct pole_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Whole-config validation failure; carries one message per offending field.
struct validation_error : std::invalid_argument {
    std::vector<std::string> issues;

    explicit validation_error(std::vector<std::string> problems)
        : std::invalid_argument(join(problems)), issues(std::move(problems)) {}

    static std::string join(const std::vector<std::string>& problems) {
        std::string out = "invalid configuration:";
        for (const auto& p : problems) out += "\n  " + p;
        return out;
    }
};

// Finite-key estimators: a Hoeffding-adjusted count went negative, the sample
// cannot support the requested bound.
struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Decoy linear program has no feasible yield vector.
struct infeasible_program_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// QBER requested for a basis with no sifted detections.
struct empty_basis_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Patterning statistics requested on a stream missing one of the four
// intensity transitions.
struct missing_transition_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qkdsim

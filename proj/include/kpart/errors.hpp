#pragma once

#include <stdexcept>
#include <string>

namespace kpart {

/// Malformed input file: missing column, non-numeric cell, bad JSON.
struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Data violates a domain invariant (non-positive population, duplicate years, empty series).
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Fit cannot proceed: singular design, too few rows, no feasible subset.
struct fit_error : std::runtime_error {
    explicit fit_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller broke an API precondition.
struct contract_error : std::logic_error {
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace kpart

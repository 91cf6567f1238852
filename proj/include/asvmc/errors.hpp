#pragma once

#include <stdexcept>
#include <string>

namespace asvmc {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Model parameters violate admissibility (positivity, |rho|<1, chi(1)<0, ...).
struct InvalidParameterError : Error {
    using Error::Error;
};

// Argument lies outside the effective domain J of the limiting cumulant,
// or beyond the jump pole u <= -alpha.
struct OutsideDomainError : Error {
    using Error::Error;
};

// Riccati flow explodes before the requested horizon; carries the exact
// blow-up time computed from the closed form.
struct BlowUpError : Error {
    double blow_up_time;
    BlowUpError(const std::string& msg, double t_star)
        : Error(msg), blow_up_time(t_star) {}
};

// Measure / plan / run configuration cannot be used (weights of the wrong
// sign, support not on the grid, objective undefined, ...).
struct InfeasibleError : Error {
    using Error::Error;
};

// A root search or optimizer failed its bracket or tolerance contract.
struct SolverError : Error {
    using Error::Error;
};

}  // namespace asvmc

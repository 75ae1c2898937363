#pragma once

#include <stdexcept>
#include <string>

namespace msf {

/// Raised on malformed arguments: size mismatches, non-finite values, bad tolerances.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The optimizer could not evaluate the problem at its start point.
class InvalidProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No previous backup exists and the first filter problem is infeasible.
class InitialInfeasibility : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Simulation aborted mid-run (non-finite state and the like).
class RuntimeAbort : public std::runtime_error {
public:
    RuntimeAbort(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

}  // namespace msf

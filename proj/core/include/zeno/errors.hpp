// errors.hpp — Error taxonomy shared by the engines and the CLI exit-code map

#pragma once

#include <stdexcept>
#include <string>

namespace zeno {

// Bad physical parameters or malformed inputs (CLI exit code 3).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A fast-dissipation routine was asked to run outside its validity gate
// (CLI exit code 4).
class GateError : public std::runtime_error {
public:
    explicit GateError(const std::string& what) : std::runtime_error(what) {}
};

// Adaptive quadrature failed to reach the target tolerance within its
// subdivision budget (CLI exit code 5).
class QuadratureBudgetError : public std::runtime_error {
public:
    explicit QuadratureBudgetError(const std::string& what) : std::runtime_error(what) {}
};

// Fock-space truncation audit failed; message names the required dimension
// (CLI exit code 6).
class TruncationError : public std::runtime_error {
public:
    TruncationError(const std::string& what, int required_dim)
        : std::runtime_error(what), required_dim(required_dim) {}
    int required_dim;
};

// Adaptive ODE step-size underflow; message carries the time reached.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time_reached)
        : std::runtime_error(what), time_reached(time_reached) {}
    double time_reached;
};

// Output files could not be written (CLI exit code 7).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace zeno

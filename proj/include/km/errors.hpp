#pragma once

#include <stdexcept>
#include <string>

namespace km {

// Bad input or violated precondition. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Evaluation at a singular point (a primary, the Kepler center).
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Requested work exceeds the hard size caps of an algorithm.
class SizeCapError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A numerical procedure failed to deliver its result. Exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoSolutionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// The integrator came closer to a primary than the configured floor.
class CollisionError : public NumericalError {
public:
    CollisionError(const std::string& what, double t, double distance)
        : NumericalError(what), time(t), distance(distance) {}
    double time;
    double distance;
};

// File could not be read or written. Exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace km

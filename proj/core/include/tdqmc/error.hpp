#pragma once

#include <stdexcept>
#include <string>

namespace tdqmc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid grid, preset, key or parameter combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A wave or density with no usable mass (zero norm, all-zero density, too few samples).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Arrays living on different grids or with mismatched extents.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Operation not allowed in the current state (double release, empty walker set).
class StateError : public Error {
public:
    using Error::Error;
};

/// Scalar parameter outside its domain (non-positive kernel width, etc.).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity appeared during propagation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Iterative relaxation hit its step limit.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_energy)
        : Error(what), last_energy_(last_energy) {}

    double last_energy() const noexcept { return last_energy_; }

private:
    double last_energy_;
};

/// Grid too small: density reached the boundary band.
class BoundaryError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written, or the output directory is not usable.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace tdqmc

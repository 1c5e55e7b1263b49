#pragma once

#include <stdexcept>
#include <string>

namespace mni {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid specification, configuration file or argument.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// The interpolation problem has no (unique) solution, e.g. rank-deficient design.
class IllPosedError : public Error {
public:
    using Error::Error;
};

/// A Monte Carlo estimator could not produce a value (failure budget, bracketing).
class EstimatorError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace mni

#pragma once

#include <stdexcept>
#include <string>

namespace memnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration (CLI exit code 2).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable data (CLI exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// A hyperplane or group system was singular, or a point sits on a plane it must avoid.
class DegenerateDataError : public DataError {
public:
    using DataError::DataError;
};

/// The evaluation matrix never reached full rank.
class RankDeficiencyError : public DataError {
public:
    using DataError::DataError;
};

/// Quadrature could not resolve a nonzero integrand.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// A bound whose denominator vanished.
class UninformativeBoundError : public Error {
public:
    using Error::Error;
};

/// A step builder produced a vanishing step (e.g. v = 0 in the NTK step).
class ZeroStepError : public Error {
public:
    using Error::Error;
};

/// Every complex-neuron candidate was cut off or fell below the correlation floor.
class SamplerFailure : public Error {
public:
    SamplerFailure(const std::string& what, double best_correlation)
        : Error(what), best_correlation_(best_correlation) {}

    double best_correlation() const noexcept { return best_correlation_; }

private:
    double best_correlation_;
};

}  // namespace memnet

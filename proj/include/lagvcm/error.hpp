#pragma once

#include <stdexcept>
#include <string>

namespace lagvcm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (bad level, negative t, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// h(t) fell below the density floor m0 at an evaluation point.
class DensityFloorError : public Error {
public:
    DensityFloorError(double t, double density, double floor);
    double t() const noexcept { return t_; }

private:
    double t_;
};

/// Incompatible sizes, or fewer observations than parameters.
class DimensionError : public Error {
public:
    using Error::Error;
};

class OutOfRangeError : public Error {
public:
    using Error::Error;
};

/// Design matrix is numerically rank deficient.
class RankDeficientError : public Error {
public:
    RankDeficientError(long rank, long columns);
    /// No single design to report, e.g. every candidate of a grid failed.
    explicit RankDeficientError(const std::string& what);
    long rank() const noexcept { return rank_; }
    long columns() const noexcept { return columns_; }

private:
    long rank_;
    long columns_;
};

/// A matrix that must be positive definite (or invertible) is not.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// A kernel fit has too few points with positive weight.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Evaluation would leave the range where log-Gamma normalisation is safe.
class OverflowGuardError : public Error {
public:
    using Error::Error;
};

/// Malformed user configuration or input file. The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace lagvcm

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poet {

// Precondition violations throw std::invalid_argument. Everything below is
// raised when the inputs are well-formed but the numerics or the data file
// cannot be used.

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Base class for failures caused by the numerical state of the problem.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonFiniteError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularMatrixError : public NumericalError {
public:
    SingularMatrixError(const std::string& what, double lambda_min)
        : NumericalError(what + " (lambda_min = " + std::to_string(lambda_min) + ")"),
          lambda_min_(lambda_min) {}

    double lambda_min() const noexcept { return lambda_min_; }

private:
    double lambda_min_;
};

/// The thresholded idiosyncratic covariance is not invertible for the
/// threshold constant that produced it. Raise C above c_min().
class SingularIdiosyncraticError : public SingularMatrixError {
public:
    SingularIdiosyncraticError(double lambda_min, double threshold_constant)
        : SingularMatrixError("thresholded idiosyncratic covariance is singular at C = " +
                                  std::to_string(threshold_constant) +
                                  "; choose C above c_min",
                              lambda_min),
          threshold_constant_(threshold_constant) {}

    double threshold_constant() const noexcept { return threshold_constant_; }

private:
    double threshold_constant_;
};

class NonStationaryError : public NumericalError {
public:
    explicit NonStationaryError(double spectral_radius)
        : NumericalError("VAR(1) coefficient matrix is not stationary (spectral radius " +
                         std::to_string(spectral_radius) + " >= 1)"),
          spectral_radius_(spectral_radius) {}

    double spectral_radius() const noexcept { return spectral_radius_; }

private:
    double spectral_radius_;
};

class DegenerateObjectiveError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace poet

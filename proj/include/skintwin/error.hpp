#pragma once

#include <stdexcept>
#include <string>

namespace skintwin {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Out-of-range argument (negative frequency, non-positive dimension, bad cell label).
class DomainError : public Error {
public:
    using Error::Error;
};

class InfeasiblePackingError : public Error {
public:
    using Error::Error;
};

/// Fewer than three points, or all points collinear.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Nodal system cannot be solved: disconnected port or numerically singular matrix.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

class InsufficientBaselineError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class UnclassifiableEventError : public Error {
public:
    UnclassifiableEventError(double deltaR, double deltaX)
        : Error("unclassifiable event signature (deltaR=" + std::to_string(deltaR) +
                ", deltaX=" + std::to_string(deltaX) + ")"),
          deltaR_(deltaR), deltaX_(deltaX) {}

    double deltaR() const noexcept { return deltaR_; }
    double deltaX() const noexcept { return deltaX_; }

private:
    double deltaR_;
    double deltaX_;
};

class ProtocolWindowError : public Error {
public:
    using Error::Error;
};

class CalibrationInfeasibleError : public Error {
public:
    CalibrationInfeasibleError(const std::string& what, double bestResidual)
        : Error(what), bestResidual_(bestResidual) {}

    double bestResidual() const noexcept { return bestResidual_; }

private:
    double bestResidual_;
};

/// Malformed persisted document; `field()` names the offending JSON path.
class FormatError : public Error {
public:
    FormatError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace skintwin

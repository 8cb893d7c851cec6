#pragma once

#include <stdexcept>
#include <string>

namespace kerrwig {

// Base for every error raised by the library. Callers that only care about
// "something went wrong numerically or structurally" can catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class BandwidthViolation : public Error {
public:
    BandwidthViolation(long row, long col)
        : Error("entry (" + std::to_string(row) + ", " + std::to_string(col) +
                ") lies outside the band"),
          row_(row), col_(col) {}

    long row() const noexcept { return row_; }
    long col() const noexcept { return col_; }

private:
    long row_;
    long col_;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class WindowExceedsGrid : public Error {
public:
    using Error::Error;
};

class WindowTooLarge : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

class InsufficientTerms : public Error {
public:
    using Error::Error;
};

class PrecisionTooLow : public Error {
public:
    using Error::Error;
};

class NormalizationDrift : public Error {
public:
    NormalizationDrift(double tau, double integral)
        : Error("phase-space integral drifted to " + std::to_string(integral) +
                " at tau=" + std::to_string(tau)),
          tau_(tau), integral_(integral) {}

    double tau() const noexcept { return tau_; }
    double integral() const noexcept { return integral_; }

private:
    double tau_;
    double integral_;
};

class InvalidManifest : public Error {
public:
    InvalidManifest(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class HeaderMismatch : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace kerrwig

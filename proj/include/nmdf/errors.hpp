#pragma once

#include <stdexcept>
#include <string>

namespace nmdf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violation on caller-supplied values (bad rank, non-finite data, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A matrix required to be positive definite has an eigenvalue at or below pd_tol.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// Operands have incompatible shapes or live on different manifolds.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// An iterative linear solver stalled without reaching its residual target.
class SolverFailure : public Error {
public:
    using Error::Error;
};

/// A tangent factor has (numerically) zero norm where a nonzero one is required.
class DegenerateFactor : public Error {
public:
    using Error::Error;
};

/// Malformed input text; carries the 1-based line number of the first offending line.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Unrecognized or unsupported format version header.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Glyph layout does not match the number of components to draw.
class InvalidLayout : public Error {
public:
    using Error::Error;
};

/// Stream or filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace nmdf

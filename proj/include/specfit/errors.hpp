#ifndef SPECFIT_ERRORS_HPP_
#define SPECFIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace specfit {

// Malformed input file contents (bad cell, ragged row, ...).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Problems with a ppm axis (non-monotonic, non-overlapping, ...).
class AxisError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structural problems in an instrument file (missing key, size mismatch).
class FormatError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A fit window that selects no points.
class EmptyWindowError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad rows or values in a template catalog file.
class CatalogError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Multiplet shift proposal outside its allowed bound.
class ShiftBoundError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A linear system that should be positive definite is not.
class SingularityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent or unusable run configuration.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace specfit

#endif  // SPECFIT_ERRORS_HPP_

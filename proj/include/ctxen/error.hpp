#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ctxen {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numeric value outside the representable range (e.g. ENIN overflow).
class RangeError : public Error {
public:
    using Error::Error;
};

/// A key's validity start is not aligned to its rolling period.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// An interval lies outside the validity window of a key.
class WindowError : public Error {
public:
    using Error::Error;
};

/// Coordinates outside their valid domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Coordinates inside the valid domain but outside the grid's supported band.
class UnsupportedRegionError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Malformed bytes, hex or text.
class FormatError : public Error {
public:
    using Error::Error;
};

/// AEAD authentication failed: wrong key, withheld consent or tampering.
class DecryptError : public Error {
public:
    using Error::Error;
};

/// Operation not valid in the current device state.
class StateError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Carries every problem found while validating an input, not just the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string out;
        for (const auto& p : problems) {
            if (!out.empty()) out += "; ";
            out += p;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

}  // namespace ctxen

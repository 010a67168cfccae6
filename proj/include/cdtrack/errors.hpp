#pragma once

#include <stdexcept>
#include <string>

namespace cdtrack {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Raised when a result that must be real carries a large imaginary residue.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::size_t bin)
        : Error(what), bin_(bin) {}
    std::size_t bin() const noexcept { return bin_; }

private:
    std::size_t bin_;
};

class EmptySelectionError : public Error {
public:
    using Error::Error;
};

class InconsistentSelectionError : public Error {
public:
    using Error::Error;
};

class StaleCacheError : public Error {
public:
    using Error::Error;
};

class DegenerateBoxError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Feature-file / sequence-directory parsing failures.
class FormatError : public Error {
public:
    using Error::Error;
};
class BadMagicError : public FormatError {
public:
    using FormatError::FormatError;
};
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};
class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};
class NonFiniteError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace cdtrack

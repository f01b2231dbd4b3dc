#pragma once

#include <stdexcept>
#include <string>

namespace gbulab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the admissible set of an operation (p <= 2, point outside a box, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a point where a closed form is singular.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf produced or consumed by a numerical kernel.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration; `path()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Regression could not be carried out (too few samples, no usable window).
class FitError : public Error {
public:
    using Error::Error;
};

/// Persisted artifact missing, truncated or malformed.
class IoError : public Error {
public:
    IoError(std::string file, const std::string& what)
        : Error(file + ": " + what), file_(std::move(file)) {}
    const std::string& file() const noexcept { return file_; }

private:
    std::string file_;
};

} // namespace gbulab

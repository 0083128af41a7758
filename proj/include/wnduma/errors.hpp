#ifndef WNDUMA_ERRORS_HPP
#define WNDUMA_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wnduma {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An index (token id, class label, row) is out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// A hyperparameter or argument lies outside its valid domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Input data violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A NaN/Inf showed up where finite values are required.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Misuse of the autodiff tape (double backward, foreign tensors).
class TapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration; the message names every offending key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the path and 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(std::string path, std::size_t line, const std::string& what)
        : Error(format(path, line, what)), path_(std::move(path)), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& path, std::size_t line, const std::string& what) {
        std::string out = path;
        if (line > 0) out += ":" + std::to_string(line);
        return out + ": " + what;
    }

    std::string path_;
    std::size_t line_;
};

/// File-level consistency failure (duplicate keys, count mismatches).
class StructuralError : public ParseError {
public:
    using ParseError::ParseError;
};

}  // namespace wnduma

#endif  // WNDUMA_ERRORS_HPP

#pragma once

#include <stdexcept>
#include <string>

namespace crisisspot {

enum class ErrorCategory { usage, data, shape, numeric, parameter };

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::data: return "data";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::numeric: return "numeric";
        case ErrorCategory::parameter: return "parameter";
    }
    return "unknown";
}

/// Base error carrying a machine-readable category; the CLI maps categories
/// onto exit codes (2 usage/parameter, 3 data/shape, 4 numeric).
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& m) : Error(ErrorCategory::shape, m) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& m) : Error(ErrorCategory::data, m) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& m) : Error(ErrorCategory::numeric, m) {}
};

class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& m) : Error(ErrorCategory::parameter, m) {}
};

inline int exit_code_for(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage:
        case ErrorCategory::parameter: return 2;
        case ErrorCategory::data:
        case ErrorCategory::shape: return 3;
        case ErrorCategory::numeric: return 4;
    }
    return 1;
}

}  // namespace crisisspot

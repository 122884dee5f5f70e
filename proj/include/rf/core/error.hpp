#pragma once

#include <stdexcept>
#include <string>

namespace rf {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed request: bad shapes, invalid arguments, contract violations. Exit code 1.
struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Shape mismatch between operands; message carries both shapes.
struct ShapeError : UsageError {
    explicit ShapeError(const std::string& msg) : UsageError(msg) {}
};

// Missing or corrupt input data / files. Exit code 2.
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Non-finite values, solver breakdown, diverged training. Exit code 3.
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace rf

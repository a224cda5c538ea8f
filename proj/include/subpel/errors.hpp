#ifndef SUBPEL_ERRORS_HPP
#define SUBPEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace subpel {

// Base class for all toolkit errors. Subclasses map onto CLI exit codes:
// usage 2, data/format 3, numeric 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller broke an operation contract (shape mismatch, bad argument).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Malformed or truncated file content. Carries the byte offset at which
// parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// Unusable input data (empty corpus, undersized plane, mismatched frames).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Inconsistent configuration (variant mismatch, missing model for a mode).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Numeric failure at run time: non-finite activations, diverged training.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace subpel

#endif

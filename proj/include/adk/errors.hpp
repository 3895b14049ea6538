#pragma once

#include <stdexcept>
#include <string>

namespace adk {

// Error taxonomy mirrored by the CLI exit codes:
//   UsageError / DomainError -> 1, FormatError -> 2, NumericalError -> 3.

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid numeric argument (temperature <= 0, top-p outside (0,1], ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files or wire data. Carries a byte offset where known.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg, std::int64_t byte_offset = -1)
        : std::runtime_error(byte_offset >= 0
                                 ? msg + " (byte offset " + std::to_string(byte_offset) + ")"
                                 : msg),
          offset(byte_offset) {}
    std::int64_t offset{-1};
};

// Non-finite values or divergence during optimization.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace adk

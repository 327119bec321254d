// SPDX-License-Identifier: Apache-2.0
//
// Error types shared by every lora_lab module.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lora_lab {

class LabError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not compose.
class ShapeError : public LabError {
public:
    using LabError::LabError;
};

/// Invalid configuration, bad flag values, or missing input files.
class ConfigError : public LabError {
public:
    using LabError::LabError;
};

/// Input outside the domain of an operation (e.g. a score set missing a class).
class DomainError : public LabError {
public:
    using LabError::LabError;
};

/// Caller broke an operation's contract (e.g. a gradient for a frozen tensor).
class ContractError : public LabError {
public:
    using LabError::LabError;
};

/// Malformed file contents. `line()` is 1-based, or 0 for binary formats.
class ParseError : public LabError {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : LabError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    /// Prefixes `inner`'s message with the file it came from.
    ParseError(const std::string& path, const ParseError& inner)
        : LabError(path + ": " + inner.what()), line_(inner.line_) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace lora_lab

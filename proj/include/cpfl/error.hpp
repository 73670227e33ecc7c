// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cpfl {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI and the HTTP service.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

class ShapeError : public Error {
public:
    ShapeError(std::size_t node, const std::string& message)
        : Error("shape_mismatch", message), node_(node) {}

    [[nodiscard]] std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

class NumericError : public Error {
public:
    NumericError(std::size_t node, const std::string& message)
        : Error("non_finite", message), node_(node) {}

    [[nodiscard]] std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("validation", message) {}
};

class UnreachableAnchor : public Error {
public:
    explicit UnreachableAnchor(const std::string& message) : Error("unreachable_anchor", message) {}
};

class LayoutError : public Error {
public:
    explicit LayoutError(const std::string& message) : Error("layout_mismatch", message) {}
};

class VersionError : public Error {
public:
    explicit VersionError(const std::string& message) : Error("version_mismatch", message) {}
};

class TruncatedError : public Error {
public:
    explicit TruncatedError(const std::string& message) : Error("truncated", message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("io", message) {}
};

/// Training aborted on a non-finite loss or gradient.
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& message) : Error("training_diverged", message) {}
};

} // namespace cpfl

#pragma once

#include <stdexcept>
#include <string>

namespace recon3d {

/// Base class for every error raised by this library. CLI commands catch
/// this type and turn it into a single-line "error: <what>" on stderr.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A shape specification violates its invariants (empty primitive list,
/// primitive outside the unit cube, ...).
class invalid_spec_error : public error {
public:
    using error::error;
};

/// Tensor/image dimensions do not match the declared contract.
class shape_error : public error {
public:
    using error::error;
};

/// A scalar or option argument is out of its legal range.
class argument_error : public error {
public:
    using error::error;
};

/// Input data fails validation (non-finite values, invalid indices, ...).
class validation_error : public error {
public:
    using error::error;
};

/// A configuration file or preset is inconsistent.
class config_error : public error {
public:
    using error::error;
};

/// Filesystem-level failure (unreadable/unwritable paths, bad magic bytes).
class io_error : public error {
public:
    using error::error;
};

/// A numerical routine left its domain of validity (e.g. covariance far
/// from positive semi-definite).
class numerical_error : public error {
public:
    using error::error;
};

/// An operation that requires occupied geometry received an empty grid.
class empty_shape_error : public error {
public:
    using error::error;
};

}  // namespace recon3d

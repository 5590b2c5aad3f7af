#pragma once

#include <stdexcept>
#include <string>

namespace charrec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (shape, sign, finiteness).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The SVD backend did not settle.
class SvdError : public Error {
public:
    using Error::Error;
};

/// A file could not be read, decoded or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Train-time and evaluation-time preprocessing configs disagree.
class FingerprintMismatch : public Error {
public:
    FingerprintMismatch(std::string expected, std::string actual)
        : Error("config fingerprint mismatch: dictionary was built with " + expected +
                " but the current config is " + actual),
          expected_(std::move(expected)),
          actual_(std::move(actual)) {}

    const std::string& expected() const noexcept { return expected_; }
    const std::string& actual() const noexcept { return actual_; }

private:
    std::string expected_;
    std::string actual_;
};

}  // namespace charrec

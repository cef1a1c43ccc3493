#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cvl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration or argument outside the documented domain.
class InvalidSpec : public Error {
public:
    using Error::Error;
};

class InvalidAction : public Error {
public:
    using Error::Error;
};

// NaN/Inf where a finite value is required.
class NumericalFault : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class BatchTooSmall : public Error {
public:
    using Error::Error;
};

class RewardRequired : public Error {
public:
    using Error::Error;
};

class XiUninitialized : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

/// Malformed persisted file. Carries the 1-based line and the byte offset
/// of the start of that line.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t line, std::size_t offset)
        : Error(what + " (line " + std::to_string(line) + ", offset " + std::to_string(offset) + ")"),
          line_(line), offset_(offset) {}

    std::size_t line() const { return line_; }
    std::size_t offset() const { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

}  // namespace cvl

/// @file errors.hpp
/// @brief Exception types shared across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace maxslice {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A symmetric 2-tensor used as a metric is not positive definite somewhere.
class DegenerateMetric : public Error {
public:
    explicit DegenerateMetric(const std::string& what) : Error(what) {}
};

/// A time value (or a graph value) left the model's definition interval.
class OutOfInterval : public Error {
public:
    explicit OutOfInterval(const std::string& what) : Error(what) {}
};

/// A graph whose induced metric fails to be positive definite.
class NotSpacelike : public Error {
public:
    explicit NotSpacelike(const std::string& what) : Error(what) {}
};

/// Spacelike margin below the requested conditioning floor.
class IllConditioned : public Error {
public:
    explicit IllConditioned(const std::string& what) : Error(what) {}
};

/// Newton system singular beyond the damping rescue.
class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& what) : Error(what) {}
};

/// Malformed scenario file or expression (carries line/column in the message).
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(what), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace maxslice

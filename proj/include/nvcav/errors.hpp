#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvcav
{

// Domain violations (non-positive rates, out-of-range fractions) throw
// std::domain_error directly. The types below cover the remaining failure
// classes that callers need to tell apart.

// A rate generator or population vector failed a structural check.
class ValidationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// An iterative procedure stopped before meeting its tolerance.
class ConvergenceError : public std::runtime_error
{
public:
    ConvergenceError(const std::string &what, double residual)
        : std::runtime_error(what), residual_(residual)
    {
    }
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Malformed text input. line() is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string &what, std::size_t line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace nvcav

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pim {

using Index = std::int32_t;
using Point = Eigen::Vector3d; // unused trailing coordinates are zero when d < 3
using Vector = Eigen::VectorXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. The message carries the offending line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Invalid parameters or inputs violating a precondition.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Solver breakdown, non-convergence, loss of definiteness.
class NumericalError : public Error {
public:
    using Error::Error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

} // namespace pim

#pragma once

#include <stdexcept>
#include <string>

namespace pml {

/// Malformed configuration: unknown keys, out-of-range values, missing files
/// named on the command line. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or degenerate data: parse failures, dimension mismatches between
/// files, pair sets without both classes, rank-zero inputs. CLI exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// API misuse inside a single process: argument sizes that violate an
/// operation's stated preconditions. Also mapped to CLI exit code 3,
/// since at the CLI boundary these originate from inconsistent inputs.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Non-finite values produced where the algorithm requires finite ones.
/// CLI exit code 4.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace exit_code {
constexpr int ok = 0;
constexpr int config = 2;
constexpr int data = 3;
constexpr int numerical = 4;
}  // namespace exit_code

}  // namespace pml

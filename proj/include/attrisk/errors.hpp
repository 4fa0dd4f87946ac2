#pragma once

#include <stdexcept>
#include <string>

namespace attrisk {

/// Bad caller input: unknown option values, invalid grids, singular designs.
class ArgumentError : public std::runtime_error {
public:
    explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad data: malformed files, invariant-violating records, undefined estimands.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-convergence, too many dropped bootstrap replicates.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace attrisk

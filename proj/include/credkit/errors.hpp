// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace credkit {

/// Base error for everything the library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input data (files, schemas, invariant violations
/// detected at load time). Maps to CLI exit code 2.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what) {}
};

/// Numerical failure (non-convergence, infeasible calibration, divergence).
/// Maps to CLI exit code 3.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

namespace detail {
template <class E, class... Parts>
[[noreturn]] void throw_error(Parts&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    throw E(os.str());
}
} // namespace detail

} // namespace credkit

#define CK_REQUIRE(cond, ...)                                                \
    do {                                                                     \
        if (!(cond))                                                         \
            ::credkit::detail::throw_error<::credkit::InputError>(__VA_ARGS__); \
    } while (0)

#define CK_NUMERIC_REQUIRE(cond, ...)                                        \
    do {                                                                     \
        if (!(cond))                                                         \
            ::credkit::detail::throw_error<::credkit::NumericError>(__VA_ARGS__); \
    } while (0)

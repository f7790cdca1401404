#ifndef CFREFINE_ERROR_HPP
#define CFREFINE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cfrefine {

// Bad parameters or flag combinations. Maps to CLI exit code 1.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input: missing columns, unparseable cells, dimension mismatches.
// Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Factorization failures and other numerical breakdowns. Exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cfrefine

#endif // CFREFINE_ERROR_HPP

#pragma once

#include <stdexcept>
#include <string>

namespace nlwqed {

// Invalid physical parameters or experiment description. The CLI maps this
// to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operands whose shapes do not match.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed a tolerance check (positivity drift, rank
// deficiency, non-CP map). The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nlwqed

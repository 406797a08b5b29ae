#pragma once

#include <stdexcept>
#include <string>

namespace sbm {

// Base for everything the library throws on purpose.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad spec / config file contents (CLI exit code 3).
struct config_error : error {
    using error::error;
};

// Argument outside the mathematical domain of an operation.
struct domain_error : error {
    using error::error;
};

// Numerical machinery failed beyond its tolerances (CLI exit code 2).
// Carries a human-readable diagnostic of what was being inverted/integrated.
struct numeric_error : error {
    using error::error;
};

// A check was invoked outside its hypothesis regime.
struct precondition_error : error {
    using error::error;
};

// Input data is too irregular to fit (e.g. non-monotone user table values).
struct diagnostic_error : error {
    using error::error;
};

} // namespace sbm

// error.hpp: Exception types shared across the library

#pragma once

#include <stdexcept>
#include <string>

namespace qdcoh {

// Bad configuration or out-of-domain input. The CLI maps this to exit code 2.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Quadrature, linear-algebra or propagation failure. The CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

} // namespace qdcoh

#pragma once

#include <stdexcept>

namespace cwmc {

// Unusable input or configuration (unknown sampler string, malformed CSV,
// incompatible model). The CLI maps this to exit code 2; other exceptions
// become exit code 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cwmc

#pragma once

#include <stdexcept>
#include <string>

namespace ocm {

// Input file violates the workload or solution schema. `path` is the JSON
// field path of the offending value ("layers[3].pe").
struct SchemaError : std::runtime_error {
  std::string path;
  SchemaError(std::string p, const std::string& msg)
      : std::runtime_error(p + ": " + msg), path(std::move(p)) {}
};

// A request cannot be satisfied under the port-bandwidth constraint or
// exceeds an engine's structural limit.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Domain-invariant violation in an input value (bad folding divisibility,
// zero RAM count with nonzero bits, ...).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ocm

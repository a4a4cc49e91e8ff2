#pragma once

#include <stdexcept>
#include <string>

namespace adamil {

// Invalid problem / experiment configuration (unknown builtin, bad key, inconsistent grids).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller violated an operation precondition (index out of range, unsupported order).
class UsageError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Request exceeds what can be allocated or represented.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An experiment could not produce a result (e.g. the reference solution diverged).
class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace adamil

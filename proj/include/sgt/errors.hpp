#pragma once

#include <stdexcept>
#include <string>

namespace sgt {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible shapes fed to a kernel. Message names both shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Fully masked sequence, or a mask that cannot cover the given tensor.
struct MaskError : Error {
    using Error::Error;
};

// Invalid model / dataset / run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// API misuse: non-scalar loss, double backward, simplex violation, ...
struct ContractError : Error {
    using Error::Error;
};

// File format or checkpoint/dataset loading problems.
struct IoError : Error {
    using Error::Error;
};

// Non-finite values where the numeric contract forbids them.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace sgt

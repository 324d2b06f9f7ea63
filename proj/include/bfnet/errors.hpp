#pragma once

#include <stdexcept>
#include <string>

namespace bfnet {

// Error hierarchy shared by all modules. The CLI maps these onto exit codes:
// validation/argument -> 2, numeric family -> 3, io -> 4.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed domain objects (bad SmoothnessSpec, non-increasing nets, ...).
class validation_error : public error {
public:
    using error::error;
};

// Bad call arguments (n = 0, non-nested grids, ...).
class argument_error : public error {
public:
    using error::error;
};

// Evaluation outside the mathematical domain (t >= r_L, p < 2, ...).
class domain_error : public error {
public:
    using error::error;
};

// Quadrature overflow, divergent series, non-positive fit inputs.
class numeric_error : public error {
public:
    using error::error;
};

// Rank-deficient regression with zero ridge.
class conditioning_error : public error {
public:
    using error::error;
};

// Scheme preconditions violated (implicit contraction L_f * dt >= 1).
class scheme_error : public error {
public:
    using error::error;
};

// Forward simulation failures (singular diffusion at a sampled point).
class simulation_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

} // namespace bfnet

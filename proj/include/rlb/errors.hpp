#pragma once

#include <stdexcept>
#include <string>

namespace rlb
{
    /// Invalid user-supplied parameters (topology, traffic, config file).
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// A broken internal invariant. Always a bug, never user error.
    class InvariantError : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    /// Non-finite loss or gradient during training.
    class TrainingDivergence : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
} // namespace rlb

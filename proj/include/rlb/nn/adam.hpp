#pragma once

#include "rlb/nn/dense.hpp"

#include <cstdint>
#include <vector>

namespace rlb::nn
{
    struct AdamOptions
    {
        double learning_rate = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    /// Adaptive-moment optimizer with bias correction over a fixed set of
    /// parameter blocks.
    class Adam
    {
    public:
        Adam() = default;
        Adam(std::vector<ParamRef> params, AdamOptions options = {});

        /// Applies one update from the gradients currently stored in the
        /// parameter blocks. Throws TrainingDivergence on a non-finite
        /// gradient, before touching any parameter.
        void step();

        std::uint64_t steps() const noexcept { return steps_; }
        const AdamOptions& options() const noexcept { return options_; }

    private:
        std::vector<ParamRef> params_;
        std::vector<std::vector<double>> first_;
        std::vector<std::vector<double>> second_;
        AdamOptions options_;
        std::uint64_t steps_ = 0;
    };
} // namespace rlb::nn

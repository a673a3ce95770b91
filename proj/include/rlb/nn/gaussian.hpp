#pragma once

#include "rlb/nn/dense.hpp"

namespace rlb::nn
{
    inline constexpr double kLogStdMin = -20.0;
    inline constexpr double kLogStdMax = 2.0;
    inline constexpr double kSquashEps = 1e-6;

    /// Reparameterised tanh-Gaussian sample for a batch (one column per
    /// sample, one row per action dimension).
    struct SquashedSample
    {
        Matrix action;    // tanh(mean + exp(log_std) * noise)
        RowVector log_prob;
        Matrix noise;
        Matrix std;       // exp(clamped log_std)
        Matrix clamp_mask; // 1 where the raw log_std was inside the clamp range
    };

    SquashedSample gaussian_head_sample(const Matrix& mean, const Matrix& log_std,
                                        const Matrix& noise);

    struct HeadGradient
    {
        Matrix d_mean;
        Matrix d_log_std; // with respect to the raw, unclamped log_std
    };

    /// Pulls dL/d(action) and dL/d(log_prob) back to the head outputs,
    /// holding the noise fixed.
    HeadGradient gaussian_head_backward(const SquashedSample& sample, const Matrix& d_action,
                                        const RowVector& d_log_prob);
} // namespace rlb::nn
